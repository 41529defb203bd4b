//! Reflectance to sRGB for visualization: CIE 1931 2-degree observer under
//! D65, linear-sRGB matrix, white-point normalization, gamma encode, clip.
//!
//! The pathway is fixed here so exported visualizations are reproducible
//! bit for bit. Normalizing by the perfect reflector's response makes a
//! flat unit reflectance map exactly to white.

use crate::real::{real, Real};
use crate::spectra::{SpectralCurve, N_BANDS};

/// CIE 1931 2-degree color matching functions at 400..700 nm, 10 nm steps.
pub const CIE_X: [f64; N_BANDS] = [
    0.0143, 0.0435, 0.1344, 0.2839, 0.3483, 0.3362, 0.2908, 0.1954, 0.0956, 0.0320, 0.0049,
    0.0093, 0.0633, 0.1655, 0.2904, 0.4334, 0.5945, 0.7621, 0.9163, 1.0263, 1.0622, 1.0026,
    0.8544, 0.6424, 0.4479, 0.2835, 0.1649, 0.0874, 0.0468, 0.0227, 0.0114,
];
pub const CIE_Y: [f64; N_BANDS] = [
    0.0004, 0.0012, 0.0040, 0.0116, 0.0230, 0.0380, 0.0600, 0.0910, 0.1390, 0.2080, 0.3230,
    0.5030, 0.7100, 0.8620, 0.9540, 0.9950, 0.9950, 0.9520, 0.8700, 0.7570, 0.6310, 0.5030,
    0.3810, 0.2650, 0.1750, 0.1070, 0.0610, 0.0320, 0.0170, 0.0082, 0.0041,
];
pub const CIE_Z: [f64; N_BANDS] = [
    0.0679, 0.2074, 0.6456, 1.3856, 1.7471, 1.7721, 1.6692, 1.2876, 0.8130, 0.4652, 0.2720,
    0.1582, 0.0782, 0.0422, 0.0203, 0.0087, 0.0039, 0.0021, 0.0017, 0.0011, 0.0008, 0.0003,
    0.0002, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000,
];
/// D65 relative spectral power at the same sampling.
pub const D65: [f64; N_BANDS] = [
    82.75, 91.49, 93.43, 86.68, 104.86, 117.01, 117.81, 114.86, 115.92, 108.81, 109.35, 107.80,
    104.79, 107.69, 104.41, 104.05, 100.00, 96.33, 95.79, 88.69, 90.01, 89.60, 87.70, 83.29,
    83.70, 80.03, 80.21, 82.28, 78.28, 69.72, 71.61,
];

/// XYZ -> linear sRGB (D65 white).
const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2406, -1.5372, -0.4986],
    [-0.9689, 1.8758, 0.0415],
    [0.0557, -0.2040, 1.0570],
];

fn xyz_under_d65<T: Real>(curve: &SpectralCurve<T>) -> [T; 3] {
    let mut xyz = [T::zero(); 3];
    for k in 0..N_BANDS {
        let e = real::<T>(D65[k]) * curve.value(k);
        xyz[0] += real::<T>(CIE_X[k]) * e;
        xyz[1] += real::<T>(CIE_Y[k]) * e;
        xyz[2] += real::<T>(CIE_Z[k]) * e;
    }
    xyz
}

fn linear_rgb<T: Real>(xyz: &[T; 3]) -> [T; 3] {
    std::array::from_fn(|ch| {
        real::<T>(XYZ_TO_SRGB[ch][0]) * xyz[0]
            + real::<T>(XYZ_TO_SRGB[ch][1]) * xyz[1]
            + real::<T>(XYZ_TO_SRGB[ch][2]) * xyz[2]
    })
}

fn gamma<T: Real>(linear: T) -> T {
    let x = linear.clamp(T::zero(), T::one());
    if x <= real(0.003_130_8) {
        real::<T>(12.92) * x
    } else {
        real::<T>(1.055) * x.powf(T::one() / real(2.4)) - real(0.055)
    }
}

/// Gamma-encoded sRGB in `[0, 1]` for a reflectance curve displayed under
/// D65. `linear_before_gamma` exposes the pre-encode values for tests.
pub fn reflectance_to_srgb<T: Real>(curve: &SpectralCurve<T>) -> [T; 3] {
    let linear = reflectance_to_linear_srgb(curve);
    [gamma(linear[0]), gamma(linear[1]), gamma(linear[2])]
}

/// Linear (pre-gamma) sRGB after white-point normalization, unclipped.
pub fn reflectance_to_linear_srgb<T: Real>(curve: &SpectralCurve<T>) -> [T; 3] {
    let white = linear_rgb(&xyz_under_d65(
        &SpectralCurve::constant(T::one()).expect("unit curve"),
    ));
    let rgb = linear_rgb(&xyz_under_d65(curve));
    std::array::from_fn(|ch| rgb[ch] / white[ch])
}
