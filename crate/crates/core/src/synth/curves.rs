//! Synthetic spectra: smooth reflectance datasets for basis construction,
//! a 24-patch chart, LED-like illuminants, and a camera sensitivity model.
//!
//! The curves are all Gaussian mixtures over the 400-700 nm range, which
//! keeps them in the smooth regime the basis model targets. No claim is
//! made to any measured data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rendering::{CameraSensitivity, Illuminant};
use crate::spectra::SpectralCurve;

fn bump(nm: f64, center: f64, width: f64) -> f64 {
    (-((nm - center) / width).powi(2)).exp()
}

fn mixture(base: f64, bumps: &[(f64, f64, f64)]) -> SpectralCurve<f64> {
    SpectralCurve::from_fn(|nm| {
        let mut v = base;
        for &(amp, center, width) in bumps {
            v += amp * bump(nm, center, width);
        }
        v
    })
    .expect("finite mixture")
}

/// Random smooth reflectance curves in `[0.01, 0.99]`, the stand-in for a
/// large measured-chip dataset.
pub fn reflectance_dataset(n: usize, seed: u64) -> Vec<SpectralCurve<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let base = rng.random_range(0.05..0.6);
        let n_bumps = rng.random_range(1..=3);
        let bumps: Vec<(f64, f64, f64)> = (0..n_bumps)
            .map(|_| {
                (
                    rng.random_range(-0.35..0.5),
                    rng.random_range(390.0..710.0),
                    rng.random_range(40.0..130.0),
                )
            })
            .collect();
        let curve = mixture(base, &bumps);
        if curve.min_sample() >= 0.01 && curve.max_sample() <= 0.99 {
            out.push(curve);
        }
    }
    out
}

/// 24 fixed patches: 18 chromatic mixtures plus a 6-step gray wedge.
///
/// The chromatic peaks are narrower than the dataset family feeding the
/// basis, so the 8-component projection floor sits near the 1-2 percent
/// level reported for real chart patches rather than at numerical zero.
pub fn colorchart_24() -> Vec<SpectralCurve<f64>> {
    let chromatic: [(f64, &[(f64, f64, f64)]); 18] = [
        (0.12, &[(0.35, 620.0, 34.0), (0.08, 450.0, 26.0)]),
        (0.20, &[(0.45, 600.0, 46.0), (0.15, 480.0, 30.0)]),
        (0.10, &[(0.40, 460.0, 30.0), (0.12, 560.0, 42.0)]),
        (0.08, &[(0.30, 540.0, 27.0), (0.10, 640.0, 36.0)]),
        (0.15, &[(0.40, 470.0, 33.0), (0.25, 630.0, 42.0)]),
        (0.18, &[(0.45, 520.0, 36.0), (0.20, 480.0, 27.0)]),
        (0.10, &[(0.55, 630.0, 33.0), (0.10, 500.0, 24.0)]),
        (0.08, &[(0.35, 450.0, 27.0), (0.15, 680.0, 42.0)]),
        (0.12, &[(0.45, 610.0, 27.0), (0.05, 460.0, 21.0)]),
        (0.06, &[(0.20, 430.0, 24.0), (0.22, 660.0, 33.0)]),
        (0.14, &[(0.48, 550.0, 33.0), (0.18, 610.0, 27.0)]),
        (0.16, &[(0.50, 590.0, 36.0), (0.10, 500.0, 27.0)]),
        (0.05, &[(0.30, 440.0, 24.0), (0.06, 560.0, 30.0)]),
        (0.08, &[(0.42, 530.0, 30.0)]),
        (0.06, &[(0.50, 640.0, 30.0)]),
        (0.20, &[(0.55, 580.0, 39.0), (0.12, 470.0, 24.0)]),
        (0.15, &[(0.40, 620.0, 39.0), (0.30, 460.0, 30.0)]),
        (0.10, &[(0.35, 490.0, 33.0), (0.12, 580.0, 30.0)]),
    ];
    let mut out: Vec<SpectralCurve<f64>> = chromatic
        .iter()
        .map(|(base, bumps)| mixture(*base, bumps))
        .collect();
    for level in [0.90, 0.59, 0.36, 0.20, 0.09, 0.03] {
        out.push(SpectralCurve::constant(level).expect("finite"));
    }
    debug_assert_eq!(out.len(), 24);
    out
}

/// Up to three LED-like SPDs, the modes of a multi-channel smart bulb:
/// warm white and cool white (blue pump plus phosphor hump) and a color
/// mode mixing the narrow RGB primaries. The mix of broad and narrow
/// emission is what makes the per-vertex spectral system well conditioned.
pub fn led_illuminants(n: usize) -> Vec<Illuminant<f64>> {
    assert!((1..=3).contains(&n), "built-in LED set has 3 entries");
    let specs: [(&str, f64, &[(f64, f64, f64)]); 3] = [
        ("led_1", 0.1, &[(12.0, 455.0, 18.0), (9.0, 600.0, 75.0)]),
        ("led_2", 0.1, &[(6.6, 450.0, 20.0), (12.0, 550.0, 60.0)]),
        (
            "led_3",
            0.1,
            &[(10.0, 462.0, 14.0), (11.0, 528.0, 18.0), (12.0, 628.0, 16.0)],
        ),
    ];
    specs
        .iter()
        .take(n)
        .map(|(id, base, bumps)| {
            Illuminant::new(*id, mixture(*base, bumps)).expect("valid SPD")
        })
        .collect()
}

/// Three-Gaussian RGB sensitivity model.
pub fn camera_sensitivity() -> CameraSensitivity<f64> {
    CameraSensitivity::new([
        mixture(0.0, &[(0.9, 610.0, 40.0), (0.08, 460.0, 25.0)]),
        mixture(0.0, &[(1.0, 545.0, 45.0)]),
        mixture(0.0, &[(0.85, 465.0, 33.0)]),
    ])
    .expect("valid sensitivity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectralBasis;

    #[test]
    fn dataset_is_deterministic_and_in_range() {
        let a = reflectance_dataset(50, 7);
        let b = reflectance_dataset(50, 7);
        assert_eq!(a.len(), 50);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.samples(), y.samples());
        }
        for curve in &a {
            curve.validate_reflectance().unwrap();
        }
    }

    #[test]
    fn chart_has_24_distinct_valid_patches() {
        let chart = colorchart_24();
        assert_eq!(chart.len(), 24);
        for curve in &chart {
            curve.validate_reflectance().unwrap();
        }
        for i in 0..24 {
            for j in i + 1..24 {
                assert!(
                    (chart[i].samples() - chart[j].samples()).norm() > 1e-3,
                    "patches {i} and {j} coincide"
                );
            }
        }
    }

    #[test]
    fn munsell_style_basis_explains_99_percent() {
        let dataset = reflectance_dataset(400, 42);
        let basis = SpectralBasis::build(&dataset, 8).unwrap();
        assert!(
            basis.cumulative_explained_variance() > 0.99,
            "cumulative explained variance {}",
            basis.cumulative_explained_variance()
        );
        assert!(basis.orthonormality_error() < 1e-10);
    }

    #[test]
    fn led_set_is_valid_and_distinct() {
        let leds = led_illuminants(3);
        assert_eq!(leds.len(), 3);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let d = (leds[a].spd().samples() - leds[b].spd().samples()).norm();
            assert!(d > 0.5, "LED {a} and {b} too similar");
        }
    }
}
