//! Forward photometric model: near point light shading, per-vertex spectral
//! rendering, and full-image rasterization.

pub mod image;
pub mod raster;

pub use image::Image;
pub use raster::{render_image, DepthBuffer, RasterOptions};

use nalgebra::{Const, DMatrix, DVector, Matrix3, OMatrix, RowVector3, Vector3};
use thiserror::Error;

use crate::geometry::CameraPose;
use crate::real::{real, Real};
use crate::spectra::{SensitivityMatrix, SpectralBasis, SpectralCurve, SpectraError, N_BANDS};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("illuminant `{0}` has a negative sample")]
    NegativeSpd(String),
    #[error("illuminant `{0}` is identically zero")]
    ZeroSpd(String),
    #[error("sensitivity channel {0} has a negative sample")]
    NegativeSensitivity(usize),
    #[error("sensitivity channel {0} has zero total response")]
    ZeroSensitivity(usize),
    #[error("surface point coincides with the light position")]
    CoincidentLight,
    #[error("scene has no faces to render")]
    EmptyScene,
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// A light source's spectral power distribution.
#[derive(Clone, Debug)]
pub struct Illuminant<T: Real> {
    pub id: String,
    spd: SpectralCurve<T>,
}

impl<T: Real> Illuminant<T> {
    pub fn new(id: impl Into<String>, spd: SpectralCurve<T>) -> Result<Self, RenderError> {
        let id = id.into();
        if spd.min_sample() < T::zero() {
            return Err(RenderError::NegativeSpd(id));
        }
        if spd.max_sample() <= T::zero() {
            return Err(RenderError::ZeroSpd(id));
        }
        Ok(Self { id, spd })
    }

    pub fn spd(&self) -> &SpectralCurve<T> {
        &self.spd
    }
}

/// Per-channel sensor response over the bands (rows R, G, B).
#[derive(Clone, Debug)]
pub struct CameraSensitivity<T: Real> {
    rows: [SpectralCurve<T>; 3],
}

impl<T: Real> CameraSensitivity<T> {
    pub fn new(rows: [SpectralCurve<T>; 3]) -> Result<Self, RenderError> {
        for (ch, row) in rows.iter().enumerate() {
            if row.min_sample() < T::zero() {
                return Err(RenderError::NegativeSensitivity(ch));
            }
            if row.samples().sum() <= T::zero() {
                return Err(RenderError::ZeroSensitivity(ch));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[SpectralCurve<T>; 3] {
        &self.rows
    }

    /// The 3 x 31 matrix `C^T`.
    pub fn matrix(&self) -> SensitivityMatrix<T> {
        SensitivityMatrix::from_fn(|ch, band| self.rows[ch].value(band))
    }
}

/// Rigid camera-to-light offset, expressed in the camera frame.
///
/// The per-view light position follows from the pose alone; only this
/// translation is estimated during optimization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LightRig<T: Real> {
    pub v: Vector3<T>,
}

impl<T: Real> LightRig<T> {
    pub fn new(v: Vector3<T>) -> Self {
        Self { v }
    }

    /// World-space light position for a view: `R^T (v - t)`.
    pub fn position_for(&self, pose: &CameraPose<T>) -> Vector3<T> {
        pose.rotation().transpose() * (self.v - pose.translation())
    }

    /// Derivative of the world light position w.r.t. `v`.
    pub fn position_jacobian(pose: &CameraPose<T>) -> Matrix3<T> {
        pose.rotation().transpose()
    }
}

/// Lambertian cosine combined with inverse-square falloff:
/// `s = ((p - x) / |p - x|^3) . n`. Negative for back-facing surfaces.
pub fn shading_factor<T: Real>(
    x: &Vector3<T>,
    n: &Vector3<T>,
    p: &Vector3<T>,
) -> Result<T, RenderError> {
    let d = p - x;
    let rho = d.norm();
    if rho <= T::zero() {
        return Err(RenderError::CoincidentLight);
    }
    Ok(d.dot(n) / (rho * rho * rho))
}

/// Shading factor with partial derivatives.
#[derive(Clone, Copy, Debug)]
pub struct ShadingGrad<T: Real> {
    pub s: T,
    /// Holding the normal fixed.
    pub ds_dx: RowVector3<T>,
    pub ds_dn: RowVector3<T>,
    pub ds_dp: RowVector3<T>,
}

pub fn shading_factor_grad<T: Real>(
    x: &Vector3<T>,
    n: &Vector3<T>,
    p: &Vector3<T>,
) -> Result<ShadingGrad<T>, RenderError> {
    let d = p - x;
    let rho = d.norm();
    if rho <= T::zero() {
        return Err(RenderError::CoincidentLight);
    }
    let inv_rho3 = T::one() / (rho * rho * rho);
    let inv_rho5 = inv_rho3 / (rho * rho);
    let dn = d.dot(n);
    let s = dn * inv_rho3;
    let ds_dd = (n * inv_rho3 - d * (real::<T>(3.0) * dn * inv_rho5)).transpose();
    Ok(ShadingGrad {
        s,
        ds_dx: -ds_dd,
        ds_dn: (d * inv_rho3).transpose(),
        ds_dp: ds_dd,
    })
}

/// Rendered RGB at one vertex for one view:
/// `y = m_s * max(s, 0) * C^T L B alpha`.
///
/// Negative shading renders black (a back-facing surface receives no light);
/// the clamp has subgradient zero on the dark side.
#[allow(clippy::too_many_arguments)]
pub fn render_vertex<T: Real>(
    x: &Vector3<T>,
    alpha: &DVector<T>,
    p: &Vector3<T>,
    sensitivity: &CameraSensitivity<T>,
    illuminant: &Illuminant<T>,
    basis: &SpectralBasis<T>,
    shadow_lit: bool,
    n: &Vector3<T>,
) -> Result<Vector3<T>, RenderError> {
    if alpha.len() != basis.n_b() {
        return Err(RenderError::Spectra(SpectraError::WeightLength {
            got: alpha.len(),
            expected: basis.n_b(),
        }));
    }
    let s = shading_factor(x, n, p)?;
    if !shadow_lit || s <= T::zero() {
        return Ok(Vector3::zeros());
    }
    let mut weighted = sensitivity.matrix();
    for band in 0..N_BANDS {
        let l = illuminant.spd().value(band);
        for ch in 0..3 {
            weighted[(ch, band)] *= l;
        }
    }
    Ok(weighted * basis.matrix() * alpha * s)
}

/// Cached per-illuminant matrices for repeated vertex rendering.
pub struct RenderContext<T: Real> {
    /// `C^T L` per illuminant, 3 x 31.
    pub ct_l: Vec<OMatrix<T, Const<3>, Const<N_BANDS>>>,
    /// `C^T L B` per illuminant, 3 x n_b.
    pub ct_l_b: Vec<OMatrix<T, Const<3>, nalgebra::Dyn>>,
}

impl<T: Real> RenderContext<T> {
    pub fn new(
        sensitivity: &CameraSensitivity<T>,
        illuminants: &[Illuminant<T>],
        basis: &SpectralBasis<T>,
    ) -> Self {
        let sens = sensitivity.matrix();
        let mut ct_l = Vec::with_capacity(illuminants.len());
        let mut ct_l_b = Vec::with_capacity(illuminants.len());
        for illum in illuminants {
            let mut weighted = sens.clone_owned();
            for band in 0..N_BANDS {
                let l = illum.spd().value(band);
                for ch in 0..3 {
                    weighted[(ch, band)] *= l;
                }
            }
            ct_l_b.push(&weighted * basis.matrix());
            ct_l.push(weighted);
        }
        Self { ct_l, ct_l_b }
    }

    /// `m * max(s, 0) * (C^T L B) alpha` for illuminant `illum`.
    pub fn shade(
        &self,
        illum: usize,
        alpha: nalgebra::DVectorView<T>,
        s: T,
        shadow_lit: bool,
    ) -> Vector3<T> {
        if !shadow_lit || s <= T::zero() {
            return Vector3::zeros();
        }
        &self.ct_l_b[illum] * alpha * s
    }
}

/// Per-vertex basis weights over a shared spectral basis.
#[derive(Clone, Debug)]
pub struct ReflectanceField<T: Real> {
    /// One row per vertex, `n_b` columns.
    pub weights: DMatrix<T>,
}

impl<T: Real> ReflectanceField<T> {
    pub fn new(weights: DMatrix<T>) -> Self {
        Self { weights }
    }

    pub fn zeros(n_vertices: usize, n_b: usize) -> Self {
        Self {
            weights: DMatrix::zeros(n_vertices, n_b),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_b(&self) -> usize {
        self.weights.ncols()
    }

    pub fn vertex_weights(&self, i: usize) -> DVector<T> {
        self.weights.row(i).transpose()
    }

    pub fn set_vertex_weights(&mut self, i: usize, alpha: &DVector<T>) {
        self.weights.row_mut(i).copy_from(&alpha.transpose());
    }

    /// Reconstructed reflectance for vertex `i`, clamped to `[0, 1]` when
    /// `for_export` is set.
    pub fn reconstruct_vertex(
        &self,
        basis: &SpectralBasis<T>,
        i: usize,
        for_export: bool,
    ) -> Result<SpectralCurve<T>, SpectraError> {
        let curve = basis.reconstruct(&self.vertex_weights(i))?;
        Ok(if for_export { curve.clamped_to_unit() } else { curve })
    }
}
