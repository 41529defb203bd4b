//! Residual blocks for the four energy terms and their sparse assembly.
//!
//! The total cost is the sum of squared residuals of all blocks; the
//! balance weights enter as square roots on the residuals. Shadow bits are
//! constants within a solve and visibility is frozen from the initial mesh,
//! so the blocks differentiate only through geometry, reflectance weights,
//! and the light rig.

pub mod assemble;
pub mod blocks;
pub mod layout;

pub use assemble::{Evaluation, NormalEquations, Problem};
pub use blocks::{BlockKind, GeomCache, ResidualBlock};
pub use layout::{Layout, ParamBlock};

use nalgebra::{Const, DMatrix, OMatrix, Vector2, Vector3};
use thiserror::Error;

use crate::geometry::{CameraPose, SceneMesh, ShadowMaskMatrix, VisibilitySet};
use crate::io::CostsConfig;
use crate::real::{real, Real};
use crate::rendering::{CameraSensitivity, Illuminant, Image, RenderContext};
use crate::spectra::{SmoothnessOperator, SpectralBasis, N_BANDS};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("problem has no residual blocks")]
    DegenerateProblem,
    #[error("view {view} references illuminant {illuminant} out of range")]
    BadIlluminantIndex { view: usize, illuminant: usize },
    #[error("state has {got} vertices, scene expects {expected}")]
    StateMismatch { expected: usize, got: usize },
}

/// Balance weights of the energy terms.
#[derive(Clone, Copy, Debug)]
pub struct CostWeights<T: Real> {
    pub gamma1: T,
    pub gamma2: T,
    pub gamma3: T,
    pub psm_sigma: T,
    pub huber_delta: Option<T>,
}

impl<T: Real> Default for CostWeights<T> {
    fn default() -> Self {
        Self {
            gamma1: real(0.01),
            gamma2: real(2.0),
            gamma3: real(0.01),
            psm_sigma: real(0.05),
            huber_delta: None,
        }
    }
}

impl<T: Real> CostWeights<T> {
    pub fn from_config(config: &CostsConfig) -> Self {
        Self {
            gamma1: real(config.gamma1),
            gamma2: real(config.gamma2),
            gamma3: real(config.gamma3),
            psm_sigma: real(config.psm_sigma),
            huber_delta: config.huber_delta.map(real),
        }
    }
}

/// One observed view: pose, scheduled illuminant, and the captured image.
#[derive(Clone, Debug)]
pub struct ViewRecord<T: Real> {
    pub pose: CameraPose<T>,
    pub illuminant: usize,
    pub image: Image<T>,
}

/// Where light positions come from during optimization.
#[derive(Clone, Debug)]
pub enum LightModel<T: Real> {
    /// Derived per view from the state's rig translation; optimizable.
    Rig,
    /// Supplied per view (projector-style setups); not optimized.
    FixedPerView(Vec<Vector3<T>>),
}

/// Immutable problem data shared across an optimization run.
pub struct SceneData<T: Real> {
    pub views: Vec<ViewRecord<T>>,
    pub illuminants: Vec<Illuminant<T>>,
    pub sensitivity: CameraSensitivity<T>,
    pub basis: SpectralBasis<T>,
    pub visibility: VisibilitySet,
    pub weights: CostWeights<T>,
    pub light: LightModel<T>,
    /// Ordered adjacent pairs `(i, j, w)` with the frozen smoothness gate.
    pub photometric_weights: Vec<(u32, u32, T)>,
    /// Cached `C^T L` and `C^T L B` per illuminant.
    pub render: RenderContext<T>,
    /// `sqrt(gamma1) * D * B`, the constant spectral-residual Jacobian.
    pub spectral_jac: OMatrix<T, Const<N_BANDS>, nalgebra::Dyn>,
}

impl<T: Real> SceneData<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        views: Vec<ViewRecord<T>>,
        illuminants: Vec<Illuminant<T>>,
        sensitivity: CameraSensitivity<T>,
        basis: SpectralBasis<T>,
        visibility: VisibilitySet,
        weights: CostWeights<T>,
        light: LightModel<T>,
        photometric_weights: Vec<(u32, u32, T)>,
    ) -> Result<Self, CostError> {
        for (c, view) in views.iter().enumerate() {
            if view.illuminant >= illuminants.len() {
                return Err(CostError::BadIlluminantIndex {
                    view: c,
                    illuminant: view.illuminant,
                });
            }
        }
        let render = RenderContext::new(&sensitivity, &illuminants, &basis);
        let spectral_jac =
            SmoothnessOperator::second_difference().compose(&basis) * weights.gamma1.sqrt();
        Ok(Self {
            views,
            illuminants,
            sensitivity,
            basis,
            visibility,
            weights,
            light,
            photometric_weights,
            render,
            spectral_jac,
        })
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_b(&self) -> usize {
        self.basis.n_b()
    }

    /// World light position for view `c` given the current rig translation.
    pub fn light_position(&self, c: usize, v: &Vector3<T>) -> Vector3<T> {
        match &self.light {
            LightModel::Rig => {
                crate::rendering::LightRig::new(*v).position_for(&self.views[c].pose)
            }
            LightModel::FixedPerView(positions) => positions[c],
        }
    }

    pub fn light_is_optimizable(&self) -> bool {
        matches!(self.light, LightModel::Rig)
    }
}

/// Borrowed view of the optimization variables plus the frozen masks.
#[derive(Clone, Copy)]
pub struct StateView<'a, T: Real> {
    pub mesh: &'a SceneMesh<T>,
    /// One row of basis weights per vertex.
    pub alpha: &'a DMatrix<T>,
    pub v: Vector3<T>,
    pub masks: &'a ShadowMaskMatrix,
}

/// Edge-gated smoothness weights for every ordered adjacent pair, computed
/// once from the input images at the initial geometry and frozen.
///
/// `w = exp(-(d/sigma)^2)` with `d` the maximum, over the views both
/// vertices see, of the chromaticity difference and the relative intensity
/// difference of the two projected observations. Chromaticity alone is
/// blind to albedo edges between gray levels; the intensity component
/// catches those, while smooth shading varies little between neighbors.
pub fn photometric_weights<T: Real>(
    mesh: &SceneMesh<T>,
    views: &[ViewRecord<T>],
    visibility: &VisibilitySet,
    sigma: T,
) -> Vec<(u32, u32, T)> {
    let sample = |img: &Image<T>, pixel: &Vector2<T>| -> Option<(Vector3<T>, T)> {
        let rgb = img.sample_bilinear(pixel)?;
        let sum = rgb.x + rgb.y + rgb.z;
        if sum <= real(1e-9) {
            // No evidence in black regions.
            let third = T::one() / real::<T>(3.0);
            return Some((Vector3::from_element(third), T::zero()));
        }
        Some((rgb / sum, sum))
    };
    let mut out = Vec::new();
    for i in 0..mesh.n_vertices() {
        for &j in mesh.neighbors(i) {
            let mut d_max = T::zero();
            for &c in visibility.visible_cameras(i) {
                if !visibility.is_visible(j as usize, c) {
                    continue;
                }
                let view = &views[c as usize];
                let (Some((pi, _)), Some((pj, _))) = (
                    view.pose.project(&mesh.vertex(i)),
                    view.pose.project(&mesh.vertex(j as usize)),
                ) else {
                    continue;
                };
                let (Some((ci, si)), Some((cj, sj))) =
                    (sample(&view.image, &pi), sample(&view.image, &pj))
                else {
                    continue;
                };
                let d_chroma = (ci - cj).norm();
                let d_intensity = (si - sj).abs() / (si + sj + real(1e-9));
                d_max = d_max.max(d_chroma.max(d_intensity));
            }
            let ratio = d_max / sigma;
            out.push((i as u32, j, (-ratio * ratio).exp()));
        }
    }
    out
}
