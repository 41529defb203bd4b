//! Residual block evaluation.
//!
//! Every evaluator returns `None` for a dropped block (projection out of
//! bounds, missing normal, too few neighbors); dropped blocks contribute
//! nothing to cost or gradient and are counted by the caller.

use nalgebra::{DMatrix, DVector, Matrix3, RowVector3, Vector3};

use crate::geometry::plane::LocalPlaneFit;
use crate::real::{real, Real};
use crate::rendering::shading_factor_grad;
use crate::spectra::N_BANDS;

use super::layout::ParamBlock;
use super::{SceneData, StateView};

fn to_dyn<T: Real, R: nalgebra::Dim, C: nalgebra::Dim, S>(
    m: &nalgebra::Matrix<T, R, C, S>,
) -> DMatrix<T>
where
    S: nalgebra::storage::Storage<T, R, C>,
{
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Rendering,
    Spectral,
    Photometric,
    Geometric,
}

/// One residual block and its parameter references.
#[derive(Clone, Copy, Debug)]
pub struct ResidualBlock {
    pub kind: BlockKind,
    pub vertex: u32,
    /// View index for rendering blocks.
    pub view: u32,
    /// Neighbor vertex for photometric blocks.
    pub neighbor: u32,
    /// Index into `SceneData::photometric_weights` for photometric blocks.
    pub weight_index: u32,
}

impl ResidualBlock {
    pub fn rendering(vertex: u32, view: u32) -> Self {
        Self {
            kind: BlockKind::Rendering,
            vertex,
            view,
            neighbor: 0,
            weight_index: 0,
        }
    }

    pub fn spectral(vertex: u32) -> Self {
        Self {
            kind: BlockKind::Spectral,
            vertex,
            view: 0,
            neighbor: 0,
            weight_index: 0,
        }
    }

    pub fn photometric(vertex: u32, neighbor: u32, weight_index: u32) -> Self {
        Self {
            kind: BlockKind::Photometric,
            vertex,
            view: 0,
            neighbor,
            weight_index,
        }
    }

    pub fn geometric(vertex: u32) -> Self {
        Self {
            kind: BlockKind::Geometric,
            vertex,
            view: 0,
            neighbor: 0,
            weight_index: 0,
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            BlockKind::Rendering => 3,
            BlockKind::Spectral | BlockKind::Photometric => N_BANDS,
            BlockKind::Geometric => 1,
        }
    }

    /// Parameter blocks this residual touches (before layout filtering).
    pub fn param_blocks<T: Real>(&self, state: &StateView<T>) -> Vec<ParamBlock> {
        match self.kind {
            BlockKind::Rendering => {
                let i = self.vertex;
                let mut params = vec![ParamBlock::Vertex(i)];
                for &j in state.mesh.neighbors(i as usize) {
                    params.push(ParamBlock::Vertex(j));
                }
                params.push(ParamBlock::Alpha(i));
                params.push(ParamBlock::Light);
                params
            }
            BlockKind::Spectral => vec![ParamBlock::Alpha(self.vertex)],
            BlockKind::Photometric => vec![
                ParamBlock::Alpha(self.vertex),
                ParamBlock::Alpha(self.neighbor),
            ],
            BlockKind::Geometric => {
                let i = self.vertex;
                let mut params = vec![ParamBlock::Vertex(i)];
                for &j in state.mesh.neighbors(i as usize) {
                    params.push(ParamBlock::Vertex(j));
                }
                params
            }
        }
    }
}

/// Per-evaluation cache: vertex normals (with ring Jacobians when needed)
/// and the per-view light positions for the current rig translation.
pub struct GeomCache<T: Real> {
    pub normals: Vec<Option<Vector3<T>>>,
    pub normal_jacs: Vec<Option<Vec<(u32, Matrix3<T>)>>>,
    pub light_positions: Vec<Vector3<T>>,
    pub with_jacobians: bool,
}

impl<T: Real> GeomCache<T> {
    pub fn build(scene: &SceneData<T>, state: &StateView<T>, with_jacobians: bool) -> Self {
        let n_v = state.mesh.n_vertices();
        let mut normals = vec![None; n_v];
        let mut normal_jacs = vec![None; n_v];
        for i in 0..n_v {
            if with_jacobians {
                if let Ok((n, jac)) = state.mesh.vertex_normal_with_jacobian(i) {
                    normals[i] = Some(n);
                    normal_jacs[i] = Some(jac);
                }
            } else if let Ok(n) = state.mesh.vertex_normal(i) {
                normals[i] = Some(n);
            }
        }
        let light_positions = (0..scene.n_views())
            .map(|c| scene.light_position(c, &state.v))
            .collect();
        Self {
            normals,
            normal_jacs,
            light_positions,
            with_jacobians,
        }
    }
}

/// Jacobian contributions of one block: `(parameter block, d residual / d block)`.
pub type BlockJacobian<T> = Vec<(ParamBlock, DMatrix<T>)>;

/// Residual of the pixel-intensity term for vertex `i` in view `c`:
/// `(y_obs(pi(x)) - m * max(s, 0) * C^T L B alpha) / sqrt(|V(i)|)`.
pub fn rendering_residual<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    cache: &GeomCache<T>,
    i: u32,
    c: u32,
) -> Option<DVector<T>> {
    eval_rendering(scene, state, cache, i, c, false).map(|(r, _)| r)
}

pub fn rendering_residual_with_jac<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    cache: &GeomCache<T>,
    i: u32,
    c: u32,
) -> Option<(DVector<T>, BlockJacobian<T>)> {
    eval_rendering(scene, state, cache, i, c, true)
        .map(|(r, jac)| (r, jac.expect("jacobian requested")))
}

fn eval_rendering<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    cache: &GeomCache<T>,
    i: u32,
    c: u32,
    with_jac: bool,
) -> Option<(DVector<T>, Option<BlockJacobian<T>>)> {
    let iu = i as usize;
    let cu = c as usize;
    let view = &scene.views[cu];
    let x = state.mesh.vertex(iu);
    let normal = cache.normals[iu]?;
    let (pixel, _depth, d_pixel_dx) = view.pose.project_with_jacobian(&x)?;
    let (y_obs, d_obs_d_pixel) = view.image.sample_bilinear_grad(&pixel)?;
    let light = cache.light_positions[cu];
    let shading = shading_factor_grad(&x, &normal, &light).ok()?;
    let lit = state.masks.get(iu, cu);
    let active = lit && shading.s > T::zero();

    let count = scene.visibility.count(iu);
    debug_assert!(count > 0, "rendering block for vertex outside V(i)");
    let inv_sqrt_v = T::one() / real::<T>(count as f64).sqrt();

    let g_alpha = &scene.render.ct_l_b[view.illuminant];
    let alpha = state.alpha.row(iu).transpose();
    let y_lin = g_alpha * &alpha; // C^T L B alpha
    let model = if active { y_lin * shading.s } else { Vector3::zeros() };
    let mut residual = (y_obs - model) * inv_sqrt_v;

    // Optional robust kernel (off by default): scale residual and Jacobian
    // by the Huber square-root weight, ignoring the weight's own derivative.
    let mut robust = T::one();
    if let Some(delta) = scene.weights.huber_delta {
        let norm = residual.norm();
        if norm > delta {
            robust = (delta * (real::<T>(2.0) * norm - delta)).sqrt() / norm;
            residual *= robust;
        }
    }
    let residual = DVector::from_column_slice(residual.as_slice());

    if !with_jac {
        return Some((residual, None));
    }
    let inv_sqrt_v = inv_sqrt_v * robust;

    let mut jac: BlockJacobian<T> = Vec::with_capacity(state.mesh.neighbors(iu).len() + 3);

    // d y_obs / d x_i through the reprojection.
    let obs_term = d_obs_d_pixel * d_pixel_dx;

    if active {
        let normal_jac = cache.normal_jacs[iu].as_ref().expect("cache with jacobians");
        // d model / d x_k = y_lin * (ds_dx * [k == i] + ds_dn * dn/dx_k).
        for (k, dn_dxk) in normal_jac {
            let mut ds_row: RowVector3<T> = shading.ds_dn * dn_dxk;
            if *k == i {
                ds_row += shading.ds_dx;
            }
            let mut block = y_lin * ds_row; // 3x3 outer product
            block.neg_mut();
            if *k == i {
                block += obs_term;
            }
            jac.push((ParamBlock::Vertex(*k), to_dyn(&(block * inv_sqrt_v))));
        }
        // d residual / d alpha = -s * G / sqrt(|V|).
        let mut d_alpha = DMatrix::zeros(3, scene.n_b());
        d_alpha.copy_from(&(g_alpha * (-shading.s * inv_sqrt_v)));
        jac.push((ParamBlock::Alpha(i), d_alpha));
        // d residual / d v through p = R^T (v - t).
        if scene.light_is_optimizable() {
            let dp_dv = view.pose.rotation().transpose();
            let block = y_lin * (shading.ds_dp * dp_dv) * (-inv_sqrt_v);
            jac.push((ParamBlock::Light, to_dyn(&block)));
        }
    } else {
        // Dark side or shadowed: the model is constant zero, only the
        // observation moves with x_i.
        jac.push((
            ParamBlock::Vertex(i),
            to_dyn(&(obs_term * inv_sqrt_v)),
        ));
    }

    Some((residual, Some(jac)))
}

/// `sqrt(gamma1) * D B alpha_i`: curvature of the reconstructed curve.
pub fn spectral_residual<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    i: u32,
) -> DVector<T> {
    let alpha = state.alpha.row(i as usize).transpose();
    let r = &scene.spectral_jac * alpha;
    DVector::from_column_slice(r.as_slice())
}

pub fn spectral_residual_with_jac<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    i: u32,
) -> (DVector<T>, BlockJacobian<T>) {
    let r = spectral_residual(scene, state, i);
    let mut jac = DMatrix::zeros(N_BANDS, scene.n_b());
    jac.copy_from(&scene.spectral_jac);
    (r, vec![(ParamBlock::Alpha(i), jac)])
}

/// `sqrt(gamma2 * w_ij) * B (alpha_i - alpha_j)` for an ordered adjacent pair.
pub fn photometric_residual<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    i: u32,
    j: u32,
    weight_index: u32,
) -> DVector<T> {
    let (wi, wj, w) = scene.photometric_weights[weight_index as usize];
    debug_assert_eq!((wi, wj), (i, j));
    let scale = (scene.weights.gamma2 * w).sqrt();
    let diff = (state.alpha.row(i as usize) - state.alpha.row(j as usize)).transpose();
    let r = scene.basis.matrix() * diff * scale;
    DVector::from_column_slice(r.as_slice())
}

pub fn photometric_residual_with_jac<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    i: u32,
    j: u32,
    weight_index: u32,
) -> (DVector<T>, BlockJacobian<T>) {
    let (_, _, w) = scene.photometric_weights[weight_index as usize];
    let scale = (scene.weights.gamma2 * w).sqrt();
    let r = photometric_residual(scene, state, i, j, weight_index);
    let mut jac_i = DMatrix::zeros(N_BANDS, scene.n_b());
    jac_i.copy_from(&(scene.basis.matrix() * scale));
    let jac_j = &jac_i * -T::one();
    (
        r,
        vec![(ParamBlock::Alpha(i), jac_i), (ParamBlock::Alpha(j), jac_j)],
    )
}

/// `sqrt(gamma3) * dist(x_i, plane(neighbors)) / mean_edge_length`.
pub fn geometric_residual<T: Real>(state: &StateView<T>, gamma3: T, i: u32) -> Option<T> {
    let fit = LocalPlaneFit::compute(state.mesh, i as usize, false).ok()?;
    Some(gamma3.sqrt() * fit.distance / fit.scale)
}

pub fn geometric_residual_with_jac<T: Real>(
    state: &StateView<T>,
    gamma3: T,
    i: u32,
) -> Option<(T, BlockJacobian<T>)> {
    let fit = LocalPlaneFit::compute(state.mesh, i as usize, true).ok()?;
    let sqrt_g = gamma3.sqrt();
    let r = sqrt_g * fit.distance / fit.scale;
    let inv_scale = T::one() / fit.scale;
    let ratio = fit.distance * inv_scale * inv_scale;
    let mut jac = Vec::with_capacity(fit.d_distance.len());
    for ((k, d_dist), (k2, d_scale)) in fit.d_distance.iter().zip(&fit.d_scale) {
        debug_assert_eq!(k, k2);
        let row = (d_dist * inv_scale - d_scale * ratio) * sqrt_g;
        jac.push((ParamBlock::Vertex(*k), to_dyn(&row)));
    }
    Some((r, jac))
}

/// Unified entry points used by the assembler and the verification suites.
pub fn eval_block<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    cache: &GeomCache<T>,
    block: &ResidualBlock,
) -> Option<DVector<T>> {
    match block.kind {
        BlockKind::Rendering => rendering_residual(scene, state, cache, block.vertex, block.view),
        BlockKind::Spectral => Some(spectral_residual(scene, state, block.vertex)),
        BlockKind::Photometric => Some(photometric_residual(
            scene,
            state,
            block.vertex,
            block.neighbor,
            block.weight_index,
        )),
        BlockKind::Geometric => geometric_residual(state, scene.weights.gamma3, block.vertex)
            .map(|r| DVector::from_element(1, r)),
    }
}

pub fn eval_block_with_jac<T: Real>(
    scene: &SceneData<T>,
    state: &StateView<T>,
    cache: &GeomCache<T>,
    block: &ResidualBlock,
) -> Option<(DVector<T>, BlockJacobian<T>)> {
    match block.kind {
        BlockKind::Rendering => {
            rendering_residual_with_jac(scene, state, cache, block.vertex, block.view)
        }
        BlockKind::Spectral => Some(spectral_residual_with_jac(scene, state, block.vertex)),
        BlockKind::Photometric => Some(photometric_residual_with_jac(
            scene,
            state,
            block.vertex,
            block.neighbor,
            block.weight_index,
        )),
        BlockKind::Geometric => {
            geometric_residual_with_jac(state, scene.weights.gamma3, block.vertex)
                .map(|(r, jac)| (DVector::from_element(1, r), jac))
        }
    }
}
