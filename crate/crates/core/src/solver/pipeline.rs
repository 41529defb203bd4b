//! The staged optimization schedule.
//!
//! Round 1 estimates the light rig from zero with frozen vertex positions
//! (reflectance co-varies, otherwise the light scale is unconstrained),
//! then all parameters are refined jointly. Shadow masks are recomputed
//! between rounds from the current geometry and rig; the loop exits early
//! when a mask pass changes nothing and the last joint solve converged.

use nalgebra::{DMatrix, Vector3};

use crate::costs::{Layout, Problem, SceneData, StateView};
use crate::geometry::{compute_shadow_masks, Bvh, SceneMesh};
use crate::real::{real, Real};
use crate::rendering::shading_factor;
use crate::spectra::{fit_reflectance_direct, DirectObservation};

use super::lm::{minimize, LmOptions, StageStatus};
use super::{OptimizationState, SolveError, SolveReport};

#[derive(Clone, Copy, Debug)]
pub struct PipelineConfig<T: Real> {
    pub outer_iters: usize,
    pub max_light_iters: usize,
    pub max_joint_iters: usize,
    pub tol_cost: T,
    pub tol_grad: T,
    pub lambda_init: T,
    /// Tikhonov weight of the per-vertex reflectance initialization.
    pub init_alpha_tikhonov: T,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            outer_iters: 4,
            max_light_iters: 50,
            max_joint_iters: 100,
            tol_cost: real(1e-6),
            tol_grad: real(1e-8),
            lambda_init: real(1e-4),
            init_alpha_tikhonov: real(1e-2),
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    pub fn from_solver_config(config: &crate::io::SolverConfig) -> Self {
        Self {
            outer_iters: config.outer_iters,
            max_light_iters: config.max_light_iters,
            max_joint_iters: config.max_joint_iters,
            tol_cost: real(config.tol_cost),
            tol_grad: real(config.tol_grad),
            lambda_init: real(config.lambda_init),
            init_alpha_tikhonov: real(1e-2),
        }
    }

    fn lm_options(&self, max_iters: usize, geo_scale: T) -> LmOptions<T> {
        LmOptions {
            max_iters,
            tol_cost: self.tol_cost,
            tol_grad: self.tol_grad,
            lambda_init: self.lambda_init,
            max_geo_step: Some(geo_scale * real(0.01)),
            ..LmOptions::default()
        }
    }
}

/// Per-vertex regularized reflectance fit against the observed projections,
/// using the current geometry and light positions for the shading.
pub fn init_alpha<T: Real>(scene: &SceneData<T>, state: &StateView<T>) -> DMatrix<T> {
    let n_v = state.mesh.n_vertices();
    let n_b = scene.n_b();
    let sens = scene.sensitivity.matrix();
    let mut alpha = DMatrix::zeros(n_v, n_b);
    let shading_floor = real::<T>(1e-6);
    for i in 0..n_v {
        let Ok(normal) = state.mesh.vertex_normal(i) else {
            continue;
        };
        let x = state.mesh.vertex(i);
        let mut obs = Vec::new();
        for &c in scene.visibility.visible_cameras(i) {
            let cu = c as usize;
            if !state.masks.get(i, cu) {
                continue;
            }
            let view = &scene.views[cu];
            let Some((pixel, _)) = view.pose.project(&x) else {
                continue;
            };
            let Some(rgb) = view.image.sample_bilinear(&pixel) else {
                continue;
            };
            let light = scene.light_position(cu, &state.v);
            let Ok(s) = shading_factor(&x, &normal, &light) else {
                continue;
            };
            if s <= shading_floor {
                continue;
            }
            obs.push(DirectObservation {
                illuminant: scene.illuminants[view.illuminant].spd().clone(),
                rgb,
                shading: s,
            });
        }
        if obs.is_empty() {
            continue;
        }
        if let Ok(a) = fit_reflectance_direct(&scene.basis, &sens, &obs, real(1e-2)) {
            alpha.row_mut(i).copy_from(&a.transpose());
        }
    }
    alpha
}

/// Light-rig initialization: frozen vertex positions, reflectance and rig
/// optimized jointly.
pub fn solve_light_stage<T: Real>(
    scene: &SceneData<T>,
    state: &mut OptimizationState<T>,
    config: &PipelineConfig<T>,
    round: usize,
    report: &mut SolveReport,
) -> Result<StageStatus, SolveError> {
    let lit_pairs: usize = (0..state.mesh.n_vertices())
        .map(|i| {
            scene
                .visibility
                .visible_cameras(i)
                .iter()
                .filter(|&&c| state.masks.get(i, c as usize))
                .count()
        })
        .sum();
    if lit_pairs == 0 {
        return Err(SolveError::NoSignal);
    }
    if scene.n_views() < 2 {
        report.warnings.push(
            "light stage with a single view is under-constrained (translation/scale ambiguity along the view axis)"
                .into(),
        );
    }
    let layout = Layout {
        n_vertices: state.mesh.n_vertices(),
        n_b: scene.n_b(),
        opt_x: false,
        opt_alpha: true,
        opt_v: scene.light_is_optimizable(),
    };
    let problem = Problem::new(scene, &state.view(), layout)?;
    let geo_scale = state.mesh.bounding_box_diagonal();
    Ok(minimize(
        &problem,
        state,
        &config.lm_options(config.max_light_iters, geo_scale),
        "light",
        round,
        report,
    ))
}

/// Joint refinement over positions, reflectance, and (when estimable) the
/// rig translation.
pub fn solve_joint_stage<T: Real>(
    scene: &SceneData<T>,
    state: &mut OptimizationState<T>,
    config: &PipelineConfig<T>,
    round: usize,
    report: &mut SolveReport,
) -> Result<StageStatus, SolveError> {
    let layout = Layout {
        n_vertices: state.mesh.n_vertices(),
        n_b: scene.n_b(),
        opt_x: true,
        opt_alpha: true,
        opt_v: scene.light_is_optimizable(),
    };
    let problem = Problem::new(scene, &state.view(), layout)?;
    let geo_scale = state.mesh.bounding_box_diagonal();
    Ok(minimize(
        &problem,
        state,
        &config.lm_options(config.max_joint_iters, geo_scale),
        "joint",
        round,
        report,
    ))
}

/// Runs the full schedule starting from `initial_mesh` (already subdivided
/// by the caller) and optional warm starts for reflectance and the rig.
pub fn run_pipeline<T: Real>(
    scene: &SceneData<T>,
    initial_mesh: SceneMesh<T>,
    init_alpha_override: Option<DMatrix<T>>,
    init_v: Option<Vector3<T>>,
    config: &PipelineConfig<T>,
) -> Result<(OptimizationState<T>, SolveReport), SolveError> {
    let start = std::time::Instant::now();
    let mut report = SolveReport::default();
    let mut state = OptimizationState::new(initial_mesh, scene.n_b(), scene.n_views());
    state.v = init_v.unwrap_or_else(Vector3::zeros);

    let mut last_joint_converged = false;
    let skip_light_stage = !scene.light_is_optimizable() || init_v.is_some();
    if !scene.light_is_optimizable() {
        report
            .warnings
            .push("light positions fixed per view; rig estimation skipped".into());
    }

    for round in 1..=config.outer_iters {
        // Shadow pass against the current geometry and rig.
        let bvh = Bvh::build(&state.mesh);
        let lights: Vec<Vector3<T>> = (0..scene.n_views())
            .map(|c| scene.light_position(c, &state.v))
            .collect();
        let masks = compute_shadow_masks(&state.mesh, &lights, &bvh);
        let changed = masks.diff_count(&state.masks);
        report.mask_changes.push(changed);
        state.masks = masks;
        state.steps_since_mask_update = 0;

        if round > 1 && changed == 0 && last_joint_converged {
            report
                .warnings
                .push(format!("masks unchanged after round {round}; stopping early"));
            break;
        }

        if round == 1 {
            match init_alpha_override.as_ref() {
                Some(a) => state.alpha = a.clone(),
                None => state.alpha = init_alpha(scene, &state.view()),
            }
            if !skip_light_stage {
                solve_light_stage(scene, &mut state, config, round, &mut report)?;
            }
        }

        let status = solve_joint_stage(scene, &mut state, config, round, &mut report)?;
        last_joint_converged = matches!(
            status,
            StageStatus::Converged | StageStatus::GradientConverged
        );
    }

    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((state, report))
}
