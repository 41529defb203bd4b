//! Scans the light-stage cost along a line through the true rig
//! translation: with ground-truth reflectance, and with reflectance refit
//! per sample (the co-varying problem the light stage actually solves).

use nalgebra::Vector3;
use spectral_mvir::costs::{photometric_weights, CostWeights, LightModel, SceneData, ViewRecord};
use spectral_mvir::costs::{Layout, Problem};
use spectral_mvir::geometry::{compute_visibility, shapes, Bvh};
use spectral_mvir::solver::{minimize, LmOptions, OptimizationState, SolveReport};
use spectral_mvir::spectra::SpectralBasis;
use spectral_mvir::synth;

fn main() {
    let mesh = shapes::icosphere::<f64>(2, 1.0);
    let diag = mesh.bounding_box_diagonal();
    let v_true = Vector3::new(0.1 * diag, 0.02 * diag, -0.03 * diag);

    let basis = SpectralBasis::build(&synth::reflectance_dataset(400, 42), 8).unwrap();
    let sens = synth::camera_sensitivity();
    let illums = synth::led_illuminants(2);
    let assignment = synth::spherical_assignment(&mesh);
    let ring = synth::RingParams {
        n_views: 16,
        radius: 3.0,
        elevations_deg: vec![-20.0, 10.0, 35.0],
        image_width: 320,
        image_height: 240,
        focal_px: 220.0,
    };
    let scene_def = synth::build_scene(
        mesh.clone(),
        synth::colorchart_24(),
        assignment,
        &basis,
        &ring,
        v_true,
        2,
    )
    .unwrap();
    let images = synth::render_views(&scene_def, &sens, &illums, &basis, 0.0, 1);

    let views: Vec<ViewRecord<f64>> = scene_def
        .poses
        .iter()
        .zip(&scene_def.schedule)
        .zip(&images)
        .map(|((pose, &illum), image)| ViewRecord {
            pose: pose.clone(),
            illuminant: illum,
            image: image.clone(),
        })
        .collect();
    let bvh = Bvh::build(&mesh);
    let visibility = compute_visibility(&mesh, &scene_def.poses, &bvh);
    let weights = CostWeights::default();
    let pw = photometric_weights(&mesh, &views, &visibility, weights.psm_sigma);
    let scene = SceneData::new(
        views, illums, sens, basis, visibility, weights, LightModel::Rig, pw,
    )
    .unwrap();

    let alpha_layout = Layout {
        n_vertices: mesh.n_vertices(),
        n_b: 8,
        opt_x: false,
        opt_alpha: true,
        opt_v: false,
    };

    println!("t, cost_A_gt, cost_A_refit");
    for t in [-0.5, 0.0, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0] {
        let mut state = OptimizationState::new(mesh.clone(), 8, scene.n_views());
        state.v = v_true * t;
        state.alpha = scene_def.gt_alpha.clone();
        // Masks at this v.
        let lights: Vec<Vector3<f64>> = (0..scene.n_views())
            .map(|c| scene.light_position(c, &state.v))
            .collect();
        state.masks = spectral_mvir::geometry::compute_shadow_masks(&state.mesh, &lights, &bvh);

        let layout_full = Layout { opt_x: true, opt_v: true, ..alpha_layout };
        let problem = Problem::new(&scene, &state.view(), layout_full).unwrap();
        let cost_gt = problem.cost(&state.view()).cost;

        // Refit alpha at this v (linear subproblem).
        let problem_alpha = Problem::new(&scene, &state.view(), alpha_layout).unwrap();
        let mut report = SolveReport::default();
        let opts = LmOptions::<f64> {
            max_iters: 30,
            tol_cost: 1e-12,
            ..LmOptions::default()
        };
        minimize(&problem_alpha, &mut state, &opts, "alpha", 0, &mut report);
        let cost_refit = problem.cost(&state.view()).cost;
        println!("{t:.2}, {cost_gt:.6e}, {cost_refit:.6e}");
    }
}
