//! Dry run of the joint-refinement acceptance experiment.

use nalgebra::Vector3;
use spectral_mvir::costs::{photometric_weights, CostWeights, LightModel, SceneData, ViewRecord};
use spectral_mvir::geometry::{compute_visibility, shapes, subdivide_sqrt3, Bvh};
use spectral_mvir::solver::{run_pipeline, PipelineConfig};
use spectral_mvir::spectra::SpectralBasis;
use spectral_mvir::synth;

fn main() {
    let t0 = std::time::Instant::now();
    let mesh = subdivide_sqrt3(&shapes::icosphere::<f64>(4, 1.0)).unwrap();
    let diag = mesh.bounding_box_diagonal();
    println!("n_v = {}, diag = {diag:.3}", mesh.n_vertices());
    let v_true = Vector3::new(0.1 * diag, 0.02 * diag, -0.03 * diag);

    let basis = SpectralBasis::build(&synth::reflectance_dataset(400, 42), 8).unwrap();
    let sens = synth::camera_sensitivity();
    let illums = synth::led_illuminants(3);
    let assignment = synth::spherical_assignment(&mesh);
    let ring = synth::RingParams {
        n_views: 20,
        radius: 3.0,
        elevations_deg: vec![-55.0, -25.0, 0.0, 25.0, 55.0],
        image_width: 512,
        image_height: 384,
        focal_px: 360.0,
    };
    let scene_def = synth::build_scene(
        mesh.clone(),
        synth::colorchart_24(),
        assignment,
        &basis,
        &ring,
        v_true,
        3,
    )
    .unwrap();
    let images = synth::render_views(&scene_def, &sens, &illums, &basis, 0.0, 1);
    println!("rendered {} records in {:?}", images.len(), t0.elapsed());

    // Perturbed initialization.
    let sigma = 0.005 * diag;
    let init_mesh = synth::perturb_vertices(&mesh, sigma, 77).unwrap();
    let acc0 = spectral_mvir::eval::accuracy(mesh.vertices(), init_mesh.vertices()).unwrap();
    let comp0 = spectral_mvir::eval::completeness(mesh.vertices(), init_mesh.vertices()).unwrap();
    println!("init accuracy {:.5} completeness {:.5}", acc0.mean, comp0.mean);

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
    let bvh = Bvh::build(&init_mesh);
    let visibility = compute_visibility(&init_mesh, &scene_def.poses, &bvh);
    let weights = CostWeights::default();
    let pw = photometric_weights(&init_mesh, &views, &visibility, weights.psm_sigma);
    let scene = SceneData::new(
        views,
        illums,
        sens,
        basis,
        visibility,
        weights,
        LightModel::Rig,
        pw,
    )
    .unwrap();

    let config = PipelineConfig::<f64>::default();
    let t1 = std::time::Instant::now();
    let (state, report) = run_pipeline(&scene, init_mesh, None, None, &config).unwrap();
    println!("pipeline in {:?}", t1.elapsed());
    for s in &report.stages {
        println!(
            "stage {} round {} status {:?} iters {} cost {:.4e} -> {:.4e}",
            s.stage, s.round, s.status, s.iterations, s.initial_cost, s.final_cost
        );
    }
    println!("mask_changes {:?}", report.mask_changes);
    let v_err = (state.v - v_true).norm() / diag;
    println!("v error = {:.5} of diagonal", v_err);

    let acc = spectral_mvir::eval::accuracy(mesh.vertices(), state.mesh.vertices()).unwrap();
    let comp = spectral_mvir::eval::completeness(mesh.vertices(), state.mesh.vertices()).unwrap();
    println!(
        "final accuracy {:.5} ({:.1}% improvement), completeness {:.5} ({:.1}% improvement)",
        acc.mean,
        100.0 * (1.0 - acc.mean / acc0.mean),
        comp.mean,
        100.0 * (1.0 - comp.mean / comp0.mean)
    );

    let est: Vec<_> = (0..state.mesh.n_vertices())
        .map(|i| {
            scene
                .basis
                .reconstruct(&state.alpha.row(i).transpose())
                .unwrap()
                .clamped_to_unit()
        })
        .collect();
    let gt: Vec<_> = (0..mesh.n_vertices()).map(|i| scene_def.gt_reflectance(i).clone()).collect();
    let corr = spectral_mvir::eval::nearest_correspondence(mesh.vertices(), state.mesh.vertices()).unwrap();
    let rmse = spectral_mvir::eval::reflectance_rmse(&gt, &est, &corr).unwrap();
    let chart = synth::colorchart_24();
    let floor: f64 = chart
        .iter()
        .map(|c| {
            let a = scene.basis.project(c);
            let r = scene.basis.reconstruct(&a).unwrap();
            ((r.samples() - c.samples()).norm_squared() / 31.0).sqrt()
        })
        .sum::<f64>()
        / 24.0;
    println!(
        "reflectance RMSE {:.5}, floor {:.5}, ratio {:.2}",
        rmse.mean,
        floor,
        rmse.mean / floor
    );
    println!("total {:?}", t0.elapsed());
}
