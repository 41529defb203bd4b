//! Scratch probe for pipeline behavior on a small synthetic scene.

use nalgebra::Vector3;
use spectral_mvir::costs::{photometric_weights, CostWeights, LightModel, SceneData, ViewRecord};
use spectral_mvir::geometry::{compute_visibility, shapes, Bvh};
use spectral_mvir::solver::{run_pipeline, PipelineConfig};
use spectral_mvir::spectra::SpectralBasis;
use spectral_mvir::synth;

fn main() {
    let t0 = std::time::Instant::now();
    let prior_scale: f64 = std::env::args()
        .find(|a| a.starts_with("--prior-scale="))
        .map(|a| a.split('=').nth(1).unwrap().parse().unwrap())
        .unwrap_or(1.0);
    let mesh = shapes::icosphere::<f64>(3, 1.0);
    let diag = mesh.bounding_box_diagonal();
    let v_true = Vector3::new(0.1 * diag, 0.02 * diag, -0.03 * diag);
    println!("n_v = {}, diag = {diag:.3}, v_true = {v_true:?}", mesh.n_vertices());

    let basis = SpectralBasis::build(&synth::reflectance_dataset(400, 42), 8).unwrap();
    let sens = synth::camera_sensitivity();
    let n_ill: usize = if std::env::args().any(|a| a == "--three") { 3 } else { 2 };
    let illums = synth::led_illuminants(n_ill);
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
        n_ill,
    )
    .unwrap();
    let images = synth::render_views(&scene_def, &sens, &illums, &basis, 0.0, 1);
    println!("rendered {} views in {:?}", images.len(), t0.elapsed());

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
    let mut weights = CostWeights::default();
    weights.gamma1 *= prior_scale;
    weights.gamma2 *= prior_scale;
    if let Some(a) = std::env::args().find(|a| a.starts_with("--g1-scale=")) {
        weights.gamma1 *= a.split('=').nth(1).unwrap().parse::<f64>().unwrap();
    }
    if let Some(a) = std::env::args().find(|a| a.starts_with("--g2-scale=")) {
        weights.gamma2 *= a.split('=').nth(1).unwrap().parse::<f64>().unwrap();
    }
    if std::env::args().any(|a| a == "--no-priors") {
        weights.gamma1 = 0.0;
        weights.gamma3 = 0.0;
    }
    let pw = photometric_weights(&mesh, &views, &visibility, weights.psm_sigma);
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

    // Reference: cost at the ground-truth state.
    {
        use spectral_mvir::costs::{Layout, Problem};
        use spectral_mvir::solver::OptimizationState;
        let mut gt_state = OptimizationState::new(mesh.clone(), 8, scene.n_views());
        gt_state.alpha = scene_def.gt_alpha.clone();
        gt_state.v = v_true;
        let bvh2 = Bvh::build(&gt_state.mesh);
        let lights: Vec<Vector3<f64>> = (0..scene.n_views()).map(|c| scene.light_position(c, &gt_state.v)).collect();
        gt_state.masks = spectral_mvir::geometry::compute_shadow_masks(&gt_state.mesh, &lights, &bvh2);
        let layout = Layout { n_vertices: gt_state.mesh.n_vertices(), n_b: 8, opt_x: true, opt_alpha: true, opt_v: true };
        let problem = Problem::new(&scene, &gt_state.view(), layout).unwrap();
        println!("cost at ground truth = {:.6e}", problem.cost(&gt_state.view()).cost);
        // Per-kind breakdown.
        use spectral_mvir::costs::{blocks, BlockKind, GeomCache};
        let cache = GeomCache::build(&scene, &gt_state.view(), false);
        let mut sums = [0.0f64; 4];
        for block in problem.blocks() {
            if let Some(r) = blocks::eval_block(&scene, &gt_state.view(), &cache, block) {
                let k = match block.kind { BlockKind::Rendering => 0, BlockKind::Spectral => 1, BlockKind::Photometric => 2, BlockKind::Geometric => 3 };
                sums[k] += r.norm_squared();
            }
        }
        println!("GT term costs: rendering {:.4e} spectral {:.4e} photometric {:.4e} geometric {:.4e}", sums[0], sums[1], sums[2], sums[3]);
    }

    let mut config = PipelineConfig::<f64>::default();
    config.max_light_iters = 400;
    config.max_joint_iters = 200;
    config.tol_cost = 1e-10;
    if std::env::args().any(|a| a == "--one-round") { config.outer_iters = 1; }
    let t1 = std::time::Instant::now();
    if std::env::args().any(|a| a == "--alpha-floor") {
        use spectral_mvir::costs::{Layout, Problem};
        use spectral_mvir::solver::{minimize, LmOptions, OptimizationState, SolveReport};
        let mut st = OptimizationState::new(mesh.clone(), 8, scene.n_views());
        st.v = v_true;
        let lights: Vec<Vector3<f64>> = (0..scene.n_views()).map(|c| scene.light_position(c, &st.v)).collect();
        st.masks = spectral_mvir::geometry::compute_shadow_masks(&st.mesh, &lights, &Bvh::build(&st.mesh));
        st.alpha = spectral_mvir::solver::init_alpha(&scene, &st.view());
        let layout = Layout { n_vertices: st.mesh.n_vertices(), n_b: 8, opt_x: false, opt_alpha: true, opt_v: false };
        let problem = Problem::new(&scene, &st.view(), layout).unwrap();
        let mut report = SolveReport::default();
        let opts = LmOptions::<f64> { max_iters: 60, tol_cost: 1e-10, ..LmOptions::default() };
        minimize(&problem, &mut st, &opts, "alpha", 0, &mut report);
        let est: Vec<_> = (0..st.mesh.n_vertices())
            .map(|i| scene.basis.reconstruct(&st.alpha.row(i).transpose()).unwrap().clamped_to_unit())
            .collect();
        let gt: Vec<_> = (0..scene_def.mesh.n_vertices()).map(|i| scene_def.gt_reflectance(i).clone()).collect();
        let corr: Vec<u32> = (0..est.len() as u32).collect();
        let rmse = spectral_mvir::eval::reflectance_rmse(&gt, &est, &corr).unwrap();
        println!("alpha-only RMSE at GT geometry = {:.5}", rmse.mean);
        // interior-only (no patch-boundary vertices)
        let mut vals = vec![]; 
        for i in 0..est.len() {
            let id = scene_def.patch_ids[i];
            if st.mesh.neighbors(i).iter().all(|&j| scene_def.patch_ids[j as usize] == id) {
                vals.push(rmse.values[i]);
            }
        }
        println!("interior-vertex RMSE = {:.5} over {} of {}", vals.iter().sum::<f64>()/vals.len() as f64, vals.len(), est.len());
        return;
    }
    let from_gt = std::env::args().any(|a| a == "--from-gt");
    let (state, report) = if from_gt {
        run_pipeline(&scene, mesh, Some(scene_def.gt_alpha.clone()), Some(v_true), &config).unwrap()
    } else {
        run_pipeline(&scene, mesh, None, None, &config).unwrap()
    };
    println!("pipeline in {:?}", t1.elapsed());
    let v_err = (state.v - v_true).norm() / diag;
    println!("v_est = {:?}", state.v);
    println!("v error = {:.5} of diagonal", v_err);
    println!("mask_changes = {:?}", report.mask_changes);
    for s in &report.stages {
        println!(
            "stage {} round {} status {:?} iters {} accepted {} cost {:.6e} -> {:.6e}",
            s.stage, s.round, s.status, s.iterations, s.accepted_steps, s.initial_cost, s.final_cost
        );
    }
    {
        // Outlier census.
        let tree = spectral_mvir::eval::KdTree::build(scene_def.mesh.vertices().to_vec());
        let mut outliers: Vec<(usize, f64)> = (0..state.mesh.n_vertices())
            .map(|i| (i, tree.nearest(&state.mesh.vertex(i)).1))
            .filter(|(_, d)| *d > 0.05)
            .collect();
        outliers.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        println!("outliers (>0.05 from GT): {}", outliers.len());
        for (i, d) in outliers.iter().take(8) {
            let vis = scene.visibility.count(*i);
            let lit: usize = scene.visibility.visible_cameras(*i).iter().filter(|&&c| state.masks.get(*i, c as usize)).count();
            let an = state.alpha.row(*i).norm();
            println!("  v{i}: dist {d:.3}, |V|={vis}, lit={lit}, |alpha|={an:.4}, pos {:?}", state.mesh.vertex(*i).transpose());
        }
    }
    {
        // Per-patch drift and radial signature.
        let tree = spectral_mvir::eval::KdTree::build(scene_def.mesh.vertices().to_vec());
        let mut per_patch = vec![(0.0f64, 0usize); 24];
        let mut radial = 0.0f64;
        for i in 0..state.mesh.n_vertices() {
            let d = tree.nearest(&state.mesh.vertex(i)).1;
            let id = scene_def.patch_ids[i] as usize;
            per_patch[id].0 += d;
            per_patch[id].1 += 1;
            radial += state.mesh.vertex(i).norm() - scene_def.mesh.vertex(i).norm();
        }
        println!("mean radial drift = {:.5} (negative = shrink)", radial / state.mesh.n_vertices() as f64);
        let mut rows: Vec<(usize, f64)> = per_patch.iter().enumerate().filter(|(_, (_, n))| *n > 0).map(|(k, (s, n))| (k, s / *n as f64)).collect();
        rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        println!("worst patches by mean drift: {:?}", rows.iter().take(6).map(|(k, d)| format!("p{k}:{d:.4}")).collect::<Vec<_>>());
        println!("best patches: {:?}", rows.iter().rev().take(4).map(|(k, d)| format!("p{k}:{d:.4}")).collect::<Vec<_>>());
    }
    let acc = spectral_mvir::eval::accuracy(scene_def.mesh.vertices(), state.mesh.vertices()).unwrap();
    let comp = spectral_mvir::eval::completeness(scene_def.mesh.vertices(), state.mesh.vertices()).unwrap();
    println!("geometry: mean accuracy {:.6} ({:.4}% diag), mean completeness {:.6}", acc.mean, acc.mean / diag * 100.0, comp.mean);

    // Reflectance quality at ground-truth geometry.
    let est: Vec<_> = (0..state.mesh.n_vertices())
        .map(|i| {
            scene
                .basis
                .reconstruct(&state.alpha.row(i).transpose())
                .unwrap()
                .clamped_to_unit()
        })
        .collect();
    let gt: Vec<_> = (0..scene_def.mesh.n_vertices())
        .map(|i| scene_def.gt_reflectance(i).clone())
        .collect();
    let corr: Vec<u32> = (0..est.len() as u32).collect();
    let rmse = spectral_mvir::eval::reflectance_rmse(&gt, &est, &corr).unwrap();
    println!("mean reflectance RMSE = {:.5}", rmse.mean);

    // Basis floor for the chart.
    let chart = synth::colorchart_24();
    let mut floor = 0.0;
    for curve in &chart {
        let alpha = scene.basis.project(curve);
        let recon = scene.basis.reconstruct(&alpha).unwrap();
        floor += ((recon.samples() - curve.samples()).norm_squared() / 31.0).sqrt();
    }
    println!("basis floor (mean over 24) = {:.5}", floor / 24.0);
}
