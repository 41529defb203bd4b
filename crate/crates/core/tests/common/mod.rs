//! Shared builders for the integration suites: compact synthetic scenes
//! with analytically painted observations (smooth in pixel coordinates, so
//! finite differences are clean) and fully rendered datasets.

#![allow(dead_code)]

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_mvir::costs::{
    photometric_weights, CostWeights, LightModel, SceneData, ViewRecord,
};
use spectral_mvir::geometry::{compute_visibility, shapes, Bvh, SceneMesh};
use spectral_mvir::rendering::Image;
use spectral_mvir::solver::OptimizationState;
use spectral_mvir::spectra::SpectralBasis;
use spectral_mvir::synth;

pub struct TestScene {
    pub scene: SceneData<f64>,
    pub state: OptimizationState<f64>,
}

/// Small scene with smooth trigonometric images: ideal for derivative
/// checks because the observations vary smoothly and never saturate.
pub fn smooth_scene(seed: u64, n_views: usize, shadow_some: bool) -> TestScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = shapes::icosphere::<f64>(1, 1.0);
    let n_v = mesh.n_vertices();

    let basis = SpectralBasis::build(&synth::reflectance_dataset(60, seed ^ 0xbeef), 8).unwrap();
    let sensitivity = synth::camera_sensitivity();
    let illuminants = synth::led_illuminants(2);

    let ring = synth::RingParams {
        n_views,
        radius: 3.2,
        elevations_deg: vec![-15.0, 20.0],
        image_width: 96,
        image_height: 80,
        focal_px: 78.0,
        };
    let (poses, _) = synth::make_camera_ring(&ring, 1.0, &Vector3::zeros()).unwrap();

    let mut views = Vec::new();
    for (k, pose) in poses.iter().enumerate() {
        let (a, b, c) = (
            rng.random_range(0.05..0.2),
            rng.random_range(0.01..0.05),
            rng.random_range(0.3..0.8),
        );
        let image = Image::from_fn(96, 80, |x, y| {
            let (xf, yf) = (x as f64, y as f64);
            Vector3::new(
                a + b * (0.11 * xf + 0.07 * yf).sin(),
                a + b * (0.09 * xf - 0.05 * yf).cos(),
                a * c + b * (0.06 * xf * 0.5 + 0.08 * yf).sin(),
            )
        });
        views.push(ViewRecord {
            pose: pose.clone(),
            illuminant: k % 2,
            image,
        });
    }

    let bvh = Bvh::build(&mesh);
    let visibility = compute_visibility(&mesh, &poses, &bvh);
    let weights = CostWeights::default();
    let pw = photometric_weights(&mesh, &views, &visibility, weights.psm_sigma);
    let scene = SceneData::new(
        views,
        illuminants,
        sensitivity,
        basis,
        visibility,
        weights,
        LightModel::Rig,
        pw,
    )
    .unwrap();

    let mut state = OptimizationState::new(mesh, 8, scene.n_views());
    for i in 0..n_v {
        for k in 0..8 {
            state.alpha[(i, k)] = rng.random_range(-0.2..0.4);
        }
    }
    state.v = Vector3::new(
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    );
    if shadow_some {
        for i in 0..n_v {
            for c in 0..scene.n_views() {
                if rng.random_range(0.0..1.0) < 0.15 {
                    state.masks.set(i, c, false);
                }
            }
        }
    }
    TestScene { scene, state }
}

/// Fully rendered chart dataset on an icosphere: the realistic pipeline
/// input used by the solver and acceptance suites.
pub struct RenderedScene {
    pub scene_def: synth::SyntheticScene,
    pub images: Vec<Image<f64>>,
    pub basis: SpectralBasis<f64>,
    pub sensitivity: spectral_mvir::rendering::CameraSensitivity<f64>,
    pub illuminants: Vec<spectral_mvir::rendering::Illuminant<f64>>,
}

pub struct RenderedSceneParams {
    pub subdivisions: u32,
    pub n_poses: usize,
    pub n_illuminants: usize,
    pub image_width: u32,
    pub image_height: u32,
    pub focal_px: f64,
    pub v_true: Vector3<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for RenderedSceneParams {
    fn default() -> Self {
        Self {
            subdivisions: 2,
            n_poses: 12,
            n_illuminants: 2,
            image_width: 256,
            image_height: 192,
            focal_px: 220.0,
            v_true: Vector3::new(0.2, 0.0, 0.0),
            noise_sigma: 0.0,
            seed: 11,
        }
    }
}

pub fn rendered_chart_scene(params: &RenderedSceneParams) -> RenderedScene {
    let mesh = shapes::icosphere::<f64>(params.subdivisions, 1.0);
    let basis =
        SpectralBasis::build(&synth::reflectance_dataset(400, 42), 8).unwrap();
    let sensitivity = synth::camera_sensitivity();
    let illuminants = synth::led_illuminants(params.n_illuminants);
    let assignment = synth::spherical_assignment(&mesh);
    let ring = synth::RingParams {
        n_views: params.n_poses,
        radius: 3.0,
        elevations_deg: vec![-20.0, 10.0, 35.0],
        image_width: params.image_width,
        image_height: params.image_height,
        focal_px: params.focal_px,
    };
    let scene_def = synth::build_scene(
        mesh,
        synth::colorchart_24(),
        assignment,
        &basis,
        &ring,
        params.v_true,
        params.n_illuminants,
    )
    .unwrap();
    let images = synth::render_views(
        &scene_def,
        &sensitivity,
        &illuminants,
        &basis,
        params.noise_sigma,
        params.seed,
    );
    RenderedScene {
        scene_def,
        images,
        basis,
        sensitivity,
        illuminants,
    }
}

impl RenderedScene {
    /// Problem data with visibility and smoothness gates computed at
    /// `init_mesh` (the optimization starting geometry).
    pub fn scene_data(&self, init_mesh: &SceneMesh<f64>, weights: CostWeights<f64>) -> SceneData<f64> {
        let views: Vec<ViewRecord<f64>> = self
            .scene_def
            .poses
            .iter()
            .zip(&self.scene_def.schedule)
            .zip(&self.images)
            .map(|((pose, &illum), image)| ViewRecord {
                pose: pose.clone(),
                illuminant: illum,
                image: image.clone(),
            })
            .collect();
        let bvh = Bvh::build(init_mesh);
        let visibility = compute_visibility(init_mesh, &self.scene_def.poses, &bvh);
        let pw = photometric_weights(init_mesh, &views, &visibility, weights.psm_sigma);
        SceneData::new(
            views,
            self.illuminants.clone(),
            self.sensitivity.clone(),
            self.basis.clone(),
            visibility,
            weights,
            LightModel::Rig,
            pw,
        )
        .unwrap()
    }

    pub fn gt_state(&self, scene: &SceneData<f64>) -> OptimizationState<f64> {
        let mut state = OptimizationState::new(
            self.scene_def.mesh.clone(),
            self.basis.n_b(),
            scene.n_views(),
        );
        state.alpha = self.scene_def.gt_alpha.clone();
        state.v = self.scene_def.v_true;
        state
    }

    pub fn gt_alpha(&self) -> &DMatrix<f64> {
        &self.scene_def.gt_alpha
    }
}
