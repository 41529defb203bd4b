//! Ground-truth spectral-3D scenes: chart assignment, camera-light rings,
//! and vertex perturbation for refinement experiments.

use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{look_at, CameraPose, GeometryError, SceneMesh};
use crate::rendering::LightRig;
use crate::spectra::{SpectraError, SpectralBasis, SpectralCurve};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("vertex {0} has patch id {1}, outside the 24-patch chart")]
    UnassignedVertex(usize, u8),
    #[error("assignment covers {got} vertices, mesh has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("chart must have 24 curves, got {0}")]
    ChartSize(usize),
    #[error("camera ring radius {radius} does not clear the object bound {bound}")]
    RingInsideObject { radius: f64, bound: f64 },
    #[error("need at least 2 views, got {0}")]
    TooFewViews(usize),
    #[error("object does not fit the view frustum (focal {focal}, half extent {half_extent} px)")]
    ObjectOutsideFrustum { focal: f64, half_extent: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// A ground-truth spectral-3D model plus its capture trajectory. One record
/// per (pose, scheduled illuminant); poses repeat when several illuminants
/// are captured per position.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub mesh: SceneMesh<f64>,
    pub patch_ids: Vec<u8>,
    pub chart: Vec<SpectralCurve<f64>>,
    /// Basis projection of each vertex's chart curve.
    pub gt_alpha: DMatrix<f64>,
    pub poses: Vec<CameraPose<f64>>,
    pub light_positions: Vec<Vector3<f64>>,
    /// Illuminant index per record.
    pub schedule: Vec<usize>,
    pub v_true: Vector3<f64>,
}

impl SyntheticScene {
    pub fn n_records(&self) -> usize {
        self.poses.len()
    }

    /// Exact ground-truth reflectance of a vertex (the chart curve itself,
    /// not its basis projection).
    pub fn gt_reflectance(&self, vertex: usize) -> &SpectralCurve<f64> {
        &self.chart[self.patch_ids[vertex] as usize]
    }
}

/// Assigns each vertex one of 24 patches from its direction around the mesh
/// centroid: 4 latitude bands times 6 longitude sectors.
pub fn spherical_assignment(mesh: &SceneMesh<f64>) -> Vec<u8> {
    let mut centroid = Vector3::zeros();
    for v in mesh.vertices() {
        centroid += v;
    }
    centroid /= mesh.n_vertices() as f64;
    mesh.vertices()
        .iter()
        .map(|v| {
            let d = v - centroid;
            let r = d.norm().max(1e-12);
            let lat = (d.z / r).clamp(-1.0, 1.0).asin(); // [-pi/2, pi/2]
            let lon = d.y.atan2(d.x); // [-pi, pi]
            let band = (((lat + std::f64::consts::FRAC_PI_2) / std::f64::consts::PI) * 4.0)
                .floor()
                .clamp(0.0, 3.0) as u8;
            let sector = (((lon + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)) * 6.0)
                .floor()
                .clamp(0.0, 5.0) as u8;
            band * 6 + sector
        })
        .collect()
}

/// Stripes by vertex index; guarantees all 24 patches appear on any mesh
/// with at least 24 vertices.
pub fn stripe_assignment(mesh: &SceneMesh<f64>) -> Vec<u8> {
    (0..mesh.n_vertices()).map(|i| (i % 24) as u8).collect()
}

/// Binds a chart to a mesh through a per-vertex patch assignment.
pub fn make_chart_model(
    mesh: SceneMesh<f64>,
    chart: Vec<SpectralCurve<f64>>,
    assignment: Vec<u8>,
    basis: &SpectralBasis<f64>,
) -> Result<(SceneMesh<f64>, Vec<u8>, Vec<SpectralCurve<f64>>, DMatrix<f64>), SynthError> {
    if chart.len() != 24 {
        return Err(SynthError::ChartSize(chart.len()));
    }
    if assignment.len() != mesh.n_vertices() {
        return Err(SynthError::AssignmentLength {
            expected: mesh.n_vertices(),
            got: assignment.len(),
        });
    }
    for (i, &id) in assignment.iter().enumerate() {
        if id >= 24 {
            return Err(SynthError::UnassignedVertex(i, id));
        }
    }
    let mut patch_alpha = Vec::with_capacity(24);
    for curve in &chart {
        patch_alpha.push(basis.project(curve));
    }
    let n_b = basis.n_b();
    let mut gt_alpha = DMatrix::zeros(mesh.n_vertices(), n_b);
    for (i, &id) in assignment.iter().enumerate() {
        gt_alpha
            .row_mut(i)
            .copy_from(&patch_alpha[id as usize].transpose());
    }
    Ok((mesh, assignment, chart, gt_alpha))
}

/// Camera ring parameters.
#[derive(Clone, Debug)]
pub struct RingParams {
    pub n_views: usize,
    pub radius: f64,
    pub elevations_deg: Vec<f64>,
    pub image_width: u32,
    pub image_height: u32,
    pub focal_px: f64,
}

/// Look-at poses on a sphere around the origin plus the per-pose light
/// position derived from the rig translation.
pub fn make_camera_ring(
    params: &RingParams,
    object_bound: f64,
    v_true: &Vector3<f64>,
) -> Result<(Vec<CameraPose<f64>>, Vec<Vector3<f64>>), SynthError> {
    if params.n_views < 2 {
        return Err(SynthError::TooFewViews(params.n_views));
    }
    if params.radius <= object_bound * 1.05 {
        return Err(SynthError::RingInsideObject {
            radius: params.radius,
            bound: object_bound,
        });
    }
    // Every camera must see the whole bounding sphere: its projected
    // half-extent has to fit the smaller image half-size.
    let half_extent =
        params.focal_px * object_bound / (params.radius - object_bound).max(1e-9);
    let half_image = 0.5 * f64::from(params.image_width.min(params.image_height)) - 2.0;
    if half_extent >= half_image {
        return Err(SynthError::ObjectOutsideFrustum {
            focal: params.focal_px,
            half_extent,
        });
    }

    let rig = LightRig::new(*v_true);
    let mut poses = Vec::with_capacity(params.n_views);
    let mut lights = Vec::with_capacity(params.n_views);
    for k in 0..params.n_views {
        let azimuth = 2.0 * std::f64::consts::PI * k as f64 / params.n_views as f64;
        let elevation = params.elevations_deg[k % params.elevations_deg.len()].to_radians();
        let center = Vector3::new(
            params.radius * elevation.cos() * azimuth.cos(),
            params.radius * elevation.cos() * azimuth.sin(),
            params.radius * elevation.sin(),
        );
        let r = look_at(&center, &Vector3::zeros(), &Vector3::z());
        let t = -r * center;
        let pose = CameraPose::new(
            r,
            t,
            params.focal_px,
            params.focal_px,
            f64::from(params.image_width - 1) / 2.0,
            f64::from(params.image_height - 1) / 2.0,
            params.image_width,
            params.image_height,
        )?;
        lights.push(rig.position_for(&pose));
        poses.push(pose);
    }
    Ok((poses, lights))
}

/// Builds the full capture: `n_illuminants` records per ring pose.
pub fn build_scene(
    mesh: SceneMesh<f64>,
    chart: Vec<SpectralCurve<f64>>,
    assignment: Vec<u8>,
    basis: &SpectralBasis<f64>,
    ring: &RingParams,
    v_true: Vector3<f64>,
    n_illuminants: usize,
) -> Result<SyntheticScene, SynthError> {
    let bound = mesh
        .vertices()
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    let (ring_poses, ring_lights) = make_camera_ring(ring, bound, &v_true)?;
    let (mesh, patch_ids, chart, gt_alpha) = make_chart_model(mesh, chart, assignment, basis)?;

    let mut poses = Vec::with_capacity(ring_poses.len() * n_illuminants);
    let mut light_positions = Vec::with_capacity(poses.capacity());
    let mut schedule = Vec::with_capacity(poses.capacity());
    for (pose, light) in ring_poses.iter().zip(&ring_lights) {
        for illum in 0..n_illuminants {
            poses.push(pose.clone());
            light_positions.push(*light);
            schedule.push(illum);
        }
    }
    Ok(SyntheticScene {
        mesh,
        patch_ids,
        chart,
        gt_alpha,
        poses,
        light_positions,
        schedule,
        v_true,
    })
}

/// Gaussian displacement of every vertex; sigma in world units.
pub fn perturb_vertices(
    mesh: &SceneMesh<f64>,
    sigma: f64,
    seed: u64,
) -> Result<SceneMesh<f64>, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let vertices: Vec<Vector3<f64>> = mesh
        .vertices()
        .iter()
        .map(|v| {
            v + Vector3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            )
        })
        .collect();
    let mut out = mesh.clone();
    out.set_vertices(vertices)?;
    Ok(out)
}
