//! Run configuration: strict, schema-versioned JSON.
//!
//! Parsing rejects unknown keys; `validate` checks value ranges. The
//! accepted structure is published as `docs/run_config.schema.json`.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::IoError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub costs: CostsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub init: InitConfig,
}

fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: default_seed(),
            synth: SynthConfig::default(),
            costs: CostsConfig::default(),
            solver: SolverConfig::default(),
            init: InitConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum MeshSpec {
    Icosphere { subdivisions: u32, radius: f64 },
    TubeKnot { segments: usize, ring: usize, tube_radius: f64, scale: f64 },
    File { path: String },
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec::Icosphere {
            subdivisions: 3,
            radius: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub mesh: MeshSpec,
    /// Number of camera-light pair positions on the ring.
    pub views: usize,
    pub ring_radius: f64,
    /// Elevation pattern in degrees, cycled over the ring.
    pub elevations_deg: Vec<f64>,
    pub image_width: u32,
    pub image_height: u32,
    pub focal_px: f64,
    /// Rigid camera-to-light offset used to generate the data.
    pub v_true: [f64; 3],
    /// How many of the built-in LED-like illuminants to schedule per pose.
    pub n_illuminants: usize,
    /// Additive Gaussian noise in linear intensity units.
    pub noise_sigma: f64,
    pub basis_size: usize,
    pub basis_dataset_size: usize,
    /// Ground-truth patch layout: `spherical` (4x6 cells) or `stripes`.
    pub assignment: AssignmentKind,
    /// When positive, also writes an initial mesh with Gaussian vertex noise
    /// of this sigma, relative to the bounding-box diagonal.
    pub init_noise_sigma_rel: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentKind {
    Spherical,
    Stripes,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSpec::default(),
            views: 16,
            ring_radius: 3.0,
            elevations_deg: vec![-20.0, 10.0, 35.0],
            image_width: 512,
            image_height: 384,
            focal_px: 500.0,
            v_true: [0.2, 0.0, 0.0],
            n_illuminants: 2,
            noise_sigma: 0.0,
            basis_size: 8,
            basis_dataset_size: 400,
            assignment: AssignmentKind::Spherical,
            init_noise_sigma_rel: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostsConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub psm_sigma: f64,
    pub huber_delta: Option<f64>,
}

impl Default for CostsConfig {
    fn default() -> Self {
        Self {
            gamma1: 0.01,
            gamma2: 2.0,
            gamma3: 0.01,
            psm_sigma: 0.05,
            huber_delta: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub outer_iters: usize,
    pub max_light_iters: usize,
    pub max_joint_iters: usize,
    pub tol_cost: f64,
    pub tol_grad: f64,
    pub subdivide_rounds: usize,
    /// Path to a JSON file with fixed per-view light positions; disables the
    /// rig estimation (projector-style setups).
    pub fix_light: Option<String>,
    pub lambda_init: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_iters: 4,
            max_light_iters: 50,
            max_joint_iters: 100,
            tol_cost: 1e-6,
            tol_grad: 1e-8,
            subdivide_rounds: 0,
            fix_light: None,
            lambda_init: 1e-4,
        }
    }
}

/// Optional warm-start files for `optimize`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub mesh: Option<String>,
    pub alpha: Option<String>,
    pub v: Option<[f64; 3]>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let mut problems = Vec::new();
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            problems.push(format!(
                "schema_version must be {CONFIG_SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        let s = &self.synth;
        if s.views < 2 {
            problems.push("synth.views must be >= 2".into());
        }
        if s.n_illuminants == 0 || s.n_illuminants > 3 {
            problems.push("synth.n_illuminants must be in 1..=3 (built-in LED set)".into());
        }
        if s.image_width < 8 || s.image_height < 8 {
            problems.push("synth image size must be at least 8x8".into());
        }
        if s.focal_px <= 0.0 {
            problems.push("synth.focal_px must be positive".into());
        }
        if s.ring_radius <= 0.0 {
            problems.push("synth.ring_radius must be positive".into());
        }
        if s.basis_size == 0 || s.basis_size > 31 {
            problems.push("synth.basis_size must be in 1..=31".into());
        }
        if s.basis_dataset_size < s.basis_size {
            problems.push("synth.basis_dataset_size must be >= basis_size".into());
        }
        if s.noise_sigma < 0.0 || s.init_noise_sigma_rel < 0.0 {
            problems.push("noise levels must be non-negative".into());
        }
        if s.elevations_deg.is_empty() {
            problems.push("synth.elevations_deg must not be empty".into());
        }
        let c = &self.costs;
        for (name, v) in [("gamma1", c.gamma1), ("gamma2", c.gamma2), ("gamma3", c.gamma3)] {
            if !v.is_finite() || v < 0.0 {
                problems.push(format!("costs.{name} must be finite and >= 0"));
            }
        }
        if c.psm_sigma <= 0.0 {
            problems.push("costs.psm_sigma must be positive".into());
        }
        if let Some(d) = c.huber_delta {
            if d <= 0.0 {
                problems.push("costs.huber_delta must be positive when set".into());
            }
        }
        let so = &self.solver;
        if so.outer_iters == 0 {
            problems.push("solver.outer_iters must be >= 1".into());
        }
        if so.tol_cost <= 0.0 || so.tol_grad <= 0.0 {
            problems.push("solver tolerances must be positive".into());
        }
        if so.lambda_init <= 0.0 {
            problems.push("solver.lambda_init must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(IoError::InvalidConfig(problems.join("; ")))
        }
    }
}
