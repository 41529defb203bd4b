//! Levenberg-Marquardt solver and the staged optimization pipeline:
//! light-rig initialization with frozen geometry, then joint refinement,
//! alternated with shadow-mask recomputation.

pub mod linear;
pub mod lm;
pub mod pipeline;

pub use lm::{minimize, LmOptions, StageStatus};
pub use pipeline::{init_alpha, run_pipeline, solve_joint_stage, solve_light_stage, PipelineConfig};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{CostError, Layout, ParamBlock, StateView};
use crate::geometry::{GeometryError, SceneMesh, ShadowMaskMatrix};
use crate::real::{to_f64, Real};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("every vertex-view pair is shadowed; the light stage has no signal")]
    NoSignal,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The optimization variables plus the frozen shadow masks.
#[derive(Clone, Debug)]
pub struct OptimizationState<T: Real> {
    pub mesh: SceneMesh<T>,
    /// One row of basis weights per vertex.
    pub alpha: DMatrix<T>,
    pub v: Vector3<T>,
    pub masks: ShadowMaskMatrix,
    /// Accepted steps since the masks were last recomputed.
    pub steps_since_mask_update: usize,
}

impl<T: Real> OptimizationState<T> {
    pub fn new(mesh: SceneMesh<T>, n_b: usize, n_views: usize) -> Self {
        let n_v = mesh.n_vertices();
        Self {
            mesh,
            alpha: DMatrix::zeros(n_v, n_b),
            v: Vector3::zeros(),
            masks: ShadowMaskMatrix::all_lit(n_v, n_views),
            steps_since_mask_update: 0,
        }
    }

    pub fn view(&self) -> StateView<'_, T> {
        StateView {
            mesh: &self.mesh,
            alpha: &self.alpha,
            v: self.v,
            masks: &self.masks,
        }
    }

    /// Adds a solver step laid out by `layout`.
    pub fn apply_step(&mut self, layout: &Layout, delta: &DVector<T>) -> Result<(), GeometryError> {
        debug_assert_eq!(delta.len(), layout.n_params());
        if layout.opt_x {
            let mut positions = self.mesh.vertices().to_vec();
            for (i, p) in positions.iter_mut().enumerate() {
                let off = layout.block_offset(layout.block_index(ParamBlock::Vertex(i as u32)).unwrap());
                p.x += delta[off];
                p.y += delta[off + 1];
                p.z += delta[off + 2];
            }
            self.mesh.set_vertices(positions)?;
        }
        if layout.opt_alpha {
            for i in 0..self.alpha.nrows() {
                let off = layout.block_offset(layout.block_index(ParamBlock::Alpha(i as u32)).unwrap());
                for k in 0..self.alpha.ncols() {
                    self.alpha[(i, k)] += delta[off + k];
                }
            }
        }
        if layout.opt_v {
            let off = layout.block_offset(layout.block_index(ParamBlock::Light).unwrap());
            self.v.x += delta[off];
            self.v.y += delta[off + 1];
            self.v.z += delta[off + 2];
        }
        Ok(())
    }
}

/// One line of the iteration log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: String,
    pub round: usize,
    pub iteration: usize,
    pub cost: f64,
    pub gradient_norm: f64,
    pub lambda: f64,
    pub accepted: bool,
    pub dropped_blocks: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportedStatus {
    Converged,
    GradientConverged,
    MaxIterations,
    Stalled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: String,
    pub round: usize,
    pub status: ReportedStatus,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
}

/// Full run log: per-iteration records, stage summaries, and mask-pass
/// statistics.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub records: Vec<IterationRecord>,
    pub stages: Vec<StageSummary>,
    /// Changed mask bits per shadow pass (first entry compares against the
    /// all-lit initialization).
    pub mask_changes: Vec<usize>,
    pub warnings: Vec<String>,
    pub wall_ms: f64,
}

impl SolveReport {
    pub fn final_cost(&self) -> Option<f64> {
        self.stages.last().map(|s| s.final_cost)
    }

    /// Accepted-step costs, in order, for monotonicity checks.
    pub fn accepted_costs(&self, stage: &str, round: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.accepted && r.stage == stage && r.round == round)
            .map(|r| r.cost)
            .collect()
    }

    /// Serializes as JSON lines: one record per iteration, then one line per
    /// stage summary, then a closing summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::json!({"type": "iteration", "data": r}).to_string());
            out.push('\n');
        }
        for s in &self.stages {
            out.push_str(&serde_json::json!({"type": "stage", "data": s}).to_string());
            out.push('\n');
        }
        out.push_str(
            &serde_json::json!({
                "type": "summary",
                "mask_changes": self.mask_changes,
                "warnings": self.warnings,
                "wall_ms": self.wall_ms,
                "final_cost": self.final_cost(),
            })
            .to_string(),
        );
        out.push('\n');
        out
    }
}

pub(crate) fn f<T: Real>(x: T) -> f64 {
    to_f64(x)
}
