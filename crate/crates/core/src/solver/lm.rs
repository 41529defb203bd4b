//! Levenberg-Marquardt with diagonal scaling and multiplicative damping
//! adaptation: halve-by-three on accept, double on reject.

use std::time::Instant;

use crate::costs::Problem;
use crate::real::{real, Real};

use super::linear::{solve_damped, LinearOptions};
use super::{f, IterationRecord, OptimizationState, ReportedStatus, SolveReport, StageSummary};

#[derive(Clone, Copy, Debug)]
pub struct LmOptions<T: Real> {
    pub max_iters: usize,
    /// Relative cost-decrease threshold on an accepted step.
    pub tol_cost: T,
    /// Norm threshold on `J^T r`.
    pub tol_grad: T,
    pub lambda_init: T,
    pub lambda_max: T,
    /// Trust cap on the largest per-axis move of any geometric block
    /// (vertex positions and the rig translation) in one step. Oversized
    /// steps are rejected so the damping shortens them; weakly constrained
    /// vertices cannot be launched along near-null directions.
    pub max_geo_step: Option<T>,
    pub linear: LinearOptions<T>,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol_cost: real(1e-6),
            tol_grad: real(1e-8),
            lambda_init: real(1e-4),
            lambda_max: real(1e12),
            max_geo_step: None,
            linear: LinearOptions::default(),
        }
    }
}

/// Largest per-axis component of the step over vertex and rig blocks.
fn max_geometric_step<T: Real>(
    layout: &crate::costs::Layout,
    delta: &nalgebra::DVector<T>,
) -> T {
    let mut max = T::zero();
    if layout.opt_x {
        for k in 0..3 * layout.n_vertices {
            max = max.max(delta[k].abs());
        }
    }
    if layout.opt_v {
        let off = layout.block_offset(
            layout
                .block_index(crate::costs::ParamBlock::Light)
                .expect("light block active"),
        );
        for k in 0..3 {
            max = max.max(delta[off + k].abs());
        }
    }
    max
}

pub type StageStatus = ReportedStatus;

/// Minimizes the problem in place. Accepted steps strictly decrease the
/// cost; a stalled stage returns the best state reached, not an error.
pub fn minimize<T: Real>(
    problem: &Problem<'_, T>,
    state: &mut OptimizationState<T>,
    opts: &LmOptions<T>,
    stage: &str,
    round: usize,
    report: &mut SolveReport,
) -> StageStatus {
    let start = Instant::now();
    let mut lambda = opts.lambda_init;
    let mut ne = problem.normal_equations(&state.view());
    let mut cost = ne.cost;
    let initial_cost = cost;
    let mut accepted_steps = 0usize;
    let mut iterations = 0usize;

    let push = |iteration: usize,
                    cost: T,
                    grad: T,
                    lambda: T,
                    accepted: bool,
                    dropped: usize,
                    report: &mut SolveReport| {
        report.records.push(IterationRecord {
            stage: stage.to_string(),
            round,
            iteration,
            cost: f(cost),
            gradient_norm: f(grad),
            lambda: f(lambda),
            accepted,
            dropped_blocks: dropped,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    };
    push(0, cost, ne.gradient.norm(), lambda, true, ne.dropped, report);

    let mut status = ReportedStatus::MaxIterations;
    'outer: for iter in 1..=opts.max_iters {
        iterations = iter;
        let grad_norm = ne.gradient.norm();
        if grad_norm < opts.tol_grad {
            status = ReportedStatus::GradientConverged;
            iterations = iter - 1;
            break;
        }
        loop {
            let Some(delta) = solve_damped(&ne, lambda, &opts.linear) else {
                lambda *= real(2.0);
                if lambda > opts.lambda_max {
                    status = ReportedStatus::Stalled;
                    break 'outer;
                }
                continue;
            };
            if let Some(cap) = opts.max_geo_step {
                if max_geometric_step(&problem.layout, &delta) > cap {
                    lambda *= real(2.0);
                    if lambda > opts.lambda_max {
                        status = ReportedStatus::Stalled;
                        break 'outer;
                    }
                    continue;
                }
            }
            let mut candidate = state.clone();
            if candidate.apply_step(&problem.layout, &delta).is_err() {
                lambda *= real(2.0);
                if lambda > opts.lambda_max {
                    status = ReportedStatus::Stalled;
                    break 'outer;
                }
                continue;
            }
            let eval = problem.cost(&candidate.view());
            if eval.cost < cost {
                *state = candidate;
                state.steps_since_mask_update += 1;
                accepted_steps += 1;
                let rel = (cost - eval.cost) / cost.max(real(1e-300));
                cost = eval.cost;
                lambda = (lambda / real(3.0)).max(real(1e-12));
                push(iter, cost, grad_norm, lambda, true, eval.dropped, report);
                if rel < opts.tol_cost {
                    status = ReportedStatus::Converged;
                    break 'outer;
                }
                ne = problem.normal_equations(&state.view());
                break;
            }
            push(iter, eval.cost, grad_norm, lambda, false, eval.dropped, report);
            lambda *= real(2.0);
            if lambda > opts.lambda_max {
                status = ReportedStatus::Stalled;
                break 'outer;
            }
        }
    }

    report.stages.push(StageSummary {
        stage: stage.to_string(),
        round,
        status,
        iterations,
        accepted_steps,
        initial_cost: f(initial_cost),
        final_cost: f(cost),
    });
    status
}

/// The undamped Gauss-Newton step at the current state, solved with the
/// same machinery the LM loop uses; the verification suites compare it
/// against an independent dense solve.
pub fn gauss_newton_step<T: Real>(
    problem: &Problem<'_, T>,
    state: &OptimizationState<T>,
    lambda: T,
    linear: &LinearOptions<T>,
) -> Option<nalgebra::DVector<T>> {
    let ne = problem.normal_equations(&state.view());
    solve_damped(&ne, lambda, linear)
}
