//! Continuity method: deform `ψ̃_0 = f̃(λ(g_h[ul u]))` into `ψ̃` and follow
//! the solution with Newton's method.

use log::{info, warn};
use rayon::prelude::*;

use super::diagnostics::{diagnose, BarrierParams, SolveDiagnostics};
use super::newton::{newton_solve_at_t, HomotopyState, NewtonConfig};
use crate::cone::margin_value;
use crate::discretization::scheme::DiscreteProblem;
use crate::error::{Error, Result};
use crate::linear::upper_barrier_on;
use crate::operator::eval_ftilde;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationConfig<T> {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub growth: f64,
    /// Steps accepted within this many Newton iterations grow the step.
    pub easy_iters: usize,
    pub newton: NewtonConfig,
    /// Collar barrier parameters; `None` skips the barrier diagnostic.
    pub barrier: Option<BarrierParams<T>>,
}

impl<T: Real> ContinuationConfig<T> {
    pub fn for_problem(problem: &DiscreteProblem<T>) -> Self {
        Self {
            initial_step: 0.25,
            max_step: 0.5,
            min_step: 1e-6,
            growth: 1.5,
            easy_iters: 4,
            newton: NewtonConfig::for_problem(problem),
            barrier: Some(BarrierParams::default()),
        }
    }
}

/// One attempted continuation step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub t: f64,
    pub step: f64,
    pub accepted: bool,
    pub newton_iters: usize,
    pub residual: f64,
    pub min_margin: f64,
    /// Failure that caused a rejection.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    /// Final state at `t = 1`.
    pub state: HomotopyState<T>,
    pub path: Vec<PathStep>,
    /// Residual of the starting iterate at `t = 0`.
    pub anchor_residual: T,
    pub upper_barrier: Vec<T>,
    pub diagnostics: SolveDiagnostics<T>,
}

impl<T: Real> SolveOutcome<T> {
    pub fn u(&self) -> &[T] {
        &self.state.u
    }
}

/// `ψ̃_0 = f̃(λ(g_h[ul u]))` over equation nodes.
pub fn anchor<T: Real>(problem: &DiscreteProblem<T>) -> Result<Vec<T>> {
    let disc = problem.disc();
    let sub = problem.subsolution();
    let params = disc.params();
    disc.equation_nodes()
        .par_iter()
        .map(|&k| {
            let lam = disc.spectrum(sub, k);
            eval_ftilde(lam.values(), params)
                .map_err(|_| Error::NotAdmissible { node: k, margin: margin_value(lam.values(), params.p()).as_f64() })
        })
        .collect()
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::ConeEscape { .. } | Error::MaxItersExceeded { .. } | Error::LinearSolveStalled { .. })
}

fn record<T: Real>(path: &mut Vec<PathStep>, step: f64, state: &HomotopyState<T>) {
    path.push(PathStep {
        t: state.t.as_f64(),
        step,
        accepted: true,
        newton_iters: state.newton_iters,
        residual: state.residual_norm.as_f64(),
        min_margin: state.min_margin.as_f64(),
        failure: None,
    });
}

/// Follows the homotopy from `t = 0` to `t = 1` without diagnostics.
///
/// Returns the final state, the attempted steps and the `t = 0` residual of
/// the starting iterate.
pub fn follow_path<T: Real>(problem: &DiscreteProblem<T>, config: &ContinuationConfig<T>) -> Result<(HomotopyState<T>, Vec<PathStep>, T)> {
    problem.verify_subsolution()?;
    let anchor = anchor(problem)?;
    let start = problem.initial().unwrap_or(problem.subsolution()).to_vec();
    let mut path = Vec::new();

    if problem.params().is_linear() {
        let state = newton_solve_at_t(problem, T::one(), start, &anchor, &config.newton)?;
        let anchor_residual = state.history[0];
        record(&mut path, 1.0, &state);
        return Ok((state, path, anchor_residual));
    }

    let mut state = newton_solve_at_t(problem, T::zero(), start, &anchor, &config.newton)?;
    let anchor_residual = state.history[0];
    record(&mut path, 0.0, &state);
    let mut step = config.initial_step;
    while state.t < T::one() {
        let t_next = (state.t.as_f64() + step).min(1.0);
        match newton_solve_at_t(problem, T::lit(t_next), state.u.clone(), &anchor, &config.newton) {
            Ok(next) => {
                debug_assert!(next.min_margin > T::zero());
                record(&mut path, step, &next);
                if next.newton_iters <= config.easy_iters {
                    step = (step * config.growth).min(config.max_step);
                }
                state = next;
            }
            Err(e) if recoverable(&e) => {
                warn!("continuation step to t = {t_next:.6} rejected: {e}");
                path.push(PathStep {
                    t: t_next,
                    step,
                    accepted: false,
                    newton_iters: 0,
                    residual: f64::NAN,
                    min_margin: f64::NAN,
                    failure: Some(e.to_string()),
                });
                step *= 0.5;
                if step < config.min_step {
                    return Err(Error::ContinuationStalled { t: state.t.as_f64(), step });
                }
            }
            Err(e) => return Err(e),
        }
    }
    info!("continuation reached t = 1 in {} steps", path.len());
    Ok((state, path, anchor_residual))
}

/// Solves the problem by continuation and evaluates every diagnostic.
pub fn continuity_solve<T: Real>(problem: &DiscreteProblem<T>, config: &ContinuationConfig<T>) -> Result<SolveOutcome<T>> {
    let (state, path, anchor_residual) = follow_path(problem, config)?;
    let upper_barrier = upper_barrier_on(problem.disc(), problem.boundary(), &config.newton.linear)?;
    let diagnostics = diagnose(problem, &state.u, &upper_barrier, config.barrier.as_ref())?;
    Ok(SolveOutcome { state, path, anchor_residual, upper_barrier, diagnostics })
}
