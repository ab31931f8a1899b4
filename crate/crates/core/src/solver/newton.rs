//! Damped, cone-preserving Newton iteration for one homotopy parameter.

use log::{debug, info, warn};
use rayon::prelude::*;

use crate::cone::{margin_value, min_pair};
use crate::discretization::scheme::{DiscreteProblem, Discretization, NodeLinearization};
use crate::error::{Error, Result};
use crate::linear::{solve_with, LinearSolverConfig, SparseSystem};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the current cone margin a damped step must keep.
    pub margin_keep: f64,
    /// Smallest damping factor tried before giving up.
    pub min_alpha: f64,
    pub linear: LinearSolverConfig,
}

pub const RADIAL_TOL: f64 = 1e-10;
/// Multiple of the rounding floor accepted when `tol` lies below it.
pub const FLOOR_FACTOR: f64 = 4.0;
pub const GRID_TOL: f64 = 1e-8;

impl NewtonConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: 50, margin_keep: 0.1, min_alpha: 2f64.powi(-20), linear: LinearSolverConfig::default() }
    }

    /// Default for a problem: 1e-10 radial, 1e-8 on grids.
    pub fn for_problem<T: Real>(problem: &DiscreteProblem<T>) -> Self {
        Self::with_tol(if problem.spec().is_radial() { RADIAL_TOL } else { GRID_TOL })
    }
}

/// An accepted point on the homotopy path.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyState<T> {
    pub t: T,
    /// Values at every node, boundary data included.
    pub u: Vec<T>,
    /// `‖f̃(λ(g[u])) − ψ̃_t‖_∞` over equation nodes.
    pub residual_norm: T,
    pub newton_iters: usize,
    /// Smallest cone margin over equation nodes.
    pub min_margin: T,
    /// Residual norms of the iterates, starting with `u_init`.
    pub history: Vec<T>,
    /// `max_k Σ_j |J_kj|·ε·|u_j|`: residual change caused by rounding `u`.
    pub rounding_floor: T,
}

/// `f̃(λ(g[u]))` at every equation node, in equation-node order.
pub fn discrete_ftilde<T: Real>(disc: &dyn Discretization<T>, u: &[T]) -> Result<Vec<T>> {
    let params = disc.params();
    disc.equation_nodes()
        .par_iter()
        .map(|&k| crate::operator::eval_ftilde(disc.spectrum(u, k).values(), params))
        .collect()
}

/// `ψ̃_t = t ψ̃ + (1 − t) ψ̃_0` over equation nodes.
pub fn homotopy_target<T: Real>(problem: &DiscreteProblem<T>, anchor: &[T], t: T) -> Vec<T> {
    let psi = problem.psi_tilde();
    problem.disc().equation_nodes().iter().zip(anchor).map(|(&k, &a)| t * psi[k] + (T::one() - t) * a).collect()
}

/// Smallest cone margin of `u` over equation nodes, with its node.
pub fn min_margin<T: Real>(disc: &dyn Discretization<T>, u: &[T]) -> (T, usize) {
    let p = disc.params().p();
    disc.equation_nodes()
        .par_iter()
        .map(|&k| (margin_value(disc.spectrum(u, k).values(), p), k))
        .reduce(|| (T::infinity(), usize::MAX), min_pair)
}

fn linearize_all<T: Real>(disc: &dyn Discretization<T>, u: &[T]) -> Result<Vec<NodeLinearization<T>>> {
    disc.equation_nodes().par_iter().map(|&k| disc.linearize(u, k)).collect()
}

/// Newton iteration for `f̃(λ(g[u])) = ψ̃_t` with `ψ̃_t` built from `anchor`
/// (values over equation nodes).
///
/// Fails with [`Error::ConeEscape`] when `u_init` is not admissible or no
/// damping factor keeps the iterate inside the cone.
pub fn newton_solve_at_t<T: Real>(
    problem: &DiscreteProblem<T>,
    t: T,
    u_init: Vec<T>,
    anchor: &[T],
    config: &NewtonConfig,
) -> Result<HomotopyState<T>> {
    let disc = problem.disc();
    let nodes = disc.equation_nodes();
    if u_init.len() != disc.node_count() {
        return Err(Error::ShapeMismatch { expected: disc.node_count(), found: u_init.len() });
    }
    if anchor.len() != nodes.len() {
        return Err(Error::ShapeMismatch { expected: nodes.len(), found: anchor.len() });
    }
    let target = homotopy_target(problem, anchor, t);
    let t_f64 = t.as_f64();
    let tol = T::lit(config.tol);
    let keep = T::lit(config.margin_keep);

    let mut u = u_init;
    let (margin, node) = min_margin(disc, &u);
    if !(margin > T::zero()) {
        return Err(Error::ConeEscape { node, t: t_f64 });
    }
    let mut history = Vec::new();
    for iter in 0..=config.max_iter {
        let lin = linearize_all(disc, &u)?;
        let residual: Vec<T> = lin.iter().zip(&target).map(|(l, &b)| l.ftilde - b).collect();
        let norm = residual.iter().fold(T::zero(), |m, r| m.max(r.abs()));
        let current_margin = lin.iter().fold(T::infinity(), |m, l| m.min(l.margin));
        let floor = lin
            .par_iter()
            .map(|l| l.row.iter().map(|&(j, w)| (w * u[j]).abs()).sum::<T>() * T::epsilon())
            .reduce(T::zero, T::max);
        history.push(norm);
        if history.len() >= 3 {
            let h = &history[history.len() - 3..];
            let ratios = (h[1] / h[0], h[2] / h[1]);
            if ratios.0 <= T::lit(0.25) && ratios.1 <= T::lit(0.25) {
                debug!("t = {t_f64:.6}: superlinear decay, ratios {:.3e} {:.3e}", ratios.0.as_f64(), ratios.1.as_f64());
            }
        }
        if norm <= tol.max(T::lit(FLOOR_FACTOR) * floor) {
            if norm > tol {
                warn!("t = {t_f64:.6}: residual {:.3e} above tol but within the rounding floor {:.3e}", norm.as_f64(), floor.as_f64());
            }
            info!("t = {t_f64:.6}: converged in {iter} Newton steps, residual {:.3e}", norm.as_f64());
            return Ok(HomotopyState {
                t,
                u,
                residual_norm: norm,
                newton_iters: iter,
                min_margin: current_margin,
                history,
                rounding_floor: floor,
            });
        }
        if iter == config.max_iter {
            return Err(Error::MaxItersExceeded { iterations: iter, residual: norm.as_f64(), t: t_f64 });
        }
        let rows = lin.into_iter().map(|l| l.row).collect();
        let rhs = residual.iter().map(|r| -*r).collect();
        let system = SparseSystem::from_rows(disc.node_count(), nodes, rows, rhs, None)?;
        let delta = solve_with(&system, &config.linear)?;

        let mut alpha = T::one();
        loop {
            let mut candidate = u.clone();
            for (&k, d) in nodes.iter().zip(&delta) {
                candidate[k] += alpha * *d;
            }
            let (m, worst) = min_margin(disc, &candidate);
            if m >= keep * current_margin {
                u = candidate;
                break;
            }
            alpha = alpha * T::lit(0.5);
            if alpha.as_f64() < config.min_alpha {
                return Err(Error::ConeEscape { node: worst, t: t_f64 });
            }
        }
        debug!("t = {t_f64:.6}: step {iter}, residual {:.3e}, alpha {:.3e}", norm.as_f64(), alpha.as_f64());
    }
    unreachable!("the loop returns at iter == max_iter")
}
