//! Numerical counterparts of the a priori estimates: gradient bound `K`,
//! sandwich `ul u ≤ u ≤ ōu`, tangential boundary trace, second-order ratios,
//! the collar barrier and the AM-GM bound.

use log::warn;
use rayon::prelude::*;

use crate::cone::min_pair;
use crate::discretization::scheme::{DiscreteProblem, Discretization, Scheme};
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, Metric};
use crate::operator::eval_ftilde;
use crate::scalar::Real;

fn max_pair<T: Real>(a: (T, usize), b: (T, usize)) -> (T, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// `K = sup |∇u|² + 1` over all nodes.
pub fn gradient_bound<T: Real>(disc: &dyn Discretization<T>, u: &[T]) -> T {
    (0..disc.node_count()).into_par_iter().map(|k| disc.gradient_norm_sq(u, k)).reduce(T::zero, T::max) + T::one()
}

/// `min 𝓕 = min Σ f_i` over equation nodes.
pub fn min_trace_f<T: Real>(disc: &dyn Discretization<T>, u: &[T]) -> Result<T> {
    let values: Result<Vec<T>> = disc.equation_nodes().par_iter().map(|&k| disc.linearize(u, k).map(|l| l.trace_f)).collect();
    Ok(values?.into_iter().fold(T::infinity(), T::min))
}

/// `max(0, sup(ul u − u), sup(u − ōu))`.
pub fn sandwich_check<T: Real>(u: &[T], sub: &[T], upper: &[T]) -> T {
    u.iter().zip(sub).zip(upper).fold(T::zero(), |m, ((&v, &lo), &hi)| m.max(lo - v).max(v - hi))
}

/// Smallest `(p/n)·tr_ω g − f̃` over equation nodes.
pub fn am_gm_slack<T: Real>(disc: &dyn Discretization<T>, u: &[T]) -> Result<(T, usize)> {
    let params = disc.params();
    let ratio = T::from_usize_lossy(params.p()) / T::from_usize_lossy(params.n());
    let slacks: Result<Vec<(T, usize)>> = disc
        .equation_nodes()
        .par_iter()
        .map(|&k| {
            let lam = disc.spectrum(u, k);
            Ok((ratio * lam.sum() - eval_ftilde(lam.values(), params)?, k))
        })
        .collect();
    Ok(slacks?.into_iter().fold((T::infinity(), usize::MAX), min_pair))
}

/// Minimum over boundary nodes and their faces of `tr(ω_T^{-1} g_T)`, with
/// `g_T` the block of `g = χ + i∂∂̄u` omitting the face-normal complex
/// direction. Boundary Hessians use one-sided differences.
pub fn boundary_trace_check<T: Real>(u: &[T], problem: &DiscreteProblem<T>) -> Result<T> {
    let scheme = match problem.scheme() {
        Scheme::Box(b) => b,
        Scheme::Radial(_) => return Err(Error::RadialModeUnsupported),
    };
    let grid = scheme.grid();
    let omega = scheme.metric().omega();
    let n = grid.n();
    let tangential: Result<Vec<Metric<T>>> = (0..n).map(|j| Metric::new(omega.principal_submatrix(j)?)).collect();
    let tangential = tangential?;
    let values: Result<Vec<T>> = grid
        .boundary_nodes()
        .par_iter()
        .map(|&k| {
            let g = scheme.g_any(u, k);
            grid.faces_of(k).into_iter().try_fold(T::infinity(), |m, (axis, _)| {
                let j = axis / 2;
                Ok(m.min(tangential[j].trace(&g.principal_submatrix(j)?)))
            })
        })
        .collect();
    Ok(values?.into_iter().fold(T::infinity(), T::min))
}

/// Radial analogue: `(n − 1)(c + U′(R²))`, the sum of the tangential
/// eigenvalues on the sphere `|z| = R`.
pub fn radial_boundary_trace<T: Real>(u: &[T], problem: &DiscreteProblem<T>) -> Result<T> {
    let scheme = match problem.scheme() {
        Scheme::Radial(r) => r,
        Scheme::Box(_) => return Err(Error::InvalidField { field: "geometry", reason: "expected a radial problem".into() }),
    };
    let last = scheme.grid().last();
    let (u1, _) = scheme.grid().derivatives(u, last);
    Ok(T::from_usize_lossy(problem.params().n() - 1) * (scheme.chi_scalar() + u1))
}

/// Tangential boundary trace for either geometry.
pub fn boundary_trace<T: Real>(u: &[T], problem: &DiscreteProblem<T>) -> Result<T> {
    match problem.scheme() {
        Scheme::Box(_) => boundary_trace_check(u, problem),
        Scheme::Radial(_) => radial_boundary_trace(u, problem),
    }
}

/// Second-order quantities of one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary<T> {
    /// Largest grid spacing.
    pub h: T,
    /// `sup |i∂∂̄u|` (spectral radius) over all nodes.
    pub sup_hessian: T,
    /// The same supremum over boundary nodes.
    pub sup_hessian_boundary: T,
    pub k: T,
}

impl<T: Real> LevelSummary<T> {
    /// `sup|∂∂̄u| / (K + sup_∂|∂∂̄u|)`.
    pub fn interior_ratio(&self) -> T {
        self.sup_hessian / (self.k + self.sup_hessian_boundary)
    }

    /// `sup_∂|∂∂̄u| / K`.
    pub fn boundary_ratio(&self) -> T {
        self.sup_hessian_boundary / self.k
    }
}

pub fn level_summary<T: Real>(problem: &DiscreteProblem<T>, u: &[T]) -> LevelSummary<T> {
    let disc = problem.disc();
    let radius = |k: usize| {
        let s = disc.hessian_spectrum(u, k);
        s.min().abs().max(s.max().abs())
    };
    let (all, boundary) = (0..disc.node_count())
        .into_par_iter()
        .map(|k| {
            let r = radius(k);
            (r, if disc.is_equation_node(k) { T::zero() } else { r })
        })
        .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let h = match problem.scheme() {
        Scheme::Box(b) => b.grid().spacing().iter().copied().fold(T::zero(), T::max),
        Scheme::Radial(r) => r.grid().ds(),
    };
    LevelSummary { h, sup_hessian: all, sup_hessian_boundary: boundary, k: gradient_bound(disc, u) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct C2Report<T> {
    pub levels: Vec<LevelSummary<T>>,
    /// `(max − min) / min` of the interior ratios across levels.
    pub interior_variation: T,
    /// `(max − min) / min` of the boundary ratios across levels.
    pub boundary_variation: T,
}

fn variation<T: Real>(values: impl Iterator<Item = T> + Clone) -> T {
    let lo = values.clone().fold(T::infinity(), T::min);
    let hi = values.fold(T::neg_infinity(), T::max);
    if lo > T::zero() {
        (hi - lo) / lo
    } else {
        T::infinity()
    }
}

/// Tabulates the second-order ratios over refinement levels (at least two).
pub fn c2_ratio_monitor<T: Real>(levels: Vec<LevelSummary<T>>) -> Result<C2Report<T>> {
    if levels.len() < 2 {
        return Err(Error::InvalidField { field: "levels", reason: "need at least two refinement levels".into() });
    }
    let interior_variation = variation(levels.iter().map(|l| l.interior_ratio()));
    let boundary_variation = variation(levels.iter().map(|l| l.boundary_ratio()));
    Ok(C2Report { levels, interior_variation, boundary_variation })
}

/// Collar barrier parameters for `v = (u − ul u) + τd − Nd²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams<T> {
    pub tau: T,
    pub n_coef: T,
    /// Collar width; `None` means `0.1·diam`.
    pub delta: Option<T>,
}

impl<T: Real> Default for BarrierParams<T> {
    fn default() -> Self {
        Self { tau: T::lit(0.05), n_coef: T::lit(50.0), delta: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport<T> {
    pub tau: T,
    pub n_coef: T,
    /// Collar width actually used.
    pub delta: T,
    /// The requested width exceeded the half-width of the box and was clipped.
    pub degenerate_collar: bool,
    pub collar_nodes: usize,
    pub min_v: T,
    pub min_v_node: usize,
    /// `max 𝓛v / (1 + 𝓕)` over collar equation nodes.
    pub max_ratio: T,
    pub max_ratio_node: usize,
}

impl<T: Real> BarrierReport<T> {
    /// `ε = −max 𝓛v/(1 + 𝓕)`; the barrier inequality holds when positive.
    pub fn epsilon(&self) -> T {
        -self.max_ratio
    }
}

/// Evaluates the collar barrier on the linearization at `u`.
///
/// `d` is the distance to the nearest face; `𝓛` is applied to the smooth
/// distance of that face, on which the stencil is exact.
pub fn barrier_check<T: Real>(u: &[T], sub: &[T], problem: &DiscreteProblem<T>, params: &BarrierParams<T>) -> Result<BarrierReport<T>> {
    let scheme = match problem.scheme() {
        Scheme::Box(b) => b,
        Scheme::Radial(_) => return Err(Error::RadialModeUnsupported),
    };
    let grid = scheme.grid();
    let disc = problem.disc();
    let requested = params.delta.unwrap_or_else(|| T::lit(0.1) * grid.diameter());
    let half = grid.half_width();
    let degenerate_collar = requested > half;
    let delta = requested.min(half);
    let (tau, big_n) = (params.tau, params.n_coef);

    let nearest_face = |k: usize| {
        let x = grid.coords(k);
        (0..grid.axes())
            .flat_map(|a| [(x[a] - grid.lower()[a], a, false), (grid.upper()[a] - x[a], a, true)])
            .fold((T::infinity(), 0, false), |best, c| if c.0 < best.0 { c } else { best })
    };
    let face_distance = |k: usize, axis: usize, upper: bool| {
        let x = grid.coords(k)[axis];
        if upper {
            grid.upper()[axis] - x
        } else {
            x - grid.lower()[axis]
        }
    };
    let v_at = |k: usize, d: T| u[k] - sub[k] + tau * d - big_n * d * d;

    let collar: Vec<usize> = (0..grid.node_count()).filter(|&k| grid.distance_to_boundary(k) < delta).collect();
    let (min_v, min_v_node) =
        collar.par_iter().map(|&k| (v_at(k, grid.distance_to_boundary(k)), k)).reduce(|| (T::infinity(), usize::MAX), min_pair);

    let ratios: Result<Vec<(T, usize)>> = collar
        .par_iter()
        .filter(|&&k| disc.is_equation_node(k))
        .map(|&k| {
            let lin = disc.linearize(u, k)?;
            let (_, axis, upper) = nearest_face(k);
            let lv: T = lin.row.iter().map(|&(j, w)| w * v_at(j, face_distance(j, axis, upper))).sum();
            Ok((lv / (T::one() + lin.trace_f), k))
        })
        .collect();
    let (max_ratio, max_ratio_node) = ratios?.into_iter().fold((T::neg_infinity(), usize::MAX), max_pair);

    if min_v < T::zero() {
        warn!("barrier: v = {:.3e} < 0 at node {min_v_node}", min_v.as_f64());
    }
    if max_ratio >= T::zero() {
        warn!("barrier: Lv/(1+F) = {:.3e} >= 0 at node {max_ratio_node}", max_ratio.as_f64());
    }
    Ok(BarrierReport {
        tau,
        n_coef: big_n,
        delta,
        degenerate_collar,
        collar_nodes: collar.len(),
        min_v,
        min_v_node,
        max_ratio,
        max_ratio_node,
    })
}

/// Diagnostics of a converged solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics<T> {
    /// `sup |∇u|² + 1`.
    pub k: T,
    /// `min 𝓕`.
    pub f_trace: T,
    pub sandwich_violation: T,
    /// Smallest tangential boundary trace.
    pub c0_boundary: T,
    /// `sup |∂∂̄u| / K`.
    pub c2_ratio: T,
    /// Smallest `(p/n) tr_ω g − f̃`.
    pub am_gm_slack: T,
    pub barrier_report: Option<BarrierReport<T>>,
    /// `max |u − u*|` when the exact solution is known.
    pub exact_error: Option<T>,
}

/// Runs every diagnostic at a converged `u`; `upper` is the barrier `ōu`.
pub fn diagnose<T: Real>(
    problem: &DiscreteProblem<T>,
    u: &[T],
    upper: &[T],
    barrier: Option<&BarrierParams<T>>,
) -> Result<SolveDiagnostics<T>> {
    let disc = problem.disc();
    let summary = level_summary(problem, u);
    let barrier_report = match (barrier, problem.scheme()) {
        (Some(params), Scheme::Box(_)) => Some(barrier_check(u, problem.subsolution(), problem, params)?),
        _ => None,
    };
    Ok(SolveDiagnostics {
        k: summary.k,
        f_trace: min_trace_f(disc, u)?,
        sandwich_violation: sandwich_check(u, problem.subsolution(), upper),
        c0_boundary: boundary_trace(u, problem)?,
        c2_ratio: summary.sup_hessian / summary.k,
        am_gm_slack: am_gm_slack(disc, u)?.0,
        barrier_report,
        exact_error: problem.exact().map(|e| max_difference(u, e)),
    })
}

/// `max |a − b|`.
pub fn max_difference<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// Tangential trace of a single matrix with the `omit` direction removed.
pub fn tangential_trace<T: Real>(g: &HermitianMatrix<T>, omega: &HermitianMatrix<T>, omit: usize) -> Result<T> {
    Metric::new(omega.principal_submatrix(omit)?).map(|m| m.trace(&g.principal_submatrix(omit).expect("same dimension")))
}
