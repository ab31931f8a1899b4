//! Sparse linear Dirichlet problems: assembly, BiCGStab with a Jacobi
//! preconditioner, banded LU, and the upper barrier `tr_ω(χ + i∂∂̄ ōu) = 0`.

use std::sync::Arc;

use log::{debug, warn};
use rayon::prelude::*;

use crate::discretization::grid::{BoxGrid, MatrixField, ScalarField};
use crate::discretization::scheme::{BoxScheme, Discretization};
use crate::discretization::stencil::coefficient_row;
use crate::error::{Error, Result};
use crate::hermitian::{herm_eigen, HermitianMatrix};
use crate::operator::OperatorParams;
use crate::scalar::Real;

/// Square system over the equation nodes of a grid, stored row-compressed.
#[derive(Debug, Clone)]
pub struct SparseSystem<T> {
    nodes: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    diag: Vec<T>,
    rhs: Vec<T>,
}

const NOT_UNKNOWN: usize = usize::MAX;

impl<T: Real> SparseSystem<T> {
    /// Builds the system from stencil rows over grid node ids.
    ///
    /// `rows[i]` and `rhs[i]` belong to `nodes[i]`. Entries on non-equation
    /// nodes move to the right-hand side with `boundary` values, or are
    /// dropped when `boundary` is `None` (zero Dirichlet data).
    pub fn from_rows(
        node_count: usize,
        nodes: &[usize],
        rows: Vec<Vec<(usize, T)>>,
        mut rhs: Vec<T>,
        boundary: Option<&[T]>,
    ) -> Result<Self> {
        if rows.len() != nodes.len() || rhs.len() != nodes.len() {
            return Err(Error::ShapeMismatch { expected: nodes.len(), found: rows.len().min(rhs.len()) });
        }
        if let Some(b) = boundary {
            if b.len() != node_count {
                return Err(Error::ShapeMismatch { expected: node_count, found: b.len() });
            }
        }
        let mut index = vec![NOT_UNKNOWN; node_count];
        for (i, &k) in nodes.iter().enumerate() {
            index[k] = i;
        }
        let mut row_ptr = Vec::with_capacity(nodes.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = vec![T::zero(); nodes.len()];
        for (i, row) in rows.into_iter().enumerate() {
            let mut entries: Vec<(usize, T)> = Vec::with_capacity(row.len());
            for (k, w) in row {
                match index[k] {
                    NOT_UNKNOWN => {
                        if let Some(b) = boundary {
                            rhs[i] -= w * b[k];
                        }
                    }
                    j => entries.push((j, w)),
                }
            }
            entries.sort_by_key(|e| e.0);
            for (j, w) in entries {
                if cols.len() > row_ptr[i] && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += w;
                } else {
                    cols.push(j);
                    vals.push(w);
                }
            }
            row_ptr.push(cols.len());
            for e in row_ptr[i]..row_ptr[i + 1] {
                if cols[e] == i {
                    diag[i] = vals[e];
                }
            }
            if diag[i] == T::zero() {
                return Err(Error::InvalidField { field: "system", reason: format!("zero diagonal at node {}", nodes[i]) });
            }
        }
        Ok(Self { nodes: nodes.to_vec(), row_ptr, cols, vals, diag, rhs })
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    /// Grid node of each unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn set_rhs(&mut self, rhs: Vec<T>) -> Result<()> {
        if rhs.len() != self.unknowns() {
            return Err(Error::ShapeMismatch { expected: self.unknowns(), found: rhs.len() });
        }
        self.rhs = rhs;
        Ok(())
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (self.cols[e], self.vals[e]))
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.unknowns()];
        self.apply_into(x, &mut y);
        y
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, w)| w * x[j]).sum();
        });
    }

    /// `(max_i Σ_{j≠i} |a_ij| / |a_ii|, number of rows with ratio > 1)`.
    pub fn dominance(&self) -> (T, usize) {
        (0..self.unknowns())
            .into_par_iter()
            .map(|i| {
                let off: T = self.row(i).filter(|&(j, _)| j != i).map(|(_, w)| w.abs()).sum();
                let r = off / self.diag[i].abs();
                (r, usize::from(r > T::one()))
            })
            .reduce(|| (T::zero(), 0), |a, b| (a.0.max(b.0), a.1 + b.1))
    }

    /// Lower and upper bandwidth in unknown numbering.
    pub fn bandwidth(&self) -> (usize, usize) {
        (0..self.unknowns())
            .into_par_iter()
            .map(|i| {
                self.row(i).fold((0, 0), |(kl, ku), (j, _)| if j < i { (kl.max(i - j), ku) } else { (kl, ku.max(j - i)) })
            })
            .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }

    /// Full node vector: `x` on equation nodes, `fill` elsewhere.
    pub fn scatter(&self, x: &[T], fill: &[T]) -> Vec<T> {
        let mut out = fill.to_vec();
        for (i, &k) in self.nodes.iter().enumerate() {
            out[k] = x[i];
        }
        out
    }

    fn log_dominance(&self) {
        let (ratio, rows) = self.dominance();
        if rows > 0 {
            warn!("{rows} of {} rows are not diagonally dominant (worst off-diagonal/diagonal ratio {ratio:.3e})", self.unknowns());
        }
    }
}

/// Discrete `Σ C[p][q] ∂_p∂_q̄` with per-node coefficients and zero Dirichlet
/// data. `rhs` supplies the right-hand side at every interior node.
pub fn assemble_linearized<T: Real>(coeffs: &MatrixField<T>, rhs: &ScalarField<T>, grid: &BoxGrid<T>) -> Result<SparseSystem<T>> {
    let nodes = grid.interior_nodes();
    if coeffs.len() != nodes.len() {
        return Err(Error::ShapeMismatch { expected: nodes.len(), found: coeffs.len() });
    }
    let rows: Result<Vec<_>> = coeffs
        .entries()
        .par_iter()
        .zip(&nodes)
        .map(|((k, c), &node)| {
            if *k != node {
                return Err(Error::ShapeMismatch { expected: node, found: *k });
            }
            if !(herm_eigen(c).min() > T::zero()) {
                return Err(Error::IndefiniteCoefficients { node });
            }
            Ok(coefficient_row(grid, node, c))
        })
        .collect();
    let b = nodes.iter().map(|&k| rhs.values()[k]).collect();
    let system = SparseSystem::from_rows(grid.node_count(), &nodes, rows?, b, None)?;
    system.log_dominance();
    Ok(system)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearStrategy {
    /// Banded LU when small and narrow enough, BiCGStab otherwise.
    Auto,
    Iterative,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverConfig {
    /// Relative residual target `‖b − Ax‖ ≤ tol·‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: LinearStrategy,
    /// Largest unknown count for the banded direct solver.
    pub direct_threshold: usize,
    /// Largest `N·kl·(kl+ku)` accepted for the banded direct solver.
    pub direct_work_limit: f64,
    /// Iterations without a 1% improvement of the best residual before the
    /// iteration is declared stalled.
    pub stall_window: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
            strategy: LinearStrategy::Auto,
            direct_threshold: 20_000,
            direct_work_limit: 5e8,
            stall_window: 50,
        }
    }
}

impl LinearSolverConfig {
    fn direct_feasible<T: Real>(&self, system: &SparseSystem<T>) -> bool {
        let n = system.unknowns();
        let (kl, ku) = system.bandwidth();
        n <= self.direct_threshold && (n as f64) * (kl as f64) * ((kl + ku) as f64 + 1.0) <= self.direct_work_limit
    }
}

/// Solves with the default strategy; see [`solve_with`].
pub fn solve_sparse<T: Real>(system: &SparseSystem<T>, tol: T, max_iter: usize) -> Result<Vec<T>> {
    solve_with(system, &LinearSolverConfig { tol: tol.as_f64(), max_iter, ..LinearSolverConfig::default() })
}

/// Returns the unknown vector with relative residual at most `config.tol`.
pub fn solve_with<T: Real>(system: &SparseSystem<T>, config: &LinearSolverConfig) -> Result<Vec<T>> {
    if !(config.tol > 0.0) {
        return Err(Error::InvalidField { field: "tol", reason: "must be positive".into() });
    }
    match config.strategy {
        LinearStrategy::Direct => banded_solve(system),
        LinearStrategy::Iterative => bicgstab(system, config),
        LinearStrategy::Auto => {
            if config.direct_feasible(system) {
                banded_solve(system)
            } else {
                match bicgstab(system, config) {
                    Err(Error::LinearSolveStalled { .. }) if config.direct_feasible(system) => banded_solve(system),
                    other => other,
                }
            }
        }
    }
}

const DOT_CHUNK: usize = 4096;

/// Dot product with a fixed reduction tree, independent of the thread count.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let partial: Vec<T> = a.par_chunks(DOT_CHUNK).zip(b.par_chunks(DOT_CHUNK)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| *p * *q).sum()).collect();
    partial.into_iter().sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    y.par_iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * *xi);
}

/// Right-preconditioned BiCGStab with `M = diag(A)`.
fn bicgstab<T: Real>(system: &SparseSystem<T>, config: &LinearSolverConfig) -> Result<Vec<T>> {
    let n = system.unknowns();
    let b = system.rhs();
    let bnorm = norm(b);
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok(x);
    }
    let target = T::lit(config.tol) * bnorm;
    let inv_diag: Vec<T> = system.diag.iter().map(|d| T::one() / *d).collect();
    let precondition = |v: &[T], out: &mut [T]| out.par_iter_mut().zip(v).zip(&inv_diag).for_each(|((o, vi), di)| *o = *vi * *di);

    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut p = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut p_hat = vec![T::zero(); n];
    let mut s_hat = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut best = bnorm;
    let mut since_best = 0usize;
    let mut restarts = 0usize;

    for iter in 1..=config.max_iter {
        let rho_next = dot(&r_hat, &r);
        if rho_next.abs() <= T::epsilon() * T::epsilon() * bnorm * bnorm || omega == T::zero() {
            // Breakdown: restart from the current residual.
            restarts += 1;
            if restarts > 10 {
                return Err(Error::LinearSolveStalled { iterations: iter, residual: (best / bnorm).as_f64() });
            }
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = T::zero());
            v.iter_mut().for_each(|e| *e = T::zero());
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            continue;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        p.par_iter_mut().zip(&r).zip(&v).for_each(|((pi, ri), vi)| *pi = *ri + beta * (*pi - omega * *vi));
        precondition(&p, &mut p_hat);
        system.apply_into(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        axpy(&mut x, alpha, &p_hat);
        axpy(&mut r, -alpha, &v);
        let rnorm = norm(&r);
        if rnorm <= target {
            debug!("bicgstab converged in {iter} iterations");
            return Ok(x);
        }
        precondition(&r, &mut s_hat);
        system.apply_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &r) / tt } else { T::zero() };
        axpy(&mut x, omega, &s_hat);
        axpy(&mut r, -omega, &t);
        let rnorm = norm(&r);
        if !rnorm.is_finite() {
            return Err(Error::LinearSolveStalled { iterations: iter, residual: f64::INFINITY });
        }
        if rnorm <= target {
            debug!("bicgstab converged in {iter} iterations");
            return Ok(x);
        }
        if rnorm < T::lit(0.99) * best {
            best = rnorm;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.stall_window {
                return Err(Error::LinearSolveStalled { iterations: iter, residual: (best / bnorm).as_f64() });
            }
        }
    }
    Err(Error::LinearSolveStalled { iterations: config.max_iter, residual: (best / bnorm).as_f64() })
}

/// Banded LU with partial pivoting.
fn banded_solve<T: Real>(system: &SparseSystem<T>) -> Result<Vec<T>> {
    let n = system.unknowns();
    let (kl, ku) = system.bandwidth();
    // Row i holds columns i−kl ..= i+ku+kl (fill-in from pivoting included).
    let width = 2 * kl + ku + 1;
    let at = |i: usize, j: usize| i * width + (j + kl - i);
    let mut band = vec![T::zero(); n * width];
    for i in 0..n {
        for (j, w) in system.row(i) {
            band[at(i, j)] += w;
        }
    }
    let mut lower = vec![T::zero(); n * kl.max(1)];
    let mut pivots = vec![0usize; n];
    let scale = band.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let mut piv = k;
        for r in k..=last {
            if band[at(r, k)].abs() > band[at(piv, k)].abs() {
                piv = r;
            }
        }
        pivots[k] = piv;
        if !(band[at(piv, k)].abs() > T::epsilon() * scale) {
            return Err(Error::LinearSolveStalled { iterations: 0, residual: f64::INFINITY });
        }
        let end = (k + ku + kl).min(n - 1);
        if piv != k {
            for j in k..=end {
                band.swap(at(k, j), at(piv, j));
            }
        }
        let pivot = band[at(k, k)];
        for r in (k + 1)..=last {
            let l = band[at(r, k)] / pivot;
            lower[k * kl + (r - k - 1)] = l;
            if l != T::zero() {
                band[at(r, k)] = T::zero();
                for j in (k + 1)..=end {
                    let u = band[at(k, j)];
                    band[at(r, j)] -= l * u;
                }
            }
        }
    }
    let mut x = system.rhs().to_vec();
    for k in 0..n {
        x.swap(k, pivots[k]);
        let xk = x[k];
        for r in (k + 1)..=(k + kl).min(n - 1) {
            x[r] -= lower[k * kl + (r - k - 1)] * xk;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..=(i + ku + kl).min(n - 1) {
            acc -= band[at(i, j)] * x[j];
        }
        x[i] = acc / band[at(i, i)];
    }
    Ok(x)
}

/// Solves `tr_ω(χ + i∂∂̄ v) = 0` with Dirichlet data `boundary` on a
/// discretization; returns the full node vector.
pub fn upper_barrier_on<T: Real>(disc: &dyn Discretization<T>, boundary: &[T], config: &LinearSolverConfig) -> Result<Vec<T>> {
    let nodes = disc.equation_nodes();
    let rows = nodes.par_iter().map(|&k| disc.trace_row(k)).collect();
    let rhs = vec![-disc.chi_trace(); nodes.len()];
    let system = SparseSystem::from_rows(disc.node_count(), nodes, rows, rhs, Some(boundary))?;
    let x = solve_with(&system, config)?;
    Ok(system.scatter(&x, boundary))
}

/// Upper barrier `ōu` on the grid of `phi`: `tr_ω(χ + i∂∂̄ ōu) = 0`,
/// `ōu = phi` on the boundary.
pub fn upper_barrier<T: Real>(chi: &HermitianMatrix<T>, omega: &HermitianMatrix<T>, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
    let grid: Arc<BoxGrid<T>> = phi.grid().clone();
    let n = grid.n();
    let scheme = BoxScheme::new(grid.clone(), chi.clone(), omega.clone(), OperatorParams::new(n, n)?)?;
    let values = upper_barrier_on(&scheme, phi.values(), &LinearSolverConfig::default())?;
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> SparseSystem<f64> {
        let nodes: Vec<usize> = (0..n).collect();
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.5)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.2));
                }
                r
            })
            .collect();
        SparseSystem::from_rows(n, &nodes, rows, vec![1.0; n], None).unwrap()
    }

    #[test]
    fn identity_returns_rhs() {
        let nodes = [0, 1, 2];
        let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]];
        let sys = SparseSystem::from_rows(3, &nodes, rows, vec![3.0, -1.0, 0.5], None).unwrap();
        for strategy in [LinearStrategy::Direct, LinearStrategy::Iterative] {
            let x = solve_with(&sys, &LinearSolverConfig { strategy, ..Default::default() }).unwrap();
            assert_eq!(x, vec![3.0, -1.0, 0.5]);
        }
    }

    #[test]
    fn direct_and_iterative_agree() {
        let sys = tridiagonal(200);
        let xd = solve_with(&sys, &LinearSolverConfig { strategy: LinearStrategy::Direct, ..Default::default() }).unwrap();
        let xi = solve_with(&sys, &LinearSolverConfig { strategy: LinearStrategy::Iterative, ..Default::default() }).unwrap();
        let r: f64 = sys.apply(&xd).iter().zip(sys.rhs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(r < 1e-12);
        assert!(xd.iter().zip(&xi).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let nodes = [0, 1, 2];
        let rows = vec![vec![(0, 1e-30), (1, 1.0)], vec![(0, 1.0), (1, 1.0), (2, 1.0)], vec![(1, 2.0), (2, 1.0)]];
        let sys = SparseSystem::from_rows(3, &nodes, rows, vec![1.0, 2.0, 3.0], None).unwrap();
        let x = banded_solve(&sys).unwrap();
        let ax = sys.apply(&x);
        assert!(ax.iter().zip(sys.rhs()).all(|(a, b): (&f64, &f64)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn boundary_values_move_to_rhs() {
        let rows = vec![vec![(0, -1.0), (1, 2.0), (2, -1.0)]];
        let sys = SparseSystem::from_rows(3, &[1], rows, vec![0.0], Some(&[1.0, 0.0, 3.0])).unwrap();
        assert_eq!(sys.rhs(), &[4.0]);
        assert_eq!(solve_sparse(&sys, 1e-12, 10).unwrap(), vec![2.0]);
    }
}
