//! Finite-difference complex Hessians on box grids.
//!
//! With `z_j = x_j + i y_j`, entry `(k, j)` of the complex Hessian is
//!
//! `∂_j ∂_k̄ u = ¼[(u_{x_j x_k} + u_{y_j y_k}) + i(u_{x_j y_k} − u_{y_j x_k})]`,
//!
//! evaluated from the discrete real Hessian `D`. Pure second derivatives use
//! the 3-point stencil, mixed ones the 4-point cross
//! `(u(+,+) − u(+,−) − u(−,+) + u(−,−)) / (4 h_a h_b)`, so the result is
//! Hermitian by construction and exact on quadratics.

use rayon::prelude::*;

use super::grid::{BoxGrid, MatrixField, ScalarField};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::scalar::{Complex, Real};

#[inline]
pub(crate) fn x_axis(j: usize) -> usize {
    2 * j
}

#[inline]
pub(crate) fn y_axis(j: usize) -> usize {
    2 * j + 1
}

/// Complex Hessian from a real `2n × 2n` Hessian (row-major, axes `x_1, y_1, …`).
pub fn complex_from_real_hessian<T: Real>(n: usize, d: &[T]) -> HermitianMatrix<T> {
    let m = 2 * n;
    let q = T::lit(0.25);
    let mut data = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            let (xj, yj, xk, yk) = (x_axis(j), y_axis(j), x_axis(k), y_axis(k));
            let re = d[xj * m + xk] + d[yj * m + yk];
            let im = d[xj * m + yk] - d[yj * m + xk];
            data.push(Complex::new(q * re, q * im));
        }
    }
    HermitianMatrix::symmetrized(n, data)
}

/// Real symmetric `S` with `Σ_{a,b} S_ab u_{ab} = Σ_{p,q} C[p][q] ∂_p ∂_q̄ u`
/// for Hermitian `C`, i.e. the real form of `h ↦ C.pair(h)`.
pub fn real_coefficients<T: Real>(c: &HermitianMatrix<T>) -> Vec<T> {
    let n = c.dim();
    let m = 2 * n;
    let q = T::lit(0.25);
    let mut s = vec![T::zero(); m * m];
    for j in 0..n {
        for k in 0..n {
            let z = c.get(j, k);
            s[x_axis(j) * m + x_axis(k)] += q * z.re;
            s[y_axis(j) * m + y_axis(k)] += q * z.re;
            s[x_axis(j) * m + y_axis(k)] -= q * z.im;
            s[y_axis(j) * m + x_axis(k)] += q * z.im;
        }
    }
    s
}

/// Real Hessian at an interior node with central differences.
pub(crate) fn interior_real_hessian<T: Real>(grid: &BoxGrid<T>, u: &[T], node: usize) -> Vec<T> {
    let m = grid.axes();
    let h = grid.spacing();
    let mut d = vec![T::zero(); m * m];
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    for a in 0..m {
        let sa = grid.stride(a);
        d[a * m + a] = (u[node + sa] - two * u[node] + u[node - sa]) / (h[a] * h[a]);
        for b in (a + 1)..m {
            let sb = grid.stride(b);
            let v = (u[node + sa + sb] - u[node + sa - sb] - u[node - sa + sb] + u[node - sa - sb]) / (four * h[a] * h[b]);
            d[a * m + b] = v;
            d[b * m + a] = v;
        }
    }
    d
}

/// First- and second-derivative stencils along one axis at one position:
/// central in the interior, second-order one-sided on a face.
fn axis_stencils<T: Real>(grid: &BoxGrid<T>, node: usize, axis: usize) -> (Vec<(isize, T)>, Vec<(isize, T)>) {
    let i = grid.axis_index(node, axis);
    let h = grid.spacing()[axis];
    let r = grid.resolution();
    let half = T::lit(0.5) / h;
    let inv2 = T::one() / (h * h);
    if i == 0 || i + 1 == r {
        let sgn: isize = if i == 0 { 1 } else { -1 };
        let dir = T::from_isize(sgn).unwrap_or_else(T::one);
        let d1 = vec![(0, T::lit(-3.0) * half * dir), (sgn, T::lit(4.0) * half * dir), (2 * sgn, -half * dir)];
        let d2 = vec![
            (0, T::lit(2.0) * inv2),
            (sgn, T::lit(-5.0) * inv2),
            (2 * sgn, T::lit(4.0) * inv2),
            (3 * sgn, -inv2),
        ];
        (d1, d2)
    } else {
        (vec![(-1, -half), (1, half)], vec![(-1, inv2), (0, T::lit(-2.0) * inv2), (1, inv2)])
    }
}

fn offset(grid_stride: usize, k: isize) -> isize {
    grid_stride as isize * k
}

/// Real Hessian at any node, one-sided along axes where the node sits on a face.
pub(crate) fn any_real_hessian<T: Real>(grid: &BoxGrid<T>, u: &[T], node: usize) -> Vec<T> {
    let m = grid.axes();
    let stencils: Vec<_> = (0..m).map(|a| axis_stencils(grid, node, a)).collect();
    let at = |off: isize| u[(node as isize + off) as usize];
    let mut d = vec![T::zero(); m * m];
    for a in 0..m {
        let sa = grid.stride(a);
        d[a * m + a] = stencils[a].1.iter().map(|&(k, w)| w * at(offset(sa, k))).sum();
        for b in (a + 1)..m {
            let sb = grid.stride(b);
            let mut v = T::zero();
            for &(ka, wa) in &stencils[a].0 {
                for &(kb, wb) in &stencils[b].0 {
                    v += wa * wb * at(offset(sa, ka) + offset(sb, kb));
                }
            }
            d[a * m + b] = v;
            d[b * m + a] = v;
        }
    }
    d
}

/// Real gradient at any node (central inside, one-sided on faces).
pub(crate) fn any_gradient<T: Real>(grid: &BoxGrid<T>, u: &[T], node: usize) -> Vec<T> {
    (0..grid.axes())
        .map(|a| {
            let sa = grid.stride(a);
            axis_stencils(grid, node, a)
                .0
                .iter()
                .map(|&(k, w)| w * u[(node as isize + offset(sa, k)) as usize])
                .sum()
        })
        .collect()
}

/// `i∂∂̄u` at an interior node.
pub fn complex_hessian<T: Real>(u: &ScalarField<T>, node: usize) -> Result<HermitianMatrix<T>> {
    let grid = u.grid();
    if node >= grid.node_count() || !grid.is_interior(node) {
        return Err(Error::BoundaryNode(node));
    }
    Ok(complex_from_real_hessian(grid.n(), &interior_real_hessian(grid, u.values(), node)))
}

/// `i∂∂̄u` at any node; faces use second-order one-sided differences.
pub fn complex_hessian_one_sided<T: Real>(u: &ScalarField<T>, node: usize) -> HermitianMatrix<T> {
    let grid = u.grid();
    complex_from_real_hessian(grid.n(), &any_real_hessian(grid, u.values(), node))
}

/// Background form: constant or given per node.
#[derive(Debug, Clone)]
pub enum Chi<'a, T> {
    Constant(&'a HermitianMatrix<T>),
    Field(&'a MatrixField<T>),
}

/// `g = χ + i∂∂̄u` at every interior node.
pub fn assemble_g<T: Real>(chi: Chi<'_, T>, u: &ScalarField<T>) -> Result<MatrixField<T>> {
    let grid = u.grid();
    let nodes = grid.interior_nodes();
    let entries: Result<Vec<_>> = nodes
        .par_iter()
        .map(|&k| {
            let h = complex_hessian(u, k)?;
            let chi_k = match &chi {
                Chi::Constant(c) => (*c).clone(),
                Chi::Field(f) => f.get(k).cloned().ok_or(Error::BoundaryNode(k))?,
            };
            if chi_k.dim() != h.dim() {
                return Err(Error::ShapeMismatch { expected: h.dim(), found: chi_k.dim() });
            }
            Ok((k, &chi_k + &h))
        })
        .collect();
    Ok(MatrixField::new(entries?))
}

/// Matrix row of `u ↦ Σ C[p][q] ∂_p ∂_q̄ u` at an interior node, as
/// `(node, weight)` pairs over the stencil (boundary neighbours included).
pub fn coefficient_row<T: Real>(grid: &BoxGrid<T>, node: usize, c: &HermitianMatrix<T>) -> Vec<(usize, T)> {
    let s = real_coefficients(c);
    real_row(grid, node, &s)
}

pub(crate) fn real_row<T: Real>(grid: &BoxGrid<T>, node: usize, s: &[T]) -> Vec<(usize, T)> {
    let m = grid.axes();
    let h = grid.spacing();
    let mut row = Vec::with_capacity(1 + 2 * m + 2 * m * (m - 1));
    let mut center = T::zero();
    for a in 0..m {
        let sa = grid.stride(a);
        let w = s[a * m + a] / (h[a] * h[a]);
        center -= T::lit(2.0) * w;
        row.push((node + sa, w));
        row.push((node - sa, w));
        for b in (a + 1)..m {
            let sb = grid.stride(b);
            let w = (s[a * m + b] + s[b * m + a]) / (T::lit(4.0) * h[a] * h[b]);
            row.push((node + sa + sb, w));
            row.push((node - sa - sb, w));
            row.push((node + sa - sb, -w));
            row.push((node - sa + sb, -w));
        }
    }
    row.push((node, center));
    row
}
