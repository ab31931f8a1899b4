//! Membership and margins for the cone of vectors with positive `p`-subset
//! sums, and for its super-level sets.

use rayon::prelude::*;

use crate::discretization::MatrixField;
use crate::error::Result;
use crate::hermitian::{HermitianMatrix, Metric};
use crate::operator::{eval_ftilde, OperatorParams};
use crate::scalar::Real;

/// Cone margin of an eigenvalue vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeMargin<T> {
    /// Sum of the `p` smallest entries; the smallest subset sum.
    pub margin: T,
    /// `f̃(λ)`, present exactly when `margin > 0`.
    pub ftilde_value: Option<T>,
}

impl<T: Real> ConeMargin<T> {
    pub fn inside(&self) -> bool {
        self.margin > T::zero()
    }
}

/// Sum of the `p` smallest entries of `λ` (which need not be sorted).
pub fn margin_value<T: Real>(lambda: &[T], p: usize) -> T {
    if lambda.windows(2).all(|w| w[0] <= w[1]) {
        return lambda[..p].iter().copied().sum();
    }
    let mut sorted = lambda.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted[..p].iter().copied().sum()
}

pub fn cone_margin<T: Real>(lambda: &[T], params: &OperatorParams) -> ConeMargin<T> {
    let margin = margin_value(lambda, params.p());
    let ftilde_value = if margin > T::zero() { eval_ftilde(lambda, params).ok() } else { None };
    ConeMargin { margin, ftilde_value }
}

/// Whether `λ` lies in the level set `{λ in the cone : f̃(λ) ≥ ψ̃}`.
pub fn in_level_set<T: Real>(lambda: &[T], params: &OperatorParams, psi_tilde: T) -> bool {
    let m = cone_margin(lambda, params);
    matches!(m.ftilde_value, Some(f) if m.inside() && f >= psi_tilde)
}

/// Smallest cone margin over a matrix field and the node attaining it.
///
/// Ties resolve to the smallest node id so the scan is deterministic under
/// any thread count.
pub fn admissibility_scan<T: Real>(
    g_field: &MatrixField<T>,
    omega: &HermitianMatrix<T>,
    params: &OperatorParams,
) -> Result<(T, usize)> {
    let metric = Metric::new(omega.clone())?;
    Ok(scan_matrices(g_field.entries(), &metric, params))
}

pub(crate) fn scan_matrices<T: Real>(
    entries: &[(usize, HermitianMatrix<T>)],
    metric: &Metric<T>,
    params: &OperatorParams,
) -> (T, usize) {
    entries
        .par_iter()
        .map(|(node, g)| (margin_value(metric.endomorphism_eigen(g).values(), params.p()), *node))
        .reduce(|| (T::infinity(), usize::MAX), min_pair)
}

pub(crate) fn min_pair<T: Real>(a: (T, usize), b: (T, usize)) -> (T, usize) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone_margin(l: &[f64], q: &OperatorParams) -> ConeMargin<f64> {
        super::cone_margin(l, q)
    }

    #[test]
    fn margin_examples() {
        let q = OperatorParams::new(3, 2).unwrap();
        let out = cone_margin(&[-1.0, -1.0, 5.0], &q);
        assert_eq!(out.margin, -2.0);
        assert!(!out.inside() && out.ftilde_value.is_none());
        let inside = cone_margin(&[1.0, 1.0, 1.0], &q);
        assert_eq!(inside.margin, 2.0);
        assert!((inside.ftilde_value.unwrap() - 2.0).abs() < 1e-14);
        let bd = cone_margin(&[-1.0, 1.0, 3.0], &q);
        assert_eq!(bd.margin, 0.0);
        assert!(!bd.inside());
        assert_eq!(margin_value(&[3.0, -1.0, 1.0], 2), 0.0);
    }

    #[test]
    fn level_set_examples() {
        let q = OperatorParams::new(3, 2).unwrap();
        assert!(in_level_set(&[1.0, 1.0, 1.0], &q, 2.0));
        assert!(!in_level_set(&[1.0, 1.0, 1.0], &q, 2.1));
        assert!(!in_level_set(&[-1.0, -1.0, 5.0], &q, 0.5));
    }
}
