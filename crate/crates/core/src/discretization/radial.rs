//! Radial reduction on balls `|z|² < R²` in `C^n`.
//!
//! For `u = U(s)` with `s = |z|²`, `∂_j ∂_k̄ u = U′ δ_jk + U″ z̄_j z_k`, whose
//! eigenvalues are `U′` (multiplicity `n − 1`) and `U′ + s U″`. With
//! `χ = c·I` and a unit metric the full problem becomes a two-point ODE on
//! `[0, R²]` in `s`.
//!
//! At `s = 0` the factor `s U″` vanishes and only `U′(0)` enters; it is
//! approximated by the second-order one-sided difference.

use crate::error::{Error, Result};
use crate::hermitian::Spectrum;
use crate::scalar::Real;

/// Uniform grid `s_i = i·Δs` on `[0, R²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    radius: T,
    s: Vec<T>,
    ds: T,
}

pub const MIN_RADIAL_POINTS: usize = 5;

impl<T: Real> RadialGrid<T> {
    pub fn new(radius: T, points: usize) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidField { field: "radius", reason: "must be positive".into() });
        }
        if points < MIN_RADIAL_POINTS {
            return Err(Error::InvalidField {
                field: "points",
                reason: format!("need at least {MIN_RADIAL_POINTS} radial points, got {points}"),
            });
        }
        let ds = radius * radius / T::from_usize_lossy(points - 1);
        let s = (0..points).map(|i| ds * T::from_usize_lossy(i)).collect();
        Ok(Self { radius, s, ds })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn points(&self) -> usize {
        self.s.len()
    }

    pub fn ds(&self) -> T {
        self.ds
    }

    pub fn s(&self) -> &[T] {
        &self.s
    }

    pub fn last(&self) -> usize {
        self.s.len() - 1
    }

    /// Stencils for `U′` and `U″` at node `i`.
    pub fn derivative_stencils(&self, i: usize) -> (Vec<(usize, T)>, Vec<(usize, T)>) {
        let h = self.ds;
        let half = T::lit(0.5) / h;
        let inv2 = T::one() / (h * h);
        let last = self.last();
        if i == 0 {
            (
                vec![(0, T::lit(-3.0) * half), (1, T::lit(4.0) * half), (2, -half)],
                vec![(0, T::lit(2.0) * inv2), (1, T::lit(-5.0) * inv2), (2, T::lit(4.0) * inv2), (3, -inv2)],
            )
        } else if i == last {
            (
                vec![(last, T::lit(3.0) * half), (last - 1, T::lit(-4.0) * half), (last - 2, half)],
                vec![
                    (last, T::lit(2.0) * inv2),
                    (last - 1, T::lit(-5.0) * inv2),
                    (last - 2, T::lit(4.0) * inv2),
                    (last - 3, -inv2),
                ],
            )
        } else {
            (vec![(i - 1, -half), (i + 1, half)], vec![(i - 1, inv2), (i, T::lit(-2.0) * inv2), (i + 1, inv2)])
        }
    }

    /// `(U′, U″)` at node `i`.
    pub fn derivatives(&self, u: &[T], i: usize) -> (T, T) {
        let (d1, d2) = self.derivative_stencils(i);
        (d1.iter().map(|&(k, w)| w * u[k]).sum(), d2.iter().map(|&(k, w)| w * u[k]).sum())
    }
}

/// Eigenvalues of `c·I + i∂∂̄U(|z|²)` at `s`: `c + U′` (`n − 1` times) and
/// `c + U′ + s U″`, ascending.
pub fn radial_eigenvalues<T: Real>(u1: T, u2: T, s: T, n: usize, c: T) -> Spectrum<T> {
    Spectrum::from_unsorted(unsorted_radial_eigenvalues(u1, u2, s, n, c))
}

/// As [`radial_eigenvalues`] but with the radial eigenvalue last.
pub(crate) fn unsorted_radial_eigenvalues<T: Real>(u1: T, u2: T, s: T, n: usize, c: T) -> Vec<T> {
    let mut v = vec![c + u1; n];
    v[n - 1] = c + u1 + s * u2;
    v
}
