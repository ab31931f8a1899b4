//! Built-in analytic functions for boundary data, right-hand sides,
//! subsolutions and manufactured solutions.

use crate::scalar::Real;

/// One term `coef · Π_a x_a^{e_a}` in real coordinates `x_1, y_1, x_2, y_2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T> {
    pub coef: T,
    pub exponents: Vec<u32>,
}

/// Analytic scalar function on `C^n`, with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn<T> {
    Constant(T),
    /// `a |z|²`.
    Quadratic(T),
    /// `scale · s^k / k` with `s = |z|²`, `k ≥ 1`.
    RadialPower { power: u32, scale: T },
    /// `Σ_k a_k s^k` with `s = |z|²`.
    RadialPoly(Vec<T>),
    Polynomial(Vec<Monomial<T>>),
}

impl<T: Real> ScalarFn<T> {
    pub fn is_radial(&self) -> bool {
        !matches!(self, ScalarFn::Polynomial(_))
    }

    /// `(U(s), U′(s), U″(s))` for radial functions `u = U(|z|²)`.
    pub fn radial_jet(&self, s: T) -> Option<(T, T, T)> {
        match self {
            ScalarFn::Constant(c) => Some((*c, T::zero(), T::zero())),
            ScalarFn::Quadratic(a) => Some((*a * s, *a, T::zero())),
            ScalarFn::RadialPower { power, scale } => {
                let k = *power as i32;
                let kf = T::from_i32(k)?;
                let u = *scale * s.powi(k) / kf;
                let u1 = *scale * s.powi(k - 1);
                let u2 = if k >= 2 { *scale * (kf - T::one()) * s.powi(k - 2) } else { T::zero() };
                Some((u, u1, u2))
            }
            ScalarFn::RadialPoly(coeffs) => {
                let mut jet = (T::zero(), T::zero(), T::zero());
                // Horner on (U, U′, U″) simultaneously.
                for &a in coeffs.iter().rev() {
                    jet.2 = jet.2 * s + T::lit(2.0) * jet.1;
                    jet.1 = jet.1 * s + jet.0;
                    jet.0 = jet.0 * s + a;
                }
                Some(jet)
            }
            ScalarFn::Polynomial(_) => None,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            ScalarFn::Polynomial(terms) => terms.iter().map(|t| t.coef * monomial(x, &t.exponents)).sum(),
            _ => self.radial_jet(norm_sq(x)).map(|j| j.0).unwrap_or_else(T::nan),
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        match self {
            ScalarFn::Polynomial(terms) => (0..x.len())
                .map(|a| terms.iter().map(|t| t.coef * d_monomial(x, &t.exponents, &[a])).sum())
                .collect(),
            _ => {
                let (_, u1, _) = self.radial_jet(norm_sq(x)).expect("radial function");
                x.iter().map(|&xa| T::lit(2.0) * u1 * xa).collect()
            }
        }
    }

    /// Real Hessian, `2n × 2n` row-major.
    pub fn real_hessian(&self, x: &[T]) -> Vec<T> {
        let m = x.len();
        let mut h = vec![T::zero(); m * m];
        match self {
            ScalarFn::Polynomial(terms) => {
                for a in 0..m {
                    for b in a..m {
                        let v: T = terms.iter().map(|t| t.coef * d_monomial(x, &t.exponents, &[a, b])).sum();
                        h[a * m + b] = v;
                        h[b * m + a] = v;
                    }
                }
            }
            _ => {
                let (_, u1, u2) = self.radial_jet(norm_sq(x)).expect("radial function");
                for a in 0..m {
                    for b in 0..m {
                        let mut v = T::lit(4.0) * u2 * x[a] * x[b];
                        if a == b {
                            v += T::lit(2.0) * u1;
                        }
                        h[a * m + b] = v;
                    }
                }
            }
        }
        h
    }
}

fn norm_sq<T: Real>(x: &[T]) -> T {
    x.iter().map(|v| *v * *v).sum()
}

fn monomial<T: Real>(x: &[T], e: &[u32]) -> T {
    x.iter().zip(e).fold(T::one(), |acc, (&xa, &k)| acc * xa.powi(k as i32))
}

/// Partial derivative of `Π x_a^{e_a}` along the listed axes (with repetition).
fn d_monomial<T: Real>(x: &[T], e: &[u32], axes: &[usize]) -> T {
    let mut exps: Vec<i64> = e.iter().map(|&k| k as i64).collect();
    let mut factor = T::one();
    for &a in axes {
        if exps[a] <= 0 {
            return T::zero();
        }
        factor *= T::from_i64(exps[a]).unwrap_or_else(T::zero);
        exps[a] -= 1;
    }
    factor * x.iter().zip(&exps).fold(T::one(), |acc, (&xa, &k)| acc * xa.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_jets() {
        let f = ScalarFn::RadialPower { power: 2, scale: 1.0 };
        assert_eq!(f.radial_jet(3.0), Some((4.5, 3.0, 1.0)));
        let g = ScalarFn::RadialPoly(vec![1.0, 2.0, 0.5]);
        assert_eq!(g.radial_jet(2.0), Some((1.0 + 4.0 + 2.0, 2.0 + 2.0, 1.0)));
        assert_eq!(ScalarFn::Quadratic(2.0).radial_jet(1.5), Some((3.0, 2.0, 0.0)));
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences() {
        let f = ScalarFn::Polynomial(vec![
            Monomial { coef: 0.5, exponents: vec![2, 1, 0, 3] },
            Monomial { coef: -1.0, exponents: vec![0, 0, 1, 1] },
        ]);
        let x = [0.3f64, -0.7, 1.1, 0.4];
        let h = 1e-4;
        let hess = f.real_hessian(&x);
        let grad = f.gradient(&x);
        for a in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            assert!((fd - grad[a]).abs() < 1e-7);
            for b in 0..4 {
                let gp = f.gradient(&xp)[b];
                let gm = f.gradient(&xm)[b];
                assert!(((gp - gm) / (2.0 * h) - hess[a * 4 + b]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn radial_hessian_in_coordinates() {
        let f = ScalarFn::RadialPower { power: 2, scale: 1.0 };
        let x = [0.5, 0.1, -0.3, 0.2];
        let h = f.real_hessian(&x);
        let s: f64 = x.iter().map(|v| v * v).sum();
        assert!((h[0] - (4.0 * 0.25 + 2.0 * s)).abs() < 1e-14);
        assert!((h[1] - 4.0 * 0.05).abs() < 1e-14);
        assert!((f.value(&x) - s * s / 2.0).abs() < 1e-15);
    }
}
