//! Small dense complex Hermitian linear algebra.
//!
//! Matrices are stored row-major. Entry `(k, j)` of a matrix housing a
//! (1,1)-form holds the coefficient `g_{k̄ j}`; for a complex Hessian this is
//! `∂_j ∂_k̄ u`. Eigenvalues do not depend on that convention, but the
//! linearization pairing `Σ C[p][q] h[q][p]` does (see [`crate::operator`]).

use std::ops::{Add, Index, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::{Complex, Real};

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 6;

const MAX_SWEEPS: usize = 64;

/// Dense square complex matrix with no structural assumption.
///
/// Used for eigenvector frames, unitary changes of basis and congruences.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.n + c] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |r, c| self.get(c, r).conj())
    }

    /// Column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.n).map(|r| self.get(r, c)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        CMatrix::from_fn(n, |r, c| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + self.get(r, k) * rhs.get(k, c))
        })
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        CMatrix::from_fn(self.n, |r, c| self.get(r, c) - rhs.get(r, c))
    }
}

/// An `n × n` complex Hermitian matrix, `1 ≤ n ≤ 6`.
///
/// Construction symmetrizes the input to `(A + A*)/2` after checking that the
/// asymmetry is within `1e-14` relative to the largest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Builds from row-major entries, rejecting asymmetric input.
    pub fn new(n: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        check_dim(n)?;
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch { expected: n * n, found: entries.len() });
        }
        let scale = entries.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        let rel = T::lit(1e-14).max(T::epsilon() * T::lit(8.0));
        let tolerance = rel * scale;
        let mut asymmetry = T::zero();
        for r in 0..n {
            for c in r..n {
                let d = (entries[r * n + c] - entries[c * n + r].conj()).norm();
                asymmetry = asymmetry.max(d);
            }
        }
        if !(asymmetry <= tolerance) {
            return Err(Error::NotHermitian { asymmetry: asymmetry.as_f64(), tolerance: tolerance.as_f64() });
        }
        Ok(Self::symmetrized(n, entries))
    }

    /// Builds from entries that are Hermitian by construction (e.g. symmetric
    /// stencils), still averaging with the adjoint.
    pub(crate) fn symmetrized(n: usize, mut data: Vec<Complex<T>>) -> Self {
        let half = T::lit(0.5);
        for r in 0..n {
            data[r * n + r] = Complex::new(data[r * n + r].re, T::zero());
            for c in (r + 1)..n {
                let avg = (data[r * n + c] + data[c * n + r].conj()) * half;
                data[r * n + c] = avg;
                data[c * n + r] = avg.conj();
            }
        }
        Self { n, data }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Result<Self> {
        let m = CMatrix::from_fn(n, f);
        Self::new(n, m.data)
    }

    /// Real symmetric matrix from row-major reals.
    pub fn from_real(n: usize, entries: &[T]) -> Result<Self> {
        Self::new(n, entries.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn from_diagonal(diag: &[T]) -> Result<Self> {
        let n = diag.len();
        check_dim(n)?;
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = Complex::new(d, T::zero());
        }
        Ok(Self { n, data })
    }

    pub fn scaled_identity(n: usize, c: T) -> Result<Self> {
        Self::from_diagonal(&vec![c; n])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::scaled_identity(n, T::one())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::scaled_identity(n, T::zero())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.n + c]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn as_cmatrix(&self) -> CMatrix<T> {
        CMatrix { n: self.n, data: self.data.clone() }
    }

    /// `C* A C`, Hermitian for any square `C`.
    pub fn congruence(&self, c: &CMatrix<T>) -> Self {
        let prod = &(&c.adjoint() * &self.as_cmatrix()) * c;
        Self::symmetrized(self.n, prod.data)
    }

    /// Principal submatrix with row and column `omit` removed.
    pub fn principal_submatrix(&self, omit: usize) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != omit).collect();
        let m = keep.len();
        check_dim(m)?;
        let mut data = Vec::with_capacity(m * m);
        for &r in &keep {
            for &c in &keep {
                data.push(self.get(r, c));
            }
        }
        Ok(Self { n: m, data })
    }

    /// `Σ_{p,q} self[p][q] · h[q][p]`, the real pairing `tr(self · h)`.
    pub fn pair(&self, h: &HermitianMatrix<T>) -> T {
        let n = self.n;
        let mut acc = T::zero();
        for p in 0..n {
            for q in 0..n {
                acc += (self.get(p, q) * h.get(q, p)).re;
            }
        }
        acc
    }
}

impl<T: Real> Index<(usize, usize)> for HermitianMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.n + c]
    }
}

impl<T: Real> Add for &HermitianMatrix<T> {
    type Output = HermitianMatrix<T>;

    fn add(self, rhs: &HermitianMatrix<T>) -> HermitianMatrix<T> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        HermitianMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &HermitianMatrix<T> {
    type Output = HermitianMatrix<T>;

    fn sub(self, rhs: &HermitianMatrix<T>) -> HermitianMatrix<T> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        HermitianMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange(n))
    }
}

/// Real eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    values: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    /// Sorts the given values ascending.
    pub fn from_unsorted(mut values: Vec<T>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()), "non-finite eigenvalue");
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }
}

impl<T> std::ops::Deref for Spectrum<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.values
    }
}

/// Eigen-decomposition `A = Q Λ Q*` with columns of `vectors` matching the
/// ascending `values`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    pub values: Spectrum<T>,
    pub vectors: CMatrix<T>,
}

/// Eigenvalues of a Hermitian matrix, ascending, with multiplicity.
pub fn herm_eigen<T: Real>(a: &HermitianMatrix<T>) -> Spectrum<T> {
    jacobi(a, false).values
}

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix.
pub fn herm_eigh<T: Real>(a: &HermitianMatrix<T>) -> EigenDecomposition<T> {
    jacobi(a, true)
}

/// Cyclic complex Jacobi. Each rotation is a unitary `J = U·P` where `U`
/// removes the phase of the pivot and `P` is the classical real rotation.
fn jacobi<T: Real>(a: &HermitianMatrix<T>, want_vectors: bool) -> EigenDecomposition<T> {
    let n = a.n;
    let mut m = a.as_cmatrix();
    let mut v = CMatrix::identity(n);
    let zero = Complex::new(T::zero(), T::zero());
    let scale = a.frobenius_norm();
    let target = (T::epsilon() * scale) * (T::epsilon() * scale);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off <= target || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let c = m.get(p, q);
                let r = c.norm();
                if r == T::zero() {
                    continue;
                }
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // Skip pivots that are negligible next to both diagonals.
                let tiny = T::epsilon() * T::lit(1e-2);
                if r <= tiny * app.abs() && r <= tiny * aqq.abs() {
                    m.set(p, q, zero);
                    m.set(q, p, zero);
                    continue;
                }
                let phase = c / r;
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = if theta.abs() > T::lit(1e150) {
                    T::lit(0.5) / theta
                } else {
                    let sgn = if theta < T::zero() { -T::one() } else { T::one() };
                    sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                let ph = phase.conj();
                let jpp = Complex::new(cs, T::zero());
                let jpq = Complex::new(sn, T::zero());
                let jqp = ph * (-sn);
                let jqq = ph * cs;

                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, akp * jpp + akq * jqp);
                    m.set(k, q, akp * jpq + akq * jqq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, jpp.conj() * apk + jqp.conj() * aqk);
                    m.set(q, k, jpq.conj() * apk + jqq.conj() * aqk);
                }
                m.set(p, q, zero);
                m.set(q, p, zero);
                m.set(p, p, Complex::new(m.get(p, p).re, T::zero()));
                m.set(q, q, Complex::new(m.get(q, q).re, T::zero()));

                if want_vectors {
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, vkp * jpp + vkq * jqp);
                        v.set(k, q, vkp * jpq + vkq * jqq);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).re.partial_cmp(&m.get(j, j).re).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&i| m.get(i, i).re).collect();
    let vectors = if want_vectors {
        CMatrix::from_fn(n, |r, c| v.get(r, order[c]))
    } else {
        CMatrix::zeros(0)
    };
    EigenDecomposition { values: Spectrum { values }, vectors }
}

/// A positive definite background metric `ω`, pre-factored as `ω = L L*`.
#[derive(Debug, Clone)]
pub struct Metric<T> {
    omega: HermitianMatrix<T>,
    l_inv: CMatrix<T>,
}

impl<T: Real> Metric<T> {
    /// Minimum admissible eigenvalue of `ω`.
    pub const MIN_EIGENVALUE: f64 = 1e-12;

    pub fn new(omega: HermitianMatrix<T>) -> Result<Self> {
        let min = herm_eigen(&omega).min();
        if !(min > T::lit(Self::MIN_EIGENVALUE)) {
            return Err(Error::MetricNotPositive { min_eigenvalue: min.as_f64() });
        }
        let n = omega.dim();
        let mut l = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = omega.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(Error::MetricNotPositive { min_eigenvalue: min.as_f64() });
            }
            let ljj = d.sqrt();
            l.set(j, j, Complex::new(ljj, T::zero()));
            for i in (j + 1)..n {
                let mut s = omega.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / ljj);
            }
        }
        // Forward substitution for L^{-1}, column by column.
        let mut l_inv = CMatrix::zeros(n);
        for c in 0..n {
            for r in c..n {
                let mut s = if r == c { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) };
                for k in c..r {
                    s -= l.get(r, k) * l_inv.get(k, c);
                }
                l_inv.set(r, c, s / l.get(r, r));
            }
        }
        Ok(Self { omega, l_inv })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(HermitianMatrix::identity(n)?)
    }

    pub fn omega(&self) -> &HermitianMatrix<T> {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// `L^{-1} g L^{-*}`: Hermitian, with the eigenvalues of `ω^{-1} g`.
    pub fn reduce(&self, g: &HermitianMatrix<T>) -> HermitianMatrix<T> {
        g.congruence(&self.l_inv.adjoint())
    }

    pub fn endomorphism_eigen(&self, g: &HermitianMatrix<T>) -> Spectrum<T> {
        herm_eigen(&self.reduce(g))
    }

    /// Eigenvalues of `ω^{-1} g` with `ω`-orthonormal generalized eigenvectors
    /// `X` (`g X = ω X Λ`, `X* ω X = I`).
    pub fn endomorphism_eigh(&self, g: &HermitianMatrix<T>) -> EigenDecomposition<T> {
        let dec = herm_eigh(&self.reduce(g));
        let vectors = &self.l_inv.adjoint() * &dec.vectors;
        EigenDecomposition { values: dec.values, vectors }
    }

    /// `Σ ω^{j k̄} g_{k̄ j}`.
    pub fn trace(&self, g: &HermitianMatrix<T>) -> T {
        self.reduce(g).trace()
    }

    /// `ω^{-1}` as a Hermitian matrix.
    pub fn inverse(&self) -> HermitianMatrix<T> {
        let m = &self.l_inv.adjoint() * &self.l_inv;
        HermitianMatrix::symmetrized(self.omega.dim(), m.data)
    }
}

/// Eigenvalues of the endomorphism `ω^{-1} g`, via congruence reduction.
pub fn metric_endomorphism_eigen<T: Real>(omega: &HermitianMatrix<T>, g: &HermitianMatrix<T>) -> Result<Spectrum<T>> {
    Ok(Metric::new(omega.clone())?.endomorphism_eigen(g))
}

/// `tr_ω g`.
pub fn trace_with_metric<T: Real>(omega: &HermitianMatrix<T>, g: &HermitianMatrix<T>) -> Result<T> {
    Ok(Metric::new(omega.clone())?.trace(g))
}

/// Groups ascending values into clusters whose consecutive gaps are below `gap`.
pub fn clusters<T: Real>(values: &[T], gap: T) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
        let mut raw = vec![c(0.0, 0.0); n * n];
        for r in 0..n {
            raw[r * n + r] = c(rng.gen_range(-3.0..3.0), 0.0);
            for col in (r + 1)..n {
                let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                raw[r * n + col] = z;
                raw[col * n + r] = z.conj();
            }
        }
        HermitianMatrix::new(n, raw).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    /// Roots of the characteristic polynomial of a real symmetric 3×3 by
    /// bisection on sign changes; independent of the Jacobi path.
    fn charpoly_roots_3x3(m: [[f64; 3]; 3]) -> Vec<f64> {
        let det = |l: f64| {
            let a = [
                [m[0][0] - l, m[0][1], m[0][2]],
                [m[1][0], m[1][1] - l, m[1][2]],
                [m[2][0], m[2][1], m[2][2] - l],
            ];
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let mut roots = Vec::new();
        let steps = 20000;
        let (lo, hi) = (-10.0, 10.0);
        let h = (hi - lo) / steps as f64;
        for k in 0..steps {
            let (mut a, mut b) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
            if det(a) == 0.0 {
                roots.push(a);
                continue;
            }
            if det(a).signum() != det(b).signum() {
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if det(a).signum() == det(mid).signum() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        roots
    }

    #[test]
    fn identity_and_diagonal_spectra() {
        let i3 = HermitianMatrix::<f64>::identity(3).unwrap();
        assert_close(herm_eigen(&i3).values(), &[1.0, 1.0, 1.0], 1e-15);
        let d = HermitianMatrix::from_diagonal(&[3.0, 1.0, -1.0]).unwrap();
        assert_close(herm_eigen(&d).values(), &[-1.0, 1.0, 3.0], 1e-15);
    }

    #[test]
    fn three_by_three_block_matches_charpoly() {
        let g = HermitianMatrix::from_real(3, &[2.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0]).unwrap();
        let s5 = 5f64.sqrt();
        let expected = [1.0, (5.0 - s5) / 2.0, (5.0 + s5) / 2.0];
        assert_close(herm_eigen(&g).values(), &expected, 1e-13);
        let roots = charpoly_roots_3x3([[2.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 3.0]]);
        assert_close(&roots, &expected, 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_bad_dims() {
        let bad = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(2.0, 0.0)]);
        assert!(matches!(bad, Err(Error::NotHermitian { .. })));
        assert!(matches!(HermitianMatrix::<f64>::identity(7), Err(Error::DimensionOutOfRange(7))));
        assert!(matches!(HermitianMatrix::<f64>::identity(0), Err(Error::DimensionOutOfRange(0))));
    }

    #[test]
    fn construction_symmetrizes_rounding_noise() {
        let h = HermitianMatrix::new(2, vec![c(1.0, 1e-17), c(0.5, 0.25), c(0.5, -0.25 + 1e-16), c(2.0, 0.0)]).unwrap();
        assert_eq!(h.get(0, 0).im, 0.0);
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
    }

    #[test]
    fn backward_error_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..50 {
                let a = random_hermitian(&mut rng, n);
                let dec = herm_eigh(&a);
                let lam = CMatrix::from_fn(n, |r, col| if r == col { c(dec.values[r], 0.0) } else { c(0.0, 0.0) });
                let recon = &(&dec.vectors * &lam) * &dec.vectors.adjoint();
                let err = (&a.as_cmatrix() - &recon).max_abs();
                assert!(err <= 1e-12 * a.max_abs().max(1e-300) * n as f64, "backward error {err}");
                let tr = a.trace();
                assert!((dec.values.sum() - tr).abs() <= 1e-11 * tr.abs().max(a.frobenius_norm()));
                let orth = &dec.vectors.adjoint() * &dec.vectors;
                assert!((&orth - &CMatrix::identity(n)).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn metric_examples() {
        let g = HermitianMatrix::from_diagonal(&[2.0, 1.0, 0.0]).unwrap();
        let i3 = HermitianMatrix::identity(3).unwrap();
        assert_close(metric_endomorphism_eigen(&i3, &g).unwrap().values(), &[0.0, 1.0, 2.0], 1e-15);
        let two = HermitianMatrix::scaled_identity(3, 2.0).unwrap();
        assert_close(metric_endomorphism_eigen(&two, &g).unwrap().values(), &[0.0, 0.5, 1.0], 1e-15);
        let w = HermitianMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let g2 = HermitianMatrix::from_diagonal(&[3.0, 8.0]).unwrap();
        assert_close(metric_endomorphism_eigen(&w, &g2).unwrap().values(), &[2.0, 3.0], 1e-15);

        assert!((trace_with_metric(&i3, &g).unwrap() - 3.0).abs() < 1e-15);
        let g3 = HermitianMatrix::from_real(3, &[2.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0]).unwrap();
        assert!((trace_with_metric(&i3, &g3).unwrap() - 6.0).abs() < 1e-15);
        assert!((trace_with_metric(&w, &g2).unwrap() - 5.0).abs() < 1e-15);

        let indefinite = HermitianMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(Metric::new(indefinite), Err(Error::MetricNotPositive { .. })));
    }

    #[test]
    fn generalized_vectors_are_omega_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=5 {
            let b = random_hermitian(&mut rng, n);
            let omega = &HermitianMatrix::identity(n).unwrap().congruence(&b.as_cmatrix()) + &HermitianMatrix::identity(n).unwrap();
            let g = random_hermitian(&mut rng, n);
            let metric = Metric::new(omega.clone()).unwrap();
            let dec = metric.endomorphism_eigh(&g);
            let gram = &(&dec.vectors.adjoint() * &omega.as_cmatrix()) * &dec.vectors;
            assert!((&gram - &CMatrix::identity(n)).max_abs() < 1e-11);
            for (i, lam) in dec.values.iter().enumerate() {
                let x = dec.vectors.column(i);
                for r in 0..n {
                    let gx: Complex<f64> = (0..n).map(|k| g.get(r, k) * x[k]).sum();
                    let wx: Complex<f64> = (0..n).map(|k| omega.get(r, k) * x[k]).sum();
                    assert!((gx - wx * lam).norm() < 1e-10);
                }
            }
            let inv = metric.inverse();
            let should_be_id = &inv.as_cmatrix() * &omega.as_cmatrix();
            assert!((&should_be_id - &CMatrix::identity(n)).max_abs() < 1e-11);
        }
    }

    #[test]
    fn clusters_split_on_gaps() {
        let v = [1.0, 1.0 + 1e-10, 2.0, 3.0, 3.0];
        assert_eq!(clusters(&v, 1e-8), vec![0..2, 2..3, 3..5]);
    }

    #[test]
    fn single_precision_instantiation() {
        let g = HermitianMatrix::<f32>::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let s = herm_eigen(&g);
        assert!((s[0] - 1.0).abs() < 1e-5 && (s[1] - 3.0).abs() < 1e-5);
    }
}
