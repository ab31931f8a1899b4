//! The subset-sum product operator, its concave normalization and first
//! derivatives.
//!
//! For an eigenvalue vector `λ ∈ R^n` and exponent `p`, the operator is the
//! product over all `p`-element index subsets `S` of `σ_S = Σ_{i∈S} λ_i`.
//! The normalized operator `f̃ = F^{1/C(n,p)}` is evaluated as the geometric
//! mean of the subset sums and is concave and one-homogeneous on the cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hermitian::{clusters, HermitianMatrix, Metric, Spectrum, MAX_DIM};
use crate::scalar::{Complex, Real};

/// Subset sums below this are treated as the cone boundary.
pub const BOUNDARY_FLOOR: f64 = 1e-300;

/// Relative eigenvalue gap below which eigenvalues share one cluster when
/// building the linearization.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Dimension `n`, exponent `p`, and the `p`-subsets in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorParams {
    n: usize,
    p: usize,
    subsets: Vec<Vec<usize>>,
}

impl OperatorParams {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) || p == 0 || p > n {
            return Err(Error::InvalidParams { n, p });
        }
        Ok(Self { n, p, subsets: lex_subsets(n, p) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `C(n, p)`.
    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }

    /// Index subsets, lexicographic: `{0,1}, {0,2}, {1,2}` for `n = 3, p = 2`.
    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// The operator is linear (the trace) when `p = n`.
    pub fn is_linear(&self) -> bool {
        self.p == self.n
    }
}

fn lex_subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        out.push(idx.clone());
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - p + i {
                break;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn check_len<T>(lambda: &[T], params: &OperatorParams) -> Result<()> {
    if lambda.len() != params.n {
        return Err(Error::ShapeMismatch { expected: params.n, found: lambda.len() });
    }
    Ok(())
}

/// All `p`-subset sums in lexicographic subset order.
pub fn subset_sums<T: Real>(lambda: &[T], params: &OperatorParams) -> Vec<T> {
    assert_eq!(lambda.len(), params.n, "eigenvalue vector length must equal n");
    params.subsets.iter().map(|s| s.iter().map(|&i| lambda[i]).sum()).collect()
}

/// `M_p^n(λ) = Π_S σ_S`.
///
/// Uses a log-space product when every factor is positive; returns exactly 0
/// when some factor vanishes; otherwise the plain signed product.
pub fn eval_m<T: Real>(lambda: &[T], params: &OperatorParams) -> T {
    let sums = subset_sums(lambda, params);
    if sums.iter().all(|&s| s > T::zero()) {
        sums.iter().map(|s| s.ln()).sum::<T>().exp()
    } else if sums.iter().any(|&s| s == T::zero()) {
        T::zero()
    } else {
        sums.iter().fold(T::one(), |acc, &s| acc * s)
    }
}

/// `f̃(λ) = M_p^n(λ)^{1/C(n,p)}`, the geometric mean of the subset sums.
pub fn eval_ftilde<T: Real>(lambda: &[T], params: &OperatorParams) -> Result<T> {
    check_len(lambda, params)?;
    let sums = subset_sums(lambda, params);
    let min = min_of(&sums);
    if !(min > T::zero()) {
        return Err(Error::OutsideCone { min_subset_sum: min.as_f64() });
    }
    if min < T::lit(BOUNDARY_FLOOR) {
        return Ok(T::zero());
    }
    Ok(geometric_mean(&sums))
}

fn min_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::infinity(), T::min)
}

fn geometric_mean<T: Real>(sums: &[T]) -> T {
    if let [single] = sums {
        return *single;
    }
    let count = T::from_usize_lossy(sums.len());
    (sums.iter().map(|s| s.ln()).sum::<T>() / count).exp()
}

/// `f̃(λ)` together with `f_k = ∂f̃/∂λ_k = (f̃/C) Σ_{S∋k} 1/σ_S`.
///
/// `λ` need not be sorted; the result is indexed like the input.
pub fn value_and_grad<T: Real>(lambda: &[T], params: &OperatorParams) -> Result<(T, Vec<T>)> {
    check_len(lambda, params)?;
    let sums = subset_sums(lambda, params);
    let min = min_of(&sums);
    if !(min >= T::lit(BOUNDARY_FLOOR)) {
        return Err(Error::OutsideCone { min_subset_sum: min.as_f64() });
    }
    let f = geometric_mean(&sums);
    let weight = f / T::from_usize_lossy(params.subset_count());
    if params.is_linear() {
        return Ok((f, vec![T::one(); params.n]));
    }
    let mut grad = vec![T::zero(); params.n];
    for (subset, &s) in params.subsets.iter().zip(&sums) {
        let inv = weight / s;
        for &i in subset {
            grad[i] += inv;
        }
    }
    Ok((f, grad))
}

pub fn grad_ftilde<T: Real>(lambda: &[T], params: &OperatorParams) -> Result<Vec<T>> {
    value_and_grad(lambda, params).map(|(_, g)| g)
}

/// Coefficients `F̃^{p q̄}` of the linearized operator `h ↦ Σ F̃^{p q̄} h_{q̄ p}`.
#[derive(Debug, Clone)]
pub struct LinearizationCoeffs<T> {
    /// Stored so that `matrix.pair(h)` is the directional derivative of `f̃∘λ`.
    pub matrix: HermitianMatrix<T>,
    /// `𝓕 = Σ f_i`.
    pub trace_f: T,
    pub ftilde: T,
    pub spectrum: Spectrum<T>,
}

/// Linearization of `g ↦ f̃(λ(ω^{-1} g))` at `g`.
pub fn linearization_coeffs<T: Real>(
    omega: &HermitianMatrix<T>,
    g: &HermitianMatrix<T>,
    params: &OperatorParams,
) -> Result<LinearizationCoeffs<T>> {
    let metric = Metric::new(omega.clone())?;
    linearize(&metric, g, params)
}

/// As [`linearization_coeffs`] with a pre-factored metric.
///
/// In an `ω`-orthonormal eigenframe `X` of `ω^{-1} g` the coefficients are
/// `diag(f_k)`; in the ambient frame `X diag(f) X*`. Near-degenerate
/// eigenvalue clusters share their mean `f`, which makes the result
/// independent of the basis chosen inside a cluster.
pub fn linearize<T: Real>(
    metric: &Metric<T>,
    g: &HermitianMatrix<T>,
    params: &OperatorParams,
) -> Result<LinearizationCoeffs<T>> {
    let dec = metric.endomorphism_eigh(g);
    let (ftilde, mut f) = value_and_grad(dec.values.values(), params)?;
    let scale = dec.values.min().abs().max(dec.values.max().abs());
    for range in clusters(dec.values.values(), T::lit(CLUSTER_GAP) * scale) {
        if range.len() > 1 {
            let mean = f[range.clone()].iter().copied().sum::<T>() / T::from_usize_lossy(range.len());
            f[range].iter_mut().for_each(|v| *v = mean);
        }
    }
    let n = g.dim();
    let x = &dec.vectors;
    let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &fk) in f.iter().enumerate() {
                acc += x.get(r, k) * x.get(c, k).conj() * fk;
            }
            data[r * n + c] = acc;
        }
    }
    let trace_f = f.iter().copied().sum();
    Ok(LinearizationCoeffs { matrix: HermitianMatrix::symmetrized(n, data), trace_f, ftilde, spectrum: dec.values })
}

/// Entrywise tolerance for the tangential off-diagonal block of an arrow-form matrix.
pub const ARROW_TOLERANCE: f64 = 1e-12;

/// Expansion of `M_{n-1}` for a matrix whose leading `(n-1)×(n-1)` block is
/// diagonal (unit metric).
///
/// Returns `(Π_i (tr g − g_{īi}), Σ_{i<n} |g_{n̄ i}|² Π_{β≠i, β<n} (tr g − g_{β̄β}))`;
/// their difference equals `Π_i (tr g − λ_i(g))`.
pub fn arrow_form_value<T: Real>(g: &HermitianMatrix<T>) -> Result<(T, T)> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::DimensionOutOfRange(n));
    }
    let m = n - 1;
    let mut worst = T::zero();
    for r in 0..m {
        for c in 0..m {
            if r != c {
                worst = worst.max(g.get(r, c).norm());
            }
        }
    }
    if worst > T::lit(ARROW_TOLERANCE) {
        return Err(Error::NotArrowForm { magnitude: worst.as_f64() });
    }
    let tr = g.trace();
    let reduced: Vec<T> = (0..n).map(|i| tr - g.get(i, i).re).collect();
    let lhs = reduced.iter().fold(T::one(), |acc, &x| acc * x);
    let mut correction = T::zero();
    for i in 0..m {
        let others = (0..m).filter(|&b| b != i).fold(T::one(), |acc, b| acc * reduced[b]);
        correction += g.get(n - 1, i).norm_sqr() * others;
    }
    Ok((lhs, correction))
}

/// Structure properties checked by [`structure_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    /// f̃ > 0 in the cone and f̃ → 0 along rays to the boundary.
    Positivity,
    /// Every f_k > 0.
    GradientPositivity,
    /// Midpoint concavity.
    Concavity,
    /// f̃(tλ) = t f̃(λ).
    Homogeneity,
    /// Σ f_k ≥ f̃(1,…,1) = p.
    TraceLowerBound,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::Positivity,
        Property::GradientPositivity,
        Property::Concavity,
        Property::Homogeneity,
        Property::TraceLowerBound,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Property::Positivity => "f1_positivity",
            Property::GradientPositivity => "f2_gradient_positivity",
            Property::Concavity => "f3_concavity",
            Property::Homogeneity => "f4_homogeneity",
            Property::TraceLowerBound => "f5_trace_lower_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub property: Property,
    pub witness: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn count(&self, property: Property) -> usize {
        self.violations.iter().filter(|v| v.property == property).count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const CONCAVITY_SLACK: f64 = 1e-12;
pub const HOMOGENEITY_RTOL: f64 = 1e-12;
pub const TRACE_SLACK: f64 = 1e-10;

/// Random point strictly inside the cone: a Gaussian-like draw shifted along
/// `(1,…,1)` until its margin is positive. The shift size is log-uniform so
/// both deep and near-boundary points occur.
pub fn sample_cone_point<R: Rng>(rng: &mut R, params: &OperatorParams) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    let mut lam: Vec<f64> = (0..params.n).map(|_| scale * rng.gen_range(-2.0..2.0)).collect();
    let margin = cone_margin_f64(&lam, params.p);
    let depth = scale * 10f64.powf(rng.gen_range(-4.0..0.5));
    let shift = (depth - margin) / params.p as f64;
    if shift > 0.0 {
        lam.iter_mut().for_each(|x| *x += shift);
    }
    lam
}

fn cone_margin_f64(lam: &[f64], p: usize) -> f64 {
    let mut s = lam.to_vec();
    s.sort_by(f64::total_cmp);
    s[..p].iter().sum()
}

/// Randomized check of positivity, gradient positivity, concavity,
/// homogeneity and the trace lower bound. Any violation is recorded with its
/// witness point.
pub fn structure_check(params: &OperatorParams, trials: usize, seed: u64) -> StructureReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let p = params.p as f64;
    let count = params.subset_count() as f64;
    let mut record = |property: Property, witness: &[f64], detail: String| {
        violations.push(Violation { property, witness: witness.to_vec(), detail });
    };

    for _ in 0..trials {
        let lam = sample_cone_point(&mut rng, params);
        let (f, grad) = match value_and_grad(&lam, params) {
            Ok(v) => v,
            Err(e) => {
                record(Property::Positivity, &lam, format!("evaluation failed: {e}"));
                continue;
            }
        };

        if !(f > 0.0) {
            record(Property::Positivity, &lam, format!("f = {f:e}"));
        }
        // Along λ(t) = (1−t)λ + tλ_bd with λ_bd = λ − (margin/p)·1 every subset
        // sum drops by (1−t)·margin, so the smallest one equals 2^{-k}·margin at
        // t = 1 − 2^{-k}; f̃(t_60)/f̃(t_10) ≤ 2^{-50/C}.
        let sums = subset_sums(&lam, params);
        let margin = min_of(&sums);
        let along = |k: i32| -> f64 {
            let w = 2f64.powi(-k);
            geometric_mean(&sums.iter().map(|s| (s - margin) + w * margin).collect::<Vec<_>>())
        };
        let (f10, f60) = (along(10), along(60));
        let bound = f10 * 2f64.powf(-50.0 / count) * (1.0 + 1e-9);
        if !(f60 > 0.0 && f60 <= bound) {
            record(Property::Positivity, &lam, format!("no decay to the boundary: f(t10) = {f10:e}, f(t60) = {f60:e}"));
        }

        if let Some((k, gk)) = grad.iter().enumerate().find(|(_, g)| !(**g > 0.0)) {
            record(Property::GradientPositivity, &lam, format!("f_{k} = {gk:e}"));
        }

        let mu = sample_cone_point(&mut rng, params);
        let mid: Vec<f64> = lam.iter().zip(&mu).map(|(a, b)| 0.5 * (a + b)).collect();
        if let (Ok(fm), Ok(fmu)) = (eval_ftilde(&mid, params), eval_ftilde(&mu, params)) {
            if fm < 0.5 * (f + fmu) - CONCAVITY_SLACK {
                let mut w = lam.clone();
                w.extend_from_slice(&mu);
                record(Property::Concavity, &w, format!("f(mid) = {fm:e} < {:e}", 0.5 * (f + fmu)));
            }
        } else {
            record(Property::Concavity, &mid, "midpoint left the cone".to_string());
        }

        let t = 2f64.powi(rng.gen_range(-20..=20));
        let scaled: Vec<f64> = lam.iter().map(|x| t * x).collect();
        match eval_ftilde(&scaled, params) {
            Ok(ft) if (ft - t * f).abs() <= HOMOGENEITY_RTOL * (t * f).abs() => {}
            other => record(Property::Homogeneity, &lam, format!("t = {t}, f(tλ) = {other:?}, t f(λ) = {:e}", t * f)),
        }

        let trace: f64 = grad.iter().sum();
        if trace < p - TRACE_SLACK {
            record(Property::TraceLowerBound, &lam, format!("Σ f_k = {trace:e} < p = {p}"));
        }
    }
    StructureReport { n: params.n, p: params.p, trials, seed, violations }
}

/// Result of the empirical Guan-inequality monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct GuanReport {
    pub epsilon: f64,
    /// Constant fitted on the first sample.
    pub fitted_c: f64,
    /// Largest constant required on the second, disjoint sample.
    pub holdout_c: f64,
}

impl GuanReport {
    pub fn holdout_ratio(&self) -> f64 {
        if self.fitted_c > 0.0 {
            self.holdout_c / self.fitted_c
        } else if self.holdout_c <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Empirical constant for `Σ f_i|λ_i| ≤ ε Σ_{i≠r} f_i λ_i² + (C/ε) Σ f_i + C`
/// on the level set `f̃ = 1`, with `r` the index of the largest eigenvalue.
/// The constant is fitted on one sample and re-measured on a disjoint one.
pub fn guan_monitor(params: &OperatorParams, samples: usize, epsilon: f64, seed: u64) -> GuanReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let required = |rng: &mut ChaCha8Rng| -> f64 {
        let raw = sample_cone_point(rng, params);
        let f = eval_ftilde(&raw, params).expect("sampled point lies in the cone");
        let lam: Vec<f64> = raw.iter().map(|x| x / f).collect();
        let grad = grad_ftilde(&lam, params).expect("sampled point lies in the cone");
        let r = (0..lam.len()).max_by(|&a, &b| lam[a].total_cmp(&lam[b])).unwrap_or(0);
        let lhs: f64 = grad.iter().zip(&lam).map(|(g, l)| g * l.abs()).sum();
        let quad: f64 = (0..lam.len()).filter(|&i| i != r).map(|i| grad[i] * lam[i] * lam[i]).sum();
        let trace: f64 = grad.iter().sum();
        ((lhs - epsilon * quad) / (trace / epsilon + 1.0)).max(0.0)
    };
    let fitted_c = (0..samples).map(|_| required(&mut rng)).fold(0.0, f64::max);
    let holdout_c = (0..samples).map(|_| required(&mut rng)).fold(0.0, f64::max);
    GuanReport { epsilon, fitted_c, holdout_c }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_m(l: &[f64], q: &OperatorParams) -> f64 {
        super::eval_m(l, q)
    }

    fn eval_ftilde(l: &[f64], q: &OperatorParams) -> Result<f64> {
        super::eval_ftilde(l, q)
    }

    fn grad_ftilde(l: &[f64], q: &OperatorParams) -> Result<Vec<f64>> {
        super::grad_ftilde(l, q)
    }

    fn subset_sums(l: &[f64], q: &OperatorParams) -> Vec<f64> {
        super::subset_sums(l, q)
    }

    fn p(n: usize, p: usize) -> OperatorParams {
        OperatorParams::new(n, p).unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(p(3, 2).subsets(), &[vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(p(5, 2).subset_count(), 10);
        assert_eq!(p(6, 3).subset_count(), binomial(6, 3));
        assert!(OperatorParams::new(3, 4).is_err());
        assert!(OperatorParams::new(3, 0).is_err());
    }

    #[test]
    fn subset_sum_examples() {
        let q = p(3, 2);
        assert_eq!(subset_sums(&[1.0, 1.0, 1.0], &q), vec![2.0, 2.0, 2.0]);
        assert_eq!(subset_sums(&[0.0, 1.0, 2.0], &q), vec![1.0, 2.0, 3.0]);
        assert_eq!(subset_sums(&[-1.0, 1.0, 3.0], &q), vec![0.0, 2.0, 4.0]);
    }

    #[test]
    fn eval_m_examples() {
        let q = p(3, 2);
        assert!((eval_m(&[1.0, 1.0, 1.0], &q) - 8.0).abs() < 1e-14);
        assert!((eval_m(&[0.0, 1.0, 2.0], &q) - 6.0).abs() < 1e-14);
        assert_eq!(eval_m(&[-1.0, 1.0, 3.0], &q), 0.0);
        assert!((eval_m(&[-2.0, 1.0, 0.5], &q) - (-1.0 * -1.5 * 1.5)).abs() < 1e-14);
        let det = p(2, 1);
        assert!((eval_m(&[3.0, 0.5], &det) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn ftilde_examples() {
        let q = p(3, 2);
        assert!((eval_ftilde(&[1.0, 1.0, 1.0], &q).unwrap() - 2.0).abs() < 1e-14);
        assert!((eval_ftilde(&[0.5, 0.5, 0.5], &q).unwrap() - 1.0).abs() < 1e-14);
        let near = eval_ftilde(&[1e-9, 1.0, 2.0], &q).unwrap();
        let direct = ((1.0 + 1e-9) * (2.0 + 1e-9) * 3.0f64).powf(1.0 / 3.0);
        assert!((near - direct).abs() < 1e-14);
        assert!((near - 1.817121).abs() < 1e-6);
        assert!(matches!(eval_ftilde(&[-1.0, 1.0, 3.0], &q), Err(Error::OutsideCone { .. })));
        assert_eq!(eval_ftilde(&[1e-310, 0.0, 3.0], &q).unwrap(), 0.0);
        assert!(grad_ftilde(&[1e-310, 0.0, 3.0], &q).is_err());
    }

    #[test]
    fn linear_end_point_is_the_trace() {
        let q = p(4, 4);
        let lam = [0.3, -0.1, 2.0, 1.5];
        assert!((eval_ftilde(&lam, &q).unwrap() - 3.7).abs() < 1e-14);
        assert_eq!(grad_ftilde(&lam, &q).unwrap(), vec![1.0; 4]);
    }

    fn central_difference(lam: &[f64], q: &OperatorParams, k: usize, h: f64) -> f64 {
        let mut a = lam.to_vec();
        let mut b = lam.to_vec();
        a[k] += h;
        b[k] -= h;
        (eval_ftilde(&a, q).unwrap() - eval_ftilde(&b, q).unwrap()) / (2.0 * h)
    }

    #[test]
    fn gradient_examples_match_finite_differences() {
        let q = p(3, 2);
        let g = grad_ftilde(&[1.0, 1.0, 1.0], &q).unwrap();
        for gk in &g {
            assert!((gk - 2.0 / 3.0).abs() < 1e-14);
        }
        let lam = [0.001, 1.0, 2.0];
        let f = (1.001f64 * 2.001 * 3.0).powf(1.0 / 3.0);
        let expected = [
            f / 3.0 * (1.0 / 1.001 + 1.0 / 2.001),
            f / 3.0 * (1.0 / 1.001 + 1.0 / 3.0),
            f / 3.0 * (1.0 / 2.001 + 1.0 / 3.0),
        ];
        let g = grad_ftilde(&lam, &q).unwrap();
        for k in 0..3 {
            assert!((g[k] - expected[k]).abs() < 1e-13);
            assert!((g[k] - central_difference(&lam, &q, k, 1e-6)).abs() < 1e-8);
        }
        let euler: f64 = g.iter().zip(&lam).map(|(a, b)| a * b).sum();
        assert!((euler - f).abs() < 1e-11 * f);
    }

    #[test]
    fn homogeneity_instance() {
        let q = p(3, 2);
        assert!((eval_ftilde(&[2.0, 2.0, 2.0], &q).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn arrow_form_examples() {
        let g = HermitianMatrix::<f64>::from_real(3, &[2.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0]).unwrap();
        let (lhs, corr) = arrow_form_value(&g).unwrap();
        assert!((lhs - 60.0).abs() < 1e-12);
        assert!((corr - 5.0).abs() < 1e-12);
        let q = p(3, 2);
        let eig = crate::hermitian::herm_eigen(&g);
        let eigen_route = eval_m(eig.values(), &q);
        assert!((lhs - corr - eigen_route).abs() < 1e-10 * 55.0);
        assert!((eigen_route - 55.0).abs() < 1e-10 * 55.0);

        let d = HermitianMatrix::from_diagonal(&[1.0, 2.0, 0.5]).unwrap();
        let (lhs, corr) = arrow_form_value(&d).unwrap();
        assert_eq!(corr, 0.0);
        assert!((lhs - eval_m(&[1.0, 2.0, 0.5], &q)).abs() < 1e-12);

        for t in [0.1f64, 0.5] {
            let g = HermitianMatrix::from_real(3, &[1.0, 0.0, t, 0.0, 1.0, 0.0, t, 0.0, 1.0]).unwrap();
            let (lhs, corr) = arrow_form_value(&g).unwrap();
            assert!((corr - t * t * 2.0).abs() < 1e-14);
            let route = eval_m(crate::hermitian::herm_eigen(&g).values(), &q);
            assert!((lhs - corr - route).abs() < 1e-10 * route.abs());
        }

        let not_arrow = HermitianMatrix::from_real(3, &[1.0, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(arrow_form_value(&not_arrow), Err(Error::NotArrowForm { .. })));
    }

    #[test]
    fn linearization_examples() {
        let q = p(3, 2);
        let i3 = HermitianMatrix::<f64>::identity(3).unwrap();
        let lc = linearization_coeffs(&i3, &i3, &q).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 2.0 / 3.0 } else { 0.0 };
                assert!((lc.matrix.get(r, c).re - want).abs() < 1e-14);
                assert!(lc.matrix.get(r, c).im.abs() < 1e-14);
            }
        }
        assert!((lc.trace_f - 2.0).abs() < 1e-14);

        let d = [1e-6, 1.0 + 1e-6, 2.0 + 1e-6];
        let g = HermitianMatrix::from_diagonal(&d).unwrap();
        let lc = linearization_coeffs(&i3, &g, &q).unwrap();
        let grad = grad_ftilde(&d, &q).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { grad[r] } else { 0.0 };
                assert!((lc.matrix.get(r, c) - Complex::new(want, 0.0)).norm() < 1e-10 * grad[r].max(1.0));
            }
        }
    }

    #[test]
    fn structure_check_small() {
        for (n, k) in [(2, 1), (3, 2), (4, 4), (6, 3)] {
            let report = structure_check(&p(n, k), 500, 3);
            assert!(report.is_clean(), "{:?}", report.violations.first());
        }
    }

    #[test]
    fn guan_monitor_holdout_is_comparable() {
        let report = guan_monitor(&p(3, 2), 2000, 0.5, 9);
        assert!(report.fitted_c.is_finite() && report.fitted_c >= 0.0);
        assert!(report.holdout_ratio() <= 2.0, "{report:?}");
    }
}
