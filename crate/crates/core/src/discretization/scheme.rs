//! Discrete operators shared by the Newton solver: residual evaluation and
//! exact Jacobian rows of `u ↦ f̃(λ(ω^{-1}(χ + i∂∂̄_h u)))` node by node.

use std::sync::Arc;

use rayon::prelude::*;

use super::functions::ScalarFn;
use super::grid::{BoxGrid, ScalarField};
use super::problem::{FnSource, Geometry, ProblemSpec, RhsSource};
use super::radial::{unsorted_radial_eigenvalues, RadialGrid};
use super::stencil::{any_gradient, any_real_hessian, complex_from_real_hessian, interior_real_hessian, real_coefficients, real_row};
use crate::cone::{margin_value, min_pair};
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, Metric, Spectrum};
use crate::operator::{eval_ftilde, eval_m, linearize, value_and_grad, OperatorParams};
use crate::scalar::Real;

/// Per-node linearization of the discrete residual.
#[derive(Debug, Clone)]
pub struct NodeLinearization<T> {
    pub ftilde: T,
    /// `𝓕 = Σ f_i`.
    pub trace_f: T,
    pub margin: T,
    /// Jacobian row of `f̃` at this node over all grid nodes it touches.
    pub row: Vec<(usize, T)>,
}

/// A discretization of the fully nonlinear operator on some grid.
///
/// Nodes are indexed `0..node_count()`; equation nodes carry the PDE, the
/// rest carry Dirichlet data.
pub trait Discretization<T: Real>: Send + Sync {
    fn params(&self) -> &OperatorParams;
    fn node_count(&self) -> usize;
    /// Ascending ids of the nodes carrying the equation.
    fn equation_nodes(&self) -> &[usize];
    fn is_equation_node(&self, node: usize) -> bool;
    /// Eigenvalues of `ω^{-1}(χ + i∂∂̄_h u)` at an equation node.
    fn spectrum(&self, u: &[T], node: usize) -> Spectrum<T>;
    fn linearize(&self, u: &[T], node: usize) -> Result<NodeLinearization<T>>;
    /// Row of the linear map `u ↦ tr_ω(i∂∂̄_h u)` at an equation node.
    fn trace_row(&self, node: usize) -> Vec<(usize, T)>;
    /// `tr_ω χ`.
    fn chi_trace(&self) -> T;
    /// Eigenvalues of `ω^{-1} i∂∂̄_h u` at any node (one-sided on the boundary).
    fn hessian_spectrum(&self, u: &[T], node: usize) -> Spectrum<T>;
    /// `|∇u|²` at any node.
    fn gradient_norm_sq(&self, u: &[T], node: usize) -> T;
    /// Eigenvalues of `ω^{-1}(χ + i∂∂̄f)` from the exact Hessian of `f`.
    fn exact_spectrum(&self, f: &ScalarFn<T>, node: usize) -> Spectrum<T>;
    fn coords(&self, node: usize) -> Vec<T>;
    fn evaluate(&self, f: &ScalarFn<T>) -> Vec<T> {
        (0..self.node_count()).map(|k| f.value(&self.coords(k))).collect()
    }
}

/// Box-grid discretization with constant `χ` and `ω`.
#[derive(Debug, Clone)]
pub struct BoxScheme<T> {
    grid: Arc<BoxGrid<T>>,
    chi: HermitianMatrix<T>,
    metric: Metric<T>,
    params: OperatorParams,
    equations: Vec<usize>,
    interior: Vec<bool>,
    trace_coefficients: Vec<T>,
}

impl<T: Real> BoxScheme<T> {
    pub fn new(grid: Arc<BoxGrid<T>>, chi: HermitianMatrix<T>, omega: HermitianMatrix<T>, params: OperatorParams) -> Result<Self> {
        if chi.dim() != grid.n() || omega.dim() != grid.n() || params.n() != grid.n() {
            return Err(Error::ShapeMismatch { expected: grid.n(), found: chi.dim() });
        }
        let metric = Metric::new(omega)?;
        let interior: Vec<bool> = (0..grid.node_count()).map(|k| grid.is_interior(k)).collect();
        let equations = (0..grid.node_count()).filter(|&k| interior[k]).collect();
        let trace_coefficients = real_coefficients(&metric.inverse());
        Ok(Self { grid, chi, metric, params, equations, interior, trace_coefficients })
    }

    pub fn grid(&self) -> &Arc<BoxGrid<T>> {
        &self.grid
    }

    pub fn metric(&self) -> &Metric<T> {
        &self.metric
    }

    pub fn chi(&self) -> &HermitianMatrix<T> {
        &self.chi
    }

    /// `χ + i∂∂̄_h u` at an interior node.
    pub fn g_at(&self, u: &[T], node: usize) -> HermitianMatrix<T> {
        &self.chi + &complex_from_real_hessian(self.grid.n(), &interior_real_hessian(&self.grid, u, node))
    }

    /// `χ + i∂∂̄_h u` at any node, one-sided on faces.
    pub fn g_any(&self, u: &[T], node: usize) -> HermitianMatrix<T> {
        &self.chi + &complex_from_real_hessian(self.grid.n(), &any_real_hessian(&self.grid, u, node))
    }

    pub fn field(&self, values: Vec<T>) -> Result<ScalarField<T>> {
        ScalarField::new(self.grid.clone(), values)
    }
}

impl<T: Real> Discretization<T> for BoxScheme<T> {
    fn params(&self) -> &OperatorParams {
        &self.params
    }

    fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    fn equation_nodes(&self) -> &[usize] {
        &self.equations
    }

    fn is_equation_node(&self, node: usize) -> bool {
        self.interior[node]
    }

    fn spectrum(&self, u: &[T], node: usize) -> Spectrum<T> {
        self.metric.endomorphism_eigen(&self.g_at(u, node))
    }

    fn linearize(&self, u: &[T], node: usize) -> Result<NodeLinearization<T>> {
        let lc = linearize(&self.metric, &self.g_at(u, node), &self.params)?;
        let margin = margin_value(lc.spectrum.values(), self.params.p());
        let row = real_row(&self.grid, node, &real_coefficients(&lc.matrix));
        Ok(NodeLinearization { ftilde: lc.ftilde, trace_f: lc.trace_f, margin, row })
    }

    fn trace_row(&self, node: usize) -> Vec<(usize, T)> {
        real_row(&self.grid, node, &self.trace_coefficients)
    }

    fn chi_trace(&self) -> T {
        self.metric.trace(&self.chi)
    }

    fn hessian_spectrum(&self, u: &[T], node: usize) -> Spectrum<T> {
        let h = complex_from_real_hessian(self.grid.n(), &any_real_hessian(&self.grid, u, node));
        self.metric.endomorphism_eigen(&h)
    }

    fn gradient_norm_sq(&self, u: &[T], node: usize) -> T {
        any_gradient(&self.grid, u, node).iter().map(|g| *g * *g).sum()
    }

    fn exact_spectrum(&self, f: &ScalarFn<T>, node: usize) -> Spectrum<T> {
        let h = complex_from_real_hessian(self.grid.n(), &f.real_hessian(&self.grid.coords(node)));
        self.metric.endomorphism_eigen(&(&self.chi + &h))
    }

    fn coords(&self, node: usize) -> Vec<T> {
        self.grid.coords(node)
    }
}

/// Radial ODE discretization on `[0, R²]`; the last node carries the
/// boundary value.
#[derive(Debug, Clone)]
pub struct RadialScheme<T> {
    grid: RadialGrid<T>,
    chi_scalar: T,
    params: OperatorParams,
    equations: Vec<usize>,
}

impl<T: Real> RadialScheme<T> {
    pub fn new(grid: RadialGrid<T>, chi_scalar: T, params: OperatorParams) -> Self {
        let equations = (0..grid.last()).collect();
        Self { grid, chi_scalar, params, equations }
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn chi_scalar(&self) -> T {
        self.chi_scalar
    }

    fn eigen_unsorted(&self, u: &[T], node: usize) -> Vec<T> {
        let (u1, u2) = self.grid.derivatives(u, node);
        unsorted_radial_eigenvalues(u1, u2, self.grid.s()[node], self.params.n(), self.chi_scalar)
    }
}

impl<T: Real> Discretization<T> for RadialScheme<T> {
    fn params(&self) -> &OperatorParams {
        &self.params
    }

    fn node_count(&self) -> usize {
        self.grid.points()
    }

    fn equation_nodes(&self) -> &[usize] {
        &self.equations
    }

    fn is_equation_node(&self, node: usize) -> bool {
        node < self.grid.last()
    }

    fn spectrum(&self, u: &[T], node: usize) -> Spectrum<T> {
        Spectrum::from_unsorted(self.eigen_unsorted(u, node))
    }

    fn linearize(&self, u: &[T], node: usize) -> Result<NodeLinearization<T>> {
        let mu = self.eigen_unsorted(u, node);
        let (ftilde, grad) = value_and_grad(&mu, &self.params)?;
        let trace_f: T = grad.iter().copied().sum();
        // λ = (c+U′, …, c+U′, c+U′+sU″): ∂/∂U′ = Σ f_k, ∂/∂U″ = s f_n.
        let along_u2 = grad[self.params.n() - 1] * self.grid.s()[node];
        let (d1, d2) = self.grid.derivative_stencils(node);
        let row = d1.iter().map(|&(k, w)| (k, w * trace_f)).chain(d2.iter().map(|&(k, w)| (k, w * along_u2))).collect();
        Ok(NodeLinearization { ftilde, trace_f, margin: margin_value(&mu, self.params.p()), row })
    }

    fn trace_row(&self, node: usize) -> Vec<(usize, T)> {
        let n = T::from_usize_lossy(self.params.n());
        let s = self.grid.s()[node];
        let (d1, d2) = self.grid.derivative_stencils(node);
        d1.iter().map(|&(k, w)| (k, w * n)).chain(d2.iter().map(|&(k, w)| (k, w * s))).collect()
    }

    fn chi_trace(&self) -> T {
        self.chi_scalar * T::from_usize_lossy(self.params.n())
    }

    fn hessian_spectrum(&self, u: &[T], node: usize) -> Spectrum<T> {
        let (u1, u2) = self.grid.derivatives(u, node);
        Spectrum::from_unsorted(unsorted_radial_eigenvalues(u1, u2, self.grid.s()[node], self.params.n(), T::zero()))
    }

    fn gradient_norm_sq(&self, u: &[T], node: usize) -> T {
        let (u1, _) = self.grid.derivatives(u, node);
        T::lit(4.0) * self.grid.s()[node] * u1 * u1
    }

    fn exact_spectrum(&self, f: &ScalarFn<T>, node: usize) -> Spectrum<T> {
        let s = self.grid.s()[node];
        let (_, u1, u2) = f.radial_jet(s).expect("radial problems use radial functions");
        Spectrum::from_unsorted(unsorted_radial_eigenvalues(u1, u2, s, self.params.n(), self.chi_scalar))
    }

    /// The single coordinate `s = |z|²`.
    fn coords(&self, node: usize) -> Vec<T> {
        vec![self.grid.s()[node]]
    }

    fn evaluate(&self, f: &ScalarFn<T>) -> Vec<T> {
        self.grid.s().iter().map(|&s| f.radial_jet(s).expect("radial function").0).collect()
    }
}

#[derive(Debug, Clone)]
pub enum Scheme<T> {
    Box(BoxScheme<T>),
    Radial(RadialScheme<T>),
}

impl<T: Real> Scheme<T> {
    pub fn from_spec(spec: &ProblemSpec<T>) -> Result<Self> {
        spec.validate()?;
        let params = spec.params()?;
        Ok(match &spec.geometry {
            Geometry::Box { lower, upper, resolution } => {
                let grid = Arc::new(BoxGrid::new(spec.n, lower.clone(), upper.clone(), *resolution)?);
                Scheme::Box(BoxScheme::new(grid, spec.chi.clone(), spec.omega.clone(), params)?)
            }
            Geometry::Radial { radius, points } => {
                let c = spec.radial_chi().expect("validated: chi is scalar");
                Scheme::Radial(RadialScheme::new(RadialGrid::new(*radius, *points)?, c, params))
            }
        })
    }

    pub fn as_dyn(&self) -> &dyn Discretization<T> {
        match self {
            Scheme::Box(b) => b,
            Scheme::Radial(r) => r,
        }
    }

    /// Smallest cone margin of the exact Hessian of `f` over equation nodes.
    pub fn exact_margin_scan(&self, f: &ScalarFn<T>) -> (T, usize) {
        let d = self.as_dyn();
        let p = d.params().p();
        d.equation_nodes()
            .par_iter()
            .map(|&k| (margin_value(d.exact_spectrum(f, k).values(), p), k))
            .reduce(|| (T::infinity(), usize::MAX), min_pair)
    }
}

/// Subsolution verification outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionReport<T> {
    /// Largest relative shortfall `(ψ̃ − f̃(sub))/ψ̃` over equation nodes
    /// (negative when the subsolution is strict everywhere).
    pub worst_shortfall: T,
    pub worst_node: usize,
    /// Smallest exact cone margin of the subsolution.
    pub min_margin: T,
    pub min_margin_node: usize,
}

/// Relative slack for the pointwise subsolution inequality (rounding only).
pub const SUBSOLUTION_RTOL: f64 = 1e-12;

/// A problem sampled on its grid.
#[derive(Debug, Clone)]
pub struct DiscreteProblem<T> {
    spec: ProblemSpec<T>,
    scheme: Scheme<T>,
    psi: Vec<T>,
    psi_tilde: Vec<T>,
    boundary: Vec<T>,
    subsolution: Vec<T>,
    exact: Option<Vec<T>>,
    initial: Option<Vec<T>>,
}

impl<T: Real> DiscreteProblem<T> {
    pub fn build(spec: &ProblemSpec<T>) -> Result<Self> {
        let scheme = Scheme::from_spec(spec)?;
        let d = scheme.as_dyn();
        let params = d.params().clone();
        let count = d.node_count();
        let inv_c = T::one() / T::from_usize_lossy(params.subset_count());

        let (psi, psi_tilde): (Vec<T>, Vec<T>) = match &spec.rhs {
            RhsSource::Manufactured => {
                let u_star = spec.solution.as_ref().expect("validated");
                (0..count)
                    .into_par_iter()
                    .map(|k| {
                        let lam = d.exact_spectrum(u_star, k);
                        let psi = eval_m(lam.values(), &params);
                        let psi_tilde = eval_ftilde(lam.values(), &params).unwrap_or_else(|_| psi.powf(inv_c));
                        (psi, psi_tilde)
                    })
                    .unzip()
            }
            RhsSource::Function(f) => d.evaluate(f).into_iter().map(|v| (v, v.powf(inv_c))).unzip(),
        };
        for &k in d.equation_nodes() {
            if !(psi[k] > T::zero()) || !psi_tilde[k].is_finite() {
                return Err(Error::InvalidField { field: "rhs", reason: format!("psi must be positive, got {:e} at node {k}", psi[k]) });
            }
        }

        let boundary = d.evaluate(spec.resolve(&spec.boundary));
        let mut subsolution = d.evaluate(spec.resolve(&spec.subsolution));
        for k in (0..count).filter(|&k| !d.is_equation_node(k)) {
            let tol = T::lit(1e-10) * boundary[k].abs().max(T::one());
            if (subsolution[k] - boundary[k]).abs() > tol {
                return Err(Error::InvalidField {
                    field: "subsolution",
                    reason: format!("differs from the boundary data at node {k}"),
                });
            }
            subsolution[k] = boundary[k];
        }
        let exact = spec.solution.as_ref().map(|f| d.evaluate(f));
        let initial = spec.initial.as_ref().map(|src| {
            let mut v = d.evaluate(spec.resolve(src));
            for k in (0..count).filter(|&k| !d.is_equation_node(k)) {
                v[k] = boundary[k];
            }
            v
        });
        Ok(Self { spec: spec.clone(), scheme, psi, psi_tilde, boundary, subsolution, exact, initial })
    }

    pub fn spec(&self) -> &ProblemSpec<T> {
        &self.spec
    }

    pub fn scheme(&self) -> &Scheme<T> {
        &self.scheme
    }

    pub fn disc(&self) -> &dyn Discretization<T> {
        self.scheme.as_dyn()
    }

    pub fn params(&self) -> &OperatorParams {
        self.disc().params()
    }

    pub fn psi(&self) -> &[T] {
        &self.psi
    }

    /// `ψ̃ = ψ^{1/C(n,p)}` per node.
    pub fn psi_tilde(&self) -> &[T] {
        &self.psi_tilde
    }

    /// Boundary data evaluated at every node.
    pub fn boundary(&self) -> &[T] {
        &self.boundary
    }

    /// Subsolution values, equal to the boundary data on boundary nodes.
    pub fn subsolution(&self) -> &[T] {
        &self.subsolution
    }

    pub fn exact(&self) -> Option<&[T]> {
        self.exact.as_deref()
    }

    pub fn initial(&self) -> Option<&[T]> {
        self.initial.as_deref()
    }

    /// Replaces the starting iterate; boundary values are reset to the data.
    pub fn set_initial(&mut self, mut values: Vec<T>) -> Result<()> {
        self.check_len(values.len())?;
        let d = self.scheme.as_dyn();
        for k in (0..values.len()).filter(|&k| !d.is_equation_node(k)) {
            values[k] = self.boundary[k];
        }
        self.initial = Some(values);
        Ok(())
    }

    /// Overrides `ψ` at one node.
    pub fn set_psi(&mut self, node: usize, psi: T) -> Result<()> {
        self.check_len(node + 1)?;
        if !(psi > T::zero()) {
            return Err(Error::InvalidField { field: "rhs", reason: "psi must be positive".into() });
        }
        self.psi[node] = psi;
        self.psi_tilde[node] = psi.powf(T::one() / T::from_usize_lossy(self.params().subset_count()));
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let count = self.disc().node_count();
        if len > count {
            return Err(Error::ShapeMismatch { expected: count, found: len });
        }
        Ok(())
    }

    /// Pointwise check of `M(sub) ≥ ψ` and admissibility from the exact
    /// Hessian of the subsolution.
    pub fn subsolution_report(&self) -> SubsolutionReport<T> {
        let d = self.disc();
        let sub = self.spec.resolve(&self.spec.subsolution);
        let p = d.params().p();
        let params = d.params();
        let (worst, margin) = d
            .equation_nodes()
            .par_iter()
            .map(|&k| {
                let lam = d.exact_spectrum(sub, k);
                let margin = margin_value(lam.values(), p);
                let available = eval_ftilde(lam.values(), params).unwrap_or_else(|_| T::zero());
                let shortfall = (self.psi_tilde[k] - available) / self.psi_tilde[k];
                ((shortfall, k), (margin, k))
            })
            .reduce(
                || ((T::neg_infinity(), usize::MAX), (T::infinity(), usize::MAX)),
                |a, b| (max_pair(a.0, b.0), min_pair(a.1, b.1)),
            );
        SubsolutionReport { worst_shortfall: worst.0, worst_node: worst.1, min_margin: margin.0, min_margin_node: margin.1 }
    }

    /// Errors with the witness node unless the subsolution is admissible and
    /// satisfies `M(sub) ≥ ψ` at every equation node.
    pub fn verify_subsolution(&self) -> Result<SubsolutionReport<T>> {
        let report = self.subsolution_report();
        if !(report.min_margin > T::zero()) {
            return Err(Error::NotAdmissible { node: report.min_margin_node, margin: report.min_margin.as_f64() });
        }
        if report.worst_shortfall > T::lit(SUBSOLUTION_RTOL) {
            let k = report.worst_node;
            let available = self.psi_tilde[k] * (T::one() - report.worst_shortfall);
            return Err(Error::SubsolutionInvalid {
                node: k,
                required: self.psi_tilde[k].as_f64(),
                available: available.as_f64(),
            });
        }
        Ok(report)
    }

    /// Smallest exact margin of `f` (see [`Scheme::exact_margin_scan`]).
    pub fn exact_margin_scan(&self, f: &ScalarFn<T>) -> (T, usize) {
        self.scheme.exact_margin_scan(f)
    }

    /// Wraps node values as a box-grid field.
    pub fn box_field(&self, values: Vec<T>) -> Result<ScalarField<T>> {
        match &self.scheme {
            Scheme::Box(b) => b.field(values),
            Scheme::Radial(_) => Err(Error::RadialModeUnsupported),
        }
    }

    pub fn source_values(&self, src: &FnSource<T>) -> Vec<T> {
        self.disc().evaluate(self.spec.resolve(src))
    }
}

fn max_pair<T: Real>(a: (T, usize), b: (T, usize)) -> (T, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}
