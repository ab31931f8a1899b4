//! Problem descriptions: dimension, exponent, geometry, background forms and
//! the analytic data.

use super::functions::ScalarFn;
use super::grid::BoxGrid;
use super::radial::RadialGrid;
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, Metric};
use crate::operator::OperatorParams;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry<T> {
    /// Box in `R^{2n}` with `resolution` points per axis.
    Box { lower: Vec<T>, upper: Vec<T>, resolution: usize },
    /// Ball `|z| < radius`, reduced to an ODE in `s = |z|²` on `points` nodes.
    Radial { radius: T, points: usize },
}

/// Right-hand side `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsSource<T> {
    /// `ψ = M_p(λ(ω^{-1}(χ + i∂∂̄u*)))` from the exact Hessian of the solution.
    Manufactured,
    Function(ScalarFn<T>),
}

/// Boundary data, subsolution or initializer.
#[derive(Debug, Clone, PartialEq)]
pub enum FnSource<T> {
    /// Use the exact solution.
    FromSolution,
    Function(ScalarFn<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    pub n: usize,
    pub p: usize,
    pub geometry: Geometry<T>,
    pub chi: HermitianMatrix<T>,
    pub omega: HermitianMatrix<T>,
    pub rhs: RhsSource<T>,
    pub boundary: FnSource<T>,
    pub subsolution: FnSource<T>,
    /// Exact solution, when known.
    pub solution: Option<ScalarFn<T>>,
    /// Starting iterate for the `t = 0` solve; defaults to the subsolution.
    pub initial: Option<FnSource<T>>,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidField { field, reason: reason.into() }
}

impl<T: Real> ProblemSpec<T> {
    pub fn params(&self) -> Result<OperatorParams> {
        OperatorParams::new(self.n, self.p).map_err(|_| invalid("p", format!("need 1 <= p <= n, got n = {}, p = {}", self.n, self.p)))
    }

    /// Checks every structural constraint that does not need the grid values.
    pub fn validate(&self) -> Result<()> {
        if !(2..=crate::hermitian::MAX_DIM).contains(&self.n) {
            return Err(invalid("n", format!("must lie in 2..=6, got {}", self.n)));
        }
        self.params()?;
        if self.chi.dim() != self.n {
            return Err(invalid("chi", "dimension differs from n"));
        }
        if self.omega.dim() != self.n {
            return Err(invalid("omega", "dimension differs from n"));
        }
        Metric::new(self.omega.clone()).map_err(|e| invalid("omega", e.to_string()))?;
        let needs_solution = matches!(self.rhs, RhsSource::Manufactured)
            || matches!(self.boundary, FnSource::FromSolution)
            || matches!(self.subsolution, FnSource::FromSolution)
            || matches!(self.initial, Some(FnSource::FromSolution));
        if needs_solution && self.solution.is_none() {
            return Err(invalid("solution", "required by a `from-solution` or `manufactured` source"));
        }
        for (field, f) in self.functions() {
            validate_fn(field, f, self.n)?;
        }
        match &self.geometry {
            Geometry::Box { lower, upper, resolution } => {
                BoxGrid::new(self.n, lower.clone(), upper.clone(), *resolution)?;
            }
            Geometry::Radial { radius, points } => {
                RadialGrid::new(*radius, *points)?;
                if self.radial_chi().is_none() {
                    return Err(invalid("chi", "radial problems need chi = c * identity"));
                }
                if (&self.omega - &HermitianMatrix::identity(self.n)?).max_abs() != T::zero() {
                    return Err(invalid("omega", "radial problems need the identity metric"));
                }
                for (field, f) in self.functions() {
                    if !f.is_radial() {
                        return Err(invalid(field, "radial problems need radial built-in functions"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `c` when `χ = c·I`.
    pub fn radial_chi(&self) -> Option<T> {
        let c = self.chi.get(0, 0).re;
        let id = HermitianMatrix::scaled_identity(self.n, c).ok()?;
        ((&self.chi - &id).max_abs() == T::zero()).then_some(c)
    }

    fn functions(&self) -> Vec<(&'static str, &ScalarFn<T>)> {
        let mut out = Vec::new();
        if let Some(s) = &self.solution {
            out.push(("solution", s));
        }
        if let RhsSource::Function(f) = &self.rhs {
            out.push(("rhs", f));
        }
        if let FnSource::Function(f) = &self.boundary {
            out.push(("boundary", f));
        }
        if let FnSource::Function(f) = &self.subsolution {
            out.push(("subsolution", f));
        }
        if let Some(FnSource::Function(f)) = &self.initial {
            out.push(("initial", f));
        }
        out
    }

    /// Resolves a source to a concrete function.
    pub fn resolve<'a>(&'a self, source: &'a FnSource<T>) -> &'a ScalarFn<T> {
        match source {
            FnSource::Function(f) => f,
            FnSource::FromSolution => self.solution.as_ref().expect("validated: solution present"),
        }
    }

    /// Same problem at another resolution (box) or point count (radial).
    pub fn with_resolution(&self, level: usize) -> Self {
        let mut out = self.clone();
        match &mut out.geometry {
            Geometry::Box { resolution, .. } => *resolution = level,
            Geometry::Radial { points, .. } => *points = level,
        }
        out
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, Geometry::Radial { .. })
    }
}

fn validate_fn<T: Real>(field: &'static str, f: &ScalarFn<T>, n: usize) -> Result<()> {
    match f {
        ScalarFn::Polynomial(terms) => {
            if terms.iter().any(|t| t.exponents.len() != 2 * n) {
                return Err(invalid(field, format!("each polynomial term needs {} exponents", 2 * n)));
            }
            if terms.iter().any(|t| !t.coef.is_finite()) {
                return Err(invalid(field, "non-finite coefficient"));
            }
        }
        ScalarFn::RadialPower { power, scale } => {
            if *power == 0 || !scale.is_finite() {
                return Err(invalid(field, "radial power must be at least 1 with a finite scale"));
            }
        }
        ScalarFn::RadialPoly(c) => {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return Err(invalid(field, "radial polynomial needs finite coefficients"));
            }
        }
        ScalarFn::Constant(c) | ScalarFn::Quadratic(c) => {
            if !c.is_finite() {
                return Err(invalid(field, "non-finite coefficient"));
            }
        }
    }
    Ok(())
}

/// Manufactured problem with exact solution `u_star`: `ψ` from its exact
/// Hessian, boundary data and subsolution both taken from `u_star`.
///
/// Fails with [`Error::NotAdmissible`] at the first node (by scan order)
/// where `u_star` is not admissible.
pub fn manufactured_problem<T: Real>(
    u_star: ScalarFn<T>,
    chi: HermitianMatrix<T>,
    omega: HermitianMatrix<T>,
    params: &OperatorParams,
    geometry: Geometry<T>,
) -> Result<ProblemSpec<T>> {
    let spec = ProblemSpec {
        n: params.n(),
        p: params.p(),
        geometry,
        chi,
        omega,
        rhs: RhsSource::Manufactured,
        boundary: FnSource::FromSolution,
        subsolution: FnSource::FromSolution,
        solution: Some(u_star),
        initial: None,
    };
    let scheme = super::scheme::Scheme::from_spec(&spec)?;
    let (margin, node) = scheme.exact_margin_scan(spec.resolve(&FnSource::FromSolution));
    if !(margin > T::zero()) {
        return Err(Error::NotAdmissible { node, margin: margin.as_f64() });
    }
    Ok(spec)
}
