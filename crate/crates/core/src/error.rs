use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Node indices are linear node ids of the owning grid; `t` is the
/// continuation parameter at which the failure happened.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension {0} outside supported range 1..=6")]
    DimensionOutOfRange(usize),
    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    MetricNotPositive { min_eigenvalue: f64 },
    #[error("eigenvalue vector outside the cone (smallest subset sum {min_subset_sum:e})")]
    OutsideCone { min_subset_sum: f64 },
    #[error("matrix is not in arrow form: tangential off-diagonal entry {magnitude:e}")]
    NotArrowForm { magnitude: f64 },
    #[error("invalid operator parameters n = {n}, p = {p}")]
    InvalidParams { n: usize, p: usize },
    #[error("node {0} lies on the boundary")]
    BoundaryNode(usize),
    #[error("field is not admissible at node {node} (cone margin {margin:e})")]
    NotAdmissible { node: usize, margin: f64 },
    #[error("linearized coefficients are not positive definite at node {node}")]
    IndefiniteCoefficients { node: usize },
    #[error("linear solve stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolveStalled { iterations: usize, residual: f64 },
    #[error("Newton step left the admissible cone at node {node} (t = {t})")]
    ConeEscape { node: usize, t: f64 },
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e}, t = {t})")]
    MaxItersExceeded { iterations: usize, residual: f64, t: f64 },
    #[error("subsolution invalid at node {node}: M(sub)^(1/C) = {available:e} < psi^(1/C) = {required:e}")]
    SubsolutionInvalid { node: usize, required: f64, available: f64 },
    #[error("continuation stalled at t = {t} (step {step:e})")]
    ContinuationStalled { t: f64, step: f64 },
    #[error("operation not supported for radial problems")]
    RadialModeUnsupported,
    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
