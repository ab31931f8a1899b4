//! Finite-difference solver for `M_p(χ + i∂∂̄u) = ψ` on domains in `C^n`,
//! where `M_p` is the product of all `p`-fold eigenvalue sums.

pub mod cone;
pub mod discretization;
pub mod error;
pub mod hermitian;
pub mod linear;
pub mod operator;
pub mod scalar;
pub mod solver;

pub use cone::{admissibility_scan, cone_margin, in_level_set, margin_value, ConeMargin};
pub use discretization::*;
pub use error::{Error, Result};
pub use linear::{assemble_linearized, solve_sparse, solve_with, upper_barrier, upper_barrier_on, LinearSolverConfig, LinearStrategy, SparseSystem};
pub use hermitian::{herm_eigen, herm_eigh, metric_endomorphism_eigen, trace_with_metric, CMatrix, EigenDecomposition, HermitianMatrix, Metric, Spectrum};
pub use operator::{eval_ftilde, eval_m, linearization_coeffs, linearize, structure_check, LinearizationCoeffs, OperatorParams};
pub use scalar::{Complex, Real};
pub use solver::*;

pub type HermitianMatrix64 = HermitianMatrix<f64>;
pub type HermitianMatrix32 = HermitianMatrix<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type Metric64 = Metric<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type DiscreteProblem64 = DiscreteProblem<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type ScalarFn64 = ScalarFn<f64>;
pub type SolveOutcome64 = SolveOutcome<f64>;
