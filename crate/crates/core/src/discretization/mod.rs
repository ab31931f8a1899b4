//! Grids, finite-difference stencils, analytic data and the discrete operator.

pub mod functions;
pub mod grid;
pub mod problem;
pub mod radial;
pub mod scheme;
pub mod stencil;

pub use functions::{Monomial, ScalarFn};
pub use grid::{BoxGrid, MatrixField, ScalarField};
pub use problem::{manufactured_problem, FnSource, Geometry, ProblemSpec, RhsSource};
pub use radial::{radial_eigenvalues, RadialGrid};
pub use scheme::{BoxScheme, DiscreteProblem, Discretization, NodeLinearization, RadialScheme, Scheme, SubsolutionReport};
pub use stencil::{assemble_g, coefficient_row, complex_from_real_hessian, complex_hessian, complex_hessian_one_sided, real_coefficients, Chi};
