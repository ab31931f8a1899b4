//! Spec parsing, run orchestration and report output for the `pluri` binary.

pub mod report;
pub mod run;
pub mod spec_file;

pub use report::{field_csv, Report};
pub use run::{run, ExitStatus, Mode, RunConfig, RunOutcome};
pub use spec_file::{emit_spec, parse_spec, SolverSettings, SpecError, SpecFile};
