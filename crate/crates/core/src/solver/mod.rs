//! Continuity-method solver and diagnostics.

pub mod continuation;
pub mod diagnostics;
pub mod newton;

pub use continuation::{anchor, continuity_solve, follow_path, ContinuationConfig, PathStep, SolveOutcome};
pub use diagnostics::{
    am_gm_slack, barrier_check, boundary_trace, boundary_trace_check, c2_ratio_monitor, diagnose, gradient_bound, level_summary,
    max_difference, min_trace_f, radial_boundary_trace, sandwich_check, tangential_trace, BarrierParams, BarrierReport, C2Report,
    LevelSummary, SolveDiagnostics,
};
pub use newton::{discrete_ftilde, homotopy_target, min_margin, newton_solve_at_t, HomotopyState, NewtonConfig};
