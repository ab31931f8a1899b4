//! Run orchestration for the CLI modes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pluri_core::operator::{guan_monitor, Property};
use pluri_core::{
    c2_ratio_monitor, continuity_solve, level_summary, structure_check, BarrierParams, ContinuationConfig, DiscreteProblem, Error as CoreError,
    NewtonConfig, OperatorParams, SolveOutcome,
};

use crate::report::{field_csv, Report};
use crate::spec_file::{parse_spec, SpecError, SpecFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    VerifySubsolution,
    CheckOperator,
    RadialSolve,
    RefineSweep,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Solve, Mode::VerifySubsolution, Mode::CheckOperator, Mode::RadialSolve, Mode::RefineSweep];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::VerifySubsolution => "verify-subsolution",
            Mode::CheckOperator => "check-operator",
            Mode::RadialSolve => "radial-solve",
            Mode::RefineSweep => "refine-sweep",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Io = 1,
    Validation = 2,
    SolverFailure = 3,
    ContractViolation = 4,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub spec: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Newton tolerance override.
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    pub deterministic: bool,
    /// Random trials per `(n, p)` in `check-operator`.
    pub trials: usize,
}

impl RunConfig {
    pub fn new(mode: Mode, out: impl Into<PathBuf>) -> Self {
        Self { mode, spec: None, out: out.into(), seed: 42, tol: None, threads: None, deterministic: false, trials: 10_000 }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub report: Report,
}

/// Pairs checked by `check-operator` without a spec.
pub const DEFAULT_OPERATOR_PAIRS: [(usize, usize); 4] = [(2, 1), (3, 2), (4, 3), (5, 2)];

fn solver_status(e: &CoreError) -> ExitStatus {
    match e {
        CoreError::ConeEscape { .. }
        | CoreError::ContinuationStalled { .. }
        | CoreError::MaxItersExceeded { .. }
        | CoreError::LinearSolveStalled { .. }
        | CoreError::IndefiniteCoefficients { .. }
        | CoreError::OutsideCone { .. } => ExitStatus::SolverFailure,
        _ => ExitStatus::Validation,
    }
}

fn fail(report: &mut Report, status: ExitStatus, message: &str) -> ExitStatus {
    report.text(format!("error: {message}"));
    report.str("status", "failed");
    report.str("error", message.replace('\n', " "));
    status
}

fn witness(report: &mut Report, problem: Option<&DiscreteProblem<f64>>, e: &CoreError) {
    let node = match e {
        CoreError::ConeEscape { node, .. } | CoreError::SubsolutionInvalid { node, .. } | CoreError::NotAdmissible { node, .. } => *node,
        _ => return,
    };
    report.int("witness_node", node);
    if let Some(p) = problem {
        if node < p.disc().node_count() {
            let coords: Vec<String> = p.disc().coords(node).iter().map(|c| crate::report::fmt_real(*c)).collect();
            report.str("witness_coords", coords.join(", "));
        }
    }
}

fn load_spec(config: &RunConfig) -> Result<SpecFile, (ExitStatus, String)> {
    let path = config.spec.as_ref().ok_or((ExitStatus::Validation, "this mode needs --spec".to_string()))?;
    let text = fs::read_to_string(path).map_err(|e| (ExitStatus::Io, format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| (ExitStatus::Validation, spec_error_message(&e)))
}

fn spec_error_message(e: &SpecError) -> String {
    match e {
        SpecError::Parse { .. } => format!("parse error: {e}"),
        SpecError::Validation { .. } => format!("validation error: {e}"),
    }
}

fn continuation_config(spec: &SpecFile, problem: &DiscreteProblem<f64>, tol: Option<f64>) -> ContinuationConfig<f64> {
    let mut cfg = ContinuationConfig::for_problem(problem);
    if let Some(t) = tol.or(spec.solver.tol) {
        cfg.newton = NewtonConfig { tol: t, ..cfg.newton };
    }
    cfg.barrier = Some(BarrierParams { tau: spec.solver.barrier_tau, n_coef: spec.solver.barrier_n, delta: spec.solver.barrier_delta });
    cfg
}

fn write_outputs(out: &Path, report: &Report, csv: Option<&str>) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.txt"), report.render())?;
    if let Some(csv) = csv {
        fs::write(out.join("field.csv"), csv)?;
    }
    Ok(())
}

/// Runs one mode, writing `report.txt` (and `field.csv` for solves) under
/// `config.out`.
pub fn run(config: &RunConfig) -> RunOutcome {
    let mut report = Report::new(config.mode.as_str());
    report.int("seed", config.seed);
    report.str("deterministic", config.deterministic.to_string());
    if let Some(t) = config.tol {
        if !(t > 0.0) {
            let status = fail(&mut report, ExitStatus::Validation, "--tol must be positive");
            return finish(config, report, None, status);
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let status = fail(&mut report, ExitStatus::Validation, &format!("cannot start thread pool: {e}"));
            return finish(config, report, None, status);
        }
    };
    let (status, csv) = pool.install(|| match config.mode {
        Mode::CheckOperator => (check_operator(config, &mut report), None),
        Mode::VerifySubsolution => (verify_subsolution(config, &mut report), None),
        Mode::Solve | Mode::RadialSolve => solve(config, &mut report),
        Mode::RefineSweep => (refine_sweep(config, &mut report), None),
    });
    finish(config, report, csv, status)
}

fn finish(config: &RunConfig, mut report: Report, csv: Option<String>, status: ExitStatus) -> RunOutcome {
    if report.get("status").is_none() {
        report.str("status", if status == ExitStatus::Success { "ok" } else { "failed" });
    }
    report.int("exit_code", status.code());
    match write_outputs(&config.out, &report, csv.as_deref()) {
        Ok(()) => RunOutcome { status, report },
        Err(e) => {
            log::error!("cannot write outputs to {}: {e}", config.out.display());
            RunOutcome { status: ExitStatus::Io, report }
        }
    }
}

fn check_operator(config: &RunConfig, report: &mut Report) -> ExitStatus {
    let pairs: Vec<(usize, usize)> = match &config.spec {
        Some(_) => match load_spec(config) {
            Ok(spec) => vec![(spec.problem.n, spec.problem.p)],
            Err((status, msg)) => return fail(report, status, &msg),
        },
        None => DEFAULT_OPERATOR_PAIRS.to_vec(),
    };
    report.int("trials", config.trials);
    let mut total = 0;
    for (n, p) in pairs {
        let params = match OperatorParams::new(n, p) {
            Ok(q) => q,
            Err(e) => return fail(report, ExitStatus::Validation, &e.to_string()),
        };
        let structure = structure_check(&params, config.trials, config.seed);
        let prefix = format!("n{n}_p{p}");
        report.text(format!("(n, p) = ({n}, {p}): {} violations in {} trials", structure.violations.len(), config.trials));
        for property in Property::ALL {
            report.int(format!("{prefix}.{}", property.label()), structure.count(property));
            if let Some(v) = structure.violations.iter().find(|v| v.property == property) {
                let w: Vec<String> = v.witness.iter().map(|x| crate::report::fmt_real(*x)).collect();
                report.text(format!("  {}: witness ({}) {}", property.label(), w.join(", "), v.detail));
            }
        }
        total += structure.violations.len();
        let guan = guan_monitor(&params, 2000, 0.5, config.seed);
        report.real(format!("{prefix}.guan_fitted_c_empirical"), guan.fitted_c);
        report.real(format!("{prefix}.guan_holdout_ratio_empirical"), guan.holdout_ratio());
    }
    report.int("violations", total);
    if total == 0 {
        ExitStatus::Success
    } else {
        fail(report, ExitStatus::ContractViolation, &format!("{total} structure violations"))
    }
}

fn build(config: &RunConfig, report: &mut Report) -> Result<(SpecFile, DiscreteProblem<f64>), ExitStatus> {
    let spec = load_spec(config).map_err(|(status, msg)| fail(report, status, &msg))?;
    report.int("n", spec.problem.n);
    report.int("p", spec.problem.p);
    report.str("geometry", if spec.problem.is_radial() { "radial" } else { "box" });
    let problem = DiscreteProblem::build(&spec.problem).map_err(|e| fail(report, ExitStatus::Validation, &e.to_string()))?;
    report.int("nodes", problem.disc().node_count());
    Ok((spec, problem))
}

fn verify_subsolution(config: &RunConfig, report: &mut Report) -> ExitStatus {
    let (_, problem) = match build(config, report) {
        Ok(v) => v,
        Err(status) => return status,
    };
    let summary = problem.subsolution_report();
    report.real("subsolution.worst_relative_shortfall", summary.worst_shortfall);
    report.int("subsolution.worst_node", summary.worst_node);
    report.real("subsolution.min_margin", summary.min_margin);
    report.int("subsolution.min_margin_node", summary.min_margin_node);
    match problem.verify_subsolution() {
        Ok(_) => {
            report.text("subsolution verified: admissible and M(sub) >= psi at every equation node");
            ExitStatus::Success
        }
        Err(e) => {
            witness(report, Some(&problem), &e);
            fail(report, ExitStatus::ContractViolation, &e.to_string())
        }
    }
}

fn record_solution(report: &mut Report, out: &SolveOutcome<f64>) {
    let accepted = out.path.iter().filter(|s| s.accepted).count();
    report.text(format!(
        "continuation reached t = 1 after {accepted} accepted and {} rejected steps",
        out.path.len() - accepted
    ));
    report.int("continuation.accepted_steps", accepted);
    report.int("continuation.rejected_steps", out.path.len() - accepted);
    report.int("newton.total_iterations", out.path.iter().map(|s| s.newton_iters).sum::<usize>());
    report.real("anchor_residual", out.anchor_residual);
    report.real("final_residual", out.state.residual_norm);
    report.real("rounding_floor", out.state.rounding_floor);
    report.real("min_margin", out.state.min_margin);
    let d = &out.diagnostics;
    report.real("diagnostics.K", d.k);
    report.real("diagnostics.F_trace", d.f_trace);
    report.real("diagnostics.sandwich_violation", d.sandwich_violation);
    report.real("diagnostics.c0_boundary", d.c0_boundary);
    report.real("diagnostics.c2_ratio", d.c2_ratio);
    report.real("diagnostics.am_gm_slack", d.am_gm_slack);
    if let Some(err) = d.exact_error {
        report.real("diagnostics.exact_error", err);
    }
    if let Some(b) = &d.barrier_report {
        report.real("barrier.tau", b.tau);
        report.real("barrier.N", b.n_coef);
        report.real("barrier.delta", b.delta);
        report.str("barrier.degenerate_collar", b.degenerate_collar.to_string());
        report.int("barrier.collar_nodes", b.collar_nodes);
        report.real("barrier.min_v", b.min_v);
        report.int("barrier.min_v_node", b.min_v_node);
        report.real("barrier.epsilon", b.epsilon());
        report.int("barrier.max_ratio_node", b.max_ratio_node);
    }
    report.text(format!("final residual {:.3e}, min cone margin {:.3e}", out.state.residual_norm, out.state.min_margin));
}

fn solve(config: &RunConfig, report: &mut Report) -> (ExitStatus, Option<String>) {
    let (spec, problem) = match build(config, report) {
        Ok(v) => v,
        Err(status) => return (status, None),
    };
    if config.mode == Mode::RadialSolve && !spec.problem.is_radial() {
        return (fail(report, ExitStatus::Validation, "radial-solve needs geometry = radial"), None);
    }
    let cfg = continuation_config(&spec, &problem, config.tol);
    report.real("newton.tol", cfg.newton.tol);
    match continuity_solve(&problem, &cfg) {
        Ok(out) => {
            record_solution(report, &out);
            let csv = field_csv(problem.scheme(), out.u(), problem.psi_tilde());
            (ExitStatus::Success, Some(csv))
        }
        Err(e) => {
            witness(report, Some(&problem), &e);
            (fail(report, solver_status(&e), &e.to_string()), None)
        }
    }
}

fn refine_sweep(config: &RunConfig, report: &mut Report) -> ExitStatus {
    let (spec, problem) = match build(config, report) {
        Ok(v) => v,
        Err(status) => return status,
    };
    let levels = if spec.solver.levels.is_empty() {
        let base = match &spec.problem.geometry {
            pluri_core::Geometry::Box { resolution, .. } => *resolution,
            pluri_core::Geometry::Radial { points, .. } => *points,
        };
        vec![base, 2 * base - 1]
    } else {
        spec.solver.levels.clone()
    };
    drop(problem);
    let mut summaries = Vec::new();
    for (i, &level) in levels.iter().enumerate() {
        let level_spec = spec.problem.with_resolution(level);
        let problem = match DiscreteProblem::build(&level_spec) {
            Ok(p) => p,
            Err(e) => return fail(report, ExitStatus::Validation, &e.to_string()),
        };
        let cfg = continuation_config(&spec, &problem, config.tol);
        let out = match continuity_solve(&problem, &cfg) {
            Ok(o) => o,
            Err(e) => {
                witness(report, Some(&problem), &e);
                return fail(report, solver_status(&e), &format!("level {level}: {e}"));
            }
        };
        let s = level_summary(&problem, out.u());
        let key = format!("level{i}");
        report.int(format!("{key}.resolution"), level);
        report.real(format!("{key}.h"), s.h);
        report.real(format!("{key}.sup_hessian"), s.sup_hessian);
        report.real(format!("{key}.sup_hessian_boundary"), s.sup_hessian_boundary);
        report.real(format!("{key}.K"), s.k);
        report.real(format!("{key}.interior_ratio"), s.interior_ratio());
        report.real(format!("{key}.boundary_ratio"), s.boundary_ratio());
        report.real(format!("{key}.c0_boundary"), out.diagnostics.c0_boundary);
        report.real(format!("{key}.final_residual"), out.state.residual_norm);
        if let Some(err) = out.diagnostics.exact_error {
            report.real(format!("{key}.exact_error"), err);
        }
        report.text(format!(
            "level {level}: h = {:.4e}, sup|ddbar u| = {:.6e}, K = {:.6e}, ratio = {:.6e}",
            s.h,
            s.sup_hessian,
            s.k,
            s.interior_ratio()
        ));
        summaries.push(s);
    }
    match c2_ratio_monitor(summaries) {
        Ok(c2) => {
            report.real("c2.interior_variation", c2.interior_variation);
            report.real("c2.boundary_variation", c2.boundary_variation);
            report.text("ratios are empirical; no constant is fitted");
            ExitStatus::Success
        }
        Err(e) => fail(report, ExitStatus::Validation, &e.to_string()),
    }
}
