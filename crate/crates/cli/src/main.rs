use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pluri_cli::{run, Mode, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "pluri", version, about = "Continuity-method solver for M_p(chi + i ddbar u) = psi")]
struct Args {
    /// solve | verify-subsolution | check-operator | radial-solve | refine-sweep
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "pluri-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Newton sup-residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    deterministic: bool,
    /// Random trials per (n, p) in check-operator.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = RunConfig {
        mode: args.mode,
        spec: args.spec,
        out: args.out,
        seed: args.seed,
        tol: args.tol,
        threads: args.threads,
        deterministic: args.deterministic,
        trials: args.trials,
    };
    let outcome = run(&config);
    print!("{}", outcome.report.render());
    ExitCode::from(outcome.status.code())
}
