use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hetnet::cli::{self, ConfigError, Mode, Overrides, RunError};
use hetnet::Topology;

/// Average delivery rate sweeps for cache-enabled two-tier networks.
#[derive(Parser, Debug)]
#[command(name = "hetnet", version)]
struct Args {
    /// Configuration file, or a bundled name (coverage, capacity).
    #[arg(long)]
    config: Option<PathBuf>,
    /// cov or cap.
    #[arg(long)]
    topology: Option<Topology>,
    /// theory, sim or both.
    #[arg(long)]
    mode: Option<Mode>,
    /// Parameter to sweep (gamma, F_sc, tau, ...).
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; the factor breakdown goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG plot here.
    #[arg(long)]
    emit_plot: Option<PathBuf>,
}

fn run(args: Args) -> Result<(), RunError> {
    let ov = Overrides {
        topology: args.topology,
        mode: args.mode,
        sweep: args.sweep,
        from: args.from,
        to: args.to,
        steps: args.steps,
        realizations: args.realizations,
        seed: args.seed,
    };
    let cfg = match &args.config {
        Some(path) => cli::load_config(path, &ov)?,
        None if ov.topology.is_some() => cli::parse_config("", &ov)?,
        None => return Err(ConfigError::MissingTopology.into()),
    };
    let records = cli::run_sweep(&cfg)?;
    cli::emit_csv(&records, &args.out)?;
    let mut factors = args.out.clone().into_os_string();
    factors.push(".factors.csv");
    if cfg.mode != Mode::Sim {
        cli::emit_factors(&records, &PathBuf::from(factors))?;
    }
    if let Some(plot) = &args.emit_plot {
        cli::emit_plot(&records, cfg.sweep.scale, plot)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
