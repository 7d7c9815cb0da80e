use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nozzle_shocks::alpha::Branch;
use nozzle_shocks::report::commands::Overrides;
use nozzle_shocks::report::{cmd_oracle, cmd_solve, cmd_states, cmd_sweep, Failure, RunConfig};

/// Steady shock profiles in a finite nozzle and their vanishing-parameter limits.
#[derive(Debug, Parser)]
#[command(name = "nozzle-shocks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the shock states, jump invariants and admissibility flags.
    States(Common),
    /// Solve at one parameter and write the profile as CSV and SVG.
    Solve(Common),
    /// Sweep the configured parameters and write a manifest.
    Sweep(Common),
    /// Cross-check the quadrature solution against shooting.
    Oracle(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Parameter (kappa or mu); overrides the configuration.
    #[arg(long)]
    param: Option<f64>,
    /// Root to follow when there are two (VP with delta > 1).
    #[arg(long, value_parser = parse_branch)]
    branch: Option<Branch>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    s.parse().map_err(|e: nozzle_shocks::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (Command::States(common)
    | Command::Solve(common)
    | Command::Sweep(common)
    | Command::Oracle(common)) = &cli.command;
    let cfg = RunConfig::load(&common.config)?;
    let ov = Overrides { param: common.param, branch: common.branch, out: common.out.clone() };
    let out = &mut io::stdout().lock();
    match cli.command {
        Command::States(_) => cmd_states(&cfg, &ov, out).map(drop),
        Command::Solve(_) => cmd_solve(&cfg, &ov, out).map(drop),
        Command::Sweep(_) => cmd_sweep(&cfg, &ov, out).map(drop),
        Command::Oracle(_) => cmd_oracle(&cfg, &ov, out).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
