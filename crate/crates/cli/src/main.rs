//! Command-line front end. Exit codes: 0 all verdicts pass, 1 a verdict
//! failed, 2 configuration error, 3 solver or I/O failure. Human output
//! goes to stderr, data to files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scgame::config::RunConfig;
use scgame::pipeline::{self, StageOutcome};
use scgame::Error;

#[derive(Parser)]
#[command(name = "scgame", version, about = "Stopper vs. singular-controller games: solve, check, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Value surface, boundaries and residuals.
    Solve(Common),
    /// Auxiliary stopping problem and its comparison with v_x.
    Aux(Common),
    /// Equilibrium payoff estimate and sample reflected paths.
    Simulate(Common),
    /// Property bundle and saddle check against the deviation menu.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Proceed when the standing assumptions fail on the probe lattice.
    #[arg(long)]
    force: bool,
    /// Worker threads for path simulation (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Expr(_) | Error::WindowTooSmall { .. } | Error::AssumptionViolation { .. } => 2,
        _ => 3,
    }
}

fn run(command: &Command) -> Result<StageOutcome, Error> {
    let (Command::Solve(c) | Command::Aux(c) | Command::Simulate(c) | Command::Verify(c)) = command;
    let text = std::fs::read_to_string(&c.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", c.config.display())))?;
    let mut cfg = RunConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", c.config.display())),
        other => other,
    })?;
    if let Some(out) = &c.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(seed) = c.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let spec = cfg.spec()?;
    if !c.force {
        pipeline::check_assumptions(&cfg, &spec)?;
    }
    let dir = PathBuf::from(&cfg.output.dir);
    match command {
        Command::Solve(_) => pipeline::cmd_solve(&cfg, &dir),
        Command::Aux(_) => pipeline::cmd_aux(&cfg, &dir),
        Command::Simulate(_) => pipeline::cmd_simulate(&cfg, &dir),
        Command::Verify(_) => pipeline::cmd_verify(&cfg, &dir).map(|(o, _)| o),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
