use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pseudowave::commands;
use pseudowave::config::{ExperimentConfig, Mode};
use pseudowave::parallel::Workers;
use pseudowave::selftest::{self, CRITERIA};
use pseudowave::RunError;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Pseudomode,
    Sweep,
    Pseudospec,
    Spectrum,
    Selftest,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Pseudomode => Mode::Pseudomode,
            Command::Sweep => Mode::Sweep,
            Command::Pseudospec => Mode::Pseudospec,
            Command::Spectrum => Mode::Spectrum,
            Command::Selftest => Mode::Selftest,
        }
    }
}

/// Pseudomodes and pseudospectra of the damped wave equation with unbounded damping.
#[derive(Debug, Parser)]
#[command(name = "pseudowave", version)]
struct Cli {
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and scans (overrides `workers`).
    #[arg(long)]
    workers: Option<usize>,
}

fn setup(cli: &Cli) -> Result<(ExperimentConfig, Workers), RunError> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    let workers = Workers::new(cfg.workers()?)?;
    Ok((cfg, workers))
}

fn selftest(cfg: &ExperimentConfig, workers: &Workers) -> Result<bool, RunError> {
    cfg.check_mode(Mode::Selftest)?;
    let ids: Vec<usize> = match &cfg.criteria {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
                return Err(RunError::Config(format!("no criterion {bad}")));
            }
            ids.clone()
        }
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let outcomes = selftest::run_all(&ids, workers, |o| println!("{o}"));
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    Ok(passed == outcomes.len())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are config errors; --help and --version succeed
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = setup(&cli).and_then(|(cfg, workers)| match cli.command {
        Command::Selftest => selftest(&cfg, &workers).map(|ok| if ok { 0 } else { 3 }),
        mode => commands::run(mode.into(), &cfg, &workers).map(|summary| {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            println!("{}", summary.message);
            0
        }),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("pseudowave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
