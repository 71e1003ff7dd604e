//! Command-line front end: reads a TOML configuration, runs one task and writes a
//! JSON or CSV report carrying the tool version and a digest of the configuration.

pub mod config;
pub mod error;
pub mod output;
pub mod tasks;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, RunConfig, Task};
use crate::error::CliError;
use crate::output::{render, write, Meta, Report};

#[derive(Debug, Parser)]
#[command(name = "thermoform", version, about = "Transfer operators, KMS states, ground states and renewal phase transitions")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Leading eigenvalue, eigenfunction and eigenmeasure of the transfer operator.
    Rpf,
    /// Multi-start KMS iteration compared with the Gibbs state.
    Kms,
    /// The KMS equality on random monomial pairs.
    MonomialCheck,
    /// Maximal ergodic average of -log H with a maximizing orbit.
    Optimize,
    /// A subaction and the cohomologous tilt of H.
    Subaction,
    /// Boundedness test for a candidate ground measure.
    Ground,
    /// Pressure curve and phase transition of the renewal shift.
    Renewal(RenewalArgs),
    /// Every invariant check on the configured model.
    VerifyAll,
    /// The task named by the configuration's `task` key.
    Run,
}

#[derive(Debug, Args)]
pub struct RenewalArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Truncation level.
    #[arg(long = "K", value_name = "K")]
    pub truncation: Option<usize>,
    /// Comma-separated values or `start:stop:step`.
    #[arg(long = "beta-grid", value_name = "GRID")]
    pub beta_grid: Option<String>,
}

/// Parses `0.5,0.8,1` or `0.5:1.5:0.1`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::validation("--beta-grid", m);
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}")));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("a range needs start:stop:step".into()));
        }
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad("a range needs step > 0 and stop >= start".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        s.split(',').map(parse).collect()
    }
}

fn task_of(command: &Command) -> Option<Task> {
    Some(match command {
        Command::Rpf => Task::Rpf,
        Command::Kms => Task::Kms,
        Command::MonomialCheck => Task::MonomialCheck,
        Command::Optimize => Task::Optimize,
        Command::Subaction => Task::Subaction,
        Command::Ground => Task::Ground,
        Command::Renewal(_) => Task::Renewal,
        Command::VerifyAll => Task::VerifyAll,
        Command::Run => return None,
    })
}

/// The configuration after applying command-line overrides, with the task fixed.
pub fn resolve(cli: &Cli) -> Result<(Task, RunConfig), CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let src = std::fs::read_to_string(path)
                .map_err(|e| CliError::validation("--config", format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&src)?
        }
        None => RunConfig::default(),
    };
    let task = match (task_of(&cli.command), config.task) {
        (Some(t), Some(c)) if t != c => {
            return Err(CliError::validation(
                "task",
                format!("configuration names {}, command is {}", c.name(), t.name()),
            ))
        }
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(CliError::validation("task", "`run` needs a task key in the configuration")),
    };
    config.task = Some(task);
    if let Some(seed) = cli.seed {
        config.numeric.seed = seed;
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    if let Some(out) = &cli.out {
        config.output.path = Some(out.clone());
    }
    if let Command::Renewal(args) = &cli.command {
        if let Some(g) = args.gamma {
            config.renewal.gamma = g;
        }
        if let Some(k) = args.truncation {
            config.renewal.truncation = k;
        }
        if let Some(grid) = &args.beta_grid {
            config.renewal.betas = parse_grid(grid)?;
        }
    }
    config.validate()?;
    Ok((task, config))
}

pub fn execute(task: Task, config: &RunConfig) -> Result<Report, CliError> {
    match task {
        Task::Rpf => tasks::rpf(config),
        Task::Kms => tasks::kms(config),
        Task::MonomialCheck => tasks::monomial_check(config),
        Task::Optimize => tasks::optimize(config),
        Task::Subaction => tasks::subaction(config),
        Task::Ground => tasks::ground(config),
        Task::Renewal => tasks::renewal(config),
        Task::VerifyAll => verify::verify_all(config),
    }
}

/// Runs one invocation end to end and writes its report.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (task, config) = resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::validation("--threads", e.to_string()))?;
    let report = pool.install(|| execute(task, &config))?;
    let meta = Meta::new(task, &config);
    let text = render(&meta, &report, config.output.format)?;
    write(config.output.path.as_deref(), &text)?;
    if report.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification { failed: report.failed })
    }
}

/// Parses arguments, runs, and returns the process exit code. Errors go to stderr as JSON.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::validation("arguments", e.render().to_string().trim());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
