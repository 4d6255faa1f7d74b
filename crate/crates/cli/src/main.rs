//! `spinfaraday` command line: single runs, parameter sweeps and the built-in check suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinfaraday::config::{parse_config_with, Config};
use spinfaraday::{checks, runner, Error};

const DEFAULT_OUT: &str = "spinfaraday-out";

#[derive(Parser)]
#[command(name = "spinfaraday", version, about = "Spin phases on a ring and the motive forces they drive")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one configuration and write its outputs.
    Run(Common),
    /// Evaluate a configuration with a [sweep] section.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads for sweep points (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Check,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; beats `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fallback output directory when neither --out nor `output.dir` is set.
    #[arg(long = "default-out", env = "SPINFARADAY_OUT", hide = true)]
    env_out: Option<PathBuf>,
    /// Override a config value, e.g. `--set scenario.alpha=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<(Config, PathBuf), Error> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| Error::io(&self.config, e))?;
        let config = parse_config_with(&text, &self.overrides)?;
        let out = self
            .out
            .clone()
            .or_else(|| config.base().out_dir.as_ref().map(PathBuf::from))
            .or_else(|| self.env_out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok((config, out))
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 4,
        Error::Domain(_) | Error::ZeroSpinor | Error::OutOfRange { .. } => 3,
        _ => 2,
    }
}

fn report_files(files: &[PathBuf], out: &Path) {
    println!("wrote {} files to {}", files.len(), out.display());
    for f in files {
        println!("  {}", f.display());
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run(common) => {
            let (config, out) = common.load()?;
            if matches!(config, Config::Sweep(_)) {
                return Err(Error::Config(vec!["sweep: use the `sweep` verb for configs with [sweep]".into()]));
            }
            let outcome = runner::run(&config, &out)?;
            report_files(&outcome.files, &out);
            for w in &outcome.result.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if outcome.flagged() { 3 } else { 0 })
        }
        Command::Sweep { common, jobs } => {
            let (config, out) = common.load()?;
            let outcome = runner::sweep(&config, &out, jobs)?;
            report_files(&outcome.files, &out);
            if outcome.flagged() {
                eprintln!("warning: {} sweep points flagged", outcome.table.failures());
                return Ok(3);
            }
            Ok(0)
        }
        Command::Check => {
            let outcomes = checks::run_all();
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
            Ok(if failed == 0 { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
