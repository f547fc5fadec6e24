use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ferropuf::expctl::{
    cmd_attack, cmd_gen_crps, cmd_metrics, cmd_register, cmd_sweep, ExperimentConfig, SweepAxis,
    ENV_OUT, ENV_SEED,
};
use ferropuf::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ferropuf",
    version,
    about = "FeFET strong-PUF simulator and security bench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register an array and dump per-cell Vx values and the state map.
    Register(Common),
    /// Uniformity, uniqueness, reconfigurability and reliability metrics.
    Metrics(Common),
    /// Metrics across one robustness axis, or all of them.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// pulse, temperature, size, sigma_c or challenge_length
        #[arg(long)]
        axis: Option<String>,
    },
    /// Modeling-attack accuracy maps and challenge-length sweep.
    Attack(Common),
    /// Write a challenge-response pair file.
    GenCrps(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    /// Config file, then environment, then flags.
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Ok(s) = std::env::var(ENV_SEED) {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::config(ENV_SEED, format!("not a u64: `{s}`")))?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        cfg.validate()?;
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<PathBuf> {
    match cli.command {
        Command::Register(c) => {
            let (cfg, out) = c.resolve()?;
            cmd_register(&cfg, &out)?;
            Ok(out)
        }
        Command::Metrics(c) => {
            let (cfg, out) = c.resolve()?;
            cmd_metrics(&cfg, &out)?;
            Ok(out)
        }
        Command::Sweep { common, axis } => {
            let axes = match axis {
                Some(a) => vec![a.parse::<SweepAxis>()?],
                None => SweepAxis::ALL.to_vec(),
            };
            let (cfg, out) = common.resolve()?;
            for axis in axes {
                cmd_sweep(&cfg, axis, &out.join(axis.name()))?;
            }
            Ok(out)
        }
        Command::Attack(c) => {
            let (cfg, out) = c.resolve()?;
            cmd_attack(&cfg, &out)?;
            Ok(out)
        }
        Command::GenCrps(c) => {
            let (cfg, out) = c.resolve()?;
            cmd_gen_crps(&cfg, &out)?;
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            println!("outputs written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ferropuf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
