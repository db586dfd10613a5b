use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edpsgd::accountant::ledger_for_schedule;
use edpsgd::engine::{DecayKind, DpConfig};
use edpsgd::experiment::{
    run_attack, run_bench, run_training_with, AttackOptions, ExperimentConfig, RunOptions,
};
use edpsgd::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Train, attack and benchmark differentially-private SGD variants.
#[derive(Debug, Parser)]
#[command(name = "edpsgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write its JSON run report.
    Train {
        /// Experiment config (TOML).
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a shadow-model membership attack against a run report.
    Attack {
        /// Report written by `train`.
        report: PathBuf,
        /// Shadow seed (default: target seed + 1).
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Time sgd, dpsgd and edpsgd on the same workload.
    Bench {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        /// Write the table as JSON here; the text table goes to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Privacy cost of a noise schedule, without training.
    Account(AccountArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threads for the worker lanes. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct AccountArgs {
    #[arg(long)]
    z0: f64,
    #[arg(long, value_parser = parse_decay, default_value = "none")]
    decay: DecayKind,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long)]
    epochs: u64,
    #[arg(long)]
    steps_per_epoch: u64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_decay(s: &str) -> Result<DecayKind, String> {
    match s {
        "none" => Ok(DecayKind::None),
        "linear" => Ok(DecayKind::Linear),
        "exponential" => Ok(DecayKind::Exponential),
        _ => Err(format!(
            "unknown decay `{s}`, expected none, linear or exponential"
        )),
    }
}

fn emit(json: &str, out: Option<&Path>) -> edpsgd::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, format!("{json}\n"))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn load(config: &Path, seed: Option<u64>) -> edpsgd::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_path(config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(command: Command) -> edpsgd::Result<()> {
    match command {
        Command::Train {
            config,
            seed,
            common,
        } => {
            let config = load(&config, seed)?;
            let out = common
                .out
                .or_else(|| config.out.as_ref().map(PathBuf::from));
            let report = run_training_with(
                &config,
                RunOptions {
                    threads: common.threads,
                },
            )?;
            eprintln!(
                "{}: train accuracy {:.4}, test accuracy {:.4}",
                config.optimizer.name(),
                report.train_accuracy,
                report.test_accuracy
            );
            emit(&report.to_json_pretty(), out.as_deref())
        }
        Command::Attack {
            report,
            seed,
            common,
        } => {
            let options = AttackOptions {
                seed,
                run: RunOptions {
                    threads: common.threads,
                },
            };
            let amended = run_attack(&report, options)?;
            if let Some(a) = &amended.attack {
                eprintln!("attack auc {:.4} (shadow {:.4})", a.auc, a.shadow_auc);
            }
            emit(&amended.to_json_pretty(), common.out.as_deref())
        }
        Command::Bench {
            config,
            seed,
            repetitions,
            out,
        } => {
            let table = run_bench(&load(&config, seed)?, repetitions)?;
            eprint!("{}", table.render());
            emit(&serde_json::to_string_pretty(&table)?, out.as_deref())
        }
        Command::Account(a) => {
            let schedule = DpConfig {
                z0: a.z0,
                decay: a.decay,
                tau: a.tau,
                ..DpConfig::default()
            };
            schedule.validate()?;
            let ledger = ledger_for_schedule(&schedule, a.epochs, a.steps_per_epoch)?;
            let report = ledger.report(a.delta)?;
            let summary = serde_json::json!({
                "z0": a.z0,
                "decay": a.decay,
                "tau": a.tau,
                "epochs": a.epochs,
                "steps_per_epoch": a.steps_per_epoch,
                "delta": report.delta,
                "rho_total": report.rho_total,
                "epsilon": report.epsilon,
                "log10_epsilon": report.log10_epsilon,
            });
            emit(&serde_json::to_string_pretty(&summary)?, a.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() || matches!(e, Error::InfinitePrivacyLoss) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
