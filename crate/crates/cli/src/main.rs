use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgl_cli::config::{ClassifierKind, ExperimentConfig, SyntheticConfig};
use dgl_cli::grid::{run_grid, sensitivity_sweep, SweepParameter};
use dgl_cli::CliError;
use dgl_core::data::{generate_shift_pair, write_dataset, DataFormat};

#[derive(Parser)]
#[command(name = "dgl", version, about = "Domain-invariant graph learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the label-rate grid of a config and write result tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated classifiers (dgl_rls, dgl_svm, rls, svm).
        #[arg(long, value_delimiter = ',')]
        classifier: Option<Vec<ClassifierKind>>,
        /// Comma-separated label rates in (0, 1].
        #[arg(long, value_delimiter = ',')]
        rate: Option<Vec<f64>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; tables go to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one parameter over a grid, holding the rest of the config fixed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: SweepParameter,
        /// Comma-separated values; defaults to the standard grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic source/target pair as CSV files.
    GenSynthetic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Returns `Ok(false)` when some grid cells failed.
fn execute(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run {
            config,
            classifier,
            rate,
            repeats,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(c) = classifier {
                cfg.classifiers = c;
            }
            if let Some(r) = rate {
                cfg.rates = r;
            }
            if let Some(n) = repeats {
                cfg.repeats = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let outcome = run_grid(&cfg)?;
            match &cfg.output {
                Some(dir) => {
                    outcome.write_to_dir(dir)?;
                    log::info!("wrote results to {}", dir.display());
                }
                None => outcome.write_aggregate(std::io::stdout().lock())?,
            }
            Ok(outcome.is_complete())
        }
        Command::Sweep {
            config,
            param,
            grid,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let grid = grid.unwrap_or_else(|| param.default_grid());
            let outcome = sensitivity_sweep(&cfg, param, &grid)?;
            match out.or(cfg.output.clone()) {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let path = dir.join(format!("sweep_{param}.csv"));
                    outcome.write_csv(std::fs::File::create(path)?)?;
                }
                None => outcome.write_csv(std::io::stdout().lock())?,
            }
            Ok(outcome.failures.is_empty())
        }
        Command::GenSynthetic { spec, out } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", spec.display())))?;
            let spec: SyntheticConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("synthetic spec: {e}")))?;
            write_pair(&spec, &out)?;
            Ok(true)
        }
    }
}

fn write_pair(spec: &SyntheticConfig, dir: &Path) -> Result<(), CliError> {
    let (source, target) = generate_shift_pair::<f64>(&spec.spec()).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::create_dir_all(dir)?;
    for (name, ds) in [("source.csv", &source), ("target.csv", &target)] {
        write_dataset(&dir.join(name), ds, DataFormat::Csv).map_err(|source| CliError::Stage {
            stage: "write synthetic data",
            shapes: format!("{}×{}", ds.n_features(), ds.n_samples()),
            source,
        })?;
    }
    Ok(())
}
