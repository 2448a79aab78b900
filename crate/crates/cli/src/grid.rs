//! Label-rate grids with repeated seeds, and single-parameter sweeps.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::config::{ClassifierKind, ExperimentConfig};
use crate::pipeline::{build_graph, load_task, run_cell, GraphStage, ResultRecord, TaskData};
use crate::CliError;

pub const RESULTS_HEADER: &str = "# dgl-results v1";

/// A grid cell that failed; the rest of the grid still runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub task: String,
    pub classifier: ClassifierKind,
    pub rate: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub task: String,
    pub classifier: ClassifierKind,
    pub rate: f64,
    pub mean_acc: f64,
    /// Sample standard deviation (zero for a single run).
    pub std_acc: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GridOutcome {
    pub records: Vec<ResultRecord>,
    pub failures: Vec<CellFailure>,
    pub aggregate: Vec<AggregateRow>,
}

/// Seed of repeat `i`: `base ⊕ i`. Every classifier and rate sees the same
/// masks for a given repeat, so comparisons are paired.
pub fn derive_seed(base: u64, repeat: usize) -> u64 {
    base ^ repeat as u64
}

pub fn run_grid(config: &ExperimentConfig) -> Result<GridOutcome, CliError> {
    config.validate()?;
    let task = load_task(config)?;
    Ok(run_grid_on(&task, config, None))
}

/// Grid over an already prepared task. A precomputed graph stage may be
/// passed in; otherwise it is built once if any classifier needs it.
pub fn run_grid_on(
    task: &TaskData,
    config: &ExperimentConfig,
    graph: Option<&GraphStage>,
) -> GridOutcome {
    let classifiers = config.classifiers();
    let built;
    let graph_result: Result<Option<&GraphStage>, String> = match graph {
        Some(g) => Ok(Some(g)),
        None if classifiers.iter().any(|c| c.uses_graph()) => match build_graph(task, config) {
            Ok(g) => {
                built = g;
                Ok(Some(&built))
            }
            Err(e) => Err(e.to_string()),
        },
        None => Ok(None),
    };

    let mut outcome = GridOutcome::default();
    for &classifier in &classifiers {
        for &rate in &config.rates {
            for repeat in 0..config.repeats {
                let seed = derive_seed(config.seed, repeat);
                let result = match (&graph_result, classifier.uses_graph()) {
                    (Err(e), true) => Err(e.clone()),
                    (Ok(g), _) => run_cell(task, *g, config, classifier, rate, seed).map_err(|e| e.to_string()),
                    (Err(_), false) => run_cell(task, None, config, classifier, rate, seed).map_err(|e| e.to_string()),
                };
                match result {
                    Ok(record) => outcome.records.push(record),
                    Err(error) => {
                        log::error!("{} {classifier} rate {rate} seed {seed}: {error}", task.name);
                        outcome.failures.push(CellFailure {
                            task: task.name.clone(),
                            classifier,
                            rate,
                            seed,
                            error,
                        });
                    }
                }
            }
        }
    }
    outcome.records.sort_by(|a, b| {
        (&a.task, a.classifier.as_str(), a.rate, a.seed)
            .partial_cmp(&(&b.task, b.classifier.as_str(), b.rate, b.seed))
            .expect("finite rates")
    });
    outcome.aggregate = aggregate(&outcome.records);
    outcome
}

pub fn aggregate(records: &[ResultRecord]) -> Vec<AggregateRow> {
    let mut rows: Vec<AggregateRow> = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let head = &records[i];
        let group: Vec<f64> = records[i..]
            .iter()
            .take_while(|r| r.task == head.task && r.classifier == head.classifier && r.rate == head.rate)
            .map(|r| r.accuracy)
            .collect();
        let n = group.len();
        let mean = group.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (group.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        rows.push(AggregateRow {
            task: head.task.clone(),
            classifier: head.classifier,
            rate: head.rate,
            mean_acc: mean,
            std_acc: std,
            n,
        });
        i += n;
    }
    rows
}

impl GridOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// `task,classifier,rate,mean_acc,std_acc,n` under a version line.
    pub fn write_aggregate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RESULTS_HEADER}")?;
        writeln!(out, "task,classifier,rate,mean_acc,std_acc,n")?;
        for r in &self.aggregate {
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{}",
                r.task, r.classifier, r.rate, r.mean_acc, r.std_acc, r.n
            )?;
        }
        Ok(())
    }

    /// Per-run records, deterministic for a fixed config (no wall times).
    pub fn write_records<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RESULTS_HEADER}")?;
        writeln!(out, "task,classifier,rate,seed,accuracy,n_target,qp_iterations,kkt_residual,status")?;
        for r in &self.records {
            let iters = r.qp_iterations.map(|v| v.to_string()).unwrap_or_default();
            let kkt = r.kkt_residual.map(|v| format!("{v:.6e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{:.4},{},{},{},ok",
                r.task, r.classifier, r.rate, r.seed, r.accuracy, r.n_target, iters, kkt
            )?;
        }
        for f in &self.failures {
            let message = f.error.replace([',', '\n'], ";");
            writeln!(out, "{},{},{},{},,,,,error: {}", f.task, f.classifier, f.rate, f.seed, message)?;
        }
        Ok(())
    }

    /// Per-stage wall times in milliseconds.
    pub fn write_timings<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "task,classifier,rate,seed,stage,ms")?;
        for r in &self.records {
            for t in &r.timings {
                writeln!(out, "{},{},{},{},{},{:.3}", r.task, r.classifier, r.rate, r.seed, t.stage, t.ms)?;
            }
            writeln!(out, "{},{},{},{},total,{:.3}", r.task, r.classifier, r.rate, r.seed, r.wall_time_ms)?;
        }
        Ok(())
    }

    /// Writes `results.csv`, `records.csv` and `timings.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_aggregate(std::fs::File::create(dir.join("results.csv"))?)?;
        self.write_records(std::fs::File::create(dir.join("records.csv"))?)?;
        self.write_timings(std::fs::File::create(dir.join("timings.csv"))?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Lambda1,
    Lambda2,
    Xi,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Lambda1 => "lambda1",
            SweepParameter::Lambda2 => "lambda2",
            SweepParameter::Xi => "xi",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepParameter::Lambda1 | SweepParameter::Lambda2 => {
                vec![0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0]
            }
            SweepParameter::Xi => vec![1.0, 1.1, 1.2, 1.3, 1.5, 2.0, 2.5, 3.0, 5.0],
        }
    }

    fn apply(self, config: &mut ExperimentConfig, value: f64) {
        match self {
            SweepParameter::Lambda1 => config.lambda1 = Some(value),
            SweepParameter::Lambda2 => config.lambda2 = Some(value),
            SweepParameter::Xi => config.xi = Some(value),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "lambda1" => Ok(SweepParameter::Lambda1),
            "lambda2" => Ok(SweepParameter::Lambda2),
            "xi" => Ok(SweepParameter::Xi),
            other => Err(CliError::Config(format!(
                "unknown sweep parameter `{other}` (expected lambda1, lambda2 or xi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: f64,
    pub cell: AggregateRow,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutcome {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RESULTS_HEADER}")?;
        writeln!(out, "task,classifier,parameter,value,rate,mean_acc,std_acc,n")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.4},{:.4},{}",
                r.cell.task, r.cell.classifier, r.parameter, r.value, r.cell.rate, r.cell.mean_acc, r.cell.std_acc, r.cell.n
            )?;
        }
        Ok(())
    }
}

/// Runs the configured grid once per value of `parameter`, holding every
/// other setting at its configured value. The graph stage is shared across
/// values unless `ξ` itself is swept.
pub fn sensitivity_sweep(
    config: &ExperimentConfig,
    parameter: SweepParameter,
    grid: &[f64],
) -> Result<SweepOutcome, CliError> {
    config.validate()?;
    if grid.is_empty() {
        return Err(CliError::Config("sweep grid must not be empty".into()));
    }
    let task = load_task(config)?;
    let needs_graph = config.classifiers().iter().any(|c| c.uses_graph());
    let shared = if needs_graph && parameter != SweepParameter::Xi {
        match build_graph(&task, config) {
            Ok(g) => Some(g),
            Err(e) => {
                log::error!("{}: graph stage failed: {e}", task.name);
                None
            }
        }
    } else {
        None
    };
    let mut outcome = SweepOutcome::default();
    for &value in grid {
        let mut cfg = config.clone();
        parameter.apply(&mut cfg, value);
        cfg.validate()?;
        let grid_outcome = run_grid_on(&task, &cfg, shared.as_ref());
        outcome.failures.extend(grid_outcome.failures);
        outcome.rows.extend(grid_outcome.aggregate.into_iter().map(|cell| SweepRow {
            parameter,
            value,
            cell,
        }));
    }
    Ok(outcome)
}
