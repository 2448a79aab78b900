//! One end-to-end run: graph learning, training, target evaluation.

use std::time::Instant;

use dgl_core::classifier::{accuracy, train_rls, train_svm};
use dgl_core::data::{
    generate_shift_pair, load_dataset, mask_labels_with_order, standardize, union_label_values,
    LabelMaskPolicy,
};
use dgl_core::graph::{eigendecompose, joint_laplacian_blocks, laplacian};
use dgl_core::nystrom::{assemble_qp, build_invariant_graph, extrapolate_basis, learn_spectrum};
use dgl_core::qp::{QpOptions, QpSolution};
use dgl_core::{DglError, DomainDataset, InvariantGraph, KernelConfig, RegularizationConfig};
use nalgebra::DVector;

use crate::config::{ClassifierKind, ExperimentConfig};
use crate::CliError;

/// Source and target domains after label-space alignment and (optional)
/// standardization. The source is fully labeled; masking happens per run.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub name: String,
    pub source: DomainDataset<f64>,
    pub target: DomainDataset<f64>,
}

/// Wall time of a named stage in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTime {
    pub stage: &'static str,
    pub ms: f64,
}

/// Learned domain-invariant graph over the source samples in their
/// original order, plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct GraphStage {
    pub graph: InvariantGraph<f64>,
    pub rank: usize,
    pub qp_iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub timings: Vec<StageTime>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub task: String,
    pub classifier: ClassifierKind,
    pub rate: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub n_target: usize,
    /// Includes the shared graph stage for graph-based classifiers.
    pub wall_time_ms: f64,
    pub qp_iterations: Option<usize>,
    pub kkt_residual: Option<f64>,
    pub timings: Vec<StageTime>,
}

fn stage_error(stage: &'static str, shapes: String) -> impl FnOnce(DglError) -> CliError {
    move |source| CliError::Stage {
        stage,
        shapes,
        source,
    }
}

fn shape(ds: &DomainDataset<f64>) -> String {
    format!("{}: {}×{}", ds.name(), ds.n_features(), ds.n_samples())
}

fn timed<R>(timings: &mut Vec<StageTime>, stage: &'static str, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let out = f();
    timings.push(StageTime {
        stage,
        ms: start.elapsed().as_secs_f64() * 1e3,
    });
    out
}

pub fn load_task(config: &ExperimentConfig) -> Result<TaskData, CliError> {
    let (source, target) = match (&config.synthetic, &config.source, &config.target) {
        (Some(spec), _, _) => generate_shift_pair::<f64>(&spec.spec())
            .map_err(stage_error("generate synthetic data", format!("{spec:?}")))?,
        (None, Some(s), Some(t)) => {
            let format = config.data_format()?;
            let source = load_dataset(s, format)
                .map_err(stage_error("load source", s.display().to_string()))?;
            let target = load_dataset(t, format)
                .map_err(stage_error("load target", t.display().to_string()))?;
            (source, target)
        }
        _ => return Err(CliError::Config("no data source configured".into())),
    };
    prepare_task(config.task_name(), source, target, config.standardize)
}

/// Aligns label spaces and feature dimensions, then standardizes on the
/// union of both domains when requested.
pub fn prepare_task(
    name: String,
    source: DomainDataset<f64>,
    target: DomainDataset<f64>,
    standardize_features: bool,
) -> Result<TaskData, CliError> {
    let shapes = format!("{} / {}", shape(&source), shape(&target));
    let labels = union_label_values(&[&source, &target]);
    let m = source.n_features().max(target.n_features());
    let align = |ds: &DomainDataset<f64>| ds.remap_labels(&labels).and_then(|d| d.pad_features(m));
    let source = align(&source).map_err(stage_error("align domains", shapes.clone()))?;
    let target = align(&target).map_err(stage_error("align domains", shapes.clone()))?;
    if source.labeled_count() != source.n_samples() {
        return Err(stage_error("align domains", shapes)(DglError::NoLabels));
    }
    target
        .evaluation_labels()
        .map_err(stage_error("align domains", shapes.clone()))?;
    let (source, target) = if standardize_features {
        let mut out = standardize(&[&source, &target])
            .map_err(stage_error("standardize", shapes))?
            .into_iter();
        (out.next().expect("two datasets"), out.next().expect("two datasets"))
    } else {
        (source, target)
    };
    Ok(TaskData {
        name,
        source,
        target,
    })
}

/// Builds `Lˢ`, `Lᵗ`, `Lˢᵗ`, decomposes `Lᵗ`, extrapolates the basis, learns
/// the spectrum and assembles the invariant graph.
pub fn build_graph(task: &TaskData, config: &ExperimentConfig) -> Result<GraphStage, CliError> {
    let shapes = format!("{} / {}", shape(&task.source), shape(&task.target));
    let err = |stage| stage_error(stage, shapes.clone());
    let sigma = config.sigma_graph;
    let mut timings = Vec::new();

    let (source_lap, cross, target_lap) = timed(&mut timings, "laplacians", || {
        let source_lap = laplacian(task.source.features(), sigma)?;
        let (_, cross) = joint_laplacian_blocks(&task.source, &task.target, sigma)?;
        let target_lap = laplacian(task.target.features(), sigma)?;
        Ok::<_, DglError>((source_lap, cross, target_lap))
    })
    .map_err(err("laplacians"))?;
    let spectrum = timed(&mut timings, "eigendecompose", || {
        eigendecompose(&target_lap, config.rank_tolerance)
    })
    .map_err(err("eigendecompose"))?;
    let basis = timed(&mut timings, "extrapolate", || extrapolate_basis(&cross, &spectrum))
        .map_err(err("extrapolate"))?;
    let qp = assemble_qp(&basis, &source_lap, config.xi()).map_err(err("assemble qp"))?;
    let options = QpOptions::default();
    let solved = timed(&mut timings, "spectrum qp", || {
        learn_spectrum(&qp, &options, config.qp_solver.method())
    });
    let (solution, converged) = match solved {
        Ok(s) => (s, true),
        Err(DglError::QpNoConvergence {
            iterations,
            kkt_residual,
            best_point,
            best_objective,
        }) => {
            log::warn!(
                "{}: spectrum QP stopped after {iterations} iterations with KKT residual {kkt_residual:.3e}; using the best iterate",
                task.name
            );
            let s = QpSolution {
                point: DVector::from_vec(best_point),
                objective: best_objective,
                kkt_residual,
                iterations,
                method: config.qp_solver.method(),
            };
            (s, false)
        }
        Err(e) => return Err(err("spectrum qp")(e)),
    };
    let graph = timed(&mut timings, "invariant graph", || {
        build_invariant_graph(&basis, &solution.point, config.xi())
    })
    .map_err(err("invariant graph"))?;
    for t in &timings {
        log::debug!("{}: stage {} took {:.3} ms", task.name, t.stage, t.ms);
    }
    Ok(GraphStage {
        graph,
        rank: basis.rank(),
        qp_iterations: solution.iterations,
        kkt_residual: solution.kkt_residual,
        converged,
        timings,
    })
}

/// Masks the source, trains `classifier` and scores the whole target domain.
/// `graph` must be present for graph-based classifiers.
pub fn run_cell(
    task: &TaskData,
    graph: Option<&GraphStage>,
    config: &ExperimentConfig,
    classifier: ClassifierKind,
    rate: f64,
    seed: u64,
) -> Result<ResultRecord, CliError> {
    let shapes = shape(&task.source);
    let err = |stage| stage_error(stage, shapes.clone());
    let mut timings = Vec::new();
    let policy = LabelMaskPolicy {
        rate,
        stratified: config.stratified,
        min_per_class: config.min_per_class,
        seed,
    };
    let (masked, order) = timed(&mut timings, "mask", || mask_labels_with_order(&task.source, &policy))
        .map_err(err("mask labels"))?;

    let stage = if classifier.uses_graph() {
        Some(graph.ok_or_else(|| CliError::Config(format!("{classifier} needs the graph stage")))?)
    } else {
        None
    };
    let (penalty_graph, lambda2) = match stage {
        Some(stage) => (stage.graph.permuted(&order), config.lambda2()),
        None => (InvariantGraph::empty(masked.n_samples()), 0.0),
    };
    let reg = RegularizationConfig::new(config.lambda1(), lambda2).map_err(err("train"))?;
    let kernel = match config.sigma_gram {
        Some(s) => KernelConfig::new(s),
        None => KernelConfig::median_heuristic(masked.features()),
    }
    .map_err(err("train"))?;
    let model = timed(&mut timings, "train", || {
        if classifier.is_svm() {
            train_svm(&masked, &penalty_graph, &reg, &kernel)
        } else {
            train_rls(&masked, &penalty_graph, &reg, &kernel)
        }
    })
    .map_err(err("train"))?;

    let truth = task.target.evaluation_labels().map_err(err("evaluate"))?;
    let predicted = timed(&mut timings, "predict", || model.predict(task.target.features()))
        .map_err(err("predict"))?;
    let acc = accuracy(&predicted, &truth).map_err(err("evaluate"))?;

    let mut all_timings = stage.map(|s| s.timings.clone()).unwrap_or_default();
    all_timings.extend(timings);
    Ok(ResultRecord {
        task: task.name.clone(),
        classifier,
        rate,
        seed,
        accuracy: acc,
        n_target: truth.len(),
        wall_time_ms: all_timings.iter().map(|t| t.ms).sum(),
        qp_iterations: stage.map(|s| s.qp_iterations),
        kkt_residual: stage.map(|s| s.kkt_residual),
        timings: all_timings,
    })
}

/// Runs the full pipeline once for the first configured classifier and rate.
pub fn run_pipeline(config: &ExperimentConfig, seed: u64) -> Result<ResultRecord, CliError> {
    config.validate()?;
    let task = load_task(config)?;
    let classifier = config.classifiers()[0];
    let graph = if classifier.uses_graph() {
        Some(build_graph(&task, config)?)
    } else {
        None
    };
    run_cell(&task, graph.as_ref(), config, classifier, config.rates[0], seed)
}
