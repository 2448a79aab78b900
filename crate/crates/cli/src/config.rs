//! JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dgl_core::data::{DataFormat, SyntheticShiftSpec};
use dgl_core::qp::QpMethod;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DglRls,
    DglSvm,
    Rls,
    Svm,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::DglRls => "dgl_rls",
            ClassifierKind::DglSvm => "dgl_svm",
            ClassifierKind::Rls => "rls",
            ClassifierKind::Svm => "svm",
        }
    }

    /// Baselines skip the graph stage and train with `λ₂ = 0`.
    pub fn uses_graph(self) -> bool {
        matches!(self, ClassifierKind::DglRls | ClassifierKind::DglSvm)
    }

    pub fn is_svm(self) -> bool {
        matches!(self, ClassifierKind::DglSvm | ClassifierKind::Svm)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "dgl_rls" => Ok(ClassifierKind::DglRls),
            "dgl_svm" => Ok(ClassifierKind::DglSvm),
            "rls" => Ok(ClassifierKind::Rls),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(CliError::Config(format!(
                "unknown classifier `{other}` (expected dgl_rls, dgl_svm, rls or svm)"
            ))),
        }
    }
}

/// Parameter defaults: `image` is λ₁=10, λ₂=0.001, ξ=1; `text` is λ₁=5,
/// λ₂=0.001, ξ=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Image,
    Text,
}

impl Profile {
    pub fn lambda1(self) -> f64 {
        match self {
            Profile::Image => 10.0,
            Profile::Text => 5.0,
        }
    }

    pub fn lambda2(self) -> f64 {
        0.001
    }

    pub fn xi(self) -> f64 {
        match self {
            Profile::Image => 1.0,
            Profile::Text => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpSolver {
    #[default]
    ActiveSet,
    ProjectedGradient,
}

impl QpSolver {
    pub fn method(self) -> QpMethod {
        match self {
            QpSolver::ActiveSet => QpMethod::ActiveSet,
            QpSolver::ProjectedGradient => QpMethod::ProjectedGradient,
        }
    }
}

/// Rotated-and-shifted Gaussian blob pair; class means sit on a regular
/// polygon with adjacent means `separation` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub classes: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub separation: f64,
    #[serde(default = "one")]
    pub noise_std: f64,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub shift: f64,
    pub samples_per_class: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn spec(&self) -> SyntheticShiftSpec {
        SyntheticShiftSpec::polygon(
            self.classes,
            self.dim,
            self.separation,
            self.noise_std,
            self.rotation,
            self.shift,
            self.samples_per_class,
            self.seed,
        )
    }
}

fn default_dim() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(ClassifierKind),
    Many(Vec<ClassifierKind>),
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<ClassifierKind>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(k) => vec![k],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Task name used in result tables; defaults to `<source>_vs_<target>`
    /// or `synthetic`.
    #[serde(default)]
    pub task: Option<String>,
    #[serde(default)]
    pub source: Option<PathBuf>,
    #[serde(default)]
    pub target: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, alias = "classifier", deserialize_with = "one_or_many")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default = "one")]
    pub sigma_graph: f64,
    /// Gram-kernel bandwidth; `None` selects the median pairwise distance of
    /// the source features.
    #[serde(default = "default_sigma_gram")]
    pub sigma_gram: Option<f64>,
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rank_tolerance")]
    pub rank_tolerance: f64,
    #[serde(default = "yes")]
    pub standardize: bool,
    #[serde(default = "yes")]
    pub stratified: bool,
    #[serde(default = "default_min_per_class")]
    pub min_per_class: usize,
    #[serde(default)]
    pub qp_solver: QpSolver,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_format() -> String {
    "csv".to_string()
}

fn default_sigma_gram() -> Option<f64> {
    Some(1.0)
}

fn default_rates() -> Vec<f64> {
    vec![0.05]
}

fn default_repeats() -> usize {
    5
}

fn default_rank_tolerance() -> f64 {
    dgl_core::DEFAULT_RANK_TOLERANCE
}

fn default_min_per_class() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        // Relative data paths are resolved against the config file.
        if let Some(dir) = path.parent() {
            for p in [&mut config.source, &mut config.target, &mut config.output]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match (&self.synthetic, &self.source, &self.target) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return bad("give either `synthetic` or `source`/`target`, not both".into()),
            _ => return bad("`source` and `target` paths (or a `synthetic` spec) are required".into()),
        }
        self.data_format()?;
        if self.repeats == 0 {
            return bad("`repeats` must be at least 1".into());
        }
        if self.rates.is_empty() {
            return bad("`rates` must not be empty".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return bad(format!("label rate {r} outside (0, 1]"));
        }
        for (name, v) in [("lambda1", self.lambda1()), ("lambda2", self.lambda2())] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("`{name}` must be finite and nonnegative, got {v}"));
            }
        }
        if !(self.xi() >= 1.0 && self.xi().is_finite()) {
            return bad(format!("`xi` must be at least 1, got {}", self.xi()));
        }
        if !(self.sigma_graph > 0.0 && self.sigma_graph.is_finite()) {
            return bad(format!("`sigma_graph` must be positive, got {}", self.sigma_graph));
        }
        if let Some(s) = self.sigma_gram {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("`sigma_gram` must be positive, got {s}"));
            }
        }
        if !(self.rank_tolerance >= 0.0 && self.rank_tolerance < 1.0) {
            return bad(format!("`rank_tolerance` must lie in [0, 1), got {}", self.rank_tolerance));
        }
        Ok(())
    }

    pub fn data_format(&self) -> Result<DataFormat, CliError> {
        self.format
            .parse()
            .map_err(|e| CliError::Config(format!("`format`: {e}")))
    }

    pub fn classifiers(&self) -> Vec<ClassifierKind> {
        if self.classifiers.is_empty() {
            vec![ClassifierKind::DglRls]
        } else {
            self.classifiers.clone()
        }
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1.unwrap_or(self.profile.lambda1())
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2.unwrap_or(self.profile.lambda2())
    }

    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or(self.profile.xi())
    }

    pub fn task_name(&self) -> String {
        if let Some(t) = &self.task {
            return t.clone();
        }
        let stem = |p: &Option<PathBuf>| {
            p.as_deref()
                .and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        };
        match &self.synthetic {
            Some(_) => "synthetic".to_string(),
            None => format!("{}_vs_{}", stem(&self.source), stem(&self.target)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_defaults() {
        let c = ExperimentConfig::from_json(r#"{"synthetic": {"classes": 2, "separation": 6, "samples_per_class": 5}}"#).unwrap();
        assert_eq!((c.lambda1(), c.lambda2(), c.xi()), (10.0, 0.001, 1.0));
        assert_eq!(c.classifiers(), vec![ClassifierKind::DglRls]);
        let t = ExperimentConfig::from_json(
            r#"{"source": "a.csv", "target": "b.csv", "profile": "text", "classifier": "svm"}"#,
        )
        .unwrap();
        assert_eq!((t.lambda1(), t.lambda2(), t.xi()), (5.0, 0.001, 2.0));
        assert_eq!(t.classifiers(), vec![ClassifierKind::Svm]);
        assert_eq!(t.task_name(), "a_vs_b");
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{}"#,
            r#"{"source": "a", "target": "b", "repeats": 0}"#,
            r#"{"source": "a", "target": "b", "rates": [0.0]}"#,
            r#"{"source": "a", "target": "b", "rates": [1.5]}"#,
            r#"{"source": "a", "target": "b", "xi": 0.5}"#,
            r#"{"source": "a", "target": "b", "lambda1": -1}"#,
            r#"{"source": "a", "target": "b", "format": "xml"}"#,
            r#"{"source": "a", "target": "b", "typo": 1}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
