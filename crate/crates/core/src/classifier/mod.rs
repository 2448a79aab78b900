//! Adaptive semi-supervised kernel classifiers.
//!
//! Both classifiers minimize a labeled-sample loss plus an RKHS norm penalty
//! (`lambda1`) and a manifold penalty `fᵀ L̄ f` over all source samples
//! (`lambda2`), where `L̄` is the learned domain-invariant graph. By the
//! representer theorem the model is `f(x) = Σ_i α_i k(x, x_i) (+ b)` over the
//! source samples.

mod model;
mod rls;
mod smo;
mod svm;

pub use model::{read_model, write_model};
pub use rls::train_rls;
pub use smo::{dual_objective, solve_dual, DualSolution, SmoOptions};
pub use svm::{train_svm, train_svm_with};

use nalgebra::DMatrix;

use crate::error::{DglError, Result};
use crate::graph::{gaussian_affinity, self_affinity};
use crate::scalar::Real;

/// Gaussian kernel used for the Gram matrix `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig<T: Real> {
    bandwidth: T,
}

impl<T: Real> KernelConfig<T> {
    pub fn new(bandwidth: T) -> Result<Self> {
        if bandwidth > T::zero() && bandwidth.is_finite() {
            Ok(Self { bandwidth })
        } else {
            Err(DglError::InvalidParameter {
                name: "kernel bandwidth",
                value: bandwidth.to_string(),
                reason: "must be positive and finite",
            })
        }
    }

    /// Bandwidth set to the median pairwise Euclidean distance of the
    /// columns of `features` (falls back to 1 when all points coincide).
    pub fn median_heuristic(features: &DMatrix<T>) -> Result<Self> {
        let n = features.ncols();
        let mut distances = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for j in 0..n {
            for i in (j + 1)..n {
                distances.push((features.column(i) - features.column(j)).norm());
            }
        }
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let median = distances.get(distances.len() / 2).copied().unwrap_or(T::zero());
        if median > T::zero() {
            Self::new(median)
        } else {
            Self::new(T::one())
        }
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }
}

/// Regularization weights: `lambda1` on the RKHS norm, `lambda2` on the
/// geometric (manifold) penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationConfig<T: Real> {
    lambda1: T,
    lambda2: T,
}

impl<T: Real> RegularizationConfig<T> {
    pub fn new(lambda1: T, lambda2: T) -> Result<Self> {
        for (name, value) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !(value >= T::zero()) || !value.is_finite() {
                return Err(DglError::InvalidParameter {
                    name,
                    value: value.to_string(),
                    reason: "regularization weight must be finite and nonnegative",
                });
            }
        }
        Ok(Self { lambda1, lambda2 })
    }

    pub fn lambda1(&self) -> T {
        self.lambda1
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rls,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rls => "rls",
            ModelKind::Svm => "svm",
        }
    }
}

/// Trained kernel expansion: one coefficient column (and bias) per class.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveModel<T: Real> {
    pub(crate) coefficients: DMatrix<T>,
    pub(crate) bias: nalgebra::DVector<T>,
    pub(crate) training_features: DMatrix<T>,
    pub(crate) kernel: KernelConfig<T>,
    pub(crate) regularization: RegularizationConfig<T>,
    pub(crate) kind: ModelKind,
}

impl<T: Real> AdaptiveModel<T> {
    /// Assembles a model from explicit parts, checking shapes and finiteness.
    pub fn from_parts(
        kind: ModelKind,
        coefficients: DMatrix<T>,
        bias: nalgebra::DVector<T>,
        training_features: DMatrix<T>,
        kernel: KernelConfig<T>,
        regularization: RegularizationConfig<T>,
    ) -> Result<Self> {
        if coefficients.nrows() != training_features.ncols() {
            return Err(DglError::DimensionMismatch {
                context: "model coefficients vs training samples",
                expected: training_features.ncols(),
                found: coefficients.nrows(),
            });
        }
        if bias.len() != coefficients.ncols() {
            return Err(DglError::DimensionMismatch {
                context: "model bias vs classes",
                expected: coefficients.ncols(),
                found: bias.len(),
            });
        }
        if coefficients.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(DglError::NonFinite {
                context: "model coefficients",
            });
        }
        Ok(Self {
            coefficients,
            bias,
            training_features,
            kernel,
            regularization,
            kind,
        })
    }

    /// `n_s × C` expansion coefficients α.
    pub fn coefficients(&self) -> &DMatrix<T> {
        &self.coefficients
    }

    /// Per-class bias (all zero for RLS).
    pub fn bias(&self) -> &nalgebra::DVector<T> {
        &self.bias
    }

    pub fn training_features(&self) -> &DMatrix<T> {
        &self.training_features
    }

    pub fn kernel(&self) -> &KernelConfig<T> {
        &self.kernel
    }

    pub fn regularization(&self) -> &RegularizationConfig<T> {
        &self.regularization
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.coefficients.ncols()
    }

    /// `C × q` class scores `αᵀ K(X_train, queries) + b`.
    pub fn decision_scores(&self, queries: &DMatrix<T>) -> Result<DMatrix<T>> {
        if queries.nrows() != self.training_features.nrows() {
            return Err(DglError::DimensionMismatch {
                context: "query feature dimension",
                expected: self.training_features.nrows(),
                found: queries.nrows(),
            });
        }
        let cross = gaussian_affinity(&self.training_features, queries, self.kernel.bandwidth)?;
        let mut scores = self.coefficients.transpose() * cross;
        for (mut row, &b) in scores.row_iter_mut().zip(self.bias.iter()) {
            row.add_scalar_mut(b);
        }
        Ok(scores)
    }

    /// Arg-max class per query column; ties go to the lowest class id.
    pub fn predict(&self, queries: &DMatrix<T>) -> Result<Vec<usize>> {
        let scores = self.decision_scores(queries)?;
        Ok(scores
            .column_iter()
            .map(|col| {
                let mut best = 0;
                for c in 1..col.len() {
                    if col[c] > col[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }
}

/// Free-function form of [`AdaptiveModel::predict`].
pub fn predict<T: Real>(model: &AdaptiveModel<T>, queries: &DMatrix<T>) -> Result<Vec<usize>> {
    model.predict(queries)
}

/// Gaussian Gram matrix over the columns of `features` (unit diagonal).
pub fn gram<T: Real>(features: &DMatrix<T>, kernel: &KernelConfig<T>) -> Result<DMatrix<T>> {
    if features.ncols() == 0 {
        return Err(DglError::Empty("gram point set".into()));
    }
    self_affinity(features, kernel.bandwidth)
}

/// Percentage of predictions equal to the ground truth.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(DglError::DimensionMismatch {
            context: "accuracy",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(DglError::Empty("accuracy evaluation set".into()));
    }
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * correct as f64 / truth.len() as f64)
}

/// One-hot class columns `J Yᵀ` for the `l` leading labeled samples.
pub(crate) fn labeled_targets<T: Real>(labels: &[Option<usize>], l: usize, classes: usize) -> DMatrix<T> {
    let mut y = DMatrix::zeros(labels.len(), classes);
    for (i, label) in labels.iter().take(l).enumerate() {
        if let Some(c) = label {
            y[(i, *c)] = T::one();
        }
    }
    y
}

/// Rough condition estimate from the LU pivots.
pub(crate) fn pivot_condition<T: Real>(u_diagonal: impl Iterator<Item = T>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in u_diagonal {
        let a = v.abs().as_f64();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}
