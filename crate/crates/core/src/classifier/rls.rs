use nalgebra::{DMatrix, DVector};

use super::{gram, labeled_targets, pivot_condition, AdaptiveModel, KernelConfig, ModelKind, RegularizationConfig};
use crate::data::DomainDataset;
use crate::error::{DglError, Result};
use crate::nystrom::InvariantGraph;
use crate::scalar::Real;

/// Adaptive regularized least squares.
///
/// Solves `((J + λ₂ l L̄) K + λ₁ l I) α = J Yᵀ` by LU, where `J` selects the
/// `l` leading labeled samples and `Y` is the one-hot (0/1) label matrix.
/// With `λ₂ = 0` this is plain kernel ridge regression on the labeled part.
pub fn train_rls<T: Real>(
    source: &DomainDataset<T>,
    graph: &InvariantGraph<T>,
    reg: &RegularizationConfig<T>,
    kernel: &KernelConfig<T>,
) -> Result<AdaptiveModel<T>> {
    let n = source.n_samples();
    let l = source.labeled_prefix()?;
    if l == 0 {
        return Err(DglError::NoLabels);
    }
    if graph.size() != n {
        return Err(DglError::DimensionMismatch {
            context: "invariant graph vs source samples",
            expected: n,
            found: graph.size(),
        });
    }
    let k = gram(source.features(), kernel)?;
    let l_scale = T::lit(l as f64);

    let mut system = if reg.lambda2() > T::zero() {
        (graph.matrix() * &k) * (reg.lambda2() * l_scale)
    } else {
        DMatrix::zeros(n, n)
    };
    {
        let mut top = system.rows_mut(0, l);
        top += k.rows(0, l);
    }
    for i in 0..n {
        system[(i, i)] += reg.lambda1() * l_scale;
    }

    let rhs = labeled_targets::<T>(source.labels(), l, source.num_classes());
    let lu = system.lu();
    let alpha = lu
        .solve(&rhs)
        .filter(|a| a.iter().all(|v| v.is_finite()))
        .ok_or_else(|| DglError::Singular {
            context: "adaptive RLS system",
            condition_estimate: pivot_condition(lu.u().diagonal().iter().copied()),
        })?;

    AdaptiveModel::from_parts(
        ModelKind::Rls,
        alpha,
        DVector::zeros(source.num_classes()),
        source.features().clone(),
        *kernel,
        *reg,
    )
}
