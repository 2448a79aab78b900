use nalgebra::{DMatrix, DVector};

use super::smo::{solve_dual, SmoOptions};
use super::{gram, pivot_condition, AdaptiveModel, KernelConfig, ModelKind, RegularizationConfig};
use crate::data::DomainDataset;
use crate::error::{DglError, Result};
use crate::nystrom::InvariantGraph;
use crate::scalar::Real;

/// Adaptive hinge-loss classifier, one-vs-rest over the classes.
///
/// With `M = 2λ₁I + 2λ₂ L̄ K`, each binary split solves the dual over
/// `Q = Ŷ Ĵ K M⁻¹ Ĵᵀ Ŷ` with box `[0, 1/l]` by SMO, then recovers
/// `α = M⁻¹ Ĵᵀ Ŷ β`. A split whose labeled samples all fall on one side gets
/// a constant scorer.
pub fn train_svm<T: Real>(
    source: &DomainDataset<T>,
    graph: &InvariantGraph<T>,
    reg: &RegularizationConfig<T>,
    kernel: &KernelConfig<T>,
) -> Result<AdaptiveModel<T>> {
    train_svm_with(source, graph, reg, kernel, &SmoOptions::default())
}

pub fn train_svm_with<T: Real>(
    source: &DomainDataset<T>,
    graph: &InvariantGraph<T>,
    reg: &RegularizationConfig<T>,
    kernel: &KernelConfig<T>,
    smo: &SmoOptions,
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
    let two = T::lit(2.0);
    let k = gram(source.features(), kernel)?;

    let mut m = if reg.lambda2() > T::zero() {
        (graph.matrix() * &k) * (two * reg.lambda2())
    } else {
        DMatrix::zeros(n, n)
    };
    for i in 0..n {
        m[(i, i)] += two * reg.lambda1();
    }
    let mut selector = DMatrix::<T>::zeros(n, l);
    for i in 0..l {
        selector[(i, i)] = T::one();
    }
    let lu = m.lu();
    let x = lu
        .solve(&selector)
        .filter(|a| a.iter().all(|v| v.is_finite()))
        .ok_or_else(|| DglError::Singular {
            context: "adaptive SVM system",
            condition_estimate: pivot_condition(lu.u().diagonal().iter().copied()),
        })?;
    let p = k.rows(0, l) * &x;

    let classes = source.num_classes();
    let upper = T::one() / T::lit(l as f64);
    let mut alpha = DMatrix::<T>::zeros(n, classes);
    let mut bias = DVector::<T>::zeros(classes);
    let labels = source.labels();
    for c in 0..classes {
        let y: Vec<T> = labels[..l]
            .iter()
            .map(|lab| if *lab == Some(c) { T::one() } else { -T::one() })
            .collect();
        let positives = y.iter().filter(|v| **v > T::zero()).count();
        if positives == 0 || positives == l {
            log::warn!(
                "class {c}: labeled samples are all on one side of the split; using a constant scorer"
            );
            bias[c] = if positives == 0 { -T::one() } else { T::one() };
            continue;
        }
        let mut q = DMatrix::<T>::from_fn(l, l, |i, j| y[i] * p[(i, j)] * y[j]);
        let qt = q.transpose();
        q = (q + qt) * T::lit(0.5);
        let dual = solve_dual(&q, &y, upper, smo)?;
        let signed = DVector::<T>::from_fn(l, |i, _| y[i] * dual.beta[i]);
        alpha.set_column(c, &(&x * signed));
        bias[c] = dual.bias;
    }

    AdaptiveModel::from_parts(
        ModelKind::Svm,
        alpha,
        bias,
        source.features().clone(),
        *kernel,
        *reg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn separates_two_clusters() {
        let x = dmatrix![-2.0, 2.0, -2.2, 2.1, -1.9, 1.8];
        let labels = vec![Some(0), Some(1), Some(0), Some(1), None, None];
        let ds = DomainDataset::new("s", x, labels, 2).unwrap();
        let reg = RegularizationConfig::new(0.01, 0.0).unwrap();
        let model = train_svm(&ds, &InvariantGraph::empty(6), &reg, &KernelConfig::new(1.0).unwrap())
            .unwrap();
        assert_eq!(model.predict(&dmatrix![-2.1, 2.05]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn one_sided_split_is_constant() {
        let x = dmatrix![0.0, 1.0, 2.0];
        let ds = DomainDataset::new("s", x, vec![Some(0), Some(0), None], 3).unwrap();
        let reg = RegularizationConfig::new(1.0, 0.0).unwrap();
        let model = train_svm(&ds, &InvariantGraph::empty(3), &reg, &KernelConfig::new(1.0).unwrap())
            .unwrap();
        assert_eq!(model.bias().as_slice(), &[1.0, -1.0, -1.0]);
        assert!(model.coefficients().iter().all(|v| *v == 0.0));
        assert_eq!(model.predict(&dmatrix![5.0]).unwrap(), vec![0]);
    }
}
