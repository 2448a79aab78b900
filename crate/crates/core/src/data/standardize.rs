use nalgebra::DVector;

use super::DomainDataset;
use crate::error::{DglError, Result};
use crate::scalar::Real;

/// Per-feature z-scoring fitted on the union of several datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T: Real> {
    mean: DVector<T>,
    /// Population standard deviation; `None` for zero-variance features,
    /// which are only centered.
    scale: Vec<Option<T>>,
}

impl<T: Real> Standardizer<T> {
    /// Fits mean and population standard deviation over all columns of all
    /// datasets together.
    pub fn fit(datasets: &[&DomainDataset<T>]) -> Result<Self> {
        let first = datasets
            .first()
            .ok_or_else(|| DglError::Empty("standardizer fit set".into()))?;
        let m = first.n_features();
        if let Some(bad) = datasets.iter().find(|d| d.n_features() != m) {
            return Err(DglError::DimensionMismatch {
                context: "standardize",
                expected: m,
                found: bad.n_features(),
            });
        }
        let n: usize = datasets.iter().map(|d| d.n_samples()).sum();
        let count = T::lit(n as f64);

        let mut mean = DVector::<T>::zeros(m);
        for d in datasets {
            for col in d.features().column_iter() {
                mean += col;
            }
        }
        mean /= count;

        let mut var = DVector::<T>::zeros(m);
        for d in datasets {
            for col in d.features().column_iter() {
                let centered = col - &mean;
                var += centered.component_mul(&centered);
            }
        }
        var /= count;

        let scale = (0..m)
            .map(|i| {
                let sd = var[i].sqrt();
                let floor = T::lit(1e-12) * (T::one() + mean[i].abs());
                if sd > floor {
                    Some(sd)
                } else {
                    log::warn!("feature {i} has zero variance; centering only");
                    None
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn transform(&self, dataset: &DomainDataset<T>) -> Result<DomainDataset<T>> {
        if dataset.n_features() != self.mean.len() {
            return Err(DglError::DimensionMismatch {
                context: "standardize",
                expected: self.mean.len(),
                found: dataset.n_features(),
            });
        }
        let mut x = dataset.features().clone();
        for mut col in x.column_iter_mut() {
            for (i, v) in col.iter_mut().enumerate() {
                let centered = *v - self.mean[i];
                *v = match self.scale[i] {
                    Some(sd) => centered / sd,
                    None => centered,
                };
            }
        }
        Ok(dataset.replace_features(x))
    }
}

/// Standardizes every dataset with statistics fitted on their union
/// (transductive: target features are available, target labels are not used).
pub fn standardize<T: Real>(datasets: &[&DomainDataset<T>]) -> Result<Vec<DomainDataset<T>>> {
    let fitted = Standardizer::fit(datasets)?;
    datasets.iter().map(|d| fitted.transform(d)).collect()
}
