//! Domain datasets: loading, label masking, standardization and synthetic
//! covariate-shift generators.

mod io;
mod mask;
mod standardize;
mod synthetic;

pub use io::{load_dataset, parse_dataset, write_dataset, DataFormat};
pub use mask::{mask_labels, mask_labels_with_order, LabelMaskPolicy};
pub use standardize::{standardize, Standardizer};
pub use synthetic::{generate_shift_pair, SyntheticShiftSpec};

use nalgebra::DMatrix;

use crate::error::{DglError, Result};
use crate::scalar::Real;

/// Feature matrix (one column per sample) plus partially observed labels.
///
/// Labels live in a dense `[0, C)` id space; `label_values` maps each id back
/// to the label found in the source file. A `None` label means the sample is
/// unlabeled. After [`mask_labels`], the hidden labels of the source domain
/// are kept in a shadow vector reachable only through
/// [`DomainDataset::true_labels`], which training code never reads.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset<T: Real> {
    name: String,
    features: DMatrix<T>,
    labels: Vec<Option<usize>>,
    true_labels: Option<Vec<usize>>,
    num_classes: usize,
    label_values: Vec<i64>,
}

impl<T: Real> DomainDataset<T> {
    /// Builds a dataset whose class ids are `0..num_classes`.
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<T>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let label_values = (0..num_classes as i64).collect();
        Self::with_label_values(name, features, labels, label_values)
    }

    /// Builds a dataset with an explicit id → original label mapping.
    pub fn with_label_values(
        name: impl Into<String>,
        features: DMatrix<T>,
        labels: Vec<Option<usize>>,
        label_values: Vec<i64>,
    ) -> Result<Self> {
        let name = name.into();
        let n = features.ncols();
        if n == 0 || features.nrows() == 0 {
            return Err(DglError::Empty(name));
        }
        if labels.len() != n {
            return Err(DglError::DimensionMismatch {
                context: "dataset labels",
                expected: n,
                found: labels.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DglError::NonFinite {
                context: "dataset features",
            });
        }
        let num_classes = label_values.len();
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= num_classes) {
            return Err(DglError::InvalidParameter {
                name: "label",
                value: bad.to_string(),
                reason: "class id outside the label space",
            });
        }
        Ok(Self {
            name,
            features,
            labels,
            true_labels: None,
            num_classes,
            label_values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// `m × n` feature matrix, one column per sample.
    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label_values(&self) -> &[i64] {
        &self.label_values
    }

    /// Visible labels; `None` marks an unlabeled sample.
    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn labeled_mask(&self) -> Vec<bool> {
        self.labels.iter().map(Option::is_some).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Labels hidden by masking, if this dataset went through [`mask_labels`].
    pub fn true_labels(&self) -> Option<&[usize]> {
        self.true_labels.as_deref()
    }

    /// Ground truth for evaluation: the shadow labels when present, otherwise
    /// the visible labels, which must then all be known.
    pub fn evaluation_labels(&self) -> Result<Vec<usize>> {
        if let Some(truth) = &self.true_labels {
            return Ok(truth.clone());
        }
        self.labels
            .iter()
            .map(|l| l.ok_or(DglError::NoLabels))
            .collect()
    }

    /// Number of leading labeled columns, or an error if a labeled column
    /// follows an unlabeled one.
    pub fn labeled_prefix(&self) -> Result<usize> {
        let l = self.labels.iter().take_while(|l| l.is_some()).count();
        if let Some(pos) = self.labels[l..].iter().position(Option::is_some) {
            return Err(DglError::LabelOrder(l + pos));
        }
        Ok(l)
    }

    /// Re-expresses class ids in the given label space. Every label value
    /// present in this dataset must appear in `label_values`.
    pub fn remap_labels(&self, label_values: &[i64]) -> Result<Self> {
        let lookup = |id: usize| -> Result<usize> {
            let value = self.label_values[id];
            label_values
                .iter()
                .position(|&v| v == value)
                .ok_or(DglError::InvalidParameter {
                    name: "label",
                    value: value.to_string(),
                    reason: "label value missing from the target label space",
                })
        };
        let labels = self
            .labels
            .iter()
            .map(|l| l.map(lookup).transpose())
            .collect::<Result<Vec<_>>>()?;
        let true_labels = self
            .true_labels
            .as_ref()
            .map(|t| t.iter().map(|&c| lookup(c)).collect::<Result<Vec<_>>>())
            .transpose()?;
        Ok(Self {
            name: self.name.clone(),
            features: self.features.clone(),
            labels,
            true_labels,
            num_classes: label_values.len(),
            label_values: label_values.to_vec(),
        })
    }

    /// Zero-pads the feature dimension up to `m` (sparse files may omit
    /// trailing all-zero features).
    pub fn pad_features(&self, m: usize) -> Result<Self> {
        let current = self.n_features();
        if m < current {
            return Err(DglError::DimensionMismatch {
                context: "feature padding",
                expected: current,
                found: m,
            });
        }
        let mut out = self.clone();
        out.features = self.features.clone().resize_vertically(m, T::zero());
        Ok(out)
    }

    pub(crate) fn replace_features(&self, features: DMatrix<T>) -> Self {
        debug_assert_eq!(features.ncols(), self.n_samples());
        Self {
            features,
            ..self.clone()
        }
    }

    pub(crate) fn from_parts(
        name: String,
        features: DMatrix<T>,
        labels: Vec<Option<usize>>,
        true_labels: Option<Vec<usize>>,
        label_values: Vec<i64>,
    ) -> Self {
        Self {
            name,
            features,
            labels,
            true_labels,
            num_classes: label_values.len(),
            label_values,
        }
    }
}

/// Union of the label spaces of several datasets, sorted ascending.
pub fn union_label_values<T: Real>(datasets: &[&DomainDataset<T>]) -> Vec<i64> {
    let mut values: Vec<i64> = datasets
        .iter()
        .flat_map(|d| d.label_values().iter().copied())
        .collect();
    values.sort_unstable();
    values.dedup();
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DomainDataset<f64> {
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        DomainDataset::new("toy", x, vec![Some(0), None, Some(1)], 2).unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(
            DomainDataset::new("bad", x, vec![None, None], 1),
            Err(DglError::NonFinite { .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_label() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(DomainDataset::new("bad", x, vec![Some(3)], 2).is_err());
    }

    #[test]
    fn labeled_prefix_detects_order() {
        let d = toy();
        assert!(matches!(d.labeled_prefix(), Err(DglError::LabelOrder(2))));
    }

    #[test]
    fn remap_into_union_space() {
        let x = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let d = DomainDataset::with_label_values("d", x, vec![Some(0), Some(1)], vec![3, 7])
            .unwrap();
        let r = d.remap_labels(&[1, 3, 7]).unwrap();
        assert_eq!(r.labels(), &[Some(1), Some(2)]);
        assert_eq!(r.num_classes(), 3);
        assert!(d.remap_labels(&[3]).is_err());
    }

    #[test]
    fn padding_appends_zero_rows() {
        let d = toy().pad_features(3).unwrap();
        assert_eq!(d.n_features(), 3);
        assert_eq!(d.features()[(2, 1)], 0.0);
    }
}
