use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DomainDataset;
use crate::error::{DglError, Result};
use crate::scalar::Real;

/// How many source labels stay visible, and which ones.
///
/// Sampling uses ChaCha8 (`rand_chacha`) seeded through `seed_from_u64`, so a
/// mask is a pure function of the dataset and the policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMaskPolicy {
    /// Fraction of samples that stay labeled, in `(0, 1]`.
    pub rate: f64,
    /// Sample per class so that every class keeps `min_per_class` labels.
    pub stratified: bool,
    pub min_per_class: usize,
    pub seed: u64,
}

impl LabelMaskPolicy {
    pub fn new(rate: f64, seed: u64) -> Self {
        Self {
            rate,
            stratified: true,
            min_per_class: 1,
            seed,
        }
    }

    /// Number of labeled samples this policy keeps for `n` samples and `c`
    /// classes, before any per-class feasibility check.
    pub fn labeled_count(&self, n: usize, c: usize) -> usize {
        let base = (self.rate * n as f64).round() as usize;
        let l = if self.stratified {
            base.max(c * self.min_per_class)
        } else {
            base.max(1)
        };
        l.min(n)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(DglError::InvalidParameter {
                name: "rate",
                value: self.rate.to_string(),
                reason: "label rate must lie in (0, 1]",
            });
        }
        if self.stratified && self.min_per_class == 0 {
            return Err(DglError::InvalidParameter {
                name: "min_per_class",
                value: "0".into(),
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Hides all but a policy-determined subset of labels.
///
/// The output is reordered so labeled samples come first (each group keeps
/// its original relative order). Hidden labels move to the shadow vector.
/// Feature columns are permuted, never modified.
pub fn mask_labels<T: Real>(
    dataset: &DomainDataset<T>,
    policy: &LabelMaskPolicy,
) -> Result<DomainDataset<T>> {
    mask_labels_with_order(dataset, policy).map(|(masked, _)| masked)
}

/// [`mask_labels`] that also returns the column order (new index → old
/// index), e.g. to permute a graph built on the unmasked dataset.
pub fn mask_labels_with_order<T: Real>(
    dataset: &DomainDataset<T>,
    policy: &LabelMaskPolicy,
) -> Result<(DomainDataset<T>, Vec<usize>)> {
    policy.validate()?;
    let truth: Vec<usize> = dataset
        .labels()
        .iter()
        .map(|l| l.ok_or(DglError::NoLabels))
        .collect::<Result<_>>()?;
    let n = truth.len();
    let c = dataset.num_classes();
    let l = policy.labeled_count(n, c);
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);

    let mut keep = vec![false; n];
    if l == n && !policy.stratified {
        keep.fill(true);
    } else if policy.stratified {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
        for (i, &y) in truth.iter().enumerate() {
            members[y].push(i);
        }
        let quotas = stratified_quotas(&members, l, policy.min_per_class)?;
        for (class_members, quota) in members.iter_mut().zip(quotas) {
            class_members.shuffle(&mut rng);
            for &i in &class_members[..quota] {
                keep[i] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &i in &order[..l] {
            keep[i] = true;
        }
    }

    let order: Vec<usize> = (0..n)
        .filter(|&i| keep[i])
        .chain((0..n).filter(|&i| !keep[i]))
        .collect();
    let features = dataset.features().select_columns(order.iter());
    let labels = order
        .iter()
        .map(|&i| keep[i].then_some(truth[i]))
        .collect();
    let shadow = order.iter().map(|&i| truth[i]).collect();
    let masked = DomainDataset::from_parts(
        dataset.name().to_string(),
        features,
        labels,
        Some(shadow),
        dataset.label_values().to_vec(),
    );
    Ok((masked, order))
}

/// Splits `total` labels across classes: every class first gets
/// `min_per_class`, the rest follows class proportions by largest remainder
/// (ties to the lower class id), capped by class size.
fn stratified_quotas(members: &[Vec<usize>], total: usize, min_per_class: usize) -> Result<Vec<usize>> {
    let n: usize = members.iter().map(Vec::len).sum();
    let mut quotas = Vec::with_capacity(members.len());
    for (class, m) in members.iter().enumerate() {
        if m.len() < min_per_class {
            return Err(DglError::InsufficientLabels {
                class,
                available: m.len(),
                required: min_per_class,
            });
        }
        quotas.push(min_per_class);
    }
    let mut remaining = total.saturating_sub(quotas.iter().sum());
    if remaining == 0 {
        return Ok(quotas);
    }

    let desire: Vec<f64> = members
        .iter()
        .zip(&quotas)
        .map(|(m, &q)| (total as f64 * m.len() as f64 / n as f64 - q as f64).max(0.0))
        .collect();
    for (k, d) in desire.iter().enumerate() {
        let add = (d.floor() as usize).min(members[k].len() - quotas[k]).min(remaining);
        quotas[k] += add;
        remaining -= add;
    }
    let mut by_remainder: Vec<usize> = (0..members.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = desire[a] - desire[a].floor();
        let rb = desire[b] - desire[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    while remaining > 0 {
        let before = remaining;
        for &k in &by_remainder {
            if remaining == 0 {
                break;
            }
            if quotas[k] < members[k].len() {
                quotas[k] += 1;
                remaining -= 1;
            }
        }
        if remaining == before {
            break;
        }
    }
    Ok(quotas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn balanced(n: usize, c: usize) -> DomainDataset<f64> {
        let x = DMatrix::from_fn(2, n, |i, j| (i * n + j) as f64);
        DomainDataset::new("b", x, (0..n).map(|j| Some(j % c)).collect(), c).unwrap()
    }

    #[test]
    fn full_rate_keeps_order() {
        let d = balanced(10, 2);
        let m = mask_labels(&d, &LabelMaskPolicy::new(1.0, 3)).unwrap();
        assert_eq!(m.features(), d.features());
        assert_eq!(m.labels(), d.labels());
    }

    #[test]
    fn five_percent_of_hundred() {
        let d = balanced(100, 2);
        let m = mask_labels(&d, &LabelMaskPolicy::new(0.05, 11)).unwrap();
        assert_eq!(m.labeled_count(), 5);
        let l = m.labeled_prefix().unwrap();
        assert_eq!(l, 5);
        for class in 0..2 {
            assert!(m.labels()[..l].contains(&Some(class)));
        }
    }

    #[test]
    fn minimum_per_class_raises_count() {
        let d = balanced(40, 4);
        let mut p = LabelMaskPolicy::new(0.05, 0);
        p.min_per_class = 2;
        let m = mask_labels(&d, &p).unwrap();
        assert_eq!(m.labeled_count(), 8);
    }

    #[test]
    fn too_few_samples_for_minimum() {
        let x = DMatrix::from_element(1, 3, 0.0);
        let d = DomainDataset::new("s", x, vec![Some(0), Some(0), Some(1)], 2).unwrap();
        let mut p = LabelMaskPolicy::new(0.5, 0);
        p.min_per_class = 2;
        assert!(matches!(
            mask_labels(&d, &p),
            Err(DglError::InsufficientLabels { class: 1, .. })
        ));
    }

    #[test]
    fn unstratified_count() {
        let d = balanced(50, 5);
        let mut p = LabelMaskPolicy::new(0.1, 9);
        p.stratified = false;
        assert_eq!(mask_labels(&d, &p).unwrap().labeled_count(), 5);
    }

    #[test]
    fn rejects_bad_rate_and_missing_labels() {
        let d = balanced(10, 2);
        assert!(mask_labels(&d, &LabelMaskPolicy::new(0.0, 0)).is_err());
        assert!(mask_labels(&d, &LabelMaskPolicy::new(1.5, 0)).is_err());
        let x = DMatrix::from_element(1, 2, 0.0);
        let partial = DomainDataset::new("p", x, vec![Some(0), None], 1).unwrap();
        assert!(mask_labels(&partial, &LabelMaskPolicy::new(0.5, 0)).is_err());
    }

    #[test]
    fn quotas_follow_proportions() {
        let members = vec![vec![0; 60], vec![0; 30], vec![0; 10]];
        assert_eq!(stratified_quotas(&members, 10, 1).unwrap(), vec![6, 3, 1]);
    }
}
