//! Gaussian affinities, unnormalized graph Laplacians and their spectra.
//!
//! All matrices are dense. Samples are matrix columns.

use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};

use crate::data::DomainDataset;
use crate::error::{DglError, Result};
use crate::scalar::Real;

/// Default relative cutoff below which eigenpairs are discarded.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

/// Absolute symmetry tolerance, scaled by `max(1, max |entry|)`.
const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Unnormalized Laplacian `L = D - W` of a Gaussian affinity graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian<T: Real> {
    matrix: DMatrix<T>,
    sigma: T,
}

impl<T: Real> GraphLaplacian<T> {
    /// Wraps an arbitrary symmetric matrix, e.g. a hand-built graph.
    pub fn from_matrix(matrix: DMatrix<T>, sigma: T) -> Result<Self> {
        check_sigma(sigma)?;
        check_symmetric(&matrix)?;
        Ok(Self { matrix, sigma })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Source-rows × target-columns block of the joint Laplacian, `-W^{st}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossDomainBlock<T: Real> {
    matrix: DMatrix<T>,
}

impl<T: Real> CrossDomainBlock<T> {
    pub fn from_matrix(matrix: DMatrix<T>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }
}

/// Leading eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpectrum<T: Real> {
    eigenvectors: DMatrix<T>,
    eigenvalues: DVector<T>,
    dropped: usize,
}

impl<T: Real> GraphSpectrum<T> {
    /// Builds a spectrum from given pairs; eigenvalues must be descending.
    pub fn from_parts(eigenvectors: DMatrix<T>, eigenvalues: DVector<T>) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(DglError::DimensionMismatch {
                context: "spectrum eigenpairs",
                expected: eigenvectors.ncols(),
                found: eigenvalues.len(),
            });
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(DglError::InvalidParameter {
                name: "eigenvalues",
                value: format!("{}", eigenvalues.transpose()),
                reason: "must be sorted descending",
            });
        }
        Ok(Self {
            eigenvectors,
            eigenvalues,
            dropped: 0,
        })
    }

    /// `n × r` matrix with orthonormal columns.
    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// Retained rank `r`.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of eigenpairs discarded by the rank cutoff.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// `Φ diag(Λ) Φᵀ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &value) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= value;
        }
        &scaled * self.eigenvectors.transpose()
    }
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if sigma > T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(DglError::InvalidParameter {
            name: "sigma",
            value: sigma.to_string(),
            reason: "bandwidth must be positive and finite",
        })
    }
}

fn check_finite<T: Real>(x: &DMatrix<T>, context: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DglError::NonFinite { context })
    }
}

/// Largest `|a_ij - a_ji|`.
pub fn max_asymmetry<T: Real>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric<T: Real>(a: &DMatrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(DglError::DimensionMismatch {
            context: "square matrix",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let scale = a.amax().max(T::one());
    let asym = max_asymmetry(a);
    if asym > T::lit(SYMMETRY_TOLERANCE) * scale {
        return Err(DglError::NotSymmetric {
            max_asymmetry: asym.as_f64(),
        });
    }
    Ok(())
}

#[inline]
fn squared_distance<T: Real>(a: DVectorView<'_, T>, b: DVectorView<'_, T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// `exp(-‖a_i - b_j‖² / (2σ²))` for every column pair, a `p × q` matrix.
pub fn gaussian_affinity<T: Real>(
    features_a: &DMatrix<T>,
    features_b: &DMatrix<T>,
    sigma: T,
) -> Result<DMatrix<T>> {
    check_sigma(sigma)?;
    if features_a.nrows() != features_b.nrows() {
        return Err(DglError::DimensionMismatch {
            context: "gaussian affinity feature dimension",
            expected: features_a.nrows(),
            found: features_b.nrows(),
        });
    }
    check_finite(features_a, "affinity input")?;
    check_finite(features_b, "affinity input")?;
    let scale = -T::one() / (T::lit(2.0) * sigma * sigma);
    let (p, q) = (features_a.ncols(), features_b.ncols());
    let mut out = DMatrix::zeros(p, q);
    for j in 0..q {
        let b = features_b.column(j);
        for i in 0..p {
            out[(i, j)] = (squared_distance(features_a.column(i).into(), b.into()) * scale).exp();
        }
    }
    Ok(out)
}

/// Symmetric affinity of a point set with itself; the diagonal is exactly 1.
pub(crate) fn self_affinity<T: Real>(features: &DMatrix<T>, sigma: T) -> Result<DMatrix<T>> {
    check_sigma(sigma)?;
    check_finite(features, "affinity input")?;
    let scale = -T::one() / (T::lit(2.0) * sigma * sigma);
    let n = features.ncols();
    let mut w = DMatrix::identity(n, n);
    for j in 0..n {
        let b = features.column(j);
        for i in (j + 1)..n {
            let v = (squared_distance(features.column(i).into(), b.into()) * scale).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

fn laplacian_from_affinity<T: Real>(w: &DMatrix<T>) -> DMatrix<T> {
    let n = w.nrows();
    let mut l = -w.clone();
    for i in 0..n {
        // Self-similarity cancels in D - W: the diagonal sums off-diagonal weights.
        let degree = (0..n)
            .filter(|&j| j != i)
            .fold(T::zero(), |acc, j| acc + w[(i, j)]);
        l[(i, i)] = degree;
    }
    l
}

/// Laplacian `D - W` of the Gaussian affinity graph on the columns of
/// `features`.
pub fn laplacian<T: Real>(features: &DMatrix<T>, sigma: T) -> Result<GraphLaplacian<T>> {
    if features.ncols() == 0 {
        return Err(DglError::Empty("laplacian point set".into()));
    }
    let w = self_affinity(features, sigma)?;
    Ok(GraphLaplacian {
        matrix: laplacian_from_affinity(&w),
        sigma,
    })
}

/// Laplacian over `[X_s, X_t]` (source columns first) and its
/// source × target block.
pub fn joint_laplacian_blocks<T: Real>(
    source: &DomainDataset<T>,
    target: &DomainDataset<T>,
    sigma: T,
) -> Result<(GraphLaplacian<T>, CrossDomainBlock<T>)> {
    joint_laplacian_from_features(source.features(), target.features(), sigma)
}

/// Matrix-level form of [`joint_laplacian_blocks`].
pub fn joint_laplacian_from_features<T: Real>(
    source: &DMatrix<T>,
    target: &DMatrix<T>,
    sigma: T,
) -> Result<(GraphLaplacian<T>, CrossDomainBlock<T>)> {
    if source.nrows() != target.nrows() {
        return Err(DglError::DimensionMismatch {
            context: "joint laplacian feature dimension",
            expected: source.nrows(),
            found: target.nrows(),
        });
    }
    let (ns, nt) = (source.ncols(), target.ncols());
    let mut joint = DMatrix::zeros(source.nrows(), ns + nt);
    joint.columns_mut(0, ns).copy_from(source);
    joint.columns_mut(ns, nt).copy_from(target);
    let lap = laplacian(&joint, sigma)?;
    let block = lap.matrix.view((0, ns), (ns, nt)).into_owned();
    Ok((lap, CrossDomainBlock { matrix: block }))
}

/// Full symmetric eigendecomposition, sorted descending, with eigenpairs
/// below `rank_tolerance × λ_max` dropped.
///
/// Each eigenvector is signed so its largest-magnitude entry (first one on
/// ties) is positive.
pub fn eigendecompose<T: Real>(
    lap: &GraphLaplacian<T>,
    rank_tolerance: T,
) -> Result<GraphSpectrum<T>> {
    symmetric_spectrum(lap.matrix(), rank_tolerance)
}

/// [`eigendecompose`] for any symmetric matrix.
pub fn symmetric_spectrum<T: Real>(a: &DMatrix<T>, rank_tolerance: T) -> Result<GraphSpectrum<T>> {
    check_symmetric(a)?;
    check_finite(a, "eigendecomposition input")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(GraphSpectrum {
            eigenvectors: DMatrix::zeros(0, 0),
            eigenvalues: DVector::zeros(0),
            dropped: 0,
        });
    }
    let sym = (a + a.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::try_new(sym, T::epsilon(), 1000 * n.max(10))
        .ok_or(DglError::EigenNoConvergence { size: n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let largest = eig.eigenvalues[order[0]];
    let keep: Vec<usize> = if largest > T::zero() {
        let cutoff = rank_tolerance * largest;
        order
            .iter()
            .copied()
            .filter(|&i| eig.eigenvalues[i] >= cutoff && eig.eigenvalues[i] > T::zero())
            .collect()
    } else {
        Vec::new()
    };

    let mut vectors = DMatrix::zeros(n, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let pivot = v.iamax();
        if v[pivot] < T::zero() {
            v.neg_mut();
        }
        vectors.set_column(k, &v);
    }
    let values = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i]));
    Ok(GraphSpectrum {
        eigenvectors: vectors,
        eigenvalues: values,
        dropped: n - keep.len(),
    })
}
