//! Nyström extrapolation of the target spectrum onto source samples and the
//! spectrum-learning problem that yields the domain-invariant graph.
//!
//! Given the target eigensystem `{Φᵗ, Λᵗ}` and the cross-domain block `Lˢᵗ`,
//! source eigenvectors are estimated as `Φ̄ˢ = Lˢᵗ Φᵗ (Λᵗ)⁻¹`. The eigenvalues
//! are then relearned so that `Φ̄ˢ diag(λ) Φ̄ˢᵀ` is as close as possible (in
//! Frobenius norm) to the source Laplacian, under the damping constraints
//! `λ_i ≥ ξλ_{i+1}`, `λ ≥ 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{DglError, Result};
use crate::graph::{CrossDomainBlock, GraphLaplacian, GraphSpectrum};
use crate::qp::{self, QpMethod, QpOptions, QpSolution};
use crate::scalar::Real;

/// Estimated source eigenvectors `Φ̄ˢ`, `n_s × r`. Columns are generally not
/// orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolatedBasis<T: Real> {
    matrix: DMatrix<T>,
}

impl<T: Real> ExtrapolatedBasis<T> {
    pub fn from_matrix(matrix: DMatrix<T>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(DglError::NonFinite {
                context: "extrapolated basis",
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.ncols()
    }

    /// `Φ̄ diag(λ) Φ̄ᵀ`, symmetrized.
    pub fn plastic_graph(&self, eigenvalues: &DVector<T>) -> DMatrix<T> {
        let mut scaled = self.matrix.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(eigenvalues.iter()) {
            col *= v;
        }
        let m = &scaled * self.matrix.transpose();
        (&m + m.transpose()) * T::lit(0.5)
    }
}

/// The quadratic program `min λᵀQλ − 2Rᵀλ s.t. Zλ ≥ 0, λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumQp<T: Real> {
    /// `(Φ̄ᵀΦ̄) ⊙ (Φ̄ᵀΦ̄)`, symmetrized.
    pub q_matrix: DMatrix<T>,
    /// `diag(Φ̄ᵀ Lˢ Φ̄)`.
    pub r_vector: DVector<T>,
    /// `I − ξĪ` (ones on the diagonal, `−ξ` on the first superdiagonal).
    pub z_matrix: DMatrix<T>,
    pub damping: T,
}

impl<T: Real> SpectrumQp<T> {
    pub fn rank(&self) -> usize {
        self.r_vector.len()
    }
}

/// `L̄ˢ* = Φ̄ˢ diag(λ*) Φ̄ˢᵀ` over the source samples.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantGraph<T: Real> {
    matrix: DMatrix<T>,
    learned_eigenvalues: DVector<T>,
}

impl<T: Real> InvariantGraph<T> {
    /// All-zero graph over `n` samples; training with it reduces the adaptive
    /// classifiers to their plain counterparts.
    pub fn empty(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, n),
            learned_eigenvalues: DVector::zeros(0),
        }
    }

    /// Wraps a symmetric matrix used directly as the manifold penalty.
    pub fn from_matrix(matrix: DMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(DglError::DimensionMismatch {
                context: "invariant graph",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            learned_eigenvalues: DVector::zeros(0),
        })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn learned_eigenvalues(&self) -> &DVector<T> {
        &self.learned_eigenvalues
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Applies a column permutation `order` (new index → old index) to both
    /// rows and columns.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = order.len();
        Self {
            matrix: DMatrix::from_fn(n, n, |i, j| self.matrix[(order[i], order[j])]),
            learned_eigenvalues: self.learned_eigenvalues.clone(),
        }
    }
}

/// `Φ̄ˢ = Lˢᵗ Φᵗ diag(Λᵗ)⁻¹` over the retained eigenpairs.
pub fn extrapolate_basis<T: Real>(
    cross_block: &CrossDomainBlock<T>,
    target_spectrum: &GraphSpectrum<T>,
) -> Result<ExtrapolatedBasis<T>> {
    if target_spectrum.is_empty() {
        return Err(DglError::DegenerateGraph(
            "target Laplacian has no eigenpairs above the rank tolerance",
        ));
    }
    let cross = cross_block.matrix();
    let vectors = target_spectrum.eigenvectors();
    if cross.ncols() != vectors.nrows() {
        return Err(DglError::DimensionMismatch {
            context: "cross block columns vs target eigenvectors",
            expected: vectors.nrows(),
            found: cross.ncols(),
        });
    }
    let mut basis = cross * vectors;
    for (mut col, &value) in basis
        .column_iter_mut()
        .zip(target_spectrum.eigenvalues().iter())
    {
        col /= value;
    }
    ExtrapolatedBasis::from_matrix(basis)
}

/// `Q = (Φ̄ᵀΦ̄)⊙(Φ̄ᵀΦ̄)`, `R = diag(Φ̄ᵀLˢΦ̄)`, `Z = I − ξĪ`.
pub fn assemble_qp<T: Real>(
    basis: &ExtrapolatedBasis<T>,
    source_lap: &GraphLaplacian<T>,
    damping: T,
) -> Result<SpectrumQp<T>> {
    if !(damping >= T::one()) || !damping.is_finite() {
        return Err(DglError::InvalidParameter {
            name: "damping",
            value: damping.to_string(),
            reason: "damping factor must be at least 1",
        });
    }
    let phi = basis.matrix();
    if source_lap.size() != phi.nrows() {
        return Err(DglError::DimensionMismatch {
            context: "source Laplacian vs basis rows",
            expected: phi.nrows(),
            found: source_lap.size(),
        });
    }
    let r = phi.ncols();
    let gram = phi.transpose() * phi;
    let q = gram.component_mul(&gram);
    let q_matrix = (&q + q.transpose()) * T::lit(0.5);

    let lphi = source_lap.matrix() * phi;
    let r_vector = DVector::from_iterator(r, (0..r).map(|i| phi.column(i).dot(&lphi.column(i))));

    let mut z_matrix = DMatrix::identity(r, r);
    for i in 0..r.saturating_sub(1) {
        z_matrix[(i, i + 1)] = -damping;
    }
    Ok(SpectrumQp {
        q_matrix,
        r_vector,
        z_matrix,
        damping,
    })
}

/// Solves the spectrum QP. `method` selects the exact active-set solver
/// (with projected-gradient polish) or plain accelerated projected gradient.
pub fn learn_spectrum<T: Real>(
    qp: &SpectrumQp<T>,
    options: &QpOptions,
    method: QpMethod,
) -> Result<QpSolution<T>> {
    match method {
        QpMethod::ActiveSet => {
            qp::solve_active_set(&qp.q_matrix, &qp.r_vector, qp.damping, options)
        }
        QpMethod::ProjectedGradient | QpMethod::Degenerate => {
            qp::solve(&qp.q_matrix, &qp.r_vector, qp.damping, options)
        }
    }
}

/// `L̄ˢ* = Φ̄ˢ diag(λ*) Φ̄ˢᵀ`, after checking λ* lies in the damped cone
/// (slack `1e-6` relative to `max(1, ‖λ*‖∞)` on the damping constraints,
/// `1e-10` on nonnegativity).
pub fn build_invariant_graph<T: Real>(
    basis: &ExtrapolatedBasis<T>,
    learned: &DVector<T>,
    damping: T,
) -> Result<InvariantGraph<T>> {
    if learned.len() != basis.rank() {
        return Err(DglError::DimensionMismatch {
            context: "learned eigenvalues vs basis rank",
            expected: basis.rank(),
            found: learned.len(),
        });
    }
    let chain_slack = T::lit(1e-6) * learned.amax().max(T::one());
    let sign_slack = T::lit(1e-10);
    for i in 0..learned.len() {
        if learned[i] < -sign_slack {
            return Err(DglError::InfeasibleSpectrum {
                index: i,
                violation: (-learned[i]).as_f64(),
            });
        }
        if i + 1 < learned.len() {
            let gap = damping * learned[i + 1] - learned[i];
            if gap > chain_slack {
                return Err(DglError::InfeasibleSpectrum {
                    index: i,
                    violation: gap.as_f64(),
                });
            }
        }
    }
    Ok(InvariantGraph {
        matrix: basis.plastic_graph(learned),
        learned_eigenvalues: learned.clone(),
    })
}

/// Nyström approximation error `‖Φ̄ diag(λ) Φ̄ᵀ − Lˢ‖²_F`, computed directly.
pub fn approximation_error<T: Real>(
    basis: &ExtrapolatedBasis<T>,
    eigenvalues: &DVector<T>,
    source_lap: &GraphLaplacian<T>,
) -> T {
    let diff = basis.plastic_graph(eigenvalues) - source_lap.matrix();
    diff.norm_squared()
}
