//! Domain-invariant graph learning.
//!
//! Builds Gaussian-affinity graph Laplacians over a labeled-scarce source
//! domain and an unlabeled target domain, extrapolates the target eigenbasis
//! onto the source samples, learns a damped spectrum for it by quadratic
//! programming, and trains adaptive RLS / SVM classifiers regularized by the
//! resulting source graph.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*F64` / `*F32`
//! aliases below fix the scalar.

pub mod classifier;
pub mod data;
pub mod error;
pub mod graph;
pub mod nystrom;
pub mod qp;
mod scalar;

pub use classifier::{
    accuracy, gram, predict, read_model, train_rls, train_svm, write_model, AdaptiveModel,
    KernelConfig, ModelKind, RegularizationConfig,
};
pub use data::{DataFormat, DomainDataset, LabelMaskPolicy, SyntheticShiftSpec};
pub use error::{DglError, Result};
pub use graph::{
    eigendecompose, gaussian_affinity, joint_laplacian_blocks, laplacian, CrossDomainBlock,
    GraphLaplacian, GraphSpectrum, DEFAULT_RANK_TOLERANCE,
};
pub use nystrom::{
    assemble_qp, build_invariant_graph, extrapolate_basis, learn_spectrum, ExtrapolatedBasis,
    InvariantGraph, SpectrumQp,
};
pub use qp::{project_damped_cone, QpMethod, QpOptions, QpSolution};
pub use scalar::Real;

pub type DomainDatasetF64 = DomainDataset<f64>;
pub type GraphLaplacianF64 = GraphLaplacian<f64>;
pub type CrossDomainBlockF64 = CrossDomainBlock<f64>;
pub type GraphSpectrumF64 = GraphSpectrum<f64>;
pub type ExtrapolatedBasisF64 = ExtrapolatedBasis<f64>;
pub type SpectrumQpF64 = SpectrumQp<f64>;
pub type InvariantGraphF64 = InvariantGraph<f64>;
pub type AdaptiveModelF64 = AdaptiveModel<f64>;

pub type DomainDatasetF32 = DomainDataset<f32>;
pub type GraphLaplacianF32 = GraphLaplacian<f32>;
pub type InvariantGraphF32 = InvariantGraph<f32>;
pub type AdaptiveModelF32 = AdaptiveModel<f32>;
