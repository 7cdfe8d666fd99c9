//! Numerical analysis of symmetric, not necessarily self-adjoint, operators.
//!
//! The crate discretizes a handful of model operators (the derivative `i d/dλ`
//! on one or more copies of an interval, the same derivative on a truncated
//! half-line, a position operator obeying `[x, p] = iħ(1 + βp²)`, and plain
//! Hermitian matrices restricted to a subspace) together with an explicit
//! domain, and then computes:
//!
//! * deficiency spaces and indices, and the Cayley transform ([`deficiency`]);
//! * self-adjoint extensions labelled by `u ∈ U(r)`, their spectra, and the
//!   isospinor expansion over degenerate eigenvectors ([`extensions`]);
//! * translation flows generated by the extensions, their compositions and the
//!   span of the algebra they generate ([`flows`]);
//! * minimal-uncertainty curves, GUP sampling and localizing sequences
//!   ([`uncertainty`]).
//!
//! All inner products are weighted by the quadrature weights of a [`Grid`].

pub mod cli;
pub mod deficiency;
pub mod error;
pub mod extensions;
pub mod flows;
pub mod hilbert;
pub mod ops;
pub mod uncertainty;

mod rng;

pub use deficiency::{
    cayley_transform, classify, deficiency_spaces, verify_isometry, Classification,
    DeficiencyMethod, DeficiencyReport, PartialIsometry,
};
pub use error::{Error, Result};
pub use extensions::{
    extend_by_boundary, extend_by_cayley, extension_with_degenerate_eigenvalue,
    isospinor_expansion, spectrum, verify_gauge_isometry, ExtensionParameter, GaugeReport,
    SelfAdjointExtension,
};
pub use flows::{
    compose, flow_unitary, generated_algebra_dimension, local_phase_op, FlowBackend,
    FlowUnitary, LocalPhaseOp,
};
pub use hilbert::{
    complement, eigh, inner_product, orthonormalize, ComplexMatrix, Grid, Measure, SpectralData,
    StateVec, Subspace, C64,
};
pub use ops::{
    build_beta_algebra, build_halfline_derivative, build_interval_derivative,
    build_matrix_model, check_commutator, check_symmetry, direct_sum, Backend,
    BetaAlgebraModel, ModelKind, OperatorOnDomain,
};
pub use uncertainty::{
    fuzzyb_localizing_sequence, min_uncertainty, sample_gup, uncertainty_curve, GupReport,
    LocalizationSequence, MinUncertainty, UncertaintyCurve,
};

/// Schema tag written into every serialized artifact.
pub const SCHEMA: &str = "fuzzyspec/1";
