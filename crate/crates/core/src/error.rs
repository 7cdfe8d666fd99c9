use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Relative symmetry (or Hermiticity) defect that exceeded the tolerance.
    #[error("operator is not symmetric: relative defect {defect:.3e}")]
    Symmetry { defect: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),

    /// `1 - U` is singular; `direction` is the (weighted) unit vector fixed by `U`.
    #[error("unitary has eigenvalue 1 (smallest singular value of 1-U is {sigma_min:.3e}); inverse Cayley transform undefined")]
    EigenvalueOne {
        sigma_min: f64,
        direction: Vec<crate::C64>,
    },

    #[error("mean {xi} is not reachable on the domain; achievable means lie in [{min}, {max}]")]
    Infeasible { xi: f64, min: f64, max: f64 },

    #[error("contract violated: {0}")]
    Contract(String),
}
