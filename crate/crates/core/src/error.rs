use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("subspace is not contained in the outer subspace (residual {residual:.3e})")]
    NotContained { residual: f64 },
    #[error("operator is numerically singular (smallest singular value {sigma_min:.3e})")]
    SingularOperator { sigma_min: f64 },
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("truncation budget exceeded: {0}")]
    Budget(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("no admissible parameters: {0}")]
    ParameterFailure(String),
    #[error("operator is not a shift: {0}")]
    InvalidShift(String),
    #[error("inconclusive at this budget: top-degree mass {leakage:.3e} exceeds {tol:.1e}")]
    InconclusiveAtBudget { leakage: f64, tol: f64 },
    #[error("operator is not bounded below by 1 (smallest singular value {lower:.12})")]
    NotBoundedBelow { lower: f64 },
    #[error("similarity identity fails (residual {residual:.3e})")]
    NotSimilar { residual: f64 },
    #[error("not a model space: {0}")]
    NotModelSpace(String),
}

pub type Result<T> = std::result::Result<T, Error>;
