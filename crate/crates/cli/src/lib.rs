//! Problem files in, JSON reports out: the engine behind the `nisd` binary
//! and the Python `run` entry point.

pub mod commands;
mod export;
pub mod report;
pub mod spec;

pub use commands::{run, run_file, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("bad problem spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Core(#[from] nisd::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 0 ok, 1 bad input, 2 inconclusive at this budget, 3 no admissible
    /// parameters, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        use nisd::Error as E;
        match self {
            CliError::Spec(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidInput(_) | E::Shape(_) | E::Domain(_) => 1,
                E::InconclusiveAtBudget { .. } | E::Budget(_) => 2,
                E::ParameterFailure(_) => 3,
                E::NumericalFailure(_)
                | E::NotBoundedBelow { .. }
                | E::SingularOperator { .. }
                | E::NotSimilar { .. }
                | E::NotModelSpace(_)
                | E::NotContained { .. }
                | E::InvalidShift(_) => 4,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "spec_error",
            2 => "inconclusive_at_budget",
            3 => "parameter_failure",
            _ => "numerical_failure",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_contract() {
        let core = |e: nisd::Error| CliError::from(e).exit_code();
        assert_eq!(CliError::Spec("x".into()).exit_code(), 1);
        assert_eq!(core(nisd::Error::Domain("x".into())), 1);
        assert_eq!(core(nisd::Error::InconclusiveAtBudget { leakage: 1.0, tol: 0.1 }), 2);
        assert_eq!(core(nisd::Error::Budget("x".into())), 2);
        assert_eq!(core(nisd::Error::ParameterFailure("x".into())), 3);
        assert_eq!(core(nisd::Error::NumericalFailure("x".into())), 4);
        assert_eq!(core(nisd::Error::NotBoundedBelow { lower: 0.5 }), 4);
    }
}
