use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or out-of-range input; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// The computation itself failed; exit code 2.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<edes_lab::Error> for CliError {
    fn from(e: edes_lab::Error) -> Self {
        use edes_lab::Error as E;
        match e {
            E::Domain(_) | E::GridMismatch(_) => CliError::Validation(e.to_string()),
            E::LinearSolve(_) | E::Numerical(_) | E::Convergence(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}
