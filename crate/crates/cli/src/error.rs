use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Parameter problems are config errors; everything the numerics report
/// while running is a numerical failure.
impl From<cdspin::Error> for CliError {
    fn from(e: cdspin::Error) -> Self {
        use cdspin::Error as E;
        match e {
            E::EmptySystem
            | E::NotHalfInteger { .. }
            | E::ParityMismatch { .. }
            | E::ProjectionOutOfRange { .. }
            | E::OperatorCount(_)
            | E::InvalidParameter { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
