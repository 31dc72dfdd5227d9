use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qtsne::Error),
    #[error("data error: {0}")]
    Data(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qtsne::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Write { .. } => 3,
            CliError::Core(e) => match e {
                E::Config(_)
                | E::QubitCount(_)
                | E::WireOutOfRange { .. }
                | E::DuplicateWire(_)
                | E::UnreachablePerplexity { .. } => 2,
                E::Dimension { .. } | E::Data(_) | E::EmptyDataset | E::Io(_) => 3,
                E::InfiniteDistance { .. }
                | E::DegenerateRow(_)
                | E::SigmaNotConverged { .. }
                | E::NonFiniteCost { .. }
                | E::NoMovement => 4,
            },
        }
    }
}
