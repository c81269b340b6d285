use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse { path: PathBuf, line: Option<usize>, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: certsmooth_core::Error },
    #[error(transparent)]
    Core(#[from] certsmooth_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(path: &Path, line: Option<usize>, message: impl ToString) -> Self {
        Error::Parse { path: path.to_path_buf(), line, message: message.to_string() }
    }
}
