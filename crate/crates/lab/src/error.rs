use std::path::PathBuf;

/// Failures of the scenario runner. Numerical failures of a job that did
/// start are part of its report instead.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// The scenario does not parse or fails a semantic check. `pointer` is
    /// the JSON pointer of the offending value (`""` for the document).
    #[error("scenario error at \"{pointer}\": {message}")]
    Schema {
        /// JSON pointer.
        pointer: String,
        /// What is wrong.
        message: String,
    },
    /// Reading or writing a file failed.
    #[error("{}: {source}", path.display())]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// A CSV file could not be read or written.
    #[error("{}: {source}", path.display())]
    Csv {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: csv::Error,
    },
}

impl LabError {
    pub(crate) fn at(pointer: impl Into<String>, message: impl std::fmt::Display) -> Self {
        LabError::Schema {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }
}
