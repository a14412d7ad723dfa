//! Crate-wide error type with process exit-code mapping.

use std::path::PathBuf;

/// Everything that can go wrong across the pipeline.
///
/// Variants are grouped by exit code: usage errors (1), data errors (2),
/// and I/O errors (3). See [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad invocation: missing required flag, out-of-range parameter.
    #[error("usage: {0}")]
    Usage(String),

    /// Malformed or inconsistent input data.
    #[error("{0}")]
    Data(String),

    /// Document timestamp falls before the frame origin.
    #[error("document {id} predates the frame origin")]
    DocBeforeOrigin { id: String },

    /// Vocabulary construction found fewer than two distinct terms.
    #[error("corpus yields {found} distinct terms; at least 2 required")]
    VocabularyTooSmall { found: usize },

    /// Score matrices passed to a pairwise operation disagree on shape.
    #[error("score matrix shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    /// A feature column is constant, so it cannot be standardized.
    #[error("feature {feature} has zero variance across training examples")]
    ZeroVariance { feature: &'static str },

    /// Training examples all carry the same label.
    #[error("training set contains a single class; need both labels")]
    SingleClass,

    /// Not enough examples to fit.
    #[error("{found} training examples; at least {need} required")]
    TooFewExamples { found: usize, need: usize },

    /// A feature value is NaN or infinite.
    #[error("non-finite value in feature {feature}")]
    NonFiniteFeature { feature: &'static str },

    /// Seed accounts that never author a document in the archive.
    #[error("seed accounts absent from archive: {}", ids.join(", "))]
    SeedsNotInArchive { ids: Vec<String> },

    /// A candidate cluster smaller than the minimum size of two.
    #[error("cluster of size {size} has no internal edges")]
    ClusterTooSmall { size: usize },

    /// File-system failure, tagged with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code: 1 usage, 2 data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
