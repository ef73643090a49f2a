use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("input format error: {0}")]
    InputFormat(String),

    #[error("duplicate article id `{0}`")]
    DuplicateArticle(String),

    #[error("unknown context window {0}")]
    UnknownWindow(u32),

    #[error("unknown synset `{0}`")]
    UnknownSynset(String),

    #[error("hyponym cycle through synset `{0}`")]
    HyponymCycle(String),

    #[error("no disambiguator registered for the external synset strategy")]
    NoDisambiguator,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("dataset does not match corpus: {0}")]
    CorpusMismatch(String),

    #[error("external scorer failure: {0}")]
    Bridge(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_input_format(&self) -> bool {
        matches!(
            self,
            Error::InputFormat(_) | Error::DuplicateArticle(_) | Error::HyponymCycle(_) | Error::CorpusMismatch(_)
        )
    }
}
