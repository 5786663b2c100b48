use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: content is not valid UTF-8")]
    NotUtf8(String),
    #[error("empty corpus: no document has at least {min_len} tokens")]
    EmptyCorpus { min_len: usize },
    #[error("vocabulary does not match corpus: {0}")]
    VocabularyMismatch(String),
    #[error("line {line}: expected 2 tab-separated fields, found {found}")]
    MalformedLine { line: usize, found: usize },
    #[error("empty dictionary: no pair survived the vocabulary filter")]
    EmptyDictionary,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("word id {0} out of range")]
    UnknownWordId(usize),
    #[error("document id {0} out of range")]
    UnknownDocument(usize),
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("query has an all-zero context vector")]
    NoContext,
    #[error("missing ranking for gold query `{0}`")]
    MissingRanking(String),
    #[error("unsupported {kind} version {found} (expected {expected})")]
    UnsupportedVersion {
        kind: &'static str,
        found: u32,
        expected: u32,
    },
    #[error("corrupted {kind}: {reason}")]
    Corrupted { kind: &'static str, reason: String },
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
