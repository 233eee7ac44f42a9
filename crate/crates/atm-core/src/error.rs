//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("record {id}: author list is empty after normalization")]
    EmptyAuthors { id: String },

    #[error("record {id}: blank author name")]
    BlankAuthor { id: String },

    #[error("record {id}: year {year} outside configured range [{min_year}, {max_year}]")]
    YearOutOfRange {
        id: String,
        year: i32,
        min_year: i32,
        max_year: i32,
    },

    #[error("record {id}: year {year} not covered by any configured window")]
    YearNotInWindows { id: String, year: i32 },

    #[error("duplicate record id {id}")]
    DuplicateRecordId { id: String },

    #[error("unknown window label {label:?}")]
    UnknownWindow { label: String },

    #[error("invalid window config: {reason}")]
    InvalidWindows { reason: String },

    #[error("invalid preprocessing config: {reason}")]
    InvalidPrepConfig { reason: String },

    #[error("vocabulary is empty after pruning; relax vocab_min_docs (currently {min_docs}) or vocab_max_doc_frac (currently {max_frac})")]
    EmptyVocabulary { min_docs: u32, max_frac: f64 },

    #[error("all documents became empty after vectorization")]
    EmptyBagCorpus,

    #[error("invalid hyperparameters: {reason}")]
    InvalidHyperParams { reason: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("model and corpus artifacts do not match: {reason}")]
    ArtifactMismatch { reason: String },

    #[error("topic index {topic} out of range (K = {k})")]
    TopicOutOfRange { topic: usize, k: usize },

    #[error("author index {author} out of range (A = {a})")]
    AuthorOutOfRange { author: usize, a: usize },

    #[error("top word {term_id} appears in no document; vocabulary mismatch")]
    TopWordAbsent { term_id: u32 },

    #[error("probability vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is not a probability vector: {reason}")]
    NotNormalized { reason: String },

    #[error("invalid t-SNE config: {reason}")]
    InvalidTsneConfig { reason: String },

    #[error("distance matrix is not usable: {reason}")]
    BadDistanceMatrix { reason: String },

    #[error("need at least 3 points to embed, got {n}")]
    TooFewPoints { n: usize },

    #[error("model file format error: {reason}")]
    ModelFormat { reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
