//! Author-topic modeling toolkit.
//!
//! Ingests an author-attributed paper corpus, runs a full text
//! preprocessing pipeline, fits an author-topic model by collapsed Gibbs
//! sampling, scores topics with UMass coherence, answers researcher
//! similarity queries via Hellinger distance, and embeds authors in 2-D
//! with exact t-SNE.
//!
//! All randomized code draws from ChaCha8 seeded with a caller-supplied
//! 64-bit integer (`ChaCha8Rng::seed_from_u64`), so runs are reproducible.
//! Data-parallel sections (pairwise distances, affinity rows, per-document
//! preprocessing, restart chains) run on rayon under the default
//! `parallel` feature and fall back to sequential loops without it; either
//! way the output is bit-identical.

pub mod atm;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod mat;
pub mod par;
pub mod similarity;
pub mod textprep;

pub use atm::{AtmHyperParams, AtmModel};
pub use corpus::{AuthorMap, Corpus, CorpusRecord, Window};
pub use error::{Error, Result};
pub use mat::Matrix;
pub use textprep::{BagCorpus, PrepConfig, Vocabulary};
