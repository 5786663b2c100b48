//! Bilingual lexicon extraction from non-parallel corpora.
//!
//! Words of each language are turned into pseudo-documents by inverting the
//! document-word index, a bilingual topic model is trained on them with
//! collapsed Gibbs sampling, and candidate translations are ranked by
//! comparing topic distributions.

pub mod corpus;
pub mod dictionary;
pub mod error;
pub mod sampler;
pub mod similarity;
pub mod tfidf;
pub mod artifact;
pub mod eval;
pub mod cli;

pub use error::{Error, Result};
