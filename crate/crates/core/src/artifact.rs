//! On-disk artifacts: the inverted index and training checkpoints.
//!
//! Both are UTF-8 JSON objects whose first two fields are a `format` string
//! and an integer `version`. Readers check those two fields before looking at
//! anything else, and validate every index before handing data out, so a
//! damaged file produces an error rather than a partially usable object.
//!
//! The field-by-field layout is described in `docs/formats.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{build_vocabulary, invert_index, Corpus, PseudoDocCollection, Vocabulary};
use crate::error::{Error, Result};
use crate::sampler::{HyperParams, Lang, ModelKind, PosteriorEstimates, SamplerState, StateSnapshot};

pub const INDEX_FORMAT: &str = "lexitopic-index";
pub const INDEX_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT: &str = "lexitopic-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn check_header(bytes: &[u8], kind: &'static str, format: &str, version: u32) -> Result<()> {
    let header: Header = serde_json::from_slice(bytes).map_err(|e| Error::Corrupted {
        kind,
        reason: e.to_string(),
    })?;
    if header.format != format {
        return Err(Error::Corrupted {
            kind,
            reason: format!("format tag `{}`, expected `{format}`", header.format),
        });
    }
    if header.version != version {
        return Err(Error::UnsupportedVersion {
            kind,
            found: header.version,
            expected: version,
        });
    }
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Vocabulary and pseudo-documents of one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageIndex {
    pub language: String,
    pub num_docs: usize,
    pub num_tokens: usize,
    pub words: Vec<String>,
    pub pseudo_docs: Vec<Vec<u32>>,
}

impl LanguageIndex {
    pub fn build(corpus: &Corpus) -> Result<Self> {
        let vocab = build_vocabulary(corpus);
        let pdocs = invert_index(corpus, &vocab)?;
        Ok(LanguageIndex {
            language: corpus.language().to_string(),
            num_docs: pdocs.num_docs(),
            num_tokens: pdocs.num_tokens(),
            words: vocab.words().to_vec(),
            pseudo_docs: pdocs.docs().to_vec(),
        })
    }

    /// Vocabulary (frequencies are pseudo-document lengths) and pseudo-documents.
    pub fn open(&self) -> Result<(Vocabulary, PseudoDocCollection)> {
        if self.words.len() != self.pseudo_docs.len() {
            return Err(Error::VocabularyMismatch(format!(
                "{} words but {} pseudo-documents",
                self.words.len(),
                self.pseudo_docs.len()
            )));
        }
        let pdocs = PseudoDocCollection::new(self.num_docs, self.pseudo_docs.clone())?;
        if pdocs.num_tokens() != self.num_tokens {
            return Err(Error::InvalidInput(format!(
                "token count {} does not match the pseudo-documents ({})",
                self.num_tokens,
                pdocs.num_tokens()
            )));
        }
        let freqs = pdocs.docs().iter().map(|d| d.len() as u64).collect();
        let vocab = Vocabulary::from_parts(self.words.clone(), freqs)?;
        Ok((vocab, pdocs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexArtifact {
    pub format: String,
    pub version: u32,
    pub min_doc_len: usize,
    pub source: LanguageIndex,
    pub target: LanguageIndex,
}

/// A validated, opened index.
#[derive(Debug, Clone)]
pub struct Index {
    pub artifact: IndexArtifact,
    pub vocab: [Vocabulary; 2],
    pub pseudo_docs: [PseudoDocCollection; 2],
}

impl Index {
    pub fn vocab(&self, lang: Lang) -> &Vocabulary {
        &self.vocab[lang.index()]
    }

    pub fn pseudo_docs(&self, lang: Lang) -> &PseudoDocCollection {
        &self.pseudo_docs[lang.index()]
    }
}

impl IndexArtifact {
    pub fn build(source: &Corpus, target: &Corpus, min_doc_len: usize) -> Result<Self> {
        Ok(IndexArtifact {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            min_doc_len,
            source: LanguageIndex::build(source)?,
            target: LanguageIndex::build(target)?,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("index serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Index> {
        check_header(bytes, "index", INDEX_FORMAT, INDEX_VERSION)?;
        let artifact: IndexArtifact = serde_json::from_slice(bytes).map_err(|e| Error::Corrupted {
            kind: "index",
            reason: e.to_string(),
        })?;
        artifact.open()
    }

    pub fn open(self) -> Result<Index> {
        let corrupt = |e: Error| Error::Corrupted {
            kind: "index",
            reason: e.to_string(),
        };
        let (sv, sp) = self.source.open().map_err(corrupt)?;
        let (tv, tp) = self.target.open().map_err(corrupt)?;
        Ok(Index {
            artifact: self,
            vocab: [sv, tv],
            pseudo_docs: [sp, tp],
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Index> {
        Self::from_bytes(&read_bytes(path.as_ref())?)
    }
}

/// Trained model on disk: hyperparameters, model kind, both vocabularies,
/// and the sampler state and/or the averaged estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelKind,
    pub hyperparams: HyperParams,
    pub source_language: String,
    pub target_language: String,
    pub source_vocab: Vec<String>,
    pub target_vocab: Vec<String>,
    pub state: Option<StateSnapshot>,
    pub estimates: Option<PosteriorEstimates>,
}

impl Checkpoint {
    pub fn new(
        index: &Index,
        state: Option<&SamplerState>,
        estimates: Option<PosteriorEstimates>,
        model: ModelKind,
        hp: &HyperParams,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model,
            hyperparams: hp.clone(),
            source_language: index.artifact.source.language.clone(),
            target_language: index.artifact.target.language.clone(),
            source_vocab: index.vocab(Lang::Source).words().to_vec(),
            target_vocab: index.vocab(Lang::Target).words().to_vec(),
            state: state.map(SamplerState::snapshot),
            estimates,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("checkpoint serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        check_header(bytes, "checkpoint", CHECKPOINT_FORMAT, CHECKPOINT_VERSION)?;
        let ckpt: Checkpoint = serde_json::from_slice(bytes).map_err(|e| Error::Corrupted {
            kind: "checkpoint",
            reason: e.to_string(),
        })?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    fn validate(&self) -> Result<()> {
        let corrupt = |reason: String| Error::Corrupted {
            kind: "checkpoint",
            reason,
        };
        self.hyperparams.validate().map_err(|e| corrupt(e.to_string()))?;
        if self.state.is_none() && self.estimates.is_none() {
            return Err(corrupt("neither state nor estimates present".into()));
        }
        let nw = [self.source_vocab.len(), self.target_vocab.len()];
        if let Some(snap) = &self.state {
            if snap.source_pseudo_docs.len() != nw[0] || snap.target_pseudo_docs.len() != nw[1] {
                return Err(corrupt("state does not match the vocabularies".into()));
            }
            SamplerState::restore(snap, self.model, &self.hyperparams)?;
        }
        if let Some(est) = &self.estimates {
            est.validate_shape().map_err(corrupt)?;
            if est.topics() != self.hyperparams.topics {
                return Err(corrupt("estimates have the wrong number of topics".into()));
            }
            if est.num_words(Lang::Source) != nw[0] || est.num_words(Lang::Target) != nw[1] {
                return Err(corrupt("estimates do not match the vocabularies".into()));
            }
            if let Some(snap) = &self.state {
                if est.num_docs(Lang::Source) != snap.source_docs || est.num_docs(Lang::Target) != snap.target_docs {
                    return Err(corrupt("estimates and state disagree on document counts".into()));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_bytes(path.as_ref())?)
    }

    pub fn sampler_state(&self) -> Result<Option<SamplerState>> {
        self.state
            .as_ref()
            .map(|s| SamplerState::restore(s, self.model, &self.hyperparams))
            .transpose()
    }

    /// Refuses an index whose vocabularies or document counts differ from
    /// the ones this checkpoint was trained on.
    pub fn check_compatible(&self, index: &Index) -> Result<()> {
        let same_words = index.vocab(Lang::Source).words() == self.source_vocab.as_slice()
            && index.vocab(Lang::Target).words() == self.target_vocab.as_slice();
        if !same_words {
            return Err(Error::ModelMismatch("checkpoint vocabularies differ from the index".into()));
        }
        if let Some(est) = &self.estimates {
            for lang in [Lang::Source, Lang::Target] {
                if est.num_docs(lang) != index.pseudo_docs(lang).num_docs() {
                    return Err(Error::ModelMismatch("checkpoint document counts differ from the index".into()));
                }
            }
        }
        if let Some(st) = &self.state {
            let same_docs = st.source_docs == index.pseudo_docs(Lang::Source).num_docs()
                && st.target_docs == index.pseudo_docs(Lang::Target).num_docs()
                && st.source_pseudo_docs.as_slice() == index.pseudo_docs(Lang::Source).docs()
                && st.target_pseudo_docs.as_slice() == index.pseudo_docs(Lang::Target).docs();
            if !same_docs {
                return Err(Error::ModelMismatch("checkpoint pseudo-documents differ from the index".into()));
            }
        }
        Ok(())
    }
}
