//! Collapsed Gibbs samplers for the four bilingual topic models.
//!
//! All models share one set of count tables. Topics are distributions over
//! document ids (the pseudo-document "vocabulary") and every word is a
//! mixture of topics:
//!
//! * `bilda` pairs each dictionary word with its most frequent candidate and
//!   lets the pair share one topic distribution.
//! * `bilda-all` does the same but re-draws the pairing uniformly at random
//!   at the start of every sweep.
//! * `probbilda` gives every source token its own translation selection, so a
//!   dictionary word becomes a mixture of its candidates' distributions.
//! * `blockprobbilda` selects one translation per source word, re-chosen after
//!   each sweep over the word's tokens by a log-space argmax.
//!
//! Words outside the dictionary are modeled with plain LDA updates.

mod estimates;
mod kernels;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dictionary::SeedDictionary;
use crate::dictionary::most_frequent_pairing;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub use estimates::PosteriorEstimates;
pub use state::{SamplerState, StateSnapshot};

/// Language side. The source side carries the seed dictionary and holds the
/// query words; the target side holds the candidate translations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Source,
    Target,
}

impl Lang {
    pub const fn index(self) -> usize {
        match self {
            Lang::Source => 0,
            Lang::Target => 1,
        }
    }

    pub const fn other(self) -> Lang {
        match self {
            Lang::Source => Lang::Target,
            Lang::Target => Lang::Source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "bilda")]
    BiLda,
    #[serde(rename = "bilda-all")]
    BiLdaAll,
    #[serde(rename = "probbilda")]
    ProbBiLda,
    #[serde(rename = "blockprobbilda")]
    BlockProbBiLda,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::BiLda,
        ModelKind::BiLdaAll,
        ModelKind::ProbBiLda,
        ModelKind::BlockProbBiLda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::BiLda => "bilda",
            ModelKind::BiLdaAll => "bilda-all",
            ModelKind::ProbBiLda => "probbilda",
            ModelKind::BlockProbBiLda => "blockprobbilda",
        }
    }

    /// Whether all tokens of a source word share one selection.
    pub(crate) fn word_level_selection(self) -> bool {
        !matches!(self, ModelKind::ProbBiLda)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_psi: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub rng_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            topics: 50,
            alpha: 0.5,
            beta: 0.01,
            alpha_psi: 0.5,
            iterations: 1500,
            burn_in: 1000,
            sample_lag: 10,
            rng_seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperParams(msg));
        if self.topics < 2 {
            return bad(format!("need at least 2 topics, got {}", self.topics));
        }
        if self.topics > u16::MAX as usize {
            return bad(format!("at most {} topics are supported", u16::MAX));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("alpha_psi", self.alpha_psi)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.burn_in >= self.iterations {
            return bad(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        if self.sample_lag == 0 {
            return bad("sample lag must be at least 1".into());
        }
        Ok(())
    }

    /// Whether the state after sweep `t` (1-based) enters the posterior
    /// average. Retained sweeps are aligned to the end of the run so the
    /// final sweep is always kept.
    pub fn retains(&self, t: usize) -> bool {
        t > self.burn_in && t <= self.iterations && (self.iterations - t).is_multiple_of(self.sample_lag)
    }

    pub fn retained_samples(&self) -> usize {
        (self.burn_in + 1..=self.iterations).filter(|&t| self.retains(t)).count()
    }
}

/// The dictionary a model is initialized with: the most-frequent pairing for
/// `bilda`, the full candidate lists otherwise.
pub fn links_for(model: ModelKind, dict: &SeedDictionary, target_vocab: &Vocabulary) -> SeedDictionary {
    match model {
        ModelKind::BiLda => most_frequent_pairing(dict, target_vocab).to_seed(),
        _ => dict.clone(),
    }
}

/// Initializes a sampler and runs the full training schedule.
pub fn run_training(
    source: &crate::corpus::PseudoDocCollection,
    target: &crate::corpus::PseudoDocCollection,
    dict: &SeedDictionary,
    model: ModelKind,
    hp: &HyperParams,
) -> Result<PosteriorEstimates> {
    let mut state = SamplerState::init(source, target, dict, model, hp)?;
    Ok(state.train(|_, _| {}))
}
