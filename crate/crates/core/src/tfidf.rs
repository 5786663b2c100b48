//! Context-vector baseline: tf-idf weighted co-occurrence with seed pivots,
//! ranked by cosine.
//!
//! Pivot `i` is the `i`-th pair of the paired seed dictionary, so the source
//! vector of a word counts co-occurrences with the pair's source word and the
//! target vector counts co-occurrences with its target word.

use std::collections::HashMap;

use crate::corpus::{Corpus, Vocabulary};
use crate::dictionary::PairedDictionary;
use crate::error::{Error, Result};
use crate::sampler::Lang;
use crate::similarity::{Measure, RankedCandidates};

pub const DEFAULT_WINDOW: usize = 4;

/// Sparse tf-idf vectors over pivot dimensions for one language.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVectors {
    window: usize,
    /// `ln(N / df)` per pivot dimension, `None` when the pivot never occurs.
    idf: Vec<Option<f64>>,
    /// Per word: (dimension, weight), ascending dimension, zero weights omitted.
    vectors: Vec<Vec<(u32, f64)>>,
}

impl ContextVectors {
    /// `pivots[i]` is the word id (in `vocab`) that stands for dimension `i`.
    pub fn build(corpus: &Corpus, vocab: &Vocabulary, pivots: &[u32], window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidInput("window must be at least 1".into()));
        }
        if pivots.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let mut dims_of: HashMap<u32, Vec<u32>> = HashMap::new();
        for (dim, &p) in pivots.iter().enumerate() {
            if p as usize >= vocab.len() {
                return Err(Error::UnknownWordId(p as usize));
            }
            dims_of.entry(p).or_default().push(dim as u32);
        }

        let mut df = vec![0usize; pivots.len()];
        let mut tf: Vec<HashMap<u32, u64>> = vec![HashMap::new(); vocab.len()];
        let mut ids = Vec::new();
        for doc in corpus.documents() {
            ids.clear();
            for token in doc {
                ids.push(
                    vocab
                        .id(token)
                        .ok_or_else(|| Error::VocabularyMismatch(format!("token `{token}` not in vocabulary")))?,
                );
            }
            let mut seen: Vec<u32> = ids.iter().filter(|id| dims_of.contains_key(id)).copied().collect();
            seen.sort_unstable();
            seen.dedup();
            for p in seen {
                for &dim in &dims_of[&p] {
                    df[dim as usize] += 1;
                }
            }
            for (i, &w) in ids.iter().enumerate() {
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(ids.len() - 1);
                for (j, other) in ids.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    if let Some(dims) = dims_of.get(other) {
                        for &dim in dims {
                            *tf[w as usize].entry(dim).or_default() += 1;
                        }
                    }
                }
            }
        }

        let n = corpus.num_docs() as f64;
        let idf: Vec<Option<f64>> = df
            .iter()
            .map(|&d| (d > 0).then(|| (n / d as f64).ln()))
            .collect();
        let vectors = tf
            .into_iter()
            .map(|counts| {
                let mut v: Vec<(u32, f64)> = counts
                    .into_iter()
                    .filter_map(|(dim, c)| {
                        let weight = c as f64 * idf[dim as usize]?;
                        (weight != 0.0).then_some((dim, weight))
                    })
                    .collect();
                v.sort_unstable_by_key(|e| e.0);
                v
            })
            .collect();
        Ok(ContextVectors { window, idf, vectors })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn idf(&self, dim: usize) -> Option<f64> {
        self.idf[dim]
    }

    pub fn vector(&self, word: u32) -> &[(u32, f64)] {
        &self.vectors[word as usize]
    }

    pub fn num_words(&self) -> usize {
        self.vectors.len()
    }
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn norm(a: &[(u32, f64)]) -> f64 {
    a.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
}

/// Source and target context vectors over the same pivot dimensions.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    pub source: ContextVectors,
    pub target: ContextVectors,
}

impl TfidfModel {
    pub fn build(
        source: (&Corpus, &Vocabulary),
        target: (&Corpus, &Vocabulary),
        pairs: &PairedDictionary,
        window: usize,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let (src_pivots, tgt_pivots): (Vec<u32>, Vec<u32>) = pairs.iter().unzip();
        Ok(TfidfModel {
            source: ContextVectors::build(source.0, source.1, &src_pivots, window)?,
            target: ContextVectors::build(target.0, target.1, &tgt_pivots, window)?,
        })
    }

    /// Cosine of the query's source vector against every target vector.
    pub fn rank(&self, query: u32) -> Result<RankedCandidates> {
        if query as usize >= self.source.num_words() {
            return Err(Error::UnknownWordId(query as usize));
        }
        let q = self.source.vector(query);
        let qn = norm(q);
        if qn == 0.0 {
            return Err(Error::NoContext);
        }
        let entries = (0..self.target.num_words() as u32)
            .map(|c| {
                let v = self.target.vector(c);
                let vn = norm(v);
                let s = if vn == 0.0 { 0.0 } else { sparse_dot(q, v) / (qn * vn) };
                (c, s)
            })
            .collect();
        Ok(RankedCandidates::from_scores(query, Lang::Source, Measure::Cosine, entries))
    }
}
