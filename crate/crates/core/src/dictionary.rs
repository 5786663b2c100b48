//! Seed dictionaries and gold test sets.
//!
//! Both are read from `source<TAB>target` TSV files. Pairs whose words do not
//! occur in the respective corpus are dropped at load time, so every id held
//! here is valid for the vocabularies passed in.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;

use crate::corpus::{read_utf8, Vocabulary};
use crate::error::{Error, Result};

/// Splits dictionary TSV text into raw string pairs. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::MalformedLine {
                line: i + 1,
                found: fields.len(),
            });
        }
        pairs.push((fields[0].to_string(), fields[1].to_string()));
    }
    Ok(pairs)
}

/// Source word id to its candidate translations, sorted by target word id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedDictionary {
    entries: BTreeMap<u32, Vec<u32>>,
}

impl SeedDictionary {
    /// Groups pairs by source word, silently dropping pairs with an OOV side.
    pub fn from_pairs<I, S, T>(pairs: I, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut grouped: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for (s, t) in pairs {
            if let (Some(s), Some(t)) = (src_vocab.id(s.as_ref()), tgt_vocab.id(t.as_ref())) {
                grouped.entry(s).or_default().insert(t);
            }
        }
        if grouped.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(SeedDictionary {
            entries: grouped
                .into_iter()
                .map(|(s, ts)| (s, ts.into_iter().collect()))
                .collect(),
        })
    }

    /// Builds a dictionary from id-level entries. Candidate lists are sorted
    /// and deduplicated; empty lists are rejected.
    pub fn from_ids(entries: BTreeMap<u32, Vec<u32>>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (s, mut ts) in entries {
            ts.sort_unstable();
            ts.dedup();
            if ts.is_empty() {
                return Err(Error::InvalidInput(format!("source word {s} has no candidates")));
            }
            out.insert(s, ts);
        }
        if out.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(SeedDictionary { entries: out })
    }

    pub fn candidates(&self, source: u32) -> Option<&[u32]> {
        self.entries.get(&source).map(Vec::as_slice)
    }

    pub fn contains(&self, source: u32) -> bool {
        self.entries.contains_key(&source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        self.entries.iter().map(|(&s, ts)| (s, ts.as_slice()))
    }

    pub fn num_pairs(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// The same pairs read in the opposite direction.
    pub fn transpose(&self) -> SeedDictionary {
        let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (&s, ts) in &self.entries {
            for &t in ts {
                out.entry(t).or_default().push(s);
            }
        }
        // sources were visited in ascending order, so lists are sorted already
        SeedDictionary { entries: out }
    }
}

pub fn load_dictionary(path: impl AsRef<Path>, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<SeedDictionary> {
    let text = read_utf8(path.as_ref())?;
    SeedDictionary::from_pairs(parse_pairs(&text)?, src_vocab, tgt_vocab)
}

/// One translation per source word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedDictionary {
    pairs: BTreeMap<u32, u32>,
}

impl PairedDictionary {
    pub fn get(&self, source: u32) -> Option<u32> {
        self.pairs.get(&source).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs.iter().map(|(&s, &t)| (s, t))
    }

    /// Single-candidate seed dictionary with the same pairs.
    pub fn to_seed(&self) -> SeedDictionary {
        SeedDictionary {
            entries: self.pairs.iter().map(|(&s, &t)| (s, vec![t])).collect(),
        }
    }
}

/// Keeps, for every source word, the candidate that is most frequent in the
/// target corpus. Ties go to the smaller word id.
pub fn most_frequent_pairing(dict: &SeedDictionary, tgt_vocab: &Vocabulary) -> PairedDictionary {
    let pairs = dict
        .entries
        .iter()
        .map(|(&s, ts)| {
            // candidates are sorted, so max_by_key over reversed order keeps the smallest id on ties
            let best = ts
                .iter()
                .rev()
                .copied()
                .max_by_key(|&t| tgt_vocab.freq(t))
                .expect("candidate lists are non-empty");
            (s, best)
        })
        .collect();
    PairedDictionary { pairs }
}

/// Gold translations for evaluation. A source word is "new" when the seed
/// dictionary has no entry for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSet {
    gold: BTreeMap<u32, Vec<u32>>,
    new_words: BTreeSet<u32>,
    dropped: usize,
}

impl TestSet {
    pub fn from_pairs<I, S, T>(
        pairs: I,
        seed: &SeedDictionary,
        src_vocab: &Vocabulary,
        tgt_vocab: &Vocabulary,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut gold: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        let mut dropped = 0;
        for (s, t) in pairs {
            let (s, t) = (s.as_ref(), t.as_ref());
            match (src_vocab.id(s), tgt_vocab.id(t)) {
                (Some(sid), Some(tid)) => {
                    gold.entry(sid).or_default().insert(tid);
                }
                (None, _) => {
                    warn!("test pair ({s}, {t}) dropped: `{s}` does not occur in the source corpus");
                    dropped += 1;
                }
                (_, None) => {
                    warn!("test pair ({s}, {t}) dropped: `{t}` does not occur in the target corpus");
                    dropped += 1;
                }
            }
        }
        if gold.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        let new_words = gold.keys().copied().filter(|&s| !seed.contains(s)).collect();
        Ok(TestSet {
            gold: gold
                .into_iter()
                .map(|(s, ts)| (s, ts.into_iter().collect()))
                .collect(),
            new_words,
            dropped,
        })
    }

    pub fn gold(&self, source: u32) -> Option<&[u32]> {
        self.gold.get(&source).map(Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = u32> + '_ {
        self.gold.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        self.gold.iter().map(|(&s, ts)| (s, ts.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn is_new(&self, source: u32) -> bool {
        self.new_words.contains(&source)
    }

    pub fn num_new(&self) -> usize {
        self.new_words.len()
    }

    /// Pairs discarded at load because one side was out of vocabulary.
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

pub fn load_test_set(
    path: impl AsRef<Path>,
    seed: &SeedDictionary,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Result<TestSet> {
    let text = read_utf8(path.as_ref())?;
    TestSet::from_pairs(parse_pairs(&text)?, seed, src_vocab, tgt_vocab)
}
