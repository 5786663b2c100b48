//! Synthetic bilingual corpora with known translations.
//!
//! Word pseudo-documents are sampled from the topic model itself: each true
//! translation pair shares one topic distribution, every topic is a
//! distribution over the documents of each language, and every token of a
//! word picks a topic and then a document. The corpora are obtained by
//! un-inverting the sampled pseudo-documents, so re-inverting them gives the
//! sampled pseudo-documents back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Uniform;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const SOURCE_FILE: &str = "source.txt";
pub const TARGET_FILE: &str = "target.txt";
pub const SEED_DICT_FILE: &str = "seed_dict.tsv";
pub const TEST_SET_FILE: &str = "test.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub topics: usize,
    pub docs_per_language: usize,
    /// Expected tokens per document before short documents are dropped.
    pub mean_doc_len: usize,
    pub min_doc_len: usize,
    pub source_vocab: usize,
    pub target_vocab: usize,
    /// True pairs that go into the seed dictionary.
    pub seed_pairs: usize,
    /// True pairs held out as the gold test set.
    pub held_out_pairs: usize,
    /// Fraction of seed entries that get one extra, wrong candidate.
    pub noise_rate: f64,
    /// Dirichlet concentration of the per-word topic distributions.
    pub alpha: f64,
    /// Gamma shape of a document's weight within its home topic.
    pub doc_concentration: f64,
    /// Relative weight of a document in the topics other than its home topic.
    pub off_topic_weight: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            topics: 5,
            docs_per_language: 500,
            mean_doc_len: 20,
            min_doc_len: crate::corpus::DEFAULT_MIN_DOC_LEN,
            source_vocab: 100,
            target_vocab: 100,
            seed_pairs: 60,
            held_out_pairs: 40,
            noise_rate: 0.4,
            alpha: 0.5,
            doc_concentration: 5.0,
            off_topic_weight: 0.05,
            rng_seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if self.topics == 0 || self.docs_per_language == 0 || self.mean_doc_len == 0 {
            return bad("topics, documents and document length must be positive".into());
        }
        if self.source_vocab == 0 || self.target_vocab == 0 {
            return bad("vocabularies must be non-empty".into());
        }
        let pairs = self.seed_pairs + self.held_out_pairs;
        if pairs > self.source_vocab.min(self.target_vocab) {
            return bad(format!(
                "{pairs} translation pairs need at least {pairs} words per language"
            ));
        }
        if self.seed_pairs == 0 || self.held_out_pairs == 0 {
            return bad("need at least one seed pair and one held-out pair".into());
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad(format!("noise rate {} is outside [0, 1]", self.noise_rate));
        }
        if self.noise_rate > 0.0 && self.target_vocab < 2 {
            return bad("spurious candidates need a second target word".into());
        }
        if !(self.alpha > 0.0 && self.doc_concentration > 0.0 && self.off_topic_weight >= 0.0) {
            return bad("concentrations must be positive".into());
        }
        if self.off_topic_weight == 0.0 && self.docs_per_language < self.topics {
            return bad("every topic needs at least one document".into());
        }
        Ok(())
    }

    /// Number of seed entries carrying a spurious candidate.
    pub fn noisy_entries(&self) -> usize {
        (self.noise_rate * self.seed_pairs as f64).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub source: Corpus,
    pub target: Corpus,
    pub seed_pairs: Vec<(String, String)>,
    pub test_pairs: Vec<(String, String)>,
    /// True translation of every paired source word.
    pub truth: BTreeMap<String, String>,
    /// Source words whose seed entry has a spurious candidate.
    pub noisy: BTreeSet<String>,
    /// Sampled pseudo-documents by word, with document ids of the final corpora.
    pub source_pseudo_docs: BTreeMap<String, Vec<u32>>,
    pub target_pseudo_docs: BTreeMap<String, Vec<u32>>,
}

pub fn source_word(i: usize) -> String {
    format!("s{i:04}")
}

pub fn target_word(i: usize) -> String {
    format!("t{i:04}")
}

fn topic_doc_distributions(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<WeightedIndex<f64>>> {
    let gamma = Gamma::new(spec.doc_concentration, 1.0).map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
    let home: Vec<usize> = (0..spec.docs_per_language).map(|d| d % spec.topics).collect();
    (0..spec.topics)
        .map(|k| {
            let w: Vec<f64> = home
                .iter()
                .map(|&h| {
                    let g: f64 = gamma.sample(rng);
                    if h == k { g } else { g * spec.off_topic_weight }
                })
                .collect();
            WeightedIndex::new(w).map_err(|e| Error::InfeasibleSpec(e.to_string()))
        })
        .collect()
}

fn word_frequencies(n: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let u = Uniform::new(0.5, 1.5).expect("valid range");
    let w: Vec<f64> = (0..n).map(|_| rng.sample(u)).collect();
    let sum: f64 = w.iter().sum();
    w.iter()
        .map(|x| ((x / sum * total as f64).round() as usize).max(1))
        .collect()
}

/// Samples every word's pseudo-document (pre-filter document ids).
fn sample_pseudo_docs(
    thetas: &[WeightedIndex<f64>],
    freqs: &[usize],
    phi: &[WeightedIndex<f64>],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<u32>> {
    thetas
        .iter()
        .zip(freqs)
        .map(|(theta, &n)| {
            let mut docs: Vec<u32> = (0..n)
                .map(|_| {
                    let z = theta.sample(rng);
                    phi[z].sample(rng) as u32
                })
                .collect();
            docs.sort_unstable();
            docs
        })
        .collect()
}

/// Turns pseudo-documents back into documents, drops short documents and
/// renumbers the rest. Returns the corpus and the renumbered pseudo-documents.
fn uninvert(
    language: &str,
    pseudo: &[Vec<u32>],
    words: &[String],
    num_docs: usize,
    min_doc_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Corpus, BTreeMap<String, Vec<u32>>)> {
    let mut docs: Vec<Vec<usize>> = vec![Vec::new(); num_docs];
    for (w, pd) in pseudo.iter().enumerate() {
        for &d in pd {
            docs[d as usize].push(w);
        }
    }
    let mut remap = vec![None; num_docs];
    let mut kept = Vec::new();
    for (d, doc) in docs.iter_mut().enumerate() {
        if doc.len() >= min_doc_len.max(1) {
            doc.shuffle(rng);
            remap[d] = Some(kept.len() as u32);
            kept.push(doc.iter().map(|&w| words[w].clone()).collect::<Vec<_>>());
        }
    }
    let mut by_word = BTreeMap::new();
    for (w, pd) in pseudo.iter().enumerate() {
        let mapped: Vec<u32> = pd.iter().filter_map(|&d| remap[d as usize]).collect();
        if !mapped.is_empty() {
            by_word.insert(words[w].clone(), mapped);
        }
    }
    let corpus = Corpus::from_documents(language, kept, min_doc_len).map_err(|_| {
        Error::InfeasibleSpec(format!("no {language} document reached {min_doc_len} tokens"))
    })?;
    Ok((corpus, by_word))
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let k = spec.topics;
    let npairs = spec.seed_pairs + spec.held_out_pairs;

    let phi_src = topic_doc_distributions(spec, &mut rng)?;
    let phi_tgt = topic_doc_distributions(spec, &mut rng)?;

    let mut src_order: Vec<usize> = (0..spec.source_vocab).collect();
    let mut tgt_order: Vec<usize> = (0..spec.target_vocab).collect();
    src_order.shuffle(&mut rng);
    tgt_order.shuffle(&mut rng);

    // Dirichlet draws as normalized Gamma variates
    let theta_gamma = Gamma::new(spec.alpha, 1.0).map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
    let draw_theta = |rng: &mut ChaCha8Rng| -> Result<WeightedIndex<f64>> {
        let t: Vec<f64> = (0..k).map(|_| theta_gamma.sample(rng)).collect();
        // tiny alphas can underflow every component
        WeightedIndex::new(t)
            .or_else(|_| WeightedIndex::new(vec![1.0; k]))
            .map_err(|e| Error::InfeasibleSpec(e.to_string()))
    };
    let mut src_theta: Vec<Option<WeightedIndex<f64>>> = vec![None; spec.source_vocab];
    let mut tgt_theta: Vec<Option<WeightedIndex<f64>>> = vec![None; spec.target_vocab];
    for i in 0..npairs {
        let t = draw_theta(&mut rng)?;
        tgt_theta[tgt_order[i]] = Some(t.clone());
        src_theta[src_order[i]] = Some(t);
    }
    for slot in src_theta.iter_mut().chain(tgt_theta.iter_mut()) {
        if slot.is_none() {
            *slot = Some(draw_theta(&mut rng)?);
        }
    }
    let src_theta: Vec<_> = src_theta.into_iter().map(Option::unwrap).collect();
    let tgt_theta: Vec<_> = tgt_theta.into_iter().map(Option::unwrap).collect();

    let total = spec.docs_per_language * spec.mean_doc_len;
    let src_freq = word_frequencies(spec.source_vocab, total, &mut rng);
    let tgt_freq = word_frequencies(spec.target_vocab, total, &mut rng);
    let src_pseudo = sample_pseudo_docs(&src_theta, &src_freq, &phi_src, &mut rng);
    let tgt_pseudo = sample_pseudo_docs(&tgt_theta, &tgt_freq, &phi_tgt, &mut rng);

    let src_words: Vec<String> = (0..spec.source_vocab).map(source_word).collect();
    let tgt_words: Vec<String> = (0..spec.target_vocab).map(target_word).collect();
    let (source, source_pseudo_docs) =
        uninvert("source", &src_pseudo, &src_words, spec.docs_per_language, spec.min_doc_len, &mut rng)?;
    let (target, target_pseudo_docs) =
        uninvert("target", &tgt_pseudo, &tgt_words, spec.docs_per_language, spec.min_doc_len, &mut rng)?;

    let truth: BTreeMap<String, String> = (0..npairs)
        .map(|i| (src_words[src_order[i]].clone(), tgt_words[tgt_order[i]].clone()))
        .collect();

    let mut noisy_idx: Vec<usize> = (0..spec.seed_pairs).collect();
    noisy_idx.shuffle(&mut rng);
    noisy_idx.truncate(spec.noisy_entries());
    let noisy_idx: BTreeSet<usize> = noisy_idx.into_iter().collect();

    let mut seed_pairs = Vec::new();
    let mut noisy = BTreeSet::new();
    for i in 0..spec.seed_pairs {
        let s = &src_words[src_order[i]];
        let t = tgt_order[i];
        seed_pairs.push((s.clone(), tgt_words[t].clone()));
        if noisy_idx.contains(&i) {
            let mut wrong = rng.random_range(0..spec.target_vocab - 1);
            if wrong >= t {
                wrong += 1;
            }
            seed_pairs.push((s.clone(), tgt_words[wrong].clone()));
            noisy.insert(s.clone());
        }
    }
    let test_pairs = (spec.seed_pairs..npairs)
        .map(|i| (src_words[src_order[i]].clone(), tgt_words[tgt_order[i]].clone()))
        .collect();

    Ok(SyntheticData {
        source,
        target,
        seed_pairs,
        test_pairs,
        truth,
        noisy,
        source_pseudo_docs,
        target_pseudo_docs,
    })
}

fn corpus_text(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in corpus.documents() {
        writeln!(out, "{}", doc.join(" ")).unwrap();
    }
    out
}

fn pairs_text(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (s, t) in pairs {
        writeln!(out, "{s}\t{t}").unwrap();
    }
    out
}

impl SyntheticData {
    /// Writes the two corpora, the seed dictionary and the test set.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (SOURCE_FILE, corpus_text(&self.source)),
            (TARGET_FILE, corpus_text(&self.target)),
            (SEED_DICT_FILE, pairs_text(&self.seed_pairs)),
            (TEST_SET_FILE, pairs_text(&self.test_pairs)),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
