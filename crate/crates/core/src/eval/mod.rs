//! Accuracy@K, comparison reports and synthetic corpora.

pub mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{PseudoDocCollection, Vocabulary};
use crate::dictionary::TestSet;
use crate::error::{Error, Result};
use crate::sampler::{Lang, PosteriorEstimates};
use crate::similarity::{format_score, rank_candidates, Measure, RankedCandidates};
use crate::tfidf::TfidfModel;

pub use synth::{generate_synthetic, SyntheticData, SyntheticSpec};

pub const REPORT_FORMAT: &str = "lexitopic-report";
pub const REPORT_VERSION: u32 = 1;

/// Per-query rankings keyed by source word id.
pub type Rankings = BTreeMap<u32, RankedCandidates>;

fn hits(rankings: &Rankings, gold: &TestSet, queries: &[u32], k: usize) -> Result<usize> {
    let mut n = 0;
    for &q in queries {
        let r = rankings
            .get(&q)
            .ok_or_else(|| Error::MissingRanking(q.to_string()))?;
        let g = gold.gold(q).ok_or(Error::UnknownWordId(q as usize))?;
        if r.top(k).any(|c| g.contains(&c)) {
            n += 1;
        }
    }
    Ok(n)
}

/// Fraction of gold queries with an acceptable translation among the top `k`.
pub fn accuracy_at_k(rankings: &Rankings, gold: &TestSet, k: usize) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let queries: Vec<u32> = gold.queries().collect();
    Ok(hits(rankings, gold, &queries, k)? as f64 / queries.len() as f64)
}

/// Like [`accuracy_at_k`] restricted to words missing from the seed
/// dictionary; `None` when there are no such words.
pub fn new_word_accuracy_at_k(rankings: &Rankings, gold: &TestSet, k: usize) -> Result<Option<f64>> {
    let queries: Vec<u32> = gold.queries().filter(|&q| gold.is_new(q)).collect();
    if queries.is_empty() {
        return Ok(None);
    }
    Ok(Some(hits(rankings, gold, &queries, k)? as f64 / queries.len() as f64))
}

/// Ranks the whole target vocabulary for every test query. Queries are
/// scored in parallel.
pub fn rank_test_queries(
    est: &PosteriorEstimates,
    source_pseudo_docs: &PseudoDocCollection,
    test: &TestSet,
    measure: Measure,
) -> Result<Rankings> {
    let queries: Vec<u32> = test.queries().collect();
    queries
        .par_iter()
        .map(|&q| {
            let doc = source_pseudo_docs.doc(q);
            rank_candidates(est, Lang::Source, q, doc, None, measure).map(|r| (q, r))
        })
        .collect()
}

/// TF-IDF rankings for every test query. A query without any pivot word in
/// its context gets an empty ranking.
pub fn rank_test_queries_tfidf(model: &TfidfModel, test: &TestSet) -> Result<Rankings> {
    let queries: Vec<u32> = test.queries().collect();
    queries
        .par_iter()
        .map(|&q| match model.rank(q) {
            Ok(r) => Ok((q, r)),
            Err(Error::NoContext) => Ok((q, RankedCandidates::from_scores(q, Lang::Source, Measure::Cosine, Vec::new()))),
            Err(e) => Err(e),
        })
        .collect()
}

/// Rankings of one system (a trained model or the TF-IDF baseline) under
/// one measure.
#[derive(Debug, Clone)]
pub struct SystemRankings {
    pub system: String,
    pub measure: Measure,
    pub rankings: Rankings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub system: String,
    pub measure: Measure,
    pub acc1_full: f64,
    pub acc10_full: f64,
    pub acc1_new: Option<f64>,
    pub acc10_new: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub format: String,
    pub version: u32,
    pub rows: Vec<ReportRow>,
    pub queries: usize,
    pub new_queries: usize,
    pub dropped_pairs: usize,
    /// Hyperparameters, seeds and input file hashes.
    pub fingerprint: serde_json::Value,
}

pub fn evaluate(runs: &[SystemRankings], test: &TestSet, fingerprint: serde_json::Value) -> Result<EvalReport> {
    let rows = runs
        .iter()
        .map(|run| {
            Ok(ReportRow {
                system: run.system.clone(),
                measure: run.measure,
                acc1_full: accuracy_at_k(&run.rankings, test, 1)?,
                acc10_full: accuracy_at_k(&run.rankings, test, 10)?,
                acc1_new: new_word_accuracy_at_k(&run.rankings, test, 1)?,
                acc10_new: new_word_accuracy_at_k(&run.rankings, test, 10)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        rows,
        queries: test.len(),
        new_queries: test.num_new(),
        dropped_pairs: test.dropped(),
        fingerprint,
    })
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

impl EvalReport {
    pub const TSV_HEADER: &'static str = "system\tmeasure\tacc1_full\tacc10_full\tacc1_new\tacc10_new\tqueries_full\tqueries_new";

    /// One row per (system, measure). Missing new-word cells are `NA`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", Self::TSV_HEADER).unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.system,
                r.measure,
                r.acc1_full,
                r.acc10_full,
                cell(r.acc1_new),
                cell(r.acc10_new),
                self.queries,
                self.new_queries
            )
            .unwrap();
        }
        out
    }

    /// Metadata sidecar: counts and fingerprint, without the accuracy table.
    pub fn meta_json(&self) -> String {
        let meta = serde_json::json!({
            "format": self.format,
            "version": self.version,
            "queries": self.queries,
            "new_queries": self.new_queries,
            "dropped_pairs": self.dropped_pairs,
            "fingerprint": self.fingerprint,
        });
        let mut s = serde_json::to_string_pretty(&meta).expect("report metadata serializes");
        s.push('\n');
        s
    }
}

pub const RANKINGS_HEADER: &str = "system\tmeasure\tquery\trank\tcandidate\tscore";

/// Persists the top `top` candidates of every query of every run.
pub fn write_system_rankings<W: Write>(
    out: &mut W,
    runs: &[SystemRankings],
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    top: usize,
) -> io::Result<()> {
    writeln!(out, "{RANKINGS_HEADER}")?;
    for run in runs {
        for r in run.rankings.values() {
            for (rank, (c, s)) in r.entries.iter().take(top).enumerate() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    run.system,
                    run.measure,
                    source_vocab.word(r.query),
                    rank + 1,
                    target_vocab.word(*c),
                    format_score(*s)
                )?;
            }
        }
    }
    Ok(())
}
