//! Scoring candidate translations from posterior topic distributions.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::sampler::{Lang, PosteriorEstimates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "cosine")]
    Cosine,
    /// `D(query || candidate)`, ranked ascending.
    #[serde(rename = "kl")]
    Kl,
    /// `D(candidate || query)`, ranked ascending.
    #[serde(rename = "kl-rev")]
    KlReverse,
    /// Log-probability of the query's pseudo-document under the candidate's
    /// topic distribution, ranked descending.
    #[serde(rename = "selprob")]
    SelProb,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Cosine, Measure::Kl, Measure::KlReverse, Measure::SelProb];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Cosine => "cosine",
            Measure::Kl => "kl",
            Measure::KlReverse => "kl-rev",
            Measure::SelProb => "selprob",
        }
    }

    /// Higher scores rank first.
    pub fn descending(self) -> bool {
        matches!(self, Measure::Cosine | Measure::SelProb)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown measure `{s}`")))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("cosine of a zero vector".into()));
    }
    Ok(dot / (na * nb))
}

const NORMALIZATION_TOL: f64 = 1e-6;

/// `D(p || q)` in nats.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput(format!("length mismatch: {} vs {}", p.len(), q.len())));
    }
    for (name, d) in [("first", p), ("second", q)] {
        let s: f64 = d.iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL || d.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidInput(format!("{name} argument is not a distribution (sum {s})")));
        }
    }
    if q.contains(&0.0) {
        return Err(Error::InvalidInput("zero entry in the second distribution".into()));
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&pk, _)| pk > 0.0)
        .map(|(&pk, &qk)| pk * (pk / qk).ln())
        .sum())
}

/// `sum_i ln sum_k phi[k][d_i] * theta[k]` over the tokens of a
/// pseudo-document. `phi` is topics x documents, row-major.
pub fn sel_prob_log(tokens: &[u32], theta: &[f64], phi: &[f64], num_docs: usize) -> Result<f64> {
    let k = theta.len();
    if phi.len() != k * num_docs {
        return Err(Error::InvalidInput("phi shape does not match theta".into()));
    }
    let mut total = 0.0;
    for &d in tokens {
        let d = d as usize;
        if d >= num_docs {
            return Err(Error::UnknownDocument(d));
        }
        let p: f64 = (0..k).map(|topic| phi[topic * num_docs + d] * theta[topic]).sum();
        total += p.ln();
    }
    Ok(total)
}

/// A query pseudo-document prepared for scoring many candidates: distinct
/// documents with their multiplicities and the matching phi columns.
struct SelProbQuery {
    counts: Vec<f64>,
    /// distinct docs x topics
    columns: Vec<f64>,
    k: usize,
}

impl SelProbQuery {
    fn new(tokens: &[u32], est: &PosteriorEstimates, lang: Lang) -> Result<Self> {
        let k = est.topics();
        let v = est.num_docs(lang);
        let mut counts = Vec::new();
        let mut columns = Vec::new();
        let mut sorted = tokens.to_vec();
        sorted.sort_unstable();
        let mut i = 0;
        while i < sorted.len() {
            let d = sorted[i];
            if d as usize >= v {
                return Err(Error::UnknownDocument(d as usize));
            }
            let run = sorted[i..].iter().take_while(|&&x| x == d).count();
            counts.push(run as f64);
            columns.extend((0..k).map(|topic| est.phi(lang, topic)[d as usize]));
            i += run;
        }
        Ok(SelProbQuery { counts, columns, k })
    }

    fn score(&self, theta: &[f64]) -> f64 {
        self.counts
            .iter()
            .zip(self.columns.chunks_exact(self.k))
            .map(|(&n, col)| n * col.iter().zip(theta).map(|(p, t)| p * t).sum::<f64>().ln())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    pub query: u32,
    pub query_lang: Lang,
    pub measure: Measure,
    /// (candidate word id, score), best first
    pub entries: Vec<(u32, f64)>,
}

impl RankedCandidates {
    /// Sorts `(id, score)` pairs by the measure's convention, ties by id.
    pub fn from_scores(query: u32, query_lang: Lang, measure: Measure, mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by(|a, b| {
            let by_score = if measure.descending() {
                b.1.total_cmp(&a.1)
            } else {
                a.1.total_cmp(&b.1)
            };
            by_score.then(a.0.cmp(&b.0))
        });
        RankedCandidates {
            query,
            query_lang,
            measure,
            entries,
        }
    }

    pub fn top(&self, n: usize) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().take(n).map(|e| e.0)
    }
}

/// Ranks candidate words of the other language for `query`.
///
/// `query_pseudo_doc` is only read by [`Measure::SelProb`]. `candidates`
/// defaults to the whole other-language vocabulary.
pub fn rank_candidates(
    est: &PosteriorEstimates,
    query_lang: Lang,
    query: u32,
    query_pseudo_doc: &[u32],
    candidates: Option<&[u32]>,
    measure: Measure,
) -> Result<RankedCandidates> {
    let cand_lang = query_lang.other();
    if query as usize >= est.num_words(query_lang) {
        return Err(Error::UnknownWordId(query as usize));
    }
    let mut ids: Vec<u32> = match candidates {
        Some(c) => c.to_vec(),
        None => (0..est.num_words(cand_lang) as u32).collect(),
    };
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if let Some(&max) = ids.last() {
        if max as usize >= est.num_words(cand_lang) {
            return Err(Error::UnknownWordId(max as usize));
        }
    }
    let q = est.theta(query_lang, query);
    let entries = match measure {
        Measure::SelProb => {
            let prepared = SelProbQuery::new(query_pseudo_doc, est, query_lang)?;
            ids.iter().map(|&c| (c, prepared.score(est.theta(cand_lang, c)))).collect()
        }
        _ => ids
            .iter()
            .map(|&c| {
                let t = est.theta(cand_lang, c);
                let s = match measure {
                    Measure::Cosine => cosine(q, t)?,
                    Measure::Kl => kl_divergence(q, t)?,
                    Measure::KlReverse => kl_divergence(t, q)?,
                    Measure::SelProb => unreachable!(),
                };
                Ok((c, s))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(RankedCandidates::from_scores(query, query_lang, measure, entries))
}

/// `p(d | w) = sum_z phi(d | z) theta_w(z)` for document `doc` of `doc_lang`
/// and word `word` of the other language.
pub fn doc_given_word(est: &PosteriorEstimates, doc_lang: Lang, doc: u32, word: u32) -> Result<f64> {
    let word_lang = doc_lang.other();
    if doc as usize >= est.num_docs(doc_lang) {
        return Err(Error::UnknownDocument(doc as usize));
    }
    if word as usize >= est.num_words(word_lang) {
        return Err(Error::UnknownWordId(word as usize));
    }
    let theta = est.theta(word_lang, word);
    Ok((0..est.topics())
        .map(|k| est.phi(doc_lang, k)[doc as usize] * theta[k])
        .sum())
}

/// Formats like C's `%.6g`.
pub fn format_score(x: f64) -> String {
    format_sig(x, 6)
}

fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `query<TAB>rank<TAB>candidate<TAB>score` rows, at most `top` per
/// query (all when `None`).
pub fn write_rankings<W: Write>(
    out: &mut W,
    rankings: &[RankedCandidates],
    query_vocab: &Vocabulary,
    cand_vocab: &Vocabulary,
    top: Option<usize>,
) -> io::Result<()> {
    for r in rankings {
        let n = top.unwrap_or(usize::MAX);
        for (rank, (c, s)) in r.entries.iter().take(n).enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                query_vocab.word(r.query),
                rank + 1,
                cand_vocab.word(*c),
                format_score(*s)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine(&[0.7, 0.3], &[0.3, 0.7]).unwrap(), 0.42 / 0.58, epsilon = 1e-12);
        assert_abs_diff_eq!(cosine(&[0.7, 0.3], &[0.3, 0.7]).unwrap(), 0.72414, epsilon = 1e-5);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_is_symmetric() {
        let a = [0.2, 0.5, 0.3];
        let b = [0.6, 0.1, 0.3];
        assert_eq!(cosine(&a, &b).unwrap(), cosine(&b, &a).unwrap());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.7, 0.3], &[0.7, 0.3]).unwrap(), 0.0);
        let d = kl_divergence(&[0.7, 0.3], &[0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(d, 0.4 * (7.0f64 / 3.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 0.338919, epsilon = 1e-6);
        let a = [0.8, 0.2];
        let b = [0.4, 0.6];
        assert!((kl_divergence(&a, &b).unwrap() - kl_divergence(&b, &a).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn kl_errors() {
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert!(kl_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[0.5, 0.5], &[0.5]).is_err());
    }

    #[test]
    fn sel_prob_examples() {
        // phi rows: z1 = (0.6, 0.4), z2 = (0.2, 0.8)
        let phi = [0.6, 0.4, 0.2, 0.8];
        let s = sel_prob_log(&[0, 0, 1], &[0.5, 0.5], &phi, 2).unwrap();
        assert_abs_diff_eq!(s, 2.0 * 0.4f64.ln() + 0.6f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(s, -2.34341, epsilon = 1e-5);

        let single = sel_prob_log(&[0, 1, 1], &[1.0], &[0.25, 0.75], 2).unwrap();
        assert_abs_diff_eq!(single, 0.25f64.ln() + 2.0 * 0.75f64.ln(), epsilon = 1e-12);

        assert!(matches!(sel_prob_log(&[2], &[0.5, 0.5], &phi, 2), Err(Error::UnknownDocument(2))));
    }

    #[test]
    fn sel_prob_decreases_with_each_token() {
        let phi = [0.6, 0.4, 0.2, 0.8];
        let theta = [0.3, 0.7];
        let mut tokens = vec![];
        let mut last = 0.0;
        for d in [0, 1, 1, 0, 1] {
            tokens.push(d);
            let s = sel_prob_log(&tokens, &theta, &phi, 2).unwrap();
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn sel_prob_handles_long_pseudo_documents() {
        let phi = [0.6, 0.4, 0.2, 0.8];
        let tokens: Vec<u32> = (0..1_000_000).map(|i| (i % 2) as u32).collect();
        let s = sel_prob_log(&tokens, &[0.5, 0.5], &phi, 2).unwrap();
        assert!(s.is_finite());
        assert_abs_diff_eq!(s, 500_000.0 * (0.4f64.ln() + 0.6f64.ln()), epsilon = 1e-3);
    }

    fn hand_model() -> PosteriorEstimates {
        PosteriorEstimates::from_rows(
            2,
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
            vec![vec![0.1, 0.9], vec![0.9, 0.1], vec![0.6, 0.4]],
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]],
            vec![vec![0.5, 0.5], vec![0.25, 0.75]],
        )
        .unwrap()
    }

    #[test]
    fn equal_theta_ranks_first_under_every_measure() {
        let est = hand_model();
        for m in Measure::ALL {
            let r = rank_candidates(&est, Lang::Source, 0, &[0, 0, 0, 1], None, m).unwrap();
            assert_eq!(r.entries[0].0, 1, "{m}");
            assert_eq!(r.entries.last().unwrap().0, 0, "{m}");
        }
    }

    #[test]
    fn ranking_contract() {
        let est = hand_model();
        let r = rank_candidates(&est, Lang::Source, 0, &[0], Some(&[2]), Measure::Cosine).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].0, 2);

        let a = rank_candidates(&est, Lang::Source, 1, &[2, 0], Some(&[2, 0, 1]), Measure::Kl).unwrap();
        let b = rank_candidates(&est, Lang::Source, 1, &[2, 0], Some(&[1, 2, 0, 0]), Measure::Kl).unwrap();
        assert_eq!(a, b);
        assert!(a.entries.windows(2).all(|p| p[0].1 <= p[1].1));

        assert!(matches!(
            rank_candidates(&est, Lang::Source, 0, &[0], Some(&[]), Measure::Cosine),
            Err(Error::EmptyCandidates)
        ));
        assert!(rank_candidates(&est, Lang::Source, 7, &[0], None, Measure::Cosine).is_err());
        assert!(rank_candidates(&est, Lang::Source, 0, &[0], Some(&[9]), Measure::Cosine).is_err());
    }

    #[test]
    fn ties_break_by_word_id() {
        let est = PosteriorEstimates::from_rows(
            2,
            vec![vec![0.5, 0.5]],
            vec![vec![0.2, 0.8], vec![0.2, 0.8], vec![0.2, 0.8]],
            vec![vec![1.0], vec![1.0]],
            vec![vec![1.0], vec![1.0]],
        )
        .unwrap();
        for m in Measure::ALL {
            let r = rank_candidates(&est, Lang::Source, 0, &[0], Some(&[2, 0, 1]), m).unwrap();
            assert_eq!(r.top(3).collect::<Vec<_>>(), vec![0, 1, 2]);
        }
    }

    #[test]
    fn doc_given_word_is_a_distribution() {
        let est = hand_model();
        for w in 0..2 {
            let total: f64 = (0..2).map(|d| doc_given_word(&est, Lang::Target, d, w).unwrap()).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
        // theta of source word 0 = (0.9, 0.1): 0.9 * 0.5 + 0.1 * 0.25
        assert_abs_diff_eq!(doc_given_word(&est, Lang::Target, 0, 0).unwrap(), 0.475, epsilon = 1e-12);
        assert!(doc_given_word(&est, Lang::Target, 2, 0).is_err());
        assert!(doc_given_word(&est, Lang::Target, 0, 5).is_err());
    }

    #[test]
    fn doc_given_word_degenerate_and_uniform() {
        let est = PosteriorEstimates::from_rows(
            2,
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![vec![0.5, 0.5]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![0.1, 0.3, 0.6], vec![0.3, 0.3, 0.4]],
        )
        .unwrap();
        assert_eq!(doc_given_word(&est, Lang::Target, 2, 0).unwrap(), 0.6);
        assert_abs_diff_eq!(doc_given_word(&est, Lang::Source, 1, 0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn score_formatting() {
        assert_eq!(format_score(0.0), "0");
        assert_eq!(format_score(1.0), "1");
        assert_eq!(format_score(0.724137931), "0.724138");
        assert_eq!(format_score(-2.343407), "-2.34341");
        assert_eq!(format_score(123456.7), "123457");
        assert_eq!(format_score(1234567.0), "1.23457e+06");
        assert_eq!(format_score(0.0001234567), "0.000123457");
        assert_eq!(format_score(0.00001234567), "1.23457e-05");
        assert_eq!(format_score(999999.6), "1e+06");
    }

    #[test]
    fn measure_names() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("jsd".parse::<Measure>().is_err());
    }
}
