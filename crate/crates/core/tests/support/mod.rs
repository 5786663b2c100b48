#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use lexitopic::corpus::PseudoDocCollection;
use lexitopic::dictionary::SeedDictionary;
use lexitopic::sampler::{HyperParams, Lang, ModelKind, SamplerState};

use oracle::{Config, Kind, Tiny};

pub fn model_kind(kind: Kind) -> ModelKind {
    match kind {
        Kind::BiLda => ModelKind::BiLda,
        Kind::BiLdaAll => ModelKind::BiLdaAll,
        Kind::ProbBiLda => ModelKind::ProbBiLda,
        Kind::Block => ModelKind::BlockProbBiLda,
    }
}

/// Target e0 = [0, 1], e1 = [1, 1]; source j0 = [0, 1] with candidates
/// {e0, e1}, j1 = [0, 1] outside the dictionary. Eight tokens, K = 2.
pub fn tiny_two_candidates() -> Tiny {
    Tiny {
        k: 2,
        alpha: 0.5,
        beta: 0.5,
        alpha_psi: 0.5,
        target_docs: 2,
        source_docs: 2,
        target: vec![vec![0, 1], vec![1, 1]],
        source: vec![vec![0, 1], vec![0, 1]],
        cands: vec![vec![0, 1], vec![]],
    }
}

/// Same words with j0 paired to e0 only.
pub fn tiny_single_candidate() -> Tiny {
    Tiny {
        cands: vec![vec![0], vec![]],
        ..tiny_two_candidates()
    }
}

fn current_config(m: &Tiny, kind: Kind, st: &SamplerState) -> Config {
    let mut z = Vec::new();
    for e in 0..m.target.len() as u32 {
        z.extend(st.topics(Lang::Target, e).iter().map(|&t| t as u8));
    }
    for j in 0..m.source.len() as u32 {
        z.extend(st.topics(Lang::Source, j).iter().map(|&t| t as u8));
    }
    let index_of = |w: usize, c: u32| m.cands[w].iter().position(|&x| x == c).expect("selection is a candidate") as u8;
    let mut wsel = vec![0; m.source.len()];
    let mut tsel = Vec::new();
    for (w, d) in m.source.iter().enumerate() {
        if kind == Kind::ProbBiLda {
            match st.token_selections(w as u32) {
                Some(sel) => tsel.extend(sel.iter().map(|&c| index_of(w, c))),
                None => tsel.extend(std::iter::repeat_n(0, d.len())),
            }
        } else {
            tsel.extend(std::iter::repeat_n(0, d.len()));
            if let Some(c) = st.selection(w as u32) {
                wsel[w] = index_of(w, c);
            }
        }
    }
    Config { z, wsel, tsel }
}

/// Runs the library sampler on `m` and averages the oracle statistics over
/// `samples` sweeps after `burn_in` discarded sweeps.
pub fn empirical_statistics(m: &Tiny, kind: Kind, seed: u64, burn_in: usize, samples: usize) -> Vec<(String, f64)> {
    let source = PseudoDocCollection::new(m.source_docs, m.source.clone()).unwrap();
    let target = PseudoDocCollection::new(m.target_docs, m.target.clone()).unwrap();
    let entries: BTreeMap<u32, Vec<u32>> = m
        .cands
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(w, c)| (w as u32, c.clone()))
        .collect();
    let dict = SeedDictionary::from_ids(entries).unwrap();
    let hp = HyperParams {
        topics: m.k,
        alpha: m.alpha,
        beta: m.beta,
        alpha_psi: m.alpha_psi,
        iterations: burn_in + samples,
        burn_in,
        sample_lag: 1,
        rng_seed: seed,
    };
    let mut st = SamplerState::init(&source, &target, &dict, model_kind(kind), &hp).unwrap();
    for _ in 0..burn_in {
        st.sweep();
    }
    let mut acc: Option<Vec<(String, f64)>> = None;
    for _ in 0..samples {
        st.sweep();
        let stats = oracle::statistics(m, kind, &current_config(m, kind, &st));
        match &mut acc {
            None => acc = Some(stats),
            Some(a) => {
                for (slot, (_, x)) in a.iter_mut().zip(stats) {
                    slot.1 += x;
                }
            }
        }
    }
    let mut acc = acc.expect("at least one sample");
    for slot in &mut acc {
        slot.1 /= samples as f64;
    }
    acc
}
