//! Exact posteriors of tiny bilingual topic models.
//!
//! Two independent constructions:
//!
//! * `exact_joint` writes the joint density of the models that are true Gibbs
//!   samplers (bilda, probbilda) as products of Dirichlet-multinomial terms and
//!   normalizes it over every configuration.
//! * `stationary` builds the one-sweep transition kernel directly from the
//!   per-site update formulas, pushes a distribution through it until it
//!   stops changing, and returns the limit. This covers bilda-all (random
//!   re-pairing) and blockprobbilda (deterministic argmax selection), which
//!   are not Gibbs samplers of any closed-form joint.
//!
//! Counts are recomputed from scratch for every configuration; nothing here
//! shares code with the library's samplers.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    BiLda,
    BiLdaAll,
    ProbBiLda,
    Block,
}

/// A model small enough to enumerate. Pseudo-documents list document ids
/// in ascending order; `cands[w]` are the candidate target words of source
/// word `w` (ascending, empty when the word is not in the dictionary).
#[derive(Debug, Clone)]
pub struct Tiny {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_psi: f64,
    pub target_docs: usize,
    pub source_docs: usize,
    pub target: Vec<Vec<u32>>,
    pub source: Vec<Vec<u32>>,
    pub cands: Vec<Vec<u32>>,
}

/// Topics of all tokens (target words first, then source words, each in
/// pseudo-document order), the word-level selection index of every source
/// word and the token-level selection index of every source token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    pub z: Vec<u8>,
    pub wsel: Vec<u8>,
    pub tsel: Vec<u8>,
}

#[derive(Debug, Clone, Copy)]
struct Token {
    target: bool,
    word: usize,
    doc: usize,
    /// position among the source tokens, for `tsel`
    src_pos: usize,
}

impl Tiny {
    fn tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        for (w, d) in self.target.iter().enumerate() {
            for &n in d {
                out.push(Token { target: true, word: w, doc: n as usize, src_pos: usize::MAX });
            }
        }
        let mut pos = 0;
        for (w, d) in self.source.iter().enumerate() {
            for &n in d {
                out.push(Token { target: false, word: w, doc: n as usize, src_pos: pos });
                pos += 1;
            }
        }
        out
    }

    fn num_source_tokens(&self) -> usize {
        self.source.iter().map(Vec::len).sum()
    }

    /// Target word cited by a source token, if its word is in the dictionary.
    fn cited(&self, kind: Kind, cfg: &Config, tok: &Token) -> Option<usize> {
        let cs = &self.cands[tok.word];
        if cs.is_empty() {
            return None;
        }
        let i = match kind {
            Kind::ProbBiLda => cfg.tsel[tok.src_pos],
            _ => cfg.wsel[tok.word],
        };
        Some(cs[i as usize] as usize)
    }

    /// Every configuration the model can reach.
    pub fn configs(&self, kind: Kind) -> Vec<Config> {
        let toks = self.tokens();
        let nt = toks.len();
        let mut z_all = vec![Vec::new()];
        for _ in 0..nt {
            z_all = z_all
                .into_iter()
                .flat_map(|z: Vec<u8>| (0..self.k as u8).map(move |v| [z.clone(), vec![v]].concat()))
                .collect();
        }
        let word_ranges: Vec<usize> = match kind {
            Kind::ProbBiLda => vec![1; self.source.len()],
            _ => self.cands.iter().map(|c| c.len().max(1)).collect(),
        };
        let token_ranges: Vec<usize> = match kind {
            Kind::ProbBiLda => toks
                .iter()
                .filter(|t| !t.target)
                .map(|t| self.cands[t.word].len().max(1))
                .collect(),
            _ => vec![1; self.num_source_tokens()],
        };
        let wsel_all = product(&word_ranges);
        let tsel_all = product(&token_ranges);
        let mut out = Vec::new();
        for z in &z_all {
            for ws in &wsel_all {
                for ts in &tsel_all {
                    out.push(Config { z: z.clone(), wsel: ws.clone(), tsel: ts.clone() });
                }
            }
        }
        out
    }
}

fn product(ranges: &[usize]) -> Vec<Vec<u8>> {
    let mut all = vec![Vec::new()];
    for &r in ranges {
        all = all
            .into_iter()
            .flat_map(|p: Vec<u8>| (0..r as u8).map(move |v| [p.clone(), vec![v]].concat()))
            .collect();
    }
    all
}

/// All count tables of a configuration, optionally leaving one token out.
struct Counts {
    nmk_t: Vec<Vec<f64>>,
    nmk_s: Vec<Vec<f64>>,
    nkv_t: Vec<Vec<f64>>,
    nkv_s: Vec<Vec<f64>>,
    /// source tokens citing each target word, by topic
    cmk: Vec<Vec<f64>>,
    /// selection counts per source word and candidate index
    nms: Vec<Vec<f64>>,
}

impl Counts {
    fn new(m: &Tiny, kind: Kind, cfg: &Config, skip: Option<usize>) -> Self {
        let k = m.k;
        let mut c = Counts {
            nmk_t: vec![vec![0.0; k]; m.target.len()],
            nmk_s: vec![vec![0.0; k]; m.source.len()],
            nkv_t: vec![vec![0.0; m.target_docs]; k],
            nkv_s: vec![vec![0.0; m.source_docs]; k],
            cmk: vec![vec![0.0; k]; m.target.len()],
            nms: m.cands.iter().map(|cs| vec![0.0; cs.len()]).collect(),
        };
        for (i, tok) in m.tokens().iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let z = cfg.z[i] as usize;
            if tok.target {
                c.nmk_t[tok.word][z] += 1.0;
                c.nkv_t[z][tok.doc] += 1.0;
            } else {
                c.nmk_s[tok.word][z] += 1.0;
                c.nkv_s[z][tok.doc] += 1.0;
                if let Some(t) = m.cited(kind, cfg, tok) {
                    c.cmk[t][z] += 1.0;
                }
                if kind == Kind::ProbBiLda && !m.cands[tok.word].is_empty() {
                    c.nms[tok.word][cfg.tsel[tok.src_pos] as usize] += 1.0;
                }
            }
        }
        c
    }
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// `prod_k (a)_{n_k} / (K a)_{N}` with rising factorials.
fn dirichlet_multinomial(counts: &[f64], a: f64) -> f64 {
    let mut num = 1.0;
    for &n in counts {
        for i in 0..n as usize {
            num *= a + i as f64;
        }
    }
    let mut den = 1.0;
    for i in 0..sum(counts) as usize {
        den *= counts.len() as f64 * a + i as f64;
    }
    num / den
}

/// Unnormalized joint density of bilda and probbilda configurations.
fn joint(m: &Tiny, kind: Kind, cfg: &Config) -> f64 {
    let c = Counts::new(m, kind, cfg, None);
    let mut p = 1.0;
    // topic-document terms of both languages
    for row in c.nkv_t.iter() {
        p *= dirichlet_multinomial(row, m.beta);
    }
    for row in c.nkv_s.iter() {
        p *= dirichlet_multinomial(row, m.beta);
    }
    // one topic distribution per target word, shared with every token citing it
    for (t, own) in c.nmk_t.iter().enumerate() {
        let pooled: Vec<f64> = own.iter().zip(&c.cmk[t]).map(|(a, b)| a + b).collect();
        p *= dirichlet_multinomial(&pooled, m.alpha);
    }
    for (w, own) in c.nmk_s.iter().enumerate() {
        if m.cands[w].is_empty() {
            p *= dirichlet_multinomial(own, m.alpha);
        } else if kind == Kind::ProbBiLda {
            p *= dirichlet_multinomial(&c.nms[w], m.alpha_psi);
        }
    }
    p
}

/// A probability distribution over configurations.
#[derive(Debug, Clone)]
pub struct Dist {
    pub configs: Vec<Config>,
    pub probs: Vec<f64>,
}

pub fn exact_joint(m: &Tiny, kind: Kind) -> Dist {
    assert!(matches!(kind, Kind::BiLda | Kind::ProbBiLda), "no closed-form joint for {kind:?}");
    if kind == Kind::BiLda {
        assert!(m.cands.iter().all(|c| c.len() <= 1), "bilda needs a one-to-one pairing");
        let mut cited: Vec<u32> = m.cands.iter().flatten().copied().collect();
        let n = cited.len();
        cited.sort_unstable();
        cited.dedup();
        assert_eq!(n, cited.len(), "paired target words must be distinct");
    }
    let configs = m.configs(kind);
    let w: Vec<f64> = configs.iter().map(|c| joint(m, kind, c)).collect();
    let total = sum(&w);
    Dist { configs, probs: w.iter().map(|x| x / total).collect() }
}

/// One update step of the sweep.
#[derive(Debug, Clone, Copy)]
enum Site {
    Topic(usize),
    TokenSelection(usize),
    WordSelection(usize),
    Repair(usize),
}

fn sweep_sites(m: &Tiny, kind: Kind) -> Vec<Site> {
    let toks = m.tokens();
    let mut sites = Vec::new();
    if kind == Kind::BiLdaAll {
        for w in 0..m.source.len() {
            if m.cands[w].len() > 1 {
                sites.push(Site::Repair(w));
            }
        }
    }
    for (i, t) in toks.iter().enumerate() {
        if t.target {
            sites.push(Site::Topic(i));
        }
    }
    for w in 0..m.source.len() {
        for (i, t) in toks.iter().enumerate() {
            if !t.target && t.word == w {
                sites.push(Site::Topic(i));
                if kind == Kind::ProbBiLda && m.cands[w].len() > 1 {
                    sites.push(Site::TokenSelection(i));
                }
            }
        }
        if kind == Kind::Block && m.cands[w].len() > 1 {
            sites.push(Site::WordSelection(w));
        }
    }
    sites
}

/// Outcomes of updating `site` in `cfg`, with their probabilities.
fn site_kernel(m: &Tiny, kind: Kind, cfg: &Config, site: Site) -> Vec<(Config, f64)> {
    let toks = m.tokens();
    let k = m.k;
    let normalize = |weights: Vec<(Config, f64)>| {
        let total: f64 = weights.iter().map(|w| w.1).sum();
        weights.into_iter().map(|(c, w)| (c, w / total)).collect()
    };
    match site {
        Site::Repair(w) => {
            let s = m.cands[w].len();
            (0..s)
                .map(|i| {
                    let mut c = cfg.clone();
                    c.wsel[w] = i as u8;
                    (c, 1.0 / s as f64)
                })
                .collect()
        }
        Site::Topic(i) => {
            let tok = toks[i];
            let c = Counts::new(m, kind, cfg, Some(i));
            let (nkv, v) = if tok.target { (&c.nkv_t, m.target_docs) } else { (&c.nkv_s, m.source_docs) };
            let weights = (0..k)
                .map(|topic| {
                    let doc = (nkv[topic][tok.doc] + m.beta) / (sum(&nkv[topic]) + v as f64 * m.beta);
                    let theta = if tok.target {
                        c.nmk_t[tok.word][topic] + c.cmk[tok.word][topic] + m.alpha
                    } else {
                        match (m.cited(kind, cfg, &tok), kind) {
                            (None, _) => c.nmk_s[tok.word][topic] + m.alpha,
                            (Some(t), Kind::ProbBiLda) => c.nmk_t[t][topic] + c.cmk[t][topic] + m.alpha,
                            (Some(t), _) => c.nmk_s[tok.word][topic] + c.nmk_t[t][topic] + m.alpha,
                        }
                    };
                    let mut next = cfg.clone();
                    next.z[i] = topic as u8;
                    (next, theta * doc)
                })
                .collect();
            normalize(weights)
        }
        Site::TokenSelection(i) => {
            let tok = toks[i];
            let c = Counts::new(m, kind, cfg, Some(i));
            let z = cfg.z[i] as usize;
            let weights = m.cands[tok.word]
                .iter()
                .enumerate()
                .map(|(s, &t)| {
                    let t = t as usize;
                    let num = c.nmk_t[t][z] + c.cmk[t][z] + m.alpha;
                    let den = sum(&c.nmk_t[t]) + sum(&c.cmk[t]) + k as f64 * m.alpha;
                    let mut next = cfg.clone();
                    next.tsel[tok.src_pos] = s as u8;
                    (next, num / den * (c.nms[tok.word][s] + m.alpha_psi))
                })
                .collect();
            normalize(weights)
        }
        Site::WordSelection(w) => {
            let c = Counts::new(m, kind, cfg, None);
            let own_z: Vec<usize> = toks
                .iter()
                .enumerate()
                .filter(|(_, t)| !t.target && t.word == w)
                .map(|(i, _)| cfg.z[i] as usize)
                .collect();
            let mut best = (f64::NEG_INFINITY, 0);
            for (s, &t) in m.cands[w].iter().enumerate() {
                let t = t as usize;
                // other source words currently citing t
                let mut others = vec![0.0; k];
                for (m2, cs) in m.cands.iter().enumerate() {
                    if m2 != w && !cs.is_empty() && cs[cfg.wsel[m2] as usize] as usize == t {
                        for topic in 0..k {
                            others[topic] += c.nmk_s[m2][topic];
                        }
                    }
                }
                let den = sum(&c.nmk_t[t]) + k as f64 * m.alpha + sum(&others);
                let score: f64 = own_z
                    .iter()
                    .map(|&z| ((c.nmk_t[t][z] + m.alpha + others[z]) / den).ln())
                    .sum();
                if score > best.0 {
                    best = (score, s);
                }
            }
            let mut next = cfg.clone();
            next.wsel[w] = best.1 as u8;
            vec![(next, 1.0)]
        }
    }
}

/// Limit of repeated sweeps started from the sampler's initial distribution
/// (independent uniform topics and selections).
pub fn stationary(m: &Tiny, kind: Kind) -> Dist {
    let configs = m.configs(kind);
    let index: HashMap<Config, usize> = configs.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let sites = sweep_sites(m, kind);
    // sparse transition lists per site
    let kernels: Vec<Vec<Vec<(usize, f64)>>> = sites
        .iter()
        .map(|&site| {
            configs
                .iter()
                .map(|c| {
                    site_kernel(m, kind, c, site)
                        .into_iter()
                        .map(|(next, p)| (index[&next], p))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut p = vec![1.0 / configs.len() as f64; configs.len()];
    for sweep in 0..100_000 {
        let mut cur = p.clone();
        for kernel in &kernels {
            let mut next = vec![0.0; cur.len()];
            for (from, outs) in kernel.iter().enumerate() {
                if cur[from] == 0.0 {
                    continue;
                }
                for &(to, q) in outs {
                    next[to] += cur[from] * q;
                }
            }
            cur = next;
        }
        let diff: f64 = cur.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = cur;
        if diff < 1e-14 {
            return Dist { configs, probs: p };
        }
        assert!(sweep < 99_999, "sweep kernel did not converge");
    }
    unreachable!()
}

/// Named indicator statistics of a configuration: every token topic, every
/// pair of token topics agreeing, every selection variable.
pub fn statistics(m: &Tiny, kind: Kind, cfg: &Config) -> Vec<(String, f64)> {
    let nt = cfg.z.len();
    let mut out = Vec::new();
    for i in 0..nt {
        out.push((format!("z{i}=0"), f64::from(cfg.z[i] == 0)));
    }
    for a in 0..nt {
        for b in a + 1..nt {
            out.push((format!("z{a}=z{b}"), f64::from(cfg.z[a] == cfg.z[b])));
        }
    }
    match kind {
        Kind::ProbBiLda => {
            let mut pos = 0;
            for (w, d) in m.source.iter().enumerate() {
                for _ in d {
                    if m.cands[w].len() > 1 {
                        out.push((format!("s{pos}=1"), f64::from(cfg.tsel[pos] == 1)));
                    }
                    pos += 1;
                }
            }
        }
        _ => {
            for (w, cs) in m.cands.iter().enumerate() {
                if cs.len() > 1 {
                    out.push((format!("sel{w}=1"), f64::from(cfg.wsel[w] == 1)));
                }
            }
        }
    }
    out
}

pub fn expected_statistics(m: &Tiny, kind: Kind, d: &Dist) -> Vec<(String, f64)> {
    let mut acc: Vec<(String, f64)> = statistics(m, kind, &d.configs[0]).into_iter().map(|(n, _)| (n, 0.0)).collect();
    for (c, &p) in d.configs.iter().zip(&d.probs) {
        for (slot, (_, x)) in acc.iter_mut().zip(statistics(m, kind, c)) {
            slot.1 += p * x;
        }
    }
    acc
}

/// Largest total-variation distance between matching binary statistics,
/// with the name of the worst one.
pub fn max_tv(a: &[(String, f64)], b: &[(String, f64)]) -> (f64, String) {
    assert_eq!(a.len(), b.len());
    let mut worst = (0.0, String::new());
    for ((na, pa), (nb, pb)) in a.iter().zip(b) {
        assert_eq!(na, nb);
        let d = (pa - pb).abs();
        if d >= worst.0 {
            worst = (d, na.clone());
        }
    }
    worst
}
