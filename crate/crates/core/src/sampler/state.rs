use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HyperParams, Lang, ModelKind};
use crate::corpus::PseudoDocCollection;
use crate::dictionary::SeedDictionary;
use crate::error::{Error, Result};

/// Token-level data and counts for one language.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LangState {
    pub num_docs: usize,
    /// `offsets[w]..offsets[w + 1]` are the tokens of word `w`.
    pub offsets: Vec<usize>,
    /// Document id of every token.
    pub tokens: Vec<u32>,
    /// Topic of every token.
    pub z: Vec<u16>,
    /// words x topics
    pub nmk: Vec<u32>,
    pub nm: Vec<u32>,
    /// topics x documents
    pub nkv: Vec<u32>,
    pub nk: Vec<u32>,
}

impl LangState {
    fn new(pdocs: &PseudoDocCollection, k: usize) -> Self {
        let mut offsets = Vec::with_capacity(pdocs.num_words() + 1);
        let mut tokens = Vec::with_capacity(pdocs.num_tokens());
        offsets.push(0);
        for doc in pdocs.docs() {
            tokens.extend_from_slice(doc);
            offsets.push(tokens.len());
        }
        let w = pdocs.num_words();
        LangState {
            num_docs: pdocs.num_docs(),
            offsets,
            z: vec![0; tokens.len()],
            tokens,
            nmk: vec![0; w * k],
            nm: vec![0; w],
            nkv: vec![0; k * pdocs.num_docs()],
            nk: vec![0; k],
        }
    }

    pub fn num_words(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn word_tokens(&self, w: usize) -> std::ops::Range<usize> {
        self.offsets[w]..self.offsets[w + 1]
    }

    pub fn pseudo_docs(&self) -> Vec<Vec<u32>> {
        (0..self.num_words())
            .map(|w| self.tokens[self.word_tokens(w)].to_vec())
            .collect()
    }
}

/// Complete Gibbs state: assignments, count tables, dictionary links and the
/// random number generator.
///
/// `cmk[c][k]` counts source tokens with topic `k` whose current selection
/// is target word `c`; `cm[c]` is its row sum. For word-level selection the
/// set of source words citing `c` is kept in `citers[c]`.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub(crate) model: ModelKind,
    pub(crate) hp: HyperParams,
    pub(crate) k: usize,
    pub(crate) langs: [LangState; 2],
    /// `cand_offsets[w]..cand_offsets[w + 1]` index `cands` for source word `w`.
    pub(crate) cand_offsets: Vec<usize>,
    pub(crate) cands: Vec<u32>,
    /// Per source word: selected candidate index (word-level models).
    pub(crate) sel: Vec<u32>,
    /// Per source token: selected candidate index (probbilda).
    pub(crate) s_tok: Vec<u32>,
    /// Per (source word, candidate index): tokens selecting it (probbilda).
    pub(crate) nms: Vec<u32>,
    pub(crate) cmk: Vec<u32>,
    pub(crate) cm: Vec<u32>,
    pub(crate) citers: Vec<Vec<u32>>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) scratch: Vec<f64>,
}

/// Serializable form of [`SamplerState`]. Counts are not stored; they are
/// rebuilt from the assignments on restore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub source_docs: usize,
    pub target_docs: usize,
    pub source_pseudo_docs: Vec<Vec<u32>>,
    pub target_pseudo_docs: Vec<Vec<u32>>,
    pub source_topics: Vec<u16>,
    pub target_topics: Vec<u16>,
    /// (source word, candidate target words)
    pub dictionary: Vec<(u32, Vec<u32>)>,
    pub word_selection: Vec<u32>,
    pub token_selection: Vec<u32>,
    pub rng: ChaCha8Rng,
}

const NO_SELECTION: u32 = u32::MAX;

impl SamplerState {
    /// Uniform random topics for every token and uniform random selections,
    /// drawn from a generator seeded with `hp.rng_seed`.
    pub fn init(
        source: &PseudoDocCollection,
        target: &PseudoDocCollection,
        dict: &SeedDictionary,
        model: ModelKind,
        hp: &HyperParams,
    ) -> Result<Self> {
        hp.validate()?;
        let mut state = Self::skeleton(source, target, dict, model, hp)?;
        let k = state.k;
        let rng = &mut state.rng;
        for lang in [Lang::Target, Lang::Source] {
            for z in state.langs[lang.index()].z.iter_mut() {
                *z = rng.random_range(0..k) as u16;
            }
        }
        let num_source_words = state.langs[0].num_words();
        for w in 0..num_source_words {
            let s = state.cand_offsets[w + 1] - state.cand_offsets[w];
            if s == 0 {
                continue;
            }
            if model.word_level_selection() {
                state.sel[w] = if s > 1 { rng.random_range(0..s) as u32 } else { 0 };
            } else {
                for t in state.langs[0].word_tokens(w) {
                    state.s_tok[t] = if s > 1 { rng.random_range(0..s) as u32 } else { 0 };
                }
            }
        }
        state.rebuild_counts();
        Ok(state)
    }

    fn skeleton(
        source: &PseudoDocCollection,
        target: &PseudoDocCollection,
        dict: &SeedDictionary,
        model: ModelKind,
        hp: &HyperParams,
    ) -> Result<Self> {
        let k = hp.topics;
        let src = LangState::new(source, k);
        let tgt = LangState::new(target, k);
        let ws = src.num_words();
        let we = tgt.num_words();

        let mut cand_offsets = Vec::with_capacity(ws + 1);
        let mut cands = Vec::new();
        cand_offsets.push(0);
        let mut entries = dict.iter().peekable();
        for w in 0..ws as u32 {
            if let Some((_, cs)) = entries.next_if(|(s, _)| *s == w) {
                if model == ModelKind::BiLda && cs.len() > 1 {
                    return Err(Error::ModelMismatch(format!(
                        "bilda needs a one-to-one pairing, source word {w} has {} candidates",
                        cs.len()
                    )));
                }
                for &c in cs {
                    if c as usize >= we {
                        return Err(Error::UnknownWordId(c as usize));
                    }
                }
                cands.extend_from_slice(cs);
            }
            cand_offsets.push(cands.len());
        }
        if let Some((s, _)) = entries.next() {
            return Err(Error::UnknownWordId(s as usize));
        }

        let word_level = model.word_level_selection();
        let num_src_tokens = src.tokens.len();
        Ok(SamplerState {
            model,
            hp: hp.clone(),
            k,
            sel: if word_level {
                (0..ws)
                    .map(|w| if cand_offsets[w + 1] > cand_offsets[w] { 0 } else { NO_SELECTION })
                    .collect()
            } else {
                Vec::new()
            },
            s_tok: if word_level { Vec::new() } else { vec![0; num_src_tokens] },
            nms: if word_level { Vec::new() } else { vec![0; cands.len()] },
            cand_offsets,
            cands,
            cmk: vec![0; we * k],
            cm: vec![0; we],
            citers: vec![Vec::new(); we],
            langs: [src, tgt],
            rng: ChaCha8Rng::seed_from_u64(hp.rng_seed),
            scratch: vec![0.0; k],
        })
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hp
    }

    pub fn num_words(&self, lang: Lang) -> usize {
        self.langs[lang.index()].num_words()
    }

    pub fn num_docs(&self, lang: Lang) -> usize {
        self.langs[lang.index()].num_docs
    }

    pub fn num_tokens(&self, lang: Lang) -> usize {
        self.langs[lang.index()].tokens.len()
    }

    /// Topic assignments of the tokens of `word`, in pseudo-document order.
    pub fn topics(&self, lang: Lang, word: u32) -> &[u16] {
        let l = &self.langs[lang.index()];
        &l.z[l.word_tokens(word as usize)]
    }

    pub fn candidates(&self, source_word: u32) -> &[u32] {
        let w = source_word as usize;
        &self.cands[self.cand_offsets[w]..self.cand_offsets[w + 1]]
    }

    /// Target word currently selected by a source word (word-level models).
    pub fn selection(&self, source_word: u32) -> Option<u32> {
        let idx = *self.sel.get(source_word as usize)?;
        (idx != NO_SELECTION).then(|| self.candidates(source_word)[idx as usize])
    }

    /// Target words selected by each token of a source word (probbilda).
    pub fn token_selections(&self, source_word: u32) -> Option<Vec<u32>> {
        if self.model.word_level_selection() {
            return None;
        }
        let cands = self.candidates(source_word);
        if cands.is_empty() {
            return None;
        }
        let range = self.langs[0].word_tokens(source_word as usize);
        Some(self.s_tok[range].iter().map(|&i| cands[i as usize]).collect())
    }

    /// Source words currently citing `target_word` (word-level models).
    pub fn citers(&self, target_word: u32) -> &[u32] {
        &self.citers[target_word as usize]
    }

    /// Topic counts of the tokens of `word`.
    pub fn nmk(&self, lang: Lang, word: u32) -> &[u32] {
        let w = word as usize;
        &self.langs[lang.index()].nmk[w * self.k..(w + 1) * self.k]
    }

    /// Target word cited by source token `t` of word `w`, if any.
    fn cited(&self, w: usize, t: usize) -> Option<usize> {
        let lo = self.cand_offsets[w];
        if lo == self.cand_offsets[w + 1] {
            return None;
        }
        let idx = if self.model.word_level_selection() {
            self.sel[w]
        } else {
            self.s_tok[t]
        };
        Some(self.cands[lo + idx as usize] as usize)
    }

    /// Recomputes every count table from the assignments.
    pub(crate) fn rebuild_counts(&mut self) {
        let counts = self.counts_from_assignments();
        let (langs, cmk, cm, nms, citers) = counts;
        for (l, (nmk, nm, nkv, nk)) in self.langs.iter_mut().zip(langs) {
            l.nmk = nmk;
            l.nm = nm;
            l.nkv = nkv;
            l.nk = nk;
        }
        self.cmk = cmk;
        self.cm = cm;
        self.nms = nms;
        self.citers = citers;
    }

    #[allow(clippy::type_complexity)]
    fn counts_from_assignments(
        &self,
    ) -> (
        [(Vec<u32>, Vec<u32>, Vec<u32>, Vec<u32>); 2],
        Vec<u32>,
        Vec<u32>,
        Vec<u32>,
        Vec<Vec<u32>>,
    ) {
        let k = self.k;
        let per_lang = |l: &LangState| {
            let w = l.num_words();
            let mut nmk = vec![0u32; w * k];
            let mut nm = vec![0u32; w];
            let mut nkv = vec![0u32; k * l.num_docs];
            let mut nk = vec![0u32; k];
            for word in 0..w {
                for t in l.word_tokens(word) {
                    let z = l.z[t] as usize;
                    nmk[word * k + z] += 1;
                    nm[word] += 1;
                    nkv[z * l.num_docs + l.tokens[t] as usize] += 1;
                    nk[z] += 1;
                }
            }
            (nmk, nm, nkv, nk)
        };
        let langs = [per_lang(&self.langs[0]), per_lang(&self.langs[1])];

        let we = self.langs[1].num_words();
        let mut cmk = vec![0u32; we * k];
        let mut cm = vec![0u32; we];
        let mut nms = vec![0u32; if self.model.word_level_selection() { 0 } else { self.cands.len() }];
        let mut citers = vec![Vec::new(); we];
        let src = &self.langs[0];
        for w in 0..src.num_words() {
            if self.cand_offsets[w] == self.cand_offsets[w + 1] {
                continue;
            }
            if self.model.word_level_selection() {
                let c = self.cands[self.cand_offsets[w] + self.sel[w] as usize] as usize;
                citers[c].push(w as u32);
            }
            for t in src.word_tokens(w) {
                let c = self.cited(w, t).expect("dictionary word");
                cmk[c * k + src.z[t] as usize] += 1;
                cm[c] += 1;
                if !self.model.word_level_selection() {
                    nms[self.cand_offsets[w] + self.s_tok[t] as usize] += 1;
                }
            }
        }
        (langs, cmk, cm, nms, citers)
    }

    /// Number of count-table entries that disagree with a rebuild from the
    /// current assignments. Zero for a consistent state.
    pub fn count_mismatches(&self) -> usize {
        fn diff(a: &[u32], b: &[u32]) -> usize {
            if a.len() != b.len() {
                return a.len().max(b.len());
            }
            a.iter().zip(b).filter(|(x, y)| x != y).count()
        }
        let (langs, cmk, cm, nms, citers) = self.counts_from_assignments();
        let mut n = 0;
        for (l, (nmk, nm, nkv, nk)) in self.langs.iter().zip(langs.iter()) {
            n += diff(&l.nmk, nmk) + diff(&l.nm, nm) + diff(&l.nkv, nkv) + diff(&l.nk, nk);
        }
        n += diff(&self.cmk, &cmk) + diff(&self.cm, &cm) + diff(&self.nms, &nms);
        n += self.citers.iter().zip(&citers).filter(|(a, b)| a != b).count();
        n
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let ws = self.langs[0].num_words();
        StateSnapshot {
            source_docs: self.langs[0].num_docs,
            target_docs: self.langs[1].num_docs,
            source_pseudo_docs: self.langs[0].pseudo_docs(),
            target_pseudo_docs: self.langs[1].pseudo_docs(),
            source_topics: self.langs[0].z.clone(),
            target_topics: self.langs[1].z.clone(),
            dictionary: (0..ws as u32)
                .filter(|&w| !self.candidates(w).is_empty())
                .map(|w| (w, self.candidates(w).to_vec()))
                .collect(),
            word_selection: self.sel.clone(),
            token_selection: self.s_tok.clone(),
            rng: self.rng.clone(),
        }
    }

    /// Rebuilds a state from a snapshot, validating every index.
    pub fn restore(snapshot: &StateSnapshot, model: ModelKind, hp: &HyperParams) -> Result<Self> {
        hp.validate()?;
        let corrupt = |reason: String| Error::Corrupted {
            kind: "sampler state",
            reason,
        };
        let source = PseudoDocCollection::new(snapshot.source_docs, snapshot.source_pseudo_docs.clone())
            .map_err(|e| corrupt(e.to_string()))?;
        let target = PseudoDocCollection::new(snapshot.target_docs, snapshot.target_pseudo_docs.clone())
            .map_err(|e| corrupt(e.to_string()))?;
        let mut entries = std::collections::BTreeMap::new();
        for (s, cs) in &snapshot.dictionary {
            if entries.insert(*s, cs.clone()).is_some() {
                return Err(corrupt(format!("duplicate dictionary entry {s}")));
            }
            if cs.windows(2).any(|p| p[0] >= p[1]) {
                return Err(corrupt(format!("candidates of {s} are not strictly increasing")));
            }
        }
        let dict = SeedDictionary::from_ids(entries).map_err(|e| corrupt(e.to_string()))?;
        let mut state = Self::skeleton(&source, &target, &dict, model, hp).map_err(|e| corrupt(e.to_string()))?;

        let check_topics = |z: &[u16], n: usize, what: &str| -> Result<()> {
            if z.len() != n {
                return Err(corrupt(format!("{what}: {} topics for {n} tokens", z.len())));
            }
            if z.iter().any(|&t| t as usize >= hp.topics) {
                return Err(corrupt(format!("{what}: topic out of range")));
            }
            Ok(())
        };
        check_topics(&snapshot.source_topics, state.langs[0].tokens.len(), "source")?;
        check_topics(&snapshot.target_topics, state.langs[1].tokens.len(), "target")?;
        state.langs[0].z = snapshot.source_topics.clone();
        state.langs[1].z = snapshot.target_topics.clone();

        let ws = state.langs[0].num_words();
        if model.word_level_selection() {
            if snapshot.word_selection.len() != ws || !snapshot.token_selection.is_empty() {
                return Err(corrupt("selection table does not match the model".into()));
            }
            for w in 0..ws {
                let s = state.cand_offsets[w + 1] - state.cand_offsets[w];
                let v = snapshot.word_selection[w];
                let ok = if s == 0 { v == NO_SELECTION } else { (v as usize) < s };
                if !ok {
                    return Err(corrupt(format!("invalid selection for source word {w}")));
                }
            }
            state.sel = snapshot.word_selection.clone();
        } else {
            if snapshot.token_selection.len() != state.langs[0].tokens.len() || !snapshot.word_selection.is_empty() {
                return Err(corrupt("selection table does not match the model".into()));
            }
            for w in 0..ws {
                let s = state.cand_offsets[w + 1] - state.cand_offsets[w];
                for t in state.langs[0].word_tokens(w) {
                    let v = snapshot.token_selection[t] as usize;
                    if (s == 0 && v != 0) || (s > 0 && v >= s) {
                        return Err(corrupt(format!("invalid selection for source token {t}")));
                    }
                }
            }
            state.s_tok = snapshot.token_selection.clone();
        }
        state.rng = snapshot.rng.clone();
        state.rebuild_counts();
        Ok(state)
    }
}
