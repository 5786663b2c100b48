//! Single-sweep update kernels.
//!
//! Every conditional below uses counts that exclude the variable being
//! resampled, plus the Dirichlet pseudo-count. Factors that do not depend on
//! the value being drawn are dropped. Variables are visited in a fixed order:
//! target words ascending, then source words ascending, tokens in
//! pseudo-document order.

use rand::Rng;

use super::state::SamplerState;
use super::ModelKind;
use crate::error::{Error, Result};

/// Inverse-CDF draw from unnormalized non-negative weights, one uniform per call.
pub(crate) fn draw<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl SamplerState {
    /// One sweep of whichever model the state was initialized for.
    pub fn sweep(&mut self) {
        match self.model {
            ModelKind::BiLda => {}
            ModelKind::BiLdaAll => self.redraw_pairing(),
            ModelKind::ProbBiLda => {
                self.sweep_target();
                self.sweep_source_per_token();
                return;
            }
            ModelKind::BlockProbBiLda => {
                self.sweep_target();
                self.sweep_source_per_word(true);
                return;
            }
        }
        self.sweep_target();
        self.sweep_source_per_word(false);
    }

    fn expect_model(&self, model: ModelKind) -> Result<()> {
        if self.model != model {
            return Err(Error::ModelMismatch(format!(
                "state was initialized for {}, not {}",
                self.model, model
            )));
        }
        Ok(())
    }

    /// Fixed most-frequent pairing; paired words pool their topic counts.
    pub fn sweep_bilda(&mut self) -> Result<()> {
        self.expect_model(ModelKind::BiLda)?;
        self.sweep();
        Ok(())
    }

    /// Re-pairs every dictionary word uniformly at random, then sweeps as `bilda`.
    pub fn sweep_bilda_all(&mut self) -> Result<()> {
        self.expect_model(ModelKind::BiLdaAll)?;
        self.sweep();
        Ok(())
    }

    /// Per-token translation selection.
    pub fn sweep_probbilda(&mut self) -> Result<()> {
        self.expect_model(ModelKind::ProbBiLda)?;
        self.sweep();
        Ok(())
    }

    /// Per-word translation selection by log-space argmax.
    pub fn sweep_blockprobbilda(&mut self) -> Result<()> {
        self.expect_model(ModelKind::BlockProbBiLda)?;
        self.sweep();
        Ok(())
    }

    /// Moves a source word's whole topic histogram from one cited target
    /// word to another.
    fn move_selection(&mut self, w: usize, old_c: usize, new_c: usize) {
        let k = self.k;
        let src = &self.langs[0];
        for topic in 0..k {
            let n = src.nmk[w * k + topic];
            self.cmk[old_c * k + topic] -= n;
            self.cmk[new_c * k + topic] += n;
        }
        self.cm[old_c] -= src.nm[w];
        self.cm[new_c] += src.nm[w];
        let w = w as u32;
        let old = &mut self.citers[old_c];
        old.remove(old.binary_search(&w).expect("citer bookkeeping"));
        let new = &mut self.citers[new_c];
        let pos = new.binary_search(&w).unwrap_err();
        new.insert(pos, w);
    }

    fn redraw_pairing(&mut self) {
        let ws = self.langs[0].num_words();
        for w in 0..ws {
            let lo = self.cand_offsets[w];
            let s = self.cand_offsets[w + 1] - lo;
            if s < 2 {
                continue;
            }
            let idx = self.rng.random_range(0..s);
            let old = self.sel[w] as usize;
            if idx != old {
                let (old_c, new_c) = (self.cands[lo + old] as usize, self.cands[lo + idx] as usize);
                self.move_selection(w, old_c, new_c);
                self.sel[w] = idx as u32;
            }
        }
    }

    /// Target tokens: own topic counts plus the counts of source tokens
    /// citing the word, times the target-language topic-document factor.
    fn sweep_target(&mut self) {
        let k = self.k;
        let alpha = self.hp.alpha;
        let beta = self.hp.beta;
        let [_, tgt] = &mut self.langs;
        let v = tgt.num_docs;
        let vbeta = v as f64 * beta;
        let weights = &mut self.scratch;
        for w in 0..tgt.num_words() {
            let (lo, hi) = (tgt.offsets[w], tgt.offsets[w + 1]);
            let row = w * k;
            for t in lo..hi {
                let n = tgt.tokens[t] as usize;
                let old = tgt.z[t] as usize;
                tgt.nmk[row + old] -= 1;
                tgt.nkv[old * v + n] -= 1;
                tgt.nk[old] -= 1;
                for topic in 0..k {
                    let theta = (tgt.nmk[row + topic] + self.cmk[row + topic]) as f64 + alpha;
                    let phi = (tgt.nkv[topic * v + n] as f64 + beta) / (tgt.nk[topic] as f64 + vbeta);
                    weights[topic] = theta * phi;
                }
                let new = draw(&mut self.rng, weights);
                tgt.z[t] = new as u16;
                tgt.nmk[row + new] += 1;
                tgt.nkv[new * v + n] += 1;
                tgt.nk[new] += 1;
            }
        }
    }

    /// Source tokens for the word-level models. A dictionary word citing `c`
    /// pools its own topic counts with `c`'s; other words are plain LDA.
    /// With `select`, the word's selection is re-chosen after its tokens.
    fn sweep_source_per_word(&mut self, select: bool) {
        let k = self.k;
        let alpha = self.hp.alpha;
        let beta = self.hp.beta;
        let ws = self.langs[0].num_words();
        for w in 0..ws {
            let lo_c = self.cand_offsets[w];
            let num_cands = self.cand_offsets[w + 1] - lo_c;
            let cited = (num_cands > 0).then(|| self.cands[lo_c + self.sel[w] as usize] as usize);
            {
                let [src, tgt] = &mut self.langs;
                let v = src.num_docs;
                let vbeta = v as f64 * beta;
                let weights = &mut self.scratch;
                let row = w * k;
                for t in src.offsets[w]..src.offsets[w + 1] {
                    let n = src.tokens[t] as usize;
                    let old = src.z[t] as usize;
                    src.nmk[row + old] -= 1;
                    src.nkv[old * v + n] -= 1;
                    src.nk[old] -= 1;
                    match cited {
                        Some(c) => {
                            self.cmk[c * k + old] -= 1;
                            for topic in 0..k {
                                let theta = (src.nmk[row + topic] + tgt.nmk[c * k + topic]) as f64 + alpha;
                                let phi = (src.nkv[topic * v + n] as f64 + beta) / (src.nk[topic] as f64 + vbeta);
                                weights[topic] = theta * phi;
                            }
                        }
                        None => {
                            for topic in 0..k {
                                let theta = src.nmk[row + topic] as f64 + alpha;
                                let phi = (src.nkv[topic * v + n] as f64 + beta) / (src.nk[topic] as f64 + vbeta);
                                weights[topic] = theta * phi;
                            }
                        }
                    }
                    let new = draw(&mut self.rng, weights);
                    src.z[t] = new as u16;
                    src.nmk[row + new] += 1;
                    src.nkv[new * v + n] += 1;
                    src.nk[new] += 1;
                    if let Some(c) = cited {
                        self.cmk[c * k + new] += 1;
                    }
                }
            }
            if select && num_cands > 1 {
                let cur = self.sel[w] as usize;
                let best = self.best_selection(w);
                if best != cur {
                    let (old_c, new_c) = (self.cands[lo_c + cur] as usize, self.cands[lo_c + best] as usize);
                    self.move_selection(w, old_c, new_c);
                    self.sel[w] = best as u32;
                }
            }
        }
    }

    /// Log-space score of every candidate of source word `w`; the score of
    /// candidate `c` sums, over the word's tokens, the log probability of the
    /// token's topic under the pooled counts of `c` and every other word
    /// currently citing it.
    pub(crate) fn selection_scores(&self, w: usize) -> Vec<f64> {
        let k = self.k;
        let alpha = self.hp.alpha;
        let kalpha = k as f64 * alpha;
        let [src, tgt] = &self.langs;
        let own = &src.nmk[w * k..(w + 1) * k];
        let cur = self.cands[self.cand_offsets[w] + self.sel[w] as usize] as usize;
        self.cands[self.cand_offsets[w]..self.cand_offsets[w + 1]]
            .iter()
            .map(|&c| {
                let c = c as usize;
                let is_cur = c == cur;
                let total = tgt.nm[c] as f64 + self.cm[c] as f64 - if is_cur { src.nm[w] as f64 } else { 0.0 };
                let log_den = (total + kalpha).ln();
                (0..k)
                    .filter(|&topic| own[topic] > 0)
                    .map(|topic| {
                        let others = self.cmk[c * k + topic] - if is_cur { own[topic] } else { 0 };
                        let num = (tgt.nmk[c * k + topic] + others) as f64 + alpha;
                        own[topic] as f64 * (num.ln() - log_den)
                    })
                    .sum()
            })
            .collect()
    }

    /// Candidate index with the highest score; the first (smallest word id) wins ties.
    fn best_selection(&self, w: usize) -> usize {
        let scores = self.selection_scores(w);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        best
    }

    /// Source tokens for probbilda: each dictionary token draws its topic from
    /// the cited word's pooled counts, then re-draws its citation.
    fn sweep_source_per_token(&mut self) {
        let k = self.k;
        let alpha = self.hp.alpha;
        let kalpha = k as f64 * alpha;
        let beta = self.hp.beta;
        let alpha_psi = self.hp.alpha_psi;
        let ws = self.langs[0].num_words();
        let mut sel_weights: Vec<f64> = Vec::new();
        let [src, tgt] = &mut self.langs;
        let v = src.num_docs;
        let vbeta = v as f64 * beta;
        let weights = &mut self.scratch;
        for w in 0..ws {
            let lo_c = self.cand_offsets[w];
            let num_cands = self.cand_offsets[w + 1] - lo_c;
            let row = w * k;
            for t in src.offsets[w]..src.offsets[w + 1] {
                let n = src.tokens[t] as usize;
                let old = src.z[t] as usize;
                src.nmk[row + old] -= 1;
                src.nkv[old * v + n] -= 1;
                src.nk[old] -= 1;
                if num_cands == 0 {
                    for topic in 0..k {
                        let theta = src.nmk[row + topic] as f64 + alpha;
                        let phi = (src.nkv[topic * v + n] as f64 + beta) / (src.nk[topic] as f64 + vbeta);
                        weights[topic] = theta * phi;
                    }
                    let new = draw(&mut self.rng, weights);
                    src.z[t] = new as u16;
                    src.nmk[row + new] += 1;
                    src.nkv[new * v + n] += 1;
                    src.nk[new] += 1;
                    continue;
                }

                let old_s = self.s_tok[t] as usize;
                let c = self.cands[lo_c + old_s] as usize;
                self.cmk[c * k + old] -= 1;
                self.cm[c] -= 1;
                for topic in 0..k {
                    let theta = (tgt.nmk[c * k + topic] + self.cmk[c * k + topic]) as f64 + alpha;
                    let phi = (src.nkv[topic * v + n] as f64 + beta) / (src.nk[topic] as f64 + vbeta);
                    weights[topic] = theta * phi;
                }
                let new = draw(&mut self.rng, weights);
                src.z[t] = new as u16;
                src.nmk[row + new] += 1;
                src.nkv[new * v + n] += 1;
                src.nk[new] += 1;

                let new_s = if num_cands > 1 {
                    self.nms[lo_c + old_s] -= 1;
                    sel_weights.clear();
                    for i in 0..num_cands {
                        let c = self.cands[lo_c + i] as usize;
                        let num = (tgt.nmk[c * k + new] + self.cmk[c * k + new]) as f64 + alpha;
                        let den = (tgt.nm[c] + self.cm[c]) as f64 + kalpha;
                        sel_weights.push(num / den * (self.nms[lo_c + i] as f64 + alpha_psi));
                    }
                    let s = draw(&mut self.rng, &sel_weights);
                    self.nms[lo_c + s] += 1;
                    self.s_tok[t] = s as u32;
                    s
                } else {
                    old_s
                };
                let c = self.cands[lo_c + new_s] as usize;
                self.cmk[c * k + new] += 1;
                self.cm[c] += 1;
            }
        }
    }
}
