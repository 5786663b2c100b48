use serde::{Deserialize, Serialize};

use super::state::SamplerState;
use super::Lang;

/// Averaged per-word topic distributions and per-topic document
/// distributions for both languages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEstimates {
    pub(crate) topics: usize,
    pub(crate) num_words: [usize; 2],
    pub(crate) num_docs: [usize; 2],
    /// words x topics, per language
    pub(crate) theta: [Vec<f64>; 2],
    /// topics x documents, per language
    pub(crate) phi: [Vec<f64>; 2],
    pub(crate) samples: usize,
}

impl PosteriorEstimates {
    /// Builds estimates from explicit rows. Used for hand-constructed models.
    pub fn from_rows(
        topics: usize,
        source_theta: Vec<Vec<f64>>,
        target_theta: Vec<Vec<f64>>,
        source_phi: Vec<Vec<f64>>,
        target_phi: Vec<Vec<f64>>,
    ) -> crate::Result<Self> {
        let bad = |m: &str| crate::Error::InvalidInput(m.to_string());
        if source_phi.len() != topics || target_phi.len() != topics {
            return Err(bad("phi needs one row per topic"));
        }
        if source_theta.iter().chain(&target_theta).any(|r| r.len() != topics) {
            return Err(bad("theta rows must have one entry per topic"));
        }
        let vs = source_phi.first().map_or(0, Vec::len);
        let ve = target_phi.first().map_or(0, Vec::len);
        if source_phi.iter().any(|r| r.len() != vs) || target_phi.iter().any(|r| r.len() != ve) || vs == 0 || ve == 0 {
            return Err(bad("phi rows must share a non-zero length"));
        }
        let est = PosteriorEstimates {
            topics,
            num_words: [source_theta.len(), target_theta.len()],
            num_docs: [vs, ve],
            theta: [source_theta.concat(), target_theta.concat()],
            phi: [source_phi.concat(), target_phi.concat()],
            samples: 1,
        };
        Ok(est)
    }

    pub(crate) fn zeros_like(state: &SamplerState) -> Self {
        let k = state.k;
        let nw = [state.num_words(Lang::Source), state.num_words(Lang::Target)];
        let nd = [state.num_docs(Lang::Source), state.num_docs(Lang::Target)];
        PosteriorEstimates {
            topics: k,
            num_words: nw,
            num_docs: nd,
            theta: [vec![0.0; nw[0] * k], vec![0.0; nw[1] * k]],
            phi: [vec![0.0; k * nd[0]], vec![0.0; k * nd[1]]],
            samples: 0,
        }
    }

    /// Adds the point estimates of the current state:
    /// `theta[m][k] = (nmk + alpha) / (nm + K alpha)` and
    /// `phi[k][n] = (nkv + beta) / (nk + V beta)`.
    pub(crate) fn accumulate(&mut self, state: &SamplerState) {
        let k = state.k;
        let alpha = state.hp.alpha;
        let beta = state.hp.beta;
        for (l, lang) in state.langs.iter().enumerate() {
            let theta = &mut self.theta[l];
            for w in 0..lang.num_words() {
                let den = lang.nm[w] as f64 + k as f64 * alpha;
                for topic in 0..k {
                    theta[w * k + topic] += (lang.nmk[w * k + topic] as f64 + alpha) / den;
                }
            }
            let v = lang.num_docs;
            let phi = &mut self.phi[l];
            for topic in 0..k {
                let den = lang.nk[topic] as f64 + v as f64 * beta;
                for n in 0..v {
                    phi[topic * v + n] += (lang.nkv[topic * v + n] as f64 + beta) / den;
                }
            }
        }
        self.samples += 1;
    }

    pub(crate) fn finish(mut self) -> Self {
        if self.samples > 1 {
            let scale = self.samples as f64;
            for x in self.theta.iter_mut().chain(self.phi.iter_mut()).flatten() {
                *x /= scale;
            }
        }
        self
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn num_words(&self, lang: Lang) -> usize {
        self.num_words[lang.index()]
    }

    pub fn num_docs(&self, lang: Lang) -> usize {
        self.num_docs[lang.index()]
    }

    /// Number of retained samples averaged into these estimates.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn theta(&self, lang: Lang, word: u32) -> &[f64] {
        let k = self.topics;
        let w = word as usize;
        &self.theta[lang.index()][w * k..(w + 1) * k]
    }

    /// Distribution of topic `topic` over the documents of `lang`.
    pub fn phi(&self, lang: Lang, topic: usize) -> &[f64] {
        let v = self.num_docs[lang.index()];
        &self.phi[lang.index()][topic * v..(topic + 1) * v]
    }

    pub(crate) fn validate_shape(&self) -> Result<(), String> {
        let k = self.topics;
        if k == 0 {
            return Err("zero topics".into());
        }
        for l in 0..2 {
            if self.theta[l].len() != self.num_words[l] * k {
                return Err("theta size does not match word count".into());
            }
            if self.phi[l].len() != self.num_docs[l] * k || self.num_docs[l] == 0 {
                return Err("phi size does not match document count".into());
            }
        }
        if self.theta.iter().chain(&self.phi).flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err("negative or non-finite probability".into());
        }
        Ok(())
    }
}

impl SamplerState {
    /// Point estimates of the current state alone.
    pub fn estimates(&self) -> PosteriorEstimates {
        let mut est = PosteriorEstimates::zeros_like(self);
        est.accumulate(self);
        est
    }

    /// Runs the configured number of sweeps and averages the retained
    /// samples. `on_sweep` sees the sweep number (1-based) and the state after
    /// each sweep.
    pub fn train<F: FnMut(usize, &SamplerState)>(&mut self, mut on_sweep: F) -> PosteriorEstimates {
        let mut est = PosteriorEstimates::zeros_like(self);
        for t in 1..=self.hp.iterations {
            self.sweep();
            if self.hp.retains(t) {
                est.accumulate(self);
            }
            on_sweep(t, self);
        }
        est.finish()
    }
}
