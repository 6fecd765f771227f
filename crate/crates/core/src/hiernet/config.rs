use serde::{Deserialize, Serialize};

use crate::corpusforge::SynthConfig;
use crate::error::{Error, Result};

/// Sizes and limits of the hierarchical encoder-decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Hidden size `d` of every LSTM (per direction for the encoders).
    pub hidden: usize,
    /// Hidden size of the additive attention scorers.
    pub attn_dim: usize,
    /// Maximum words per post.
    pub p_max: usize,
    /// Maximum words per generated sentence.
    pub q_max: usize,
    /// Maximum posts per channel.
    pub n_max: usize,
    /// Maximum thread steps.
    pub k_max: usize,
    pub dropout: f64,
    pub init_std: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 8004,
            embed_dim: 100,
            hidden: 100,
            attn_dim: 100,
            p_max: 20,
            q_max: 15,
            n_max: 25,
            k_max: 5,
            dropout: 0.2,
            init_std: 0.1,
        }
    }
}

impl ModelConfig {
    /// Square config: embeddings, hidden states and attention all of size `d`.
    pub fn with_dim(vocab_size: usize, d: usize) -> Self {
        Self {
            vocab_size,
            embed_dim: d,
            hidden: d,
            attn_dim: d,
            ..Self::default()
        }
    }

    /// Sets `n_max = b * n` and `k_max = b` from a synthesis config.
    pub fn fit_to(mut self, synth: &SynthConfig) -> Self {
        self.n_max = synth.max_total_posts();
        self.k_max = synth.max_threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("hidden", self.hidden),
            ("attn_dim", self.attn_dim),
            ("p_max", self.p_max),
            ("q_max", self.q_max),
            ("n_max", self.n_max),
            ("k_max", self.k_max),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("model {name} must be positive")));
        }
        if self.vocab_size < 4 {
            return Err(Error::Config("vocab_size must cover the 4 reserved ids".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} must be in [0, 1)", self.dropout)));
        }
        if !(self.init_std > 0.0) {
            return Err(Error::Config("init_std must be positive".into()));
        }
        Ok(())
    }
}
