//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hiernet::ModelConfig;
use crate::textproc::Segmentation;
use crate::trainer::TrainConfig;

/// Model, vocabulary and optimizer settings for `train` and `finetune`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `vocab_size` is filled in once the vocabulary is known.
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Corpus tokens kept, reserved ids excluded.
    pub max_vocab: usize,
    pub segmentation: Segmentation,
    pub bpe_merges: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            max_vocab: 8000,
            segmentation: Segmentation::Word,
            bpe_merges: 8000,
        }
    }
}

/// Every accepted key.
pub const KEYS: [&str; 20] = [
    "dim",
    "embed_dim",
    "hidden",
    "attn_dim",
    "p_max",
    "q_max",
    "n_max",
    "k_max",
    "dropout",
    "init_std",
    "max_vocab",
    "segmentation",
    "bpe_merges",
    "learning_rate",
    "batch_size",
    "lambda",
    "max_steps",
    "clip_norm",
    "seed",
    "eval_every",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (m, t) = (&mut self.model, &mut self.train);
        match key {
            "dim" => {
                let d = num(key, value)?;
                m.embed_dim = d;
                m.hidden = d;
                m.attn_dim = d;
            }
            "embed_dim" => m.embed_dim = num(key, value)?,
            "hidden" => m.hidden = num(key, value)?,
            "attn_dim" => m.attn_dim = num(key, value)?,
            "p_max" => m.p_max = num(key, value)?,
            "q_max" => m.q_max = num(key, value)?,
            "n_max" => m.n_max = num(key, value)?,
            "k_max" => m.k_max = num(key, value)?,
            "dropout" => m.dropout = num(key, value)?,
            "init_std" => m.init_std = num(key, value)?,
            "max_vocab" => self.max_vocab = num(key, value)?,
            "segmentation" => {
                self.segmentation = match value {
                    "word" => Segmentation::Word,
                    "bpe" => Segmentation::Bpe,
                    _ => return Err(Error::Config(format!("segmentation must be word or bpe, got {value:?}"))),
                }
            }
            "bpe_merges" => self.bpe_merges = num(key, value)?,
            "learning_rate" => t.learning_rate = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "lambda" => t.lambda = num(key, value)?,
            "max_steps" => t.max_steps = num(key, value)?,
            "clip_norm" => t.clip_norm = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "eval_every" => t.eval_every = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("config line {}: {}", i + 1, strip(e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies `key=value` overrides from the command line.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got {pair:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Checks every field; `vocab_size` is checked later.
    pub fn validate(&self) -> Result<()> {
        let mut probe = self.model.clone();
        probe.vocab_size = 4;
        probe.validate()?;
        self.train.validate()?;
        if self.max_vocab == 0 {
            return Err(Error::Config("max_vocab must be positive".into()));
        }
        Ok(())
    }

    /// The configuration as config-file text.
    pub fn to_text(&self) -> String {
        let (m, t) = (&self.model, &self.train);
        let seg = match self.segmentation {
            Segmentation::Word => "word",
            Segmentation::Bpe => "bpe",
        };
        let mut s = String::new();
        let rows: [(&str, String); 19] = [
            ("embed_dim", m.embed_dim.to_string()),
            ("hidden", m.hidden.to_string()),
            ("attn_dim", m.attn_dim.to_string()),
            ("p_max", m.p_max.to_string()),
            ("q_max", m.q_max.to_string()),
            ("n_max", m.n_max.to_string()),
            ("k_max", m.k_max.to_string()),
            ("dropout", m.dropout.to_string()),
            ("init_std", m.init_std.to_string()),
            ("max_vocab", self.max_vocab.to_string()),
            ("segmentation", seg.to_string()),
            ("bpe_merges", self.bpe_merges.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("lambda", t.lambda.to_string()),
            ("max_steps", t.max_steps.to_string()),
            ("clip_norm", t.clip_norm.to_string()),
            ("seed", t.seed.to_string()),
            ("eval_every", t.eval_every.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
