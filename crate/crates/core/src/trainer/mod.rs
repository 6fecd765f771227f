//! Joint word/stop objective, Adam, and pretrain-then-fine-tune with
//! frozen parameter groups.

mod batch;
mod loss;
mod optim;
mod train;


use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hiernet::{ModelConfig, ParamGroup, Parameters};

pub use batch::{batch_order, encode_dataset, encode_example, make_batches, Batch, EncodedExample};
pub use loss::{compute_loss, loss_graph, LossBreakdown, LossVars};
pub use optim::{clip_global_norm, Adam};
pub use train::{evaluate, train, train_step, LogRecord, TrainReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Weight of the stop loss.
    pub lambda: f64,
    pub max_steps: usize,
    pub clip_norm: f64,
    pub seed: u64,
    /// Steps between log records; 0 logs only the final step.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 64,
            lambda: 1.0,
            max_steps: 1000,
            clip_norm: 5.0,
            seed: 0,
            eval_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda {} must be finite and non-negative", self.lambda)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config(format!("clip_norm {} must be positive", self.clip_norm)));
        }
        Ok(())
    }
}

/// Parses `default`, `none`, or a comma-separated list of group names.
pub fn parse_freeze_spec(spec: &str) -> Result<BTreeSet<ParamGroup>> {
    match spec.trim() {
        "default" => Ok(ParamGroup::default_frozen()),
        "none" | "" => Ok(BTreeSet::new()),
        list => list.split(',').map(|s| s.trim().parse()).collect(),
    }
}

/// Freezes `frozen` and continues training from `params`.
pub fn finetune(
    params: &mut Parameters,
    model: &ModelConfig,
    data: &[EncodedExample],
    eval: &[EncodedExample],
    cfg: &TrainConfig,
    frozen: BTreeSet<ParamGroup>,
    on_record: impl FnMut(&LogRecord),
) -> Result<TrainReport> {
    params.set_frozen(frozen);
    train(params, model, data, eval, cfg, on_record)
}
