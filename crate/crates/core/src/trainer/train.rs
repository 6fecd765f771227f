use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hiernet::{ModelConfig, Parameters};
use crate::ndgrad::Graph;
use crate::rng;

use super::batch::{batch_order, Batch, EncodedExample};
use super::loss::{compute_loss, loss_graph, LossBreakdown};
use super::optim::{clip_global_norm, Adam};
use super::TrainConfig;

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    /// Means over the steps since the previous record.
    pub train_loss: f64,
    pub word_nll: f64,
    pub stop_loss: f64,
    pub eval_loss: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    /// Loss of every optimizer step, in order.
    pub history: Vec<LossBreakdown>,
    pub records: Vec<LogRecord>,
    /// Global gradient norm before clipping, per step.
    pub grad_norms: Vec<f64>,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|l| l.total).collect()
    }
}

fn at_step(step: usize, e: Error) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("step {step}: {m}")),
        other => other,
    }
}

/// Example-weighted mean loss over `data`.
pub fn evaluate(params: &Parameters, model: &ModelConfig, data: &[EncodedExample], cfg: &TrainConfig) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut sum = 0.0;
    for chunk in idx.chunks(cfg.batch_size) {
        let batch = Batch::new(data, chunk.to_vec())?;
        sum += compute_loss(params, model, &batch, cfg.lambda)?.total * chunk.len() as f64;
    }
    Ok(sum / data.len() as f64)
}

/// One optimizer step on `batch`. Returns the loss and pre-clip norm.
pub fn train_step(
    params: &mut Parameters,
    model: &ModelConfig,
    batch: &Batch,
    adam: &mut Adam,
    cfg: &TrainConfig,
    step: usize,
) -> Result<(LossBreakdown, f64)> {
    let mut g = Graph::training(rng::mix64(cfg.seed ^ (step as u64).wrapping_mul(0x9e37_79b9)));
    let p = params.bind(&mut g);
    let vars = loss_graph(&mut g, &p, model, batch, cfg.lambda).map_err(|e| at_step(step, e))?;
    let loss = LossBreakdown {
        total: g.value(vars.total).item(),
        word_nll: g.value(vars.word_nll).item(),
        stop_loss: g.value(vars.stop_loss).item(),
    };
    if !loss.total.is_finite() {
        return Err(Error::Numeric(format!("step {step}: loss is {}", loss.total)));
    }
    g.backward(vars.total).map_err(|e| at_step(step, e))?;
    let mut grads: Vec<_> = p.vars().iter().map(|&v| g.grad(v)).collect();
    let norm = clip_global_norm(&mut grads, cfg.clip_norm);
    if !norm.is_finite() {
        return Err(Error::Numeric(format!("step {step}: gradient norm is {norm}")));
    }
    adam.step(params, &grads)?;
    Ok((loss, norm))
}

/// Mini-batch Adam on `data` for `cfg.max_steps` steps. Each epoch uses a
/// fresh seeded shuffle. Groups frozen in `params` are never updated.
pub fn train(
    params: &mut Parameters,
    model: &ModelConfig,
    data: &[EncodedExample],
    eval: &[EncodedExample],
    cfg: &TrainConfig,
    mut on_record: impl FnMut(&LogRecord),
) -> Result<TrainReport> {
    cfg.validate()?;
    model.validate()?;
    params.validate(model)?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let mut adam = Adam::new(cfg.learning_rate);
    let mut report = TrainReport::default();
    let mut since = 0usize;
    let mut epoch = 0u64;
    'outer: loop {
        for idx in batch_order(data.len(), cfg.batch_size, cfg.seed, epoch) {
            let step = report.history.len();
            if step >= cfg.max_steps {
                break 'outer;
            }
            let batch = Batch::new(data, idx)?;
            let (loss, norm) = train_step(params, model, &batch, &mut adam, cfg, step)?;
            report.history.push(loss);
            report.grad_norms.push(norm);
            let done = step + 1;
            let last = done == cfg.max_steps;
            if (cfg.eval_every > 0 && done % cfg.eval_every == 0) || last {
                let window = &report.history[since..];
                let mean = |f: fn(&LossBreakdown) -> f64| window.iter().map(f).sum::<f64>() / window.len() as f64;
                let eval_loss = if eval.is_empty() {
                    None
                } else {
                    Some(evaluate(params, model, eval, cfg)?)
                };
                let record = LogRecord {
                    step: done,
                    train_loss: mean(|l| l.total),
                    word_nll: mean(|l| l.word_nll),
                    stop_loss: mean(|l| l.stop_loss),
                    eval_loss,
                };
                log::info!(
                    "step {done}: loss {:.4} (word {:.4}, stop {:.4}){}",
                    record.train_loss,
                    record.word_nll,
                    record.stop_loss,
                    record.eval_loss.map(|e| format!(", eval {e:.4}")).unwrap_or_default()
                );
                on_record(&record);
                report.records.push(record);
                since = report.history.len();
            }
        }
        epoch += 1;
    }
    Ok(report)
}
