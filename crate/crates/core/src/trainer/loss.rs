use crate::error::{Error, Result};
use crate::hiernet::{teacher_forward, Bound, ModelConfig, Parameters};
use crate::ndgrad::{Graph, Var};

use super::batch::Batch;

/// Loss graph nodes for one batch.
pub struct LossVars {
    pub total: Var,
    /// Mean over examples of per-token word NLL.
    pub word_nll: Var,
    /// Mean over examples of per-step stop BCE.
    pub stop_loss: Var,
}

/// Plain values of [`LossVars`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub word_nll: f64,
    pub stop_loss: f64,
}

/// Builds `word_nll + lambda * stop_loss` for a batch under teacher forcing.
///
/// Each example is normalized by its own token and thread-step counts and
/// the batch loss is the mean over examples, so a padded batch scores the
/// same as its examples scored one at a time.
pub fn loss_graph(g: &mut Graph, p: &Bound, cfg: &ModelConfig, batch: &Batch, lambda: f64) -> Result<LossVars> {
    let fwd = teacher_forward(g, p, cfg, &batch.input, &batch.summaries)?;
    if fwd.tokens.iter().sum::<usize>() == 0 {
        return Err(Error::Data("batch has no target tokens".into()));
    }
    let rows = batch.len() as f64;
    let word_w: Vec<f64> = fwd.tokens.iter().map(|&t| 1.0 / (t as f64 * rows)).collect();
    let stop_w: Vec<f64> = fwd.threads.iter().map(|&k| 1.0 / (k as f64 * rows)).collect();

    let mut word = None;
    for step in &fwd.words {
        let w = step.active.iter().zip(&word_w).map(|(a, w)| a * w).collect();
        let term = g.cross_entropy(step.logits, step.targets.clone(), w)?;
        word = Some(match word {
            None => term,
            Some(acc) => g.add(acc, term)?,
        });
    }
    let mut stop = None;
    for step in &fwd.stops {
        let w = step.active.iter().zip(&stop_w).map(|(a, w)| a * w).collect();
        let term = g.bce_with_logits(step.logits, step.targets.clone(), w)?;
        stop = Some(match stop {
            None => term,
            Some(acc) => g.add(acc, term)?,
        });
    }
    let (word_nll, stop_loss) = match (word, stop) {
        (Some(w), Some(s)) => (w, s),
        _ => return Err(Error::Data("batch produced no decoding steps".into())),
    };
    let weighted = g.scale(stop_loss, lambda)?;
    let total = g.add(word_nll, weighted)?;
    Ok(LossVars {
        total,
        word_nll,
        stop_loss,
    })
}

/// Evaluation-mode loss of a batch.
pub fn compute_loss(params: &Parameters, cfg: &ModelConfig, batch: &Batch, lambda: f64) -> Result<LossBreakdown> {
    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    let vars = loss_graph(&mut g, &p, cfg, batch, lambda)?;
    Ok(LossBreakdown {
        total: g.value(vars.total).item(),
        word_nll: g.value(vars.word_nll).item(),
        stop_loss: g.value(vars.stop_loss).item(),
    })
}
