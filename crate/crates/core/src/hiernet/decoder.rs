use crate::error::{Error, Result};
use crate::ndgrad::{Graph, Tensor, Var};
use crate::textproc::{BOS, EOS, PAD};

use super::config::ModelConfig;
use super::encoder::ChannelEncoding;
use super::layers::{broadcast, linear, Additive, Lstm};
use super::params::Bound;

/// Attention projections of an encoding, computed once per forward pass.
pub struct AttentionKeys {
    gamma: Var,
    beta: Var,
    alpha: Var,
    /// `W` viewed as `[batch, posts * words, 2d]`.
    values: Var,
}

impl AttentionKeys {
    pub fn new(g: &mut Graph, p: &Bound, cfg: &ModelConfig, enc: &ChannelEncoding) -> Result<Self> {
        let (b, n, w, d2) = (enc.batch, enc.posts, enc.words, 2 * cfg.hidden);
        let posts = g.reshape(enc.p, vec![b * n, d2])?;
        let words = g.reshape(enc.w, vec![b * n * w, d2])?;
        let gamma = Additive::bind(p, "attn_gamma").project_keys(g, posts)?;
        let spread = g.repeat_rows(posts, w)?;
        let aligned = g.add(words, spread)?;
        let beta = Additive::bind(p, "attn_beta").project_keys(g, aligned)?;
        let alpha = Additive::bind(p, "attn_alpha").project_keys(g, words)?;
        let values = g.reshape(enc.w, vec![b, n * w, d2])?;
        Ok(Self {
            gamma,
            beta,
            alpha,
            values,
        })
    }
}

/// Post and word gates of one thread step.
///
/// `gamma` is `[batch, posts]`; `beta` and `beta_hat` are
/// `[batch, posts * words]`; `context` is `[batch, 2d]`.
#[derive(Clone, Copy, Debug)]
pub struct AttentionState {
    pub gamma: Var,
    pub beta: Var,
    pub beta_hat: Var,
    pub context: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct ThreadState {
    pub h: Var,
    pub c: Var,
    /// Final hidden state of the previous sentence's word decoder.
    pub word: Var,
}

impl ThreadState {
    /// Learned initial state, repeated for every batch row.
    pub fn initial(g: &mut Graph, p: &Bound, batch: usize) -> Result<Self> {
        Ok(Self {
            h: broadcast(g, p.var("dec_thread.init_h"), batch)?,
            c: broadcast(g, p.var("dec_thread.init_c"), batch)?,
            word: broadcast(g, p.var("dec_thread.init_word"), batch)?,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ThreadStepOutput {
    pub h: Var,
    pub c: Var,
    pub attention: AttentionState,
    /// `[batch, 1]` pre-sigmoid stop score.
    pub stop_logit: Var,
    pub stop_prob: Var,
    /// `[batch, d]`.
    pub thread_rep: Var,
}

/// One step of the thread decoder.
pub fn thread_step(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    enc: &ChannelEncoding,
    keys: &AttentionKeys,
    prev: ThreadState,
) -> Result<ThreadStepOutput> {
    let (b, n, w) = (enc.batch, enc.posts, enc.words);

    let gamma = Additive::bind(p, "attn_gamma").scores(g, keys.gamma, prev.h, n)?;
    let gamma = g.sigmoid(gamma)?;
    let gamma = g.mask_rows(gamma, enc.post_mask.clone())?;

    let beta = Additive::bind(p, "attn_beta").scores(g, keys.beta, prev.h, n * w)?;
    let beta = g.sigmoid(beta)?;
    let beta = g.mask_rows(beta, enc.word_mask.clone())?;

    let spread = g.repeat_rows(gamma, w)?;
    let beta_hat = g.mul(beta, spread)?;

    let gamma = g.reshape(gamma, vec![b, n])?;
    let beta = g.reshape(beta, vec![b, n * w])?;
    let beta_hat = g.reshape(beta_hat, vec![b, n * w])?;
    let context = g.group_weighted_sum(beta_hat, keys.values)?;

    let x = g.concat_cols(&[context, prev.word])?;
    let (h, c) = Lstm::bind(p, "dec_thread.lstm", cfg.hidden).step(g, x, prev.h, prev.c)?;

    let stop_logit = linear(g, h, p.var("stop.w"), p.var("stop.b"))?;
    let stop_prob = g.sigmoid(stop_logit)?;

    let r = g.concat_cols(&[h, context, prev.word])?;
    let r = linear(g, r, p.var("thread_rep.w1"), p.var("thread_rep.b1"))?;
    let r = g.tanh(r)?;
    let r = linear(g, r, p.var("thread_rep.w2"), p.var("thread_rep.b2"))?;
    let thread_rep = g.dropout(r, cfg.dropout)?;

    Ok(ThreadStepOutput {
        h,
        c,
        attention: AttentionState {
            gamma,
            beta,
            beta_hat,
            context,
        },
        stop_logit,
        stop_prob,
        thread_rep,
    })
}

/// How the word decoder chooses its next input.
pub enum DecodeMode<'a> {
    /// `inputs[l][b]` is fed at step `l`; rows with `mask[l][b] == 0` keep
    /// their state.
    TeacherForced { inputs: &'a [Vec<usize>], mask: &'a [Vec<f64>] },
    /// Argmax decoding until EOS or `q_max` tokens.
    Greedy,
}

pub struct SentenceDecoding {
    /// `[batch, vocab]` per step.
    pub logits: Vec<Var>,
    /// `[batch, posts * words]` per step.
    pub alpha_hat: Vec<Var>,
    /// Greedy tokens per batch row, EOS excluded. Empty when teacher forced.
    pub tokens: Vec<Vec<usize>>,
    /// `[batch, d]` hidden state after the last consumed token.
    pub final_h: Var,
}

/// Word decoder for one sentence, conditioned on `thread_rep` and gated by
/// `beta_hat`.
pub fn decode_sentence(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    enc: &ChannelEncoding,
    keys: &AttentionKeys,
    thread_rep: Var,
    beta_hat: Var,
    mode: DecodeMode<'_>,
) -> Result<SentenceDecoding> {
    let (b, nw) = (enc.batch, enc.posts * enc.words);
    if nw == 0 || enc.post_mask.iter().all(|&m| m == 0.0) {
        return Err(Error::Contract("cannot decode from an empty encoding".into()));
    }
    if g.shape(beta_hat) != [b, nw] {
        return Err(Error::dim("decode_sentence", g.shape(beta_hat), &[b, nw]));
    }

    // Positions with a zero gate are excluded from the renormalization.
    let gate = g.value(beta_hat).data().to_vec();
    let effective: Vec<f64> = enc
        .word_mask
        .iter()
        .zip(&gate)
        .map(|(&m, &v)| if m != 0.0 && v > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let filler = g.constant(Tensor::new(vec![b, nw], effective.iter().map(|m| 1.0 - m).collect())?);
    let shifted = g.add(beta_hat, filler)?;
    let log_gate = g.log(shifted)?;

    let h0 = linear(g, thread_rep, p.var("dec_word.init_h.w"), p.var("dec_word.init_h.b"))?;
    let mut h = g.tanh(h0)?;
    let mut c = linear(g, thread_rep, p.var("dec_word.init_c.w"), p.var("dec_word.init_c.b"))?;
    let cell = Lstm::bind(p, "dec_word.lstm", cfg.hidden);
    let attn = Additive::bind(p, "attn_alpha");
    let embed = p.var("embed.weight");

    let steps = match &mode {
        DecodeMode::TeacherForced { inputs, mask } => {
            let ragged = inputs.iter().any(|r| r.len() != b) || mask.iter().any(|r| r.len() != b);
            if inputs.len() != mask.len() || ragged {
                return Err(Error::Contract("teacher inputs must be steps x batch".into()));
            }
            inputs.len()
        }
        DecodeMode::Greedy => cfg.q_max,
    };

    let mut out = SentenceDecoding {
        logits: Vec::with_capacity(steps),
        alpha_hat: Vec::with_capacity(steps),
        tokens: Vec::new(),
        final_h: h,
    };
    let mut prev = vec![BOS; b];
    let mut live = vec![1.0; b];
    if matches!(mode, DecodeMode::Greedy) {
        out.tokens = vec![Vec::new(); b];
    }

    for l in 0..steps {
        let (ids, mask) = match &mode {
            DecodeMode::TeacherForced { inputs, mask } => (inputs[l].clone(), mask[l].clone()),
            DecodeMode::Greedy => (prev.clone(), live.clone()),
        };
        if mask.iter().all(|&m| m == 0.0) {
            break;
        }
        let raw = attn.scores(g, keys.alpha, h, nw)?;
        let raw = g.reshape(raw, vec![b, nw])?;
        let gated = g.add(raw, log_gate)?;
        let alpha_hat = g.softmax(gated, effective.clone())?;
        let context = g.group_weighted_sum(alpha_hat, keys.values)?;

        let emb = g.gather_rows(embed, ids)?;
        let x = g.concat_cols(&[emb, context, thread_rep])?;
        (h, c) = cell.masked_step(g, x, h, c, &mask)?;
        let feat = g.concat_cols(&[h, context])?;
        let logits = linear(g, feat, p.var("dec_word.out.w"), p.var("dec_word.out.b"))?;

        if matches!(mode, DecodeMode::Greedy) {
            let v = cfg.vocab_size;
            let data = g.value(logits).data();
            for r in 0..b {
                if live[r] == 0.0 {
                    continue;
                }
                let row = &data[r * v..(r + 1) * v];
                let best = argmax_allowed(row);
                if best == EOS {
                    live[r] = 0.0;
                } else {
                    out.tokens[r].push(best);
                    prev[r] = best;
                }
            }
        }
        out.logits.push(logits);
        out.alpha_hat.push(alpha_hat);
    }
    out.final_h = h;
    Ok(out)
}

/// Highest-scoring id, never PAD or BOS; ties go to the lower id.
fn argmax_allowed(row: &[f64]) -> usize {
    let mut best: Option<usize> = None;
    for (id, &v) in row.iter().enumerate() {
        if id == PAD || id == BOS {
            continue;
        }
        if best.is_none_or(|b| v > row[b]) {
            best = Some(id);
        }
    }
    best.unwrap_or(EOS)
}
