use crate::error::{Error, Result};
use crate::ndgrad::{Graph, Var};
use crate::textproc::{TextCodec, PAD};

use super::config::ModelConfig;
use super::layers::{zeros, Lstm};
use super::params::Bound;

/// Token ids of a batch of channels, padded to `[batch, posts, words]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBatch {
    pub batch: usize,
    pub posts: usize,
    pub words: usize,
    /// Row-major `[batch, posts, words]`.
    pub ids: Vec<usize>,
    pub word_mask: Vec<f64>,
    /// `[batch, posts]`.
    pub post_mask: Vec<f64>,
}

impl ChannelBatch {
    /// Pads already-encoded channels (`channels[b][i]` = ids of post `i`).
    pub fn from_ids(channels: &[Vec<Vec<usize>>]) -> Result<Self> {
        if channels.is_empty() || channels.iter().any(|c| c.is_empty()) {
            return Err(Error::Data("every channel needs at least one post".into()));
        }
        let batch = channels.len();
        let posts = channels.iter().map(Vec::len).max().unwrap_or(0);
        let words = channels.iter().flatten().map(Vec::len).max().unwrap_or(0).max(1);
        let mut ids = vec![PAD; batch * posts * words];
        let mut word_mask = vec![0.0; batch * posts * words];
        let mut post_mask = vec![0.0; batch * posts];
        for (b, channel) in channels.iter().enumerate() {
            for (i, post) in channel.iter().enumerate() {
                post_mask[b * posts + i] = 1.0;
                for (j, &id) in post.iter().enumerate() {
                    let at = (b * posts + i) * words + j;
                    ids[at] = id;
                    word_mask[at] = 1.0;
                }
            }
        }
        Ok(Self {
            batch,
            posts,
            words,
            ids,
            word_mask,
            post_mask,
        })
    }

    /// Tokenizes and encodes raw posts. Posts past `n_max` are dropped,
    /// words past `p_max` truncated, and posts with no tokens skipped.
    pub fn from_texts(channels: &[Vec<String>], codec: &TextCodec, cfg: &ModelConfig) -> Result<Self> {
        let encoded: Vec<Vec<Vec<usize>>> = channels
            .iter()
            .map(|posts| encode_posts(posts, codec, cfg))
            .collect();
        Self::from_ids(&encoded)
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        let (b, n, p) = (self.batch, self.posts, self.words);
        if self.ids.len() != b * n * p || self.word_mask.len() != b * n * p || self.post_mask.len() != b * n {
            return Err(Error::Contract("channel batch arrays do not match its dimensions".into()));
        }
        if let Some(&bad) = self.ids.iter().find(|&&id| id >= vocab_size) {
            return Err(Error::Contract(format!("token id {bad} outside vocabulary of {vocab_size}")));
        }
        for r in 0..b * n {
            let words: f64 = self.word_mask[r * p..(r + 1) * p].iter().sum();
            if self.post_mask[r] == 1.0 && words == 0.0 {
                return Err(Error::Contract(format!("post {} of channel {} has no words", r % n, r / n)));
            }
            if self.post_mask[r] == 0.0 && words != 0.0 {
                return Err(Error::Contract(format!("padding post {} of channel {} has words", r % n, r / n)));
            }
        }
        Ok(())
    }
}

/// Ids per post, each cut to `p_max`; empty posts are skipped and at most
/// `n_max` kept.
pub fn encode_posts(posts: &[String], codec: &TextCodec, cfg: &ModelConfig) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = posts
        .iter()
        .map(|p| {
            let mut ids = codec.encode(p);
            ids.truncate(cfg.p_max);
            ids
        })
        .filter(|ids| !ids.is_empty())
        .collect();
    if out.len() > cfg.n_max {
        log::warn!("channel has {} posts; keeping the first {}", out.len(), cfg.n_max);
        out.truncate(cfg.n_max);
    }
    out
}

/// Encoder outputs for a batch of channels.
///
/// `w` is `[batch, posts, words, 2d]` and `p` is `[batch, posts, 2d]`;
/// entries at masked positions are exactly zero.
pub struct ChannelEncoding {
    pub w: Var,
    pub p: Var,
    pub batch: usize,
    pub posts: usize,
    pub words: usize,
    pub word_mask: Vec<f64>,
    pub post_mask: Vec<f64>,
}

fn column(mask: &[f64], rows: usize, width: usize, t: usize) -> Vec<f64> {
    (0..rows).map(|r| mask[r * width + t]).collect()
}

/// Runs a bidirectional LSTM over `steps` inputs of `[rows, in]` and returns
/// per-step `[rows, 2d]` outputs with masked rows zeroed.
fn bilstm(
    g: &mut Graph,
    p: &Bound,
    prefix: &str,
    d: usize,
    rows: usize,
    inputs: &[Var],
    masks: &[Vec<f64>],
) -> Result<Vec<Var>> {
    let steps = inputs.len();
    let mut outputs = vec![Vec::with_capacity(2); steps];
    for (dir, order) in [("fwd", (0..steps).collect::<Vec<_>>()), ("bwd", (0..steps).rev().collect())] {
        let cell = Lstm::bind(p, &format!("{prefix}.{dir}"), d);
        let mut h = zeros(g, rows, d);
        let mut c = zeros(g, rows, d);
        for t in order {
            (h, c) = cell.masked_step(g, inputs[t], h, c, &masks[t])?;
            outputs[t].push(h);
        }
    }
    outputs
        .into_iter()
        .zip(masks)
        .map(|(hs, m)| {
            let both = g.concat_cols(&hs)?;
            g.mask_rows(both, m.clone())
        })
        .collect()
}

/// Stacks per-step `[rows, k]` outputs into `[rows * steps, k]`, row-major
/// by `(row, step)`.
fn stack_steps(g: &mut Graph, steps: &[Var], rows: usize) -> Result<Var> {
    let all = g.concat_rows(steps)?;
    let n = steps.len();
    let order = (0..rows).flat_map(|r| (0..n).map(move |t| t * rows + r)).collect();
    g.gather_rows(all, order)
}

/// Word-level BiLSTM per post, masked mean pooling, then a post-level BiLSTM.
pub fn encode_channel(g: &mut Graph, p: &Bound, cfg: &ModelConfig, input: &ChannelBatch) -> Result<ChannelEncoding> {
    input.validate(cfg.vocab_size)?;
    let (b, n, w, d) = (input.batch, input.posts, input.words, cfg.hidden);
    let rows = b * n;
    let embed = p.var("embed.weight");

    let mut xs = Vec::with_capacity(w);
    let mut masks = Vec::with_capacity(w);
    for t in 0..w {
        let ids = (0..rows).map(|r| input.ids[r * w + t]).collect();
        xs.push(g.gather_rows(embed, ids)?);
        masks.push(column(&input.word_mask, rows, w, t));
    }
    let word_states = bilstm(g, p, "enc_word", d, rows, &xs, &masks)?;
    let stacked = stack_steps(g, &word_states, rows)?;
    let w_var = g.reshape(stacked, vec![b, n, w, 2 * d])?;

    let per_post = g.reshape(stacked, vec![rows, w, 2 * d])?;
    let pooled = g.masked_mean(per_post, input.word_mask.clone())?;
    let mut post_inputs = Vec::with_capacity(n);
    let mut post_masks = Vec::with_capacity(n);
    for i in 0..n {
        post_inputs.push(g.gather_rows(pooled, (0..b).map(|bi| bi * n + i).collect())?);
        post_masks.push(column(&input.post_mask, b, n, i));
    }
    let post_states = bilstm(g, p, "enc_post", d, b, &post_inputs, &post_masks)?;
    let stacked = stack_steps(g, &post_states, b)?;
    let p_var = g.reshape(stacked, vec![b, n, 2 * d])?;

    Ok(ChannelEncoding {
        w: w_var,
        p: p_var,
        batch: b,
        posts: n,
        words: w,
        word_mask: input.word_mask.clone(),
        post_mask: input.post_mask.clone(),
    })
}
