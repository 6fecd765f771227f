use crate::error::{Error, Result};
use crate::ndgrad::{Graph, Var};
use crate::textproc::{TextCodec, BOS, EOS};

use super::config::ModelConfig;
use super::decoder::{decode_sentence, thread_step, AttentionKeys, DecodeMode, ThreadState};
use super::encoder::{encode_channel, ChannelBatch};
use super::params::{Bound, Parameters};

/// Configuration, weights and text codec of a trained summarizer.
#[derive(Clone, Debug, PartialEq)]
pub struct HierModel {
    pub config: ModelConfig,
    pub params: Parameters,
    pub codec: TextCodec,
}

/// Word-decoder logits of one step with their targets.
pub struct WordStep {
    /// `[batch, vocab]`.
    pub logits: Var,
    pub targets: Vec<usize>,
    /// 1 where the row has a real target at this step.
    pub active: Vec<f64>,
}

/// Stop logits of one thread step with their targets.
pub struct StopStep {
    /// `[batch, 1]`.
    pub logits: Var,
    pub targets: Vec<f64>,
    pub active: Vec<f64>,
}

/// Everything the loss needs from a teacher-forced pass.
pub struct TeacherForward {
    pub words: Vec<WordStep>,
    pub stops: Vec<StopStep>,
    /// Target tokens (EOS included) per batch row.
    pub tokens: Vec<usize>,
    /// Thread steps per batch row.
    pub threads: Vec<usize>,
}

/// Runs the model with gold sentences as decoder inputs.
///
/// `summaries[b]` holds the target sentences of row `b` as token ids.
/// Sentences past `k_max` and tokens past `q_max - 1` are dropped so that
/// every sentence, EOS included, fits in `q_max` steps.
pub fn teacher_forward(
    g: &mut Graph,
    p: &Bound,
    cfg: &ModelConfig,
    input: &ChannelBatch,
    summaries: &[Vec<Vec<usize>>],
) -> Result<TeacherForward> {
    let b = input.batch;
    if summaries.len() != b {
        return Err(Error::Contract(format!("{} summaries for a batch of {b}", summaries.len())));
    }
    if let Some(i) = summaries.iter().position(|s| s.is_empty()) {
        return Err(Error::Data(format!("batch row {i} has an empty summary")));
    }
    let threads: Vec<usize> = summaries.iter().map(|s| s.len().min(cfg.k_max)).collect();
    let sentences: Vec<Vec<&[usize]>> = summaries
        .iter()
        .zip(&threads)
        .map(|(s, &k)| s[..k].iter().map(|t| &t[..t.len().min(cfg.q_max - 1)]).collect())
        .collect();

    let enc = encode_channel(g, p, cfg, input)?;
    let keys = AttentionKeys::new(g, p, cfg, &enc)?;
    let mut state = ThreadState::initial(g, p, b)?;
    let mut out = TeacherForward {
        words: Vec::new(),
        stops: Vec::new(),
        tokens: sentences.iter().map(|s| s.iter().map(|t| t.len() + 1).sum()).collect(),
        threads: threads.clone(),
    };

    let k_steps = threads.iter().copied().max().unwrap_or(0);
    for k in 0..k_steps {
        let step = thread_step(g, p, cfg, &enc, &keys, state)?;
        out.stops.push(StopStep {
            logits: step.stop_logit,
            targets: threads.iter().map(|&t| if k + 1 == t { 1.0 } else { 0.0 }).collect(),
            active: threads.iter().map(|&t| if k < t { 1.0 } else { 0.0 }).collect(),
        });

        let len = |r: usize| sentences[r].get(k).map(|s| s.len() + 1);
        let steps = (0..b).filter_map(len).max().unwrap_or(0);
        let mut inputs = vec![vec![BOS; b]; steps];
        let mut targets = vec![vec![EOS; b]; steps];
        let mut mask = vec![vec![0.0; b]; steps];
        for r in 0..b {
            let Some(sent) = sentences[r].get(k) else { continue };
            for l in 0..=sent.len() {
                if l > 0 {
                    inputs[l][r] = sent[l - 1];
                }
                if l < sent.len() {
                    targets[l][r] = sent[l];
                }
                mask[l][r] = 1.0;
            }
        }
        let decoded = decode_sentence(
            g,
            p,
            cfg,
            &enc,
            &keys,
            step.thread_rep,
            step.attention.beta_hat,
            DecodeMode::TeacherForced {
                inputs: &inputs,
                mask: &mask,
            },
        )?;
        for ((logits, targets), active) in decoded.logits.into_iter().zip(targets).zip(mask) {
            out.words.push(WordStep {
                logits,
                targets,
                active,
            });
        }
        state = ThreadState {
            h: step.h,
            c: step.c,
            word: decoded.final_h,
        };
    }
    Ok(out)
}

/// Greedy output for one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub sentences: Vec<Vec<usize>>,
    pub stop_probs: Vec<f64>,
}

/// Greedy decoding of a batch. A row emits sentence `k` for every step taken
/// and halts after the step whose stop probability exceeds 0.5, or after
/// `k_max` steps.
pub fn generate(params: &Parameters, cfg: &ModelConfig, input: &ChannelBatch) -> Result<Vec<Generated>> {
    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    let b = input.batch;
    let enc = encode_channel(&mut g, &p, cfg, input)?;
    let keys = AttentionKeys::new(&mut g, &p, cfg, &enc)?;
    let mut state = ThreadState::initial(&mut g, &p, b)?;
    let mut out = vec![
        Generated {
            sentences: Vec::new(),
            stop_probs: Vec::new(),
        };
        b
    ];
    let mut done = vec![false; b];
    for _ in 0..cfg.k_max {
        let step = thread_step(&mut g, &p, cfg, &enc, &keys, state)?;
        let decoded = decode_sentence(
            &mut g,
            &p,
            cfg,
            &enc,
            &keys,
            step.thread_rep,
            step.attention.beta_hat,
            DecodeMode::Greedy,
        )?;
        let stop = g.value(step.stop_prob).data().to_vec();
        for r in 0..b {
            if done[r] {
                continue;
            }
            out[r].sentences.push(decoded.tokens[r].clone());
            out[r].stop_probs.push(stop[r]);
            done[r] = stop[r] > 0.5;
        }
        if done.iter().all(|&d| d) {
            break;
        }
        state = ThreadState {
            h: step.h,
            c: step.c,
            word: decoded.final_h,
        };
    }
    Ok(out)
}

impl HierModel {
    pub fn new(config: ModelConfig, codec: TextCodec, seed: u64) -> Result<Self> {
        if codec.vocab.len() != config.vocab_size {
            return Err(Error::Config(format!(
                "vocabulary has {} entries but vocab_size is {}",
                codec.vocab.len(),
                config.vocab_size
            )));
        }
        let params = Parameters::init(&config, seed)?;
        Ok(Self { config, params, codec })
    }

    /// Summary sentences for one channel of raw posts.
    pub fn summarize(&self, posts: &[String]) -> Result<Vec<String>> {
        let mut all = self.summarize_many(std::slice::from_ref(&posts.to_vec()))?;
        Ok(all.remove(0))
    }

    /// Batched [`HierModel::summarize`].
    pub fn summarize_many(&self, channels: &[Vec<String>]) -> Result<Vec<Vec<String>>> {
        if let Some(i) = channels.iter().position(|c| c.is_empty()) {
            return Err(Error::Data(format!("channel {i} has no posts")));
        }
        if channels.is_empty() {
            return Ok(Vec::new());
        }
        let batch = ChannelBatch::from_texts(channels, &self.codec, &self.config)?;
        generate(&self.params, &self.config, &batch)?
            .into_iter()
            .map(|gen| gen.sentences.iter().map(|s| self.codec.decode(s)).collect())
            .collect()
    }
}
