use rand::seq::SliceRandom;

use crate::corpusforge::InterleavedExample;
use crate::error::{Error, Result};
use crate::hiernet::{ChannelBatch, ModelConfig};
use crate::rng;
use crate::textproc::TextCodec;

/// One example as token ids: posts in channel order, summary sentences in
/// thread first-appearance order.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedExample {
    pub posts: Vec<Vec<usize>>,
    pub summary: Vec<Vec<usize>>,
}

pub fn encode_example(ex: &InterleavedExample, codec: &TextCodec, cfg: &ModelConfig) -> Result<EncodedExample> {
    let posts = crate::hiernet::encode_posts(&ex.posts, codec, cfg);
    if posts.is_empty() {
        return Err(Error::Data("example has no non-empty posts".into()));
    }
    if ex.summary.is_empty() {
        return Err(Error::Data("example has an empty summary".into()));
    }
    let mut summary: Vec<Vec<usize>> = ex.summary.iter().map(|s| codec.encode(s)).collect();
    if summary.len() > cfg.k_max {
        log::warn!("example has {} summary sentences; keeping the first {}", summary.len(), cfg.k_max);
        summary.truncate(cfg.k_max);
    }
    Ok(EncodedExample { posts, summary })
}

pub fn encode_dataset(data: &[InterleavedExample], codec: &TextCodec, cfg: &ModelConfig) -> Result<Vec<EncodedExample>> {
    data.iter()
        .enumerate()
        .map(|(i, ex)| encode_example(ex, codec, cfg).map_err(|e| Error::Data(format!("example {i}: {e}"))))
        .collect()
}

/// Padded model input plus gold targets for a group of examples.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub input: ChannelBatch,
    /// `summaries[b][k]` = token ids of gold sentence `k`.
    pub summaries: Vec<Vec<Vec<usize>>>,
    /// Positions of the examples in the source dataset.
    pub indices: Vec<usize>,
}

impl Batch {
    pub fn new(examples: &[EncodedExample], indices: Vec<usize>) -> Result<Self> {
        let rows: Vec<&EncodedExample> = indices
            .iter()
            .map(|&i| examples.get(i).ok_or_else(|| Error::Contract(format!("example index {i} out of range"))))
            .collect::<Result<_>>()?;
        let posts: Vec<Vec<Vec<usize>>> = rows.iter().map(|e| e.posts.clone()).collect();
        Ok(Self {
            input: ChannelBatch::from_ids(&posts)?,
            summaries: rows.iter().map(|e| e.summary.clone()).collect(),
            indices,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Stop labels per row over `k_max` steps: `Some(1.0)` at the last gold
    /// sentence, `Some(0.0)` before it, `None` after.
    pub fn stop_labels(&self, k_max: usize) -> Vec<Vec<Option<f64>>> {
        self.summaries
            .iter()
            .map(|s| {
                let k = s.len().min(k_max);
                (0..k_max)
                    .map(|i| match i.cmp(&(k - 1)) {
                        std::cmp::Ordering::Less => Some(0.0),
                        std::cmp::Ordering::Equal => Some(1.0),
                        std::cmp::Ordering::Greater => None,
                    })
                    .collect()
            })
            .collect()
    }
}

/// Shuffles `0..n` with a seeded stream and cuts it into batches.
pub fn batch_order(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 0x6261_7463_6800_0000 ^ epoch));
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Encodes, shuffles and pads a dataset into batches.
pub fn make_batches(
    data: &[InterleavedExample],
    codec: &TextCodec,
    cfg: &ModelConfig,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let encoded = encode_dataset(data, codec, cfg)?;
    batch_order(encoded.len(), batch_size, seed, 0)
        .into_iter()
        .map(|idx| Batch::new(&encoded, idx))
        .collect()
}
