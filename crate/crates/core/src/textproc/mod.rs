//! Tokenization, word vocabularies, byte-pair encoding and id mapping.

mod bpe;
mod tokenize;
mod vocab;

use serde::{Deserialize, Serialize};

pub use bpe::{BpeModel, END_OF_WORD};
pub use tokenize::{tokenize, word_count};
pub use vocab::{Vocabulary, BOS, EOS, PAD, RESERVED, UNK};

use crate::error::Result;

/// How text is cut into model units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segmentation {
    Word,
    Bpe,
}

/// Tokenizer + optional BPE + vocabulary: text in, ids out and back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextCodec {
    pub bpe: Option<BpeModel>,
    pub vocab: Vocabulary,
}

impl TextCodec {
    /// Learns a codec from raw texts. With [`Segmentation::Bpe`] the merge
    /// list is learned first and the vocabulary is built over subwords.
    pub fn learn(texts: &[&str], mode: Segmentation, max_vocab: usize, bpe_merges: usize) -> Result<Self> {
        let streams: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let bpe = match mode {
            Segmentation::Word => None,
            Segmentation::Bpe => Some(BpeModel::learn(&BpeModel::word_counts(&streams), bpe_merges)?),
        };
        let units: Vec<Vec<String>> = match &bpe {
            None => streams,
            Some(m) => streams.iter().map(|s| m.encode(s)).collect(),
        };
        let vocab = Vocabulary::build(&units, max_vocab)?;
        Ok(Self { bpe, vocab })
    }

    pub fn segmentation(&self) -> Segmentation {
        if self.bpe.is_some() {
            Segmentation::Bpe
        } else {
            Segmentation::Word
        }
    }

    /// Model units (words or subwords) of `text`.
    pub fn units(&self, text: &str) -> Vec<String> {
        let words = tokenize(text);
        match &self.bpe {
            None => words,
            Some(m) => m.encode(&words),
        }
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        self.units(text).iter().map(|u| self.vocab.id(u)).collect()
    }

    /// Ids back to a space-joined string of words.
    pub fn decode(&self, ids: &[usize]) -> Result<String> {
        let units = self.vocab.decode(ids)?;
        let words = match &self.bpe {
            None => units,
            Some(_) => BpeModel::decode(&units),
        };
        Ok(words.join(" "))
    }

    /// Stable 64-bit FNV-1a digest of the vocabulary and merge list.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.vocab.to_file_string().as_bytes());
        feed(b"\x00");
        if let Some(m) = &self.bpe {
            feed(m.to_file_string().as_bytes());
        }
        format!("{h:016x}")
    }
}
