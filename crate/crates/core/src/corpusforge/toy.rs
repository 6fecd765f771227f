//! Deterministic stand-in corpora for tests, examples and smoke runs.
//!
//! Each generated document has a few topic words drawn from a pseudo-word
//! lexicon. Its sentences mix those topic words with filler, and its summary
//! is a short title built from the topic words, so the summary is
//! recoverable from the sentences the way a title is from an abstract.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng;

use super::SourceDocument;

const FUNCTION_WORDS: [&str; 16] = [
    "the", "of", "and", "in", "to", "a", "with", "for", "on", "was", "were", "is", "by", "at", "from", "that",
];

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "ve", "du", "ga", "ze", "bo", "fi", "hu", "ja", "ko", "li",
    "ma", "no", "pe", "ro", "sa", "tu",
];

#[derive(Clone, Debug)]
pub struct ToyCorpus {
    pub documents: usize,
    /// Number of distinct content words.
    pub lexicon: usize,
    pub topic_words: usize,
    pub sentences: (usize, usize),
    pub sentence_words: (usize, usize),
    pub seed: u64,
}

impl ToyCorpus {
    /// Abstract-sized documents: 4-8 sentences of 8-14 words.
    pub fn abstracts(documents: usize, seed: u64) -> Self {
        Self {
            documents,
            lexicon: 1500,
            topic_words: 3,
            sentences: (4, 8),
            sentence_words: (8, 14),
            seed,
        }
    }

    /// Tiny documents over a small lexicon, for overfitting checks.
    pub fn micro(documents: usize, seed: u64) -> Self {
        Self {
            documents,
            lexicon: 120,
            topic_words: 2,
            sentences: (2, 3),
            sentence_words: (4, 6),
            seed,
        }
    }
}

/// The `i`-th pseudo-word: base-24 syllable spelling with at least two syllables.
pub fn pseudo_word(i: usize) -> String {
    let mut digits = Vec::new();
    let mut v = i + SYLLABLES.len();
    while v > 0 {
        digits.push(v % SYLLABLES.len());
        v /= SYLLABLES.len();
    }
    digits.iter().rev().map(|&d| SYLLABLES[d]).collect()
}

pub fn toy_documents(cfg: &ToyCorpus) -> Vec<SourceDocument> {
    let mut rng = rng::stream(cfg.seed, 0x0074_6f79);
    let lexicon: Vec<String> = (0..cfg.lexicon).map(pseudo_word).collect();
    (0..cfg.documents)
        .map(|i| {
            let topics: Vec<&String> = lexicon.choose_multiple(&mut rng, cfg.topic_words).collect();
            let summary = match (topics.len(), i % 2) {
                (0, _) => "untitled .".to_string(),
                (1, _) => format!("{} .", topics[0]),
                (_, 0) => format!("{} in {} .", topics[0], join(&topics[1..])),
                _ => format!("{} of {} .", topics[0], join(&topics[1..])),
            };
            let n_sent = rng.gen_range(cfg.sentences.0..=cfg.sentences.1);
            let sentences = (0..n_sent)
                .map(|_| {
                    let len = rng.gen_range(cfg.sentence_words.0..=cfg.sentence_words.1);
                    let mut words: Vec<String> = (0..len)
                        .map(|_| {
                            if rng.gen_bool(0.4) {
                                FUNCTION_WORDS.choose(&mut rng).unwrap().to_string()
                            } else {
                                lexicon.choose(&mut rng).unwrap().clone()
                            }
                        })
                        .collect();
                    for t in &topics {
                        if rng.gen_bool(0.7) {
                            let at = rng.gen_range(0..=words.len());
                            words.insert(at, (*t).clone());
                        }
                    }
                    words.push(".".into());
                    words.join(" ")
                })
                .collect();
            SourceDocument {
                id: format!("toy-{i}"),
                summary,
                sentences,
            }
        })
        .collect()
}

fn join(words: &[&String]) -> String {
    words.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")
}
