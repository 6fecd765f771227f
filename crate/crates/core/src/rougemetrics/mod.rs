//! ROUGE-1/2/L with clipped counts, corpus averaging, and summary statistics.

mod stats;


use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::tokenize;

pub use stats::{summary_stats, SummaryStats};

pub const DEFAULT_WORD_LIMIT: usize = 300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Self::from_pr(ratio(overlap, candidate), ratio(overlap, reference))
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Clipped n-gram overlap. `n == 0` scores zero.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> RougeScore {
    let cand = ngrams(candidate, n);
    let refs = ngrams(reference, n);
    let overlap = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(overlap, cand.values().sum(), refs.values().sum())
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeScore {
    RougeScore::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

/// Tokens of a multi-sentence summary, sentence boundaries ignored, cut to
/// `word_limit`.
pub fn flatten(sentences: &[String], word_limit: usize) -> Vec<String> {
    let mut out: Vec<String> = sentences.iter().flat_map(|s| tokenize(s)).collect();
    out.truncate(word_limit);
    out
}

/// Keeps whole sentences while the running word count stays within
/// `word_limit`.
pub fn limit_words(sentences: Vec<String>, word_limit: usize) -> Vec<String> {
    let mut used = 0;
    sentences
        .into_iter()
        .take_while(|s| {
            used += tokenize(s).len();
            used <= word_limit
        })
        .collect()
}

/// ROUGE-1, ROUGE-2 and ROUGE-L of one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

pub fn score_pair(candidate: &[String], reference: &[String], word_limit: usize) -> RougeTriple {
    let c = flatten(candidate, word_limit);
    let r = flatten(reference, word_limit);
    RougeTriple {
        rouge1: rouge_n(&c, &r, 1),
        rouge2: rouge_n(&c, &r, 2),
        rouge_l: rouge_l(&c, &r),
    }
}

/// Macro average over `(generated, reference)` pairs.
pub fn corpus_rouge(pairs: &[(Vec<String>, Vec<String>)], word_limit: usize) -> Result<RougeTriple> {
    if pairs.is_empty() {
        return Err(Error::Data("no summary pairs to score".into()));
    }
    let scores: Vec<RougeTriple> = pairs.iter().map(|(c, r)| score_pair(c, r, word_limit)).collect();
    let n = scores.len() as f64;
    let avg = |f: fn(&RougeTriple) -> RougeScore| {
        let (p, r, f1) = scores.iter().map(f).fold((0.0, 0.0, 0.0), |(p, r, f1), s| {
            (p + s.precision, r + s.recall, f1 + s.f1)
        });
        RougeScore {
            precision: p / n,
            recall: r / n,
            f1: f1 / n,
        }
    };
    Ok(RougeTriple {
        rouge1: avg(|t| t.rouge1),
        rouge2: avg(|t| t.rouge2),
        rouge_l: avg(|t| t.rouge_l),
    })
}

/// Scores plus summary statistics for a whole evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
    pub stats: SummaryStats,
}

impl MetricsReport {
    pub fn compute(generated: &[Vec<String>], references: &[Vec<String>], word_limit: usize) -> Result<Self> {
        if generated.len() != references.len() {
            return Err(Error::Data(format!(
                "{} generated summaries for {} references",
                generated.len(),
                references.len()
            )));
        }
        let pairs: Vec<(Vec<String>, Vec<String>)> =
            generated.iter().cloned().zip(references.iter().cloned()).collect();
        let rouge = corpus_rouge(&pairs, word_limit)?;
        Ok(Self {
            rouge1: rouge.rouge1,
            rouge2: rouge.rouge2,
            rouge_l: rouge.rouge_l,
            stats: summary_stats(generated, references, word_limit)?,
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>9} {:>9} {:>9}", "metric", "precision", "recall", "f1")?;
        for (name, s) in [("ROUGE-1", self.rouge1), ("ROUGE-2", self.rouge2), ("ROUGE-L", self.rouge_l)] {
            writeln!(
                f,
                "{name:<8} {:>9.2} {:>9.2} {:>9.2}",
                100.0 * s.precision,
                100.0 * s.recall,
                100.0 * s.f1
            )?;
        }
        write!(f, "{}", self.stats)
    }
}
