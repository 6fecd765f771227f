use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::tokenize;

/// Length and thread-count statistics of generated summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub examples: usize,
    pub word_limit: usize,
    pub mean_words: f64,
    pub median_words: f64,
    pub reference_mean_words: f64,
    /// Median number of generated sentences (one per thread).
    pub median_threads: f64,
    pub reference_median_threads: f64,
    /// Median of `|generated - reference|` sentence counts.
    pub median_thread_diff: f64,
    /// Percent of examples whose sentence-count difference is at most 1, 2, 3.
    pub thread_diff_within: [f64; 3],
}

/// Middle value; mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn words(summary: &[String]) -> f64 {
    summary.iter().map(|s| tokenize(s).len()).sum::<usize>() as f64
}

pub fn summary_stats(generated: &[Vec<String>], references: &[Vec<String>], word_limit: usize) -> Result<SummaryStats> {
    if generated.len() != references.len() {
        return Err(Error::Data(format!(
            "{} generated summaries for {} references",
            generated.len(),
            references.len()
        )));
    }
    let gen_words: Vec<f64> = generated.iter().map(|s| words(s)).collect();
    let ref_words: Vec<f64> = references.iter().map(|s| words(s)).collect();
    let gen_threads: Vec<f64> = generated.iter().map(|s| s.len() as f64).collect();
    let ref_threads: Vec<f64> = references.iter().map(|s| s.len() as f64).collect();
    let diffs: Vec<f64> = gen_threads.iter().zip(&ref_threads).map(|(a, b)| (a - b).abs()).collect();
    let within = |k: f64| {
        if diffs.is_empty() {
            0.0
        } else {
            100.0 * diffs.iter().filter(|&&d| d <= k).count() as f64 / diffs.len() as f64
        }
    };
    Ok(SummaryStats {
        examples: generated.len(),
        word_limit,
        mean_words: mean(&gen_words),
        median_words: median(&gen_words),
        reference_mean_words: mean(&ref_words),
        median_threads: median(&gen_threads),
        reference_median_threads: median(&ref_threads),
        median_thread_diff: median(&diffs),
        thread_diff_within: [within(1.0), within(2.0), within(3.0)],
    })
}

impl fmt::Display for SummaryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "examples                 {:>8}", self.examples)?;
        writeln!(f, "words (mean / median)    {:>8.1} / {:.1}", self.mean_words, self.median_words)?;
        writeln!(f, "reference words (mean)   {:>8.1}", self.reference_mean_words)?;
        writeln!(
            f,
            "threads (median)         {:>8.1}   reference {:.1}",
            self.median_threads, self.reference_median_threads
        )?;
        let [a, b, c] = self.thread_diff_within;
        writeln!(f, "|thread diff| median     {:>8.1}", self.median_thread_diff)?;
        writeln!(f, "|thread diff| <= 1/2/3   {a:>7.1}% / {b:.1}% / {c:.1}%")
    }
}
