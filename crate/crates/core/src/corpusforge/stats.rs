use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::textproc::word_count;

use super::InterleavedExample;

/// Summary of a sample of non-negative counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Distribution {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: usize,
    pub max: usize,
    /// Nearest-rank percentiles at 10, 25, 50, 75 and 90.
    pub percentiles: BTreeMap<u8, usize>,
    pub histogram: BTreeMap<usize, usize>,
}

impl Distribution {
    pub fn from_values(values: &[usize]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        };
        let percentiles = [10u8, 25, 50, 75, 90]
            .into_iter()
            .map(|p| {
                let rank = ((p as f64 / 100.0) * n as f64).ceil().max(1.0) as usize;
                (p, sorted[rank - 1])
            })
            .collect();
        let mut histogram = BTreeMap::new();
        for &v in &sorted {
            *histogram.entry(v).or_default() += 1;
        }
        Self {
            count: n,
            mean: sorted.iter().sum::<usize>() as f64 / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
            percentiles,
            histogram,
        }
    }

    /// Share of the sample equal to `value`, in percent.
    pub fn share(&self, value: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        100.0 * self.histogram.get(&value).copied().unwrap_or(0) as f64 / self.count as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub examples: usize,
    pub thread_counts: Distribution,
    pub posts_per_thread: Distribution,
    pub post_words: Distribution,
    pub summary_sentences: Distribution,
    pub summary_words: Distribution,
}

pub fn corpus_stats(dataset: &[InterleavedExample]) -> CorpusStats {
    let mut threads = Vec::new();
    let mut per_thread = Vec::new();
    let mut post_words = Vec::new();
    let mut sum_sents = Vec::new();
    let mut sum_words = Vec::new();
    for ex in dataset {
        threads.push(ex.thread_count());
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &t in &ex.thread_ids {
            *counts.entry(t).or_default() += 1;
        }
        per_thread.extend(counts.values());
        post_words.extend(ex.posts.iter().map(|p| word_count(p)));
        sum_sents.push(ex.summary.len());
        sum_words.push(ex.summary.iter().map(|s| word_count(s)).sum());
    }
    CorpusStats {
        examples: dataset.len(),
        thread_counts: Distribution::from_values(&threads),
        posts_per_thread: Distribution::from_values(&per_thread),
        post_words: Distribution::from_values(&post_words),
        summary_sentences: Distribution::from_values(&sum_sents),
        summary_words: Distribution::from_values(&sum_words),
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "examples: {}", self.examples)?;
        writeln!(
            f,
            "{:<18} {:>8} {:>8} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}",
            "", "mean", "median", "min", "p10", "p25", "p50", "p75", "p90", "max"
        )?;
        let rows = [
            ("threads", &self.thread_counts),
            ("posts/thread", &self.posts_per_thread),
            ("words/post", &self.post_words),
            ("summary sents", &self.summary_sentences),
            ("summary words", &self.summary_words),
        ];
        for (name, d) in rows {
            let p = |k: u8| d.percentiles.get(&k).copied().unwrap_or(0);
            writeln!(
                f,
                "{:<18} {:>8.2} {:>8.1} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}",
                name, d.mean, d.median, d.min, p(10), p(25), p(50), p(75), p(90), d.max
            )?;
        }
        Ok(())
    }
}
