//! Document/summary corpora and synthetic interleaved datasets.
//!
//! A corpus is a list of [`SourceDocument`]s (ordered sentences plus a
//! one-sentence summary). [`interleave`] slides a window over the corpus and,
//! per window, picks a few documents, keeps a prefix of each one's sentences,
//! and shuffles those sentences together while preserving each document's
//! internal order. The summary of the result is the list of the picked
//! documents' summaries in the order their threads first appear.

mod interleave;
mod stats;
pub mod toy;
mod window;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use interleave::{interleave, Synthesis};
pub use stats::{corpus_stats, CorpusStats, Distribution};
pub use window::{window, window_count};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDocument {
    pub id: String,
    pub summary: String,
    pub sentences: Vec<String>,
}

/// One synthetic (or real) interleaved text with its multi-sentence summary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterleavedExample {
    pub posts: Vec<String>,
    #[serde(default)]
    pub thread_ids: Vec<usize>,
    pub summary: Vec<String>,
    #[serde(default)]
    pub source_ids: Vec<String>,
}

impl InterleavedExample {
    pub fn thread_count(&self) -> usize {
        self.thread_ids.iter().collect::<HashSet<_>>().len()
    }

    /// Thread ids in order of first appearance.
    pub fn thread_order(&self) -> Vec<usize> {
        let mut seen = HashSet::new();
        self.thread_ids.iter().copied().filter(|t| seen.insert(*t)).collect()
    }

    /// Same example with posts grouped by thread (threads in first-appearance
    /// order, posts within a thread in their original order).
    pub fn disentangled(&self) -> InterleavedExample {
        let order = self.thread_order();
        let mut idx: Vec<usize> = (0..self.posts.len()).collect();
        idx.sort_by_key(|&i| order.iter().position(|&t| t == self.thread_ids[i]));
        InterleavedExample {
            posts: idx.iter().map(|&i| self.posts[i].clone()).collect(),
            thread_ids: idx.iter().map(|&i| self.thread_ids[i]).collect(),
            summary: self.summary.clone(),
            source_ids: self.source_ids.clone(),
        }
    }
}

/// Interleaving parameters: thread count in `[a, b]`, posts per thread in
/// `[m, n]`, sliding window of `window` documents advanced by `step`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub min_threads: usize,
    pub max_threads: usize,
    pub min_posts: usize,
    pub max_posts: usize,
    pub window: usize,
    pub step: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// Window `2b`, step `b`.
    pub fn new(min_threads: usize, max_threads: usize, min_posts: usize, max_posts: usize, seed: u64) -> Self {
        Self {
            min_threads,
            max_threads,
            min_posts,
            max_posts,
            window: 2 * max_threads,
            step: max_threads.max(1),
            seed,
        }
    }

    /// a=2, b=5, m=2, n=5.
    pub fn hard(seed: u64) -> Self {
        Self::new(2, 5, 2, 5, seed)
    }

    /// Meeting-sized thread counts (a=8, b=12); posts per thread must be given.
    pub fn ami_like(min_posts: usize, max_posts: usize, seed: u64) -> Self {
        Self::new(8, 12, min_posts, max_posts, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 1 <= self.min_threads
            && self.min_threads <= self.max_threads
            && self.max_threads <= self.window
            && 1 <= self.min_posts
            && self.min_posts <= self.max_posts
            && self.step >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid synthesis config: need 1 <= a <= b <= w, 1 <= m <= n, t >= 1 (got {self:?})"
            )))
        }
    }

    /// Largest number of posts an example can hold, `b * n`.
    pub fn max_total_posts(&self) -> usize {
        self.max_threads * self.max_posts
    }
}

/// Reads a JSONL corpus, one `{"id", "summary", "sentences"}` object per line.
pub fn load_corpus(path: &Path) -> Result<Vec<SourceDocument>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<Vec<SourceDocument>> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: SourceDocument =
            serde_json::from_str(line).map_err(|e| Error::Data(format!("line {lineno}: {e}")))?;
        if doc.sentences.is_empty() {
            return Err(Error::Data(format!("line {lineno}: document {:?} has no sentences", doc.id)));
        }
        if doc.summary.trim().is_empty() {
            return Err(Error::Data(format!("line {lineno}: document {:?} has an empty summary", doc.id)));
        }
        if !ids.insert(doc.id.clone()) {
            return Err(Error::Data(format!("line {lineno}: duplicate document id {:?}", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_dataset(path: &Path) -> Result<Vec<InterleavedExample>> {
    crate::io::read_jsonl(path)
}

pub fn save_dataset(path: &Path, examples: &[InterleavedExample]) -> Result<()> {
    crate::io::write_jsonl(path, examples)
}

/// Collapses runs of whitespace; used for summary de-duplication.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_document_line() {
        let docs = parse_corpus(r#"{"id":"d1","summary":"s.","sentences":["a.","b."]}"#).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].id, "d1");
        assert_eq!(docs[0].sentences.len(), 2);
    }

    #[test]
    fn empty_file_is_an_empty_corpus() {
        assert!(parse_corpus("").unwrap().is_empty());
    }

    #[test]
    fn schema_errors_name_field_and_line() {
        let text = "{\"id\":\"d1\",\"summary\":\"s\",\"sentences\":[\"a\"]}\n{\"id\":\"d2\",\"sentences\":[\"a\"]}";
        let msg = parse_corpus(text).unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("summary"), "{msg}");
    }

    #[test]
    fn rejects_duplicates_and_empty_documents() {
        let dup = "{\"id\":\"d\",\"summary\":\"s\",\"sentences\":[\"a\"]}\n{\"id\":\"d\",\"summary\":\"s\",\"sentences\":[\"a\"]}";
        assert!(parse_corpus(dup).unwrap_err().to_string().contains("duplicate"));
        let empty = r#"{"id":"d","summary":"s","sentences":[]}"#;
        assert!(parse_corpus(empty).is_err());
        assert!(parse_corpus("not json").unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::hard(0).validate().is_ok());
        assert_eq!(SynthConfig::hard(0).window, 10);
        assert_eq!(SynthConfig::hard(0).step, 5);
        assert_eq!(SynthConfig::hard(0).max_total_posts(), 25);
        let mut bad = SynthConfig::hard(0);
        bad.window = 4;
        assert!(bad.validate().is_err());
        assert!(SynthConfig::new(3, 2, 1, 1, 0).validate().is_err());
        assert!(SynthConfig::new(1, 1, 2, 1, 0).validate().is_err());
    }

    #[test]
    fn disentangling_groups_posts_by_first_appearance() {
        let ex = InterleavedExample {
            posts: ["b1", "a1", "b2", "a2", "c1"].map(String::from).to_vec(),
            thread_ids: vec![1, 0, 1, 0, 2],
            summary: vec!["B".into(), "A".into(), "C".into()],
            source_ids: vec![],
        };
        let d = ex.disentangled();
        assert_eq!(d.posts, ["b1", "b2", "a1", "a2", "c1"]);
        assert_eq!(d.thread_ids, [1, 1, 0, 0, 2]);
        assert_eq!(ex.thread_count(), 3);
    }
}
