use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

use super::{normalize_ws, window, InterleavedExample, SourceDocument, SynthConfig};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Synthesis {
    pub examples: Vec<InterleavedExample>,
    /// Windows that could not supply `a` eligible documents.
    pub skipped_windows: Vec<usize>,
}

struct Thread<'a> {
    doc: &'a SourceDocument,
    posts: usize,
}

/// Builds one interleaved example per window of `corpus`.
///
/// Window `k` draws from its own PRNG stream derived from `(cfg.seed, k)`.
/// Within a window the documents are shuffled, `r ~ U[a, b]` of them are
/// taken (skipping documents with fewer than `m` sentences or a summary
/// already taken), each keeps its first `q ~ U[m, n]` sentences (clamped to
/// its length), and the kept sentences are emitted by repeatedly picking a
/// thread uniformly from the remaining post multiset.
pub fn interleave(corpus: &[SourceDocument], cfg: &SynthConfig) -> Result<Synthesis> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::Data("cannot interleave an empty corpus".into()));
    }
    let mut out = Synthesis::default();
    for (k, range) in window(corpus.len(), cfg.window, cfg.step)?.enumerate() {
        let mut rng = rng::stream(cfg.seed, k as u64);
        match interleave_window(&corpus[range], cfg, &mut rng) {
            Some(ex) => out.examples.push(ex),
            None => {
                log::warn!("window {k}: fewer than {} eligible documents, skipped", cfg.min_threads);
                out.skipped_windows.push(k);
            }
        }
    }
    Ok(out)
}

fn interleave_window(docs: &[SourceDocument], cfg: &SynthConfig, rng: &mut rng::Rng) -> Option<InterleavedExample> {
    let mut order: Vec<&SourceDocument> = docs.iter().collect();
    order.shuffle(rng);
    let r = rng.gen_range(cfg.min_threads..=cfg.max_threads);

    let mut threads: Vec<Thread> = Vec::with_capacity(r);
    let mut titles = HashSet::new();
    for doc in order {
        if threads.len() == r {
            break;
        }
        if doc.sentences.len() < cfg.min_posts || titles.contains(&normalize_ws(&doc.summary)) {
            continue;
        }
        titles.insert(normalize_ws(&doc.summary));
        let q = rng.gen_range(cfg.min_posts..=cfg.max_posts).min(doc.sentences.len());
        threads.push(Thread { doc, posts: q });
    }
    if threads.len() < cfg.min_threads {
        return None;
    }

    let mut remaining: Vec<usize> = threads
        .iter()
        .enumerate()
        .flat_map(|(j, t)| std::iter::repeat_n(j, t.posts))
        .collect();
    let mut next = vec![0usize; threads.len()];
    let mut ex = InterleavedExample {
        posts: Vec::with_capacity(remaining.len()),
        thread_ids: Vec::with_capacity(remaining.len()),
        summary: Vec::with_capacity(threads.len()),
        source_ids: threads.iter().map(|t| t.doc.id.clone()).collect(),
    };
    let mut emitted: HashSet<String> = HashSet::new();
    while !remaining.is_empty() {
        let k = remaining.swap_remove(rng.gen_range(0..remaining.len()));
        let thread = &threads[k];
        ex.posts.push(thread.doc.sentences[next[k]].clone());
        ex.thread_ids.push(k);
        next[k] += 1;
        if emitted.insert(normalize_ws(&thread.doc.summary)) {
            ex.summary.push(thread.doc.summary.clone());
        }
    }
    Some(ex)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::corpusforge::toy::{toy_documents, ToyCorpus};
    use crate::corpusforge::window_count;

    fn doc(id: &str, n: usize) -> SourceDocument {
        SourceDocument {
            id: id.into(),
            summary: format!("title of {id}"),
            sentences: (0..n).map(|i| format!("{id} sentence {i}")).collect(),
        }
    }

    /// Independent check of every per-example invariant.
    pub(crate) fn assert_invariants(ex: &InterleavedExample, corpus: &[SourceDocument], cfg: &SynthConfig) {
        let by_id: HashMap<&str, &SourceDocument> = corpus.iter().map(|d| (d.id.as_str(), d)).collect();
        assert_eq!(ex.posts.len(), ex.thread_ids.len());
        let r = ex.source_ids.len();
        assert!(cfg.min_threads <= r && r <= cfg.max_threads, "thread count {r}");
        let mut first_seen = Vec::new();
        for k in 0..r {
            let src = by_id[ex.source_ids[k].as_str()];
            let posts: Vec<&String> = ex
                .posts
                .iter()
                .zip(&ex.thread_ids)
                .filter(|(_, &t)| t == k)
                .map(|(p, _)| p)
                .collect();
            let q = posts.len();
            assert!(cfg.min_posts <= q && q <= cfg.max_posts.min(src.sentences.len()), "posts {q}");
            for (p, s) in posts.iter().zip(&src.sentences) {
                assert_eq!(*p, s, "thread {k} is not a prefix of its source");
            }
        }
        for &t in &ex.thread_ids {
            assert!(t < r);
            if !first_seen.contains(&t) {
                first_seen.push(t);
            }
        }
        let expected: Vec<String> = first_seen.iter().map(|&t| by_id[ex.source_ids[t].as_str()].summary.clone()).collect();
        assert_eq!(ex.summary, expected);
        assert_eq!(ex.summary.len(), first_seen.len());
    }

    #[test]
    fn single_thread_identity() {
        let corpus = vec![doc("d", 3)];
        let mut cfg = SynthConfig::new(1, 1, 3, 3, 7);
        cfg.window = 1;
        cfg.step = 1;
        let out = interleave(&corpus, &cfg).unwrap();
        let ex = &out.examples[0];
        assert_eq!(ex.posts, corpus[0].sentences);
        assert_eq!(ex.thread_ids, [0, 0, 0]);
        assert_eq!(ex.summary, [corpus[0].summary.clone()]);
    }

    #[test]
    fn six_document_window_satisfies_invariants() {
        let corpus: Vec<SourceDocument> = (0..6).map(|i| doc(&format!("d{i}"), 3 + i % 4)).collect();
        let mut cfg = SynthConfig::new(2, 5, 2, 5, 42);
        cfg.window = 6;
        cfg.step = 6;
        let out = interleave(&corpus, &cfg).unwrap();
        assert_eq!(out.examples.len(), 1);
        assert_invariants(&out.examples[0], &corpus, &cfg);
    }

    #[test]
    fn hard_preset_on_toy_abstracts() {
        let corpus = toy_documents(&ToyCorpus::abstracts(400, 3));
        let cfg = SynthConfig::hard(11);
        let out = interleave(&corpus, &cfg).unwrap();
        assert_eq!(out.examples.len(), window_count(400, 10, 5).unwrap());
        for ex in &out.examples {
            assert_invariants(ex, &corpus, &cfg);
            let range_ok = ex.source_ids.iter().all(|id| corpus.iter().any(|d| &d.id == id));
            assert!(range_ok);
        }
        assert!(out.examples.iter().any(|e| e.summary.len() == 3));
    }

    #[test]
    fn short_documents_shrink_or_skip_windows() {
        let mut corpus = vec![doc("a", 1), doc("b", 1), doc("c", 4)];
        let mut cfg = SynthConfig::new(1, 3, 2, 2, 1);
        cfg.window = 3;
        cfg.step = 1;
        let out = interleave(&corpus, &cfg).unwrap();
        assert_eq!(out.examples[0].source_ids, ["c"]);
        cfg.min_threads = 2;
        let out = interleave(&corpus, &cfg).unwrap();
        assert!(out.examples.is_empty());
        assert_eq!(out.skipped_windows, [0]);
        corpus.clear();
        assert!(interleave(&corpus, &cfg).is_err());
    }

    #[test]
    fn duplicate_summaries_are_not_selected_twice() {
        let mut corpus: Vec<SourceDocument> = (0..4).map(|i| doc(&format!("d{i}"), 3)).collect();
        for d in &mut corpus {
            d.summary = "same  title".into();
        }
        corpus[3].summary = "same title".into();
        let mut cfg = SynthConfig::new(1, 4, 1, 3, 5);
        cfg.window = 4;
        let out = interleave(&corpus, &cfg).unwrap();
        assert_eq!(out.examples[0].source_ids.len(), 1);
    }

    #[test]
    fn identical_inputs_give_identical_output() {
        let corpus = toy_documents(&ToyCorpus::abstracts(120, 9));
        let cfg = SynthConfig::hard(3);
        assert_eq!(interleave(&corpus, &cfg).unwrap(), interleave(&corpus, &cfg).unwrap());
        let other = SynthConfig::hard(4);
        assert_ne!(interleave(&corpus, &cfg).unwrap(), interleave(&corpus, &other).unwrap());
    }
}
