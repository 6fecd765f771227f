//! Clusters interleaved posts by TF-IDF similarity and extracts one post per
//! cluster, then compares the result with the gold summaries.
//!
//! cargo run --release --example baseline_two_step

use hiersumm::baseline2step::{disentangle, two_step_summarize, BaselineConfig};
use hiersumm::corpusforge::toy::{toy_documents, ToyCorpus};
use hiersumm::corpusforge::{interleave, SynthConfig};
use hiersumm::rougemetrics::corpus_rouge;

fn main() -> hiersumm::Result<()> {
    let docs = toy_documents(&ToyCorpus::abstracts(1000, 3));
    let examples = interleave(&docs, &SynthConfig::hard(9))?.examples;
    let cfg = BaselineConfig::default();

    let ex = &examples[0];
    let clusters = disentangle(&ex.posts, cfg.threshold, cfg.max_clusters)?;
    println!("{} threads, {} clusters", ex.thread_count(), clusters.clusters);
    for (post, (gold, found)) in ex.posts.iter().zip(ex.thread_ids.iter().zip(&clusters.labels)) {
        println!("  thread {gold} cluster {found}  {post}");
    }
    println!("extracted:");
    for s in two_step_summarize(&ex.posts, &cfg)? {
        println!("  {s}");
    }

    let pairs = examples
        .iter()
        .map(|e| Ok((two_step_summarize(&e.posts, &cfg)?, e.summary.clone())))
        .collect::<hiersumm::Result<Vec<_>>>()?;
    let r = corpus_rouge(&pairs, cfg.word_limit)?;
    println!(
        "\n{} examples: R1 {:.2}  R2 {:.2}  RL {:.2}",
        pairs.len(),
        100.0 * r.rouge1.f1,
        100.0 * r.rouge2.f1,
        100.0 * r.rouge_l.f1
    );
    Ok(())
}
