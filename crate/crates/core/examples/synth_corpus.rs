//! Builds an interleaved dataset from a toy corpus and prints its statistics.
//!
//! cargo run --release --example synth_corpus

use hiersumm::corpusforge::toy::{toy_documents, ToyCorpus};
use hiersumm::corpusforge::{corpus_stats, interleave, window_count, SynthConfig};

fn main() -> hiersumm::Result<()> {
    let docs = toy_documents(&ToyCorpus::abstracts(500, 1));
    let cfg = SynthConfig::hard(42);
    let synth = interleave(&docs, &cfg)?;
    println!(
        "{} documents, window {} step {}: {} windows, {} examples, {} skipped",
        docs.len(),
        cfg.window,
        cfg.step,
        window_count(docs.len(), cfg.window, cfg.step)?,
        synth.examples.len(),
        synth.skipped_windows.len()
    );

    let ex = &synth.examples[0];
    println!("\nfirst example, {} threads:", ex.thread_count());
    for (post, thread) in ex.posts.iter().zip(&ex.thread_ids) {
        println!("  [{thread}] {post}");
    }
    println!("summary:");
    for s in &ex.summary {
        println!("  {s}");
    }
    println!("\ngrouped by thread:");
    for (post, thread) in ex.disentangled().posts.iter().zip(&ex.disentangled().thread_ids) {
        println!("  [{thread}] {post}");
    }

    println!("\n{}", corpus_stats(&synth.examples));
    Ok(())
}
