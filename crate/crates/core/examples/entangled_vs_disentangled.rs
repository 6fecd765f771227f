//! Trains the same model on interleaved posts and on posts grouped by
//! thread, then scores both on held-out channels.
//!
//! cargo run --release --example entangled_vs_disentangled
//! STEPS=3000 DOCS=10000 cargo run --release --example entangled_vs_disentangled

use std::time::Instant;

use hiersumm::corpusforge::toy::{toy_documents, ToyCorpus};
use hiersumm::corpusforge::{interleave, InterleavedExample, SynthConfig};
use hiersumm::hiernet::{HierModel, ModelConfig};
use hiersumm::rougemetrics::corpus_rouge;
use hiersumm::textproc::{Segmentation, TextCodec};
use hiersumm::trainer::{encode_dataset, train, TrainConfig};

fn env(name: &str, default: usize) -> usize {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn run(name: &str, train_set: &[InterleavedExample], test: &[InterleavedExample], steps: usize) -> hiersumm::Result<()> {
    let texts: Vec<&str> = train_set
        .iter()
        .flat_map(|e| e.posts.iter().chain(&e.summary))
        .map(String::as_str)
        .collect();
    let codec = TextCodec::learn(&texts, Segmentation::Word, 1996, 0)?;
    let cfg = ModelConfig {
        dropout: 0.1,
        ..ModelConfig::with_dim(codec.vocab.len(), 32)
    };
    let mut model = HierModel::new(cfg, codec, 1)?;
    let data = encode_dataset(train_set, &model.codec, &model.config)?;
    let tc = TrainConfig {
        learning_rate: 3e-3,
        batch_size: 32,
        max_steps: steps,
        eval_every: (steps / 10).max(1),
        seed: 11,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    train(&mut model.params, &model.config, &data, &[], &tc, |r| {
        println!("{name:<13} step {:>5}  loss {:.4}", r.step, r.train_loss)
    })?;
    let channels: Vec<Vec<String>> = test.iter().map(|e| e.posts.clone()).collect();
    let generated = model.summarize_many(&channels)?;
    let pairs: Vec<_> = generated.into_iter().zip(test.iter().map(|e| e.summary.clone())).collect();
    let r = corpus_rouge(&pairs, 300)?;
    println!(
        "{name:<13} R1 recall {:.2}  R1 F1 {:.2}  R2 F1 {:.2}  RL F1 {:.2}  ({:.0?})",
        100.0 * r.rouge1.recall,
        100.0 * r.rouge1.f1,
        100.0 * r.rouge2.f1,
        100.0 * r.rouge_l.f1,
        start.elapsed()
    );
    Ok(())
}

fn main() -> hiersumm::Result<()> {
    let docs = toy_documents(&ToyCorpus {
        lexicon: env("LEXICON", 400),
        ..ToyCorpus::abstracts(env("DOCS", 10_010), 5)
    });
    let mut examples = interleave(&docs, &SynthConfig::hard(5))?.examples;
    examples.truncate(2000);
    let test = examples.split_off(examples.len() - 100);
    println!("{} training examples, {} held out", examples.len(), test.len());
    let steps = env("STEPS", 1000);

    let sorted: Vec<InterleavedExample> = examples.iter().map(InterleavedExample::disentangled).collect();
    let sorted_test: Vec<InterleavedExample> = test.iter().map(InterleavedExample::disentangled).collect();
    run("disentangled", &sorted, &sorted_test, steps)?;
    run("entangled", &examples, &test, steps)?;
    Ok(())
}
