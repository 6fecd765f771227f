//! Overfits the model on 32 tiny interleaved examples and decodes them back.
//!
//! cargo run --release --example train_overfit

use std::time::Instant;

use hiersumm::corpusforge::toy::{toy_documents, ToyCorpus};
use hiersumm::corpusforge::{interleave, SynthConfig};
use hiersumm::hiernet::{HierModel, ModelConfig};
use hiersumm::rougemetrics::corpus_rouge;
use hiersumm::textproc::{Segmentation, TextCodec};
use hiersumm::trainer::{encode_dataset, train, TrainConfig};

fn main() -> hiersumm::Result<()> {
    let synth = SynthConfig::new(2, 2, 2, 2, 7);
    let docs = toy_documents(&ToyCorpus::micro(80, 7));
    let mut examples = interleave(&docs, &synth)?.examples;
    examples.truncate(32);
    println!("{} examples", examples.len());

    let texts: Vec<&str> = examples
        .iter()
        .flat_map(|e| e.posts.iter().chain(&e.summary))
        .map(String::as_str)
        .collect();
    let codec = TextCodec::learn(&texts, Segmentation::Word, 8000, 0)?;
    let cfg = ModelConfig {
        dropout: 0.0,
        ..ModelConfig::with_dim(codec.vocab.len(), 16)
    }
    .fit_to(&synth);
    println!("vocabulary {}", codec.vocab.len());
    let mut model = HierModel::new(cfg, codec, 1)?;

    let data = encode_dataset(&examples, &model.codec, &model.config)?;
    let tc = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 32,
        max_steps: 2000,
        eval_every: 100,
        seed: 3,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let report = train(&mut model.params, &model.config, &data, &[], &tc, |r| {
        println!("step {:>5}  loss {:.4}  word {:.4}  stop {:.4}", r.step, r.train_loss, r.word_nll, r.stop_loss)
    })?;
    let losses = report.losses();
    println!(
        "loss {:.4} -> {:.4} in {:.1?}",
        losses[0],
        losses[losses.len() - 1],
        start.elapsed()
    );

    let channels: Vec<Vec<String>> = examples.iter().map(|e| e.posts.clone()).collect();
    let generated = model.summarize_many(&channels)?;
    let exact = generated
        .iter()
        .zip(&examples)
        .filter(|(g, e)| g.len() == e.summary.len())
        .count();
    let pairs: Vec<_> = generated.iter().cloned().zip(examples.iter().map(|e| e.summary.clone())).collect();
    let rouge = corpus_rouge(&pairs, 300)?;
    println!("ROUGE-1 F1 {:.3}, thread count exact on {exact}/{}", rouge.rouge1.f1, examples.len());
    for (g, e) in generated.iter().zip(&examples).take(3) {
        println!("gold: {:?}\n  got: {:?}", e.summary, g);
    }
    Ok(())
}
