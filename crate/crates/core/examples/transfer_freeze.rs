//! Pretrains on one toy domain, saves a checkpoint, then finetunes on another
//! domain with the encoders, thread decoder, stop head and embeddings frozen.
//!
//! cargo run --release --example transfer_freeze

use hiersumm::corpusforge::toy::{toy_documents, ToyCorpus};
use hiersumm::corpusforge::{interleave, SynthConfig};
use hiersumm::hiernet::{checkpoint, HierModel, ModelConfig, ParamGroup};
use hiersumm::textproc::{Segmentation, TextCodec};
use hiersumm::trainer::{encode_dataset, finetune, train, TrainConfig};

fn main() -> hiersumm::Result<()> {
    let synth = SynthConfig::new(2, 3, 2, 3, 5);
    let source = interleave(&toy_documents(&ToyCorpus::micro(300, 1)), &synth)?.examples;
    let target = interleave(&toy_documents(&ToyCorpus::micro(100, 2)), &synth)?.examples;

    let texts: Vec<&str> = source
        .iter()
        .chain(&target)
        .flat_map(|e| e.posts.iter().chain(&e.summary))
        .map(String::as_str)
        .collect();
    let codec = TextCodec::learn(&texts, Segmentation::Bpe, 8000, 300)?;
    let cfg = ModelConfig::with_dim(codec.vocab.len(), 16).fit_to(&synth);
    let mut model = HierModel::new(cfg, codec, 1)?;

    let tc = TrainConfig {
        learning_rate: 3e-3,
        batch_size: 16,
        max_steps: 200,
        eval_every: 50,
        ..TrainConfig::default()
    };
    let data = encode_dataset(&source, &model.codec, &model.config)?;
    train(&mut model.params, &model.config, &data, &[], &tc, |r| {
        println!("pretrain step {:>4}  loss {:.4}", r.step, r.train_loss)
    })?;

    let dir = tempfile::tempdir().map_err(|e| hiersumm::Error::Data(e.to_string()))?;
    let path = dir.path().join("pretrained.ckpt");
    checkpoint::save(&model, &path)?;
    let pretrained = checkpoint::load(&path)?;
    let mut tuned = pretrained.clone();

    let frozen = ParamGroup::default_frozen();
    let data = encode_dataset(&target, &tuned.codec, &tuned.config)?;
    let tc = TrainConfig { max_steps: 50, ..tc };
    finetune(&mut tuned.params, &tuned.config, &data, &[], &tc, frozen.clone(), |r| {
        println!("finetune step {:>4}  loss {:.4}", r.step, r.train_loss)
    })?;

    for group in ParamGroup::ALL {
        let changed = pretrained
            .params
            .entries()
            .iter()
            .zip(tuned.params.entries())
            .filter(|(a, _)| a.group == group)
            .any(|(a, b)| a.tensor != b.tensor);
        let state = if frozen.contains(&group) { "frozen " } else { "trained" };
        println!("{state} {group:<12} changed: {changed}");
    }
    Ok(())
}
