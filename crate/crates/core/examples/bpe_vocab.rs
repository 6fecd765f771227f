//! Learns byte-pair merges and a vocabulary, then round-trips text through
//! subword ids.
//!
//! cargo run --release --example bpe_vocab

use hiersumm::textproc::{tokenize, BpeModel, Segmentation, TextCodec};

fn main() -> hiersumm::Result<()> {
    let texts = [
        "the lower bound is lower than the lowest estimate .",
        "newer models are newest when renewed .",
        "the widest road is wider than the wide river .",
    ];
    let streams: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let table = BpeModel::word_counts(&streams);
    let bpe = BpeModel::learn(&table, 20)?;
    println!("first merges:");
    for (a, b) in bpe.merges().iter().take(8) {
        println!("  {a} + {b}");
    }

    let codec = TextCodec::learn(&texts, Segmentation::Bpe, 8000, 20)?;
    let unseen = "the newest road is lowest";
    let ids = codec.encode(unseen);
    println!("\nvocabulary {} entries", codec.vocab.len());
    println!("units {:?}", codec.units(unseen));
    println!("ids   {ids:?}");
    println!("back  {:?}", codec.decode(&ids)?);
    Ok(())
}
