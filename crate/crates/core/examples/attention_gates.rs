//! Runs one thread-decoder step on a random channel and prints the post
//! gates, the word gates and the renormalized word attention.
//!
//! cargo run --release --example attention_gates

use hiersumm::hiernet::{
    decode_sentence, encode_channel, thread_step, AttentionKeys, ChannelBatch, DecodeMode, ModelConfig, Parameters,
    ThreadState,
};
use hiersumm::ndgrad::Graph;

fn main() -> hiersumm::Result<()> {
    let cfg = ModelConfig {
        dropout: 0.0,
        init_std: 0.5,
        ..ModelConfig::with_dim(30, 8)
    };
    let params = Parameters::init(&cfg, 4)?;
    let input = ChannelBatch::from_ids(&[vec![vec![4, 5, 6], vec![7, 8], vec![9, 10, 11]]])?;

    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    let enc = encode_channel(&mut g, &p, &cfg, &input)?;
    let keys = AttentionKeys::new(&mut g, &p, &cfg, &enc)?;
    let state = ThreadState::initial(&mut g, &p, 1)?;
    let step = thread_step(&mut g, &p, &cfg, &enc, &keys, state)?;
    let att = step.attention;

    let show = |name: &str, v: &[f64]| {
        let cells: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
        println!("{name:<9} {}", cells.join(" "));
    };
    show("gamma", g.value(att.gamma).data());
    show("beta", g.value(att.beta).data());
    show("beta_hat", g.value(att.beta_hat).data());
    println!("stop     {:.3}", g.value(step.stop_prob).item());

    let decoded = decode_sentence(&mut g, &p, &cfg, &enc, &keys, step.thread_rep, att.beta_hat, DecodeMode::Greedy)?;
    let alpha = g.value(decoded.alpha_hat[0]).data();
    show("alpha", alpha);
    println!("alpha sums to {:.6}; padded slots get zero", alpha.iter().sum::<f64>());
    println!("greedy tokens {:?}", decoded.tokens[0]);
    Ok(())
}
