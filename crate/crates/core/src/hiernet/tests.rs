use super::*;
use crate::ndgrad::{Graph, Tensor, Var};
use crate::textproc::{Segmentation, TextCodec};

fn micro(vocab: usize) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab,
        embed_dim: 5,
        hidden: 4,
        attn_dim: 3,
        dropout: 0.0,
        ..ModelConfig::default()
    }
}

fn channel() -> Vec<Vec<usize>> {
    vec![vec![4, 5, 6], vec![7, 8], vec![9, 10, 11, 5], vec![6]]
}

fn values(g: &Graph, v: Var) -> Vec<f64> {
    g.value(v).data().to_vec()
}

fn encode(params: &Parameters, cfg: &ModelConfig, batch: &ChannelBatch) -> (Graph, ChannelEncoding) {
    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    let enc = encode_channel(&mut g, &p, cfg, batch).unwrap();
    (g, enc)
}

#[test]
fn encoder_shapes_at_full_size() {
    let cfg = ModelConfig::with_dim(40, 100);
    let params = Parameters::init(&cfg, 3).unwrap();
    let posts: Vec<Vec<usize>> = (0..25).map(|i| (0..20).map(|j| 4 + (i * 7 + j) % 36).collect()).collect();
    let batch = ChannelBatch::from_ids(&[posts]).unwrap();
    let (g, enc) = encode(&params, &cfg, &batch);
    assert_eq!(g.shape(enc.w), [1, 25, 20, 200]);
    assert_eq!(g.shape(enc.p), [1, 25, 200]);
}

#[test]
fn duplicate_posts_share_word_states() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 1).unwrap();
    let mut posts = channel();
    posts.push(posts[0].clone());
    let batch = ChannelBatch::from_ids(&[posts]).unwrap();
    let (g, enc) = encode(&params, &cfg, &batch);
    let w = values(&g, enc.w);
    let row = batch.words * 2 * cfg.hidden;
    assert_eq!(w[..row], w[4 * row..5 * row]);
}

#[test]
fn padding_ids_do_not_change_anything() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 2).unwrap();
    let batch = ChannelBatch::from_ids(&[channel(), vec![vec![4, 4]]]).unwrap();
    let mut noisy = batch.clone();
    for (id, m) in noisy.ids.iter_mut().zip(&batch.word_mask) {
        if *m == 0.0 {
            *id = 11;
        }
    }
    let summaries = vec![vec![vec![4, 5], vec![6]], vec![vec![7]]];
    let run = |b: &ChannelBatch| {
        let mut g = Graph::new(0);
        let p = params.bind(&mut g);
        let enc = encode_channel(&mut g, &p, &cfg, b).unwrap();
        let mut out = values(&g, enc.w);
        out.extend(values(&g, enc.p));
        let fwd = teacher_forward(&mut g, &p, &cfg, b, &summaries).unwrap();
        for s in &fwd.words {
            out.extend(values(&g, s.logits));
        }
        for s in &fwd.stops {
            out.extend(values(&g, s.logits));
        }
        out
    };
    let (a, b) = (run(&batch), run(&noisy));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn masked_encoder_entries_are_zero() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 2).unwrap();
    let batch = ChannelBatch::from_ids(&[channel(), vec![vec![4, 4]]]).unwrap();
    let (g, enc) = encode(&params, &cfg, &batch);
    let d2 = 2 * cfg.hidden;
    for (i, chunk) in values(&g, enc.w).chunks(d2).enumerate() {
        if batch.word_mask[i] == 0.0 {
            assert!(chunk.iter().all(|&x| x == 0.0));
        }
    }
    for (i, chunk) in values(&g, enc.p).chunks(d2).enumerate() {
        if batch.post_mask[i] == 0.0 {
            assert!(chunk.iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn all_padding_post_is_rejected() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 2).unwrap();
    let mut batch = ChannelBatch::from_ids(&[channel()]).unwrap();
    let w = batch.words;
    for j in 0..w {
        batch.word_mask[w + j] = 0.0;
    }
    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    assert!(matches!(
        encode_channel(&mut g, &p, &cfg, &batch),
        Err(crate::Error::Contract(_))
    ));
}

fn first_step(params: &Parameters, cfg: &ModelConfig, batch: &ChannelBatch) -> (Graph, ChannelEncoding, AttentionKeys, ThreadStepOutput) {
    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    let enc = encode_channel(&mut g, &p, cfg, batch).unwrap();
    let keys = AttentionKeys::new(&mut g, &p, cfg, &enc).unwrap();
    let init = ThreadState::initial(&mut g, &p, batch.batch).unwrap();
    let step = thread_step(&mut g, &p, cfg, &enc, &keys, init).unwrap();
    (g, enc, keys, step)
}

#[test]
fn beta_hat_is_beta_times_gamma() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 5).unwrap();
    let batch = ChannelBatch::from_ids(&[channel(), vec![vec![7, 8, 9]]]).unwrap();
    let (g, enc, _, step) = first_step(&params, &cfg, &batch);
    let (n, w) = (enc.posts, enc.words);
    let gamma = values(&g, step.attention.gamma);
    let beta = values(&g, step.attention.beta);
    let beta_hat = values(&g, step.attention.beta_hat);
    for b in 0..2 {
        for i in 0..n {
            let gm = gamma[b * n + i];
            if enc.post_mask[b * n + i] == 1.0 {
                assert!(gm > 0.0 && gm < 1.0);
            } else {
                assert_eq!(gm, 0.0);
            }
            for j in 0..w {
                let at = (b * n + i) * w + j;
                assert!((beta_hat[at] - beta[at] * gm).abs() <= 1e-12);
                if enc.word_mask[at] == 0.0 {
                    assert_eq!(beta_hat[at], 0.0);
                }
            }
        }
    }
    let stop = values(&g, step.stop_prob);
    assert!(stop.iter().all(|&s| s > 0.0 && s < 1.0));
}

#[test]
fn context_is_gate_weighted_word_sum() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 6).unwrap();
    let batch = ChannelBatch::from_ids(&[channel()]).unwrap();
    let (g, enc, _, step) = first_step(&params, &cfg, &batch);
    let d2 = 2 * cfg.hidden;
    let w = values(&g, enc.w);
    let bh = values(&g, step.attention.beta_hat);
    let ctx = values(&g, step.attention.context);
    for k in 0..d2 {
        let expect: f64 = bh.iter().enumerate().map(|(r, &b)| b * w[r * d2 + k]).sum();
        assert!((ctx[k] - expect).abs() < 1e-12);
    }
}

#[test]
fn flat_post_scorer_halves_word_gates() {
    let cfg = micro(12);
    let mut params = Parameters::init(&cfg, 7).unwrap();
    params.get_mut("attn_gamma.score").unwrap().tensor.data_mut().fill(0.0);
    let batch = ChannelBatch::from_ids(&[channel()]).unwrap();
    let (g, _, _, step) = first_step(&params, &cfg, &batch);
    let beta = values(&g, step.attention.beta);
    let beta_hat = values(&g, step.attention.beta_hat);
    for (b, bh) in beta.iter().zip(&beta_hat) {
        assert_eq!(*bh, 0.5 * b);
    }
}

#[test]
fn zero_stop_score_means_continue() {
    let cfg = micro(12);
    let mut params = Parameters::init(&cfg, 8).unwrap();
    params.get_mut("stop.w").unwrap().tensor.data_mut().fill(0.0);
    let batch = ChannelBatch::from_ids(&[channel()]).unwrap();
    let out = generate(&params, &cfg, &batch).unwrap();
    assert_eq!(out[0].stop_probs[0], 0.5);
    assert_eq!(out[0].sentences.len(), cfg.k_max);
}

#[test]
fn stop_head_controls_sentence_count() {
    let cfg = micro(12);
    let mut params = Parameters::init(&cfg, 8).unwrap();
    let batch = ChannelBatch::from_ids(&[channel(), vec![vec![5, 6]]]).unwrap();
    params.get_mut("stop.b").unwrap().tensor.data_mut()[0] = 40.0;
    for gen in generate(&params, &cfg, &batch).unwrap() {
        assert_eq!(gen.sentences.len(), 1);
    }
    params.get_mut("stop.b").unwrap().tensor.data_mut()[0] = -40.0;
    for gen in generate(&params, &cfg, &batch).unwrap() {
        assert_eq!(gen.sentences.len(), cfg.k_max);
    }
}

#[test]
fn greedy_sentences_respect_length_cap() {
    for seed in 0..4 {
        let cfg = micro(12);
        let mut params = Parameters::init(&cfg, seed).unwrap();
        // Push EOS down so that the cap is what ends each sentence.
        params.get_mut("dec_word.out.b").unwrap().tensor.data_mut()[crate::textproc::EOS] = -50.0;
        let batch = ChannelBatch::from_ids(&[channel()]).unwrap();
        let out = generate(&params, &cfg, &batch).unwrap();
        assert!(out[0].sentences.len() <= cfg.k_max);
        for s in &out[0].sentences {
            assert_eq!(s.len(), cfg.q_max);
            assert!(s.iter().all(|&t| t == 1 || (4..12).contains(&t)));
        }
    }
}

#[test]
fn batching_does_not_change_generation() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 9).unwrap();
    let a = vec![vec![4, 5], vec![6, 7, 8]];
    let b = channel();
    let alone = generate(&params, &cfg, &ChannelBatch::from_ids(&[a.clone()]).unwrap()).unwrap();
    let both = generate(&params, &cfg, &ChannelBatch::from_ids(&[b, a]).unwrap()).unwrap();
    assert_eq!(alone[0].sentences, both[1].sentences);
    for (x, y) in alone[0].stop_probs.iter().zip(&both[1].stop_probs) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn word_attention_is_a_distribution() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 10).unwrap();
    let batch = ChannelBatch::from_ids(&[channel(), vec![vec![4]]]).unwrap();
    let (mut g, enc, keys, step) = first_step(&params, &cfg, &batch);
    let p = params.bind(&mut g);
    let out = decode_sentence(
        &mut g,
        &p,
        &cfg,
        &enc,
        &keys,
        step.thread_rep,
        step.attention.beta_hat,
        DecodeMode::Greedy,
    )
    .unwrap();
    let nw = enc.posts * enc.words;
    for a in &out.alpha_hat {
        for (r, row) in values(&g, *a).chunks(nw).enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            for (j, &x) in row.iter().enumerate() {
                if enc.word_mask[r * nw + j] == 0.0 {
                    assert_eq!(x, 0.0);
                }
            }
        }
    }
}

#[test]
fn gate_on_one_post_focuses_word_attention() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 11).unwrap();
    let batch = ChannelBatch::from_ids(&[channel()]).unwrap();
    let (mut g, enc, keys, step) = first_step(&params, &cfg, &batch);
    let p = params.bind(&mut g);
    let (n, w) = (enc.posts, enc.words);
    let target = 2;
    let gate: Vec<f64> = (0..n * w)
        .map(|at| if at / w == target { 0.3 * enc.word_mask[at] } else { 0.0 })
        .collect();
    let beta_hat = g.constant(Tensor::new(vec![1, n * w], gate).unwrap());
    let out = decode_sentence(&mut g, &p, &cfg, &enc, &keys, step.thread_rep, beta_hat, DecodeMode::Greedy).unwrap();
    for a in &out.alpha_hat {
        let row = values(&g, *a);
        let on: f64 = row[target * w..(target + 1) * w].iter().sum();
        assert!((on - 1.0).abs() < 1e-12);
    }
}

#[test]
fn teacher_forward_counts_targets() {
    let cfg = micro(12);
    let params = Parameters::init(&cfg, 12).unwrap();
    let batch = ChannelBatch::from_ids(&[channel(), vec![vec![4, 5]]]).unwrap();
    let summaries = vec![vec![vec![4, 5, 6], vec![7]], vec![vec![8, 9]]];
    let mut g = Graph::new(0);
    let p = params.bind(&mut g);
    let fwd = teacher_forward(&mut g, &p, &cfg, &batch, &summaries).unwrap();
    assert_eq!(fwd.tokens, vec![4 + 2, 3]);
    assert_eq!(fwd.threads, vec![2, 1]);
    assert_eq!(fwd.stops.len(), 2);
    assert_eq!(fwd.stops[0].targets, vec![0.0, 1.0]);
    assert_eq!(fwd.stops[1].active, vec![1.0, 0.0]);
    let active: f64 = fwd.words.iter().flat_map(|s| s.active.iter()).sum();
    assert_eq!(active, 9.0);
    let eos: Vec<usize> = fwd.words.iter().filter(|s| s.active[1] == 1.0).map(|s| s.targets[1]).collect();
    assert_eq!(eos, vec![8, 9, crate::textproc::EOS]);
}

fn tiny_model() -> HierModel {
    let texts = ["the cat sat on the mat .", "a dog ran in the park ."];
    let codec = TextCodec::learn(&texts, Segmentation::Word, 100, 0).unwrap();
    let cfg = micro(codec.vocab.len());
    HierModel::new(cfg, codec, 4).unwrap()
}

#[test]
fn summarize_returns_text_sentences() {
    let model = tiny_model();
    let posts = vec!["the cat sat".to_string(), "".to_string(), "a dog ran .".to_string()];
    let out = model.summarize(&posts).unwrap();
    assert!(!out.is_empty() && out.len() <= model.config.k_max);
    assert!(model.summarize(&[]).is_err());
}

#[test]
fn checkpoint_round_trip() {
    let mut model = tiny_model();
    model.params.set_frozen(ParamGroup::default_frozen());
    let bytes = checkpoint::to_bytes(&model).unwrap();
    let back = checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back.config, model.config);
    assert_eq!(back.codec, model.codec);
    assert_eq!(back.params.frozen(), model.params.frozen());
    for (a, b) in model.params.entries().iter().zip(back.params.entries()) {
        assert_eq!(a.name, b.name);
        for (x, y) in a.tensor.data().iter().zip(b.tensor.data()) {
            assert_eq!(*y, *x as f32 as f64);
        }
    }
    assert_eq!(checkpoint::to_bytes(&back).unwrap(), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    checkpoint::save(&model, &path).unwrap();
    assert_eq!(checkpoint::load(&path).unwrap(), back);
}

#[test]
fn checkpoint_rejects_damage() {
    let model = tiny_model();
    let bytes = checkpoint::to_bytes(&model).unwrap();
    assert!(checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    assert!(checkpoint::from_bytes(b"nope").is_err());

    let mut wrong = model.clone();
    wrong.config.hidden += 1;
    let bytes = checkpoint::to_bytes(&wrong).unwrap();
    assert!(matches!(checkpoint::from_bytes(&bytes), Err(crate::Error::Data(_))));
}
