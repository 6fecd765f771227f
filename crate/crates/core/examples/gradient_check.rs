//! Finite-difference check of the full training loss on a tiny model:
//! two channels of two threads, two posts each, four words per post.
//!
//! cargo run --release --example gradient_check

use hiersumm::hiernet::{ModelConfig, Parameters};
use hiersumm::ndgrad::{grad_check, GradCheckOptions};
use hiersumm::trainer::{loss_graph, Batch, EncodedExample};

fn main() -> hiersumm::Result<()> {
    let cfg = ModelConfig {
        dropout: 0.0,
        ..ModelConfig::with_dim(20, 8)
    };
    let params = Parameters::init(&cfg, 7)?;
    let examples = vec![
        EncodedExample {
            posts: vec![vec![4, 5, 6, 7], vec![10, 11, 12, 4], vec![8, 9, 6, 5], vec![13, 14, 15, 16]],
            summary: vec![vec![4, 8], vec![10, 13, 3]],
        },
        EncodedExample {
            posts: vec![vec![17, 18, 7, 6], vec![5, 19, 6, 11], vec![18, 4, 4, 9], vec![7, 12, 13, 19]],
            summary: vec![vec![17, 5], vec![19]],
        },
    ];
    let batch = Batch::new(&examples, vec![0, 1])?;
    let opts = GradCheckOptions {
        step: 1e-3,
        tolerance: 1e-3,
        ..GradCheckOptions::default()
    };
    let report = grad_check(
        |g, vars| {
            let p = params.bound_from(vars.to_vec())?;
            Ok(loss_graph(g, &p, &cfg, &batch, 1.0)?.total)
        },
        &params.named_tensors(),
        &opts,
    )?;
    println!(
        "{} entries checked, max relative error {:.2e} at {:?}: {}",
        report.checked,
        report.max_rel_err,
        report.worst_parameter,
        if report.passed { "ok" } else { "FAILED" }
    );
    Ok(())
}
