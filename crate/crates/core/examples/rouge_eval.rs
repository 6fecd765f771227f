//! Scores candidate summaries against references with ROUGE-1, ROUGE-2 and
//! ROUGE-L, with length and thread-count statistics.
//!
//! cargo run --release --example rouge_eval

use hiersumm::rougemetrics::{rouge_l, rouge_n, MetricsReport, DEFAULT_WORD_LIMIT};
use hiersumm::textproc::tokenize;

fn main() -> hiersumm::Result<()> {
    let c = tokenize("the cat sat");
    let r = tokenize("the cat sat on the mat");
    for (name, s) in [("ROUGE-1", rouge_n(&c, &r, 1)), ("ROUGE-2", rouge_n(&c, &r, 2)), ("ROUGE-L", rouge_l(&c, &r))] {
        println!("{name}  p {:.4}  r {:.4}  f1 {:.4}", s.precision, s.recall, s.f1);
    }

    let lines = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let generated = vec![
        lines(&["the storm closed the port .", "prices rose again ."]),
        lines(&["a new bridge opened ."]),
    ];
    let references = vec![
        lines(&["a storm closed the harbor .", "fuel prices rose ."]),
        lines(&["the city opened a new bridge .", "traffic fell ."]),
    ];
    let report = MetricsReport::compute(&generated, &references, DEFAULT_WORD_LIMIT)?;
    println!("\n{report}");
    Ok(())
}
