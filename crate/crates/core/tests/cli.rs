use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hiersumm::cli::run;
use hiersumm::corpusforge::toy::{toy_documents, ToyCorpus};
use hiersumm::io::write_jsonl;

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("hiersumm").chain(list.iter().copied()).map(String::from).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_corpus(dir: &Path, cfg: &ToyCorpus) -> std::path::PathBuf {
    let file = dir.join("corpus.jsonl");
    write_jsonl(&file, &toy_documents(cfg)).unwrap();
    file
}

#[test]
fn synth_is_byte_identical_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &ToyCorpus::abstracts(60, 1));
    for out in ["a", "b"] {
        let out = dir.path().join(out);
        assert_eq!(run(args(&["synth", "--corpus", path(&corpus), "--seed", "9", "--out", path(&out)])), 0);
    }
    for file in ["train.jsonl", "eval.jsonl", "test.jsonl"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn eval_of_identical_files_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ref.jsonl");
    std::fs::write(
        &file,
        "{\"summary\":[\"the cat sat .\",\"dogs bark\"]}\n{\"summary\":[\"one line\"]}\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let code = run(args(&[
        "eval",
        "--generated",
        path(&file),
        "--reference",
        path(&file),
        "--report",
        path(&report),
    ]));
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    for key in ["rouge1", "rouge2", "rougeL"] {
        assert_eq!(json[key]["f1"], 1.0, "{key}");
    }
}

#[test]
fn binary_reports_errors_through_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_hiersumm");
    let dir = tempfile::tempdir().unwrap();
    let status = |argv: &[&str]| Command::new(bin).args(argv).output().unwrap().status.code().unwrap();

    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&["summarize", "--help"]), 0);
    assert_eq!(status(&["train"]), 1);

    let missing = dir.path().join("missing.jsonl");
    let out = dir.path().join("o.jsonl");
    assert_eq!(status(&["baseline", "--input", path(&missing), "--out", path(&out)]), 2);
    assert!(!out.exists());

    let corpus = write_corpus(dir.path(), &ToyCorpus::micro(20, 2));
    let d = dir.path().join("d");
    assert_eq!(status(&["synth", "--corpus", path(&corpus), "--preset", "ami-like", "--out", path(&d)]), 1);

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "hidden = 8\nwidth = 3\n").unwrap();
    assert_eq!(status(&["synth", "--corpus", path(&corpus), "--out", path(&d)]), 0);
    let ckpt = dir.path().join("m.ckpt");
    assert_eq!(status(&["train", "--data", path(&d), "--config", path(&cfg), "--out", path(&ckpt)]), 1);

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"posts\":[\"a b\"]}\nnot json\n").unwrap();
    let output = Command::new(bin)
        .args(["baseline", "--input", path(&bad), "--out", path(&out)])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains(":2:"));

    std::fs::write(&cfg, "dim = 4\nmax_steps = 2\nlearning_rate = 1e200\nclip_norm = 1e300\n").unwrap();
    let code = status(&["train", "--data", path(&d), "--config", path(&cfg), "--out", path(&ckpt)]);
    assert_eq!(code, 3);
    assert!(!ckpt.exists());
}

#[test]
fn micro_pipeline_runs_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &ToyCorpus::micro(330, 3));
    let data = dir.path().join("data");
    assert_eq!(run(args(&["synth", "--corpus", path(&corpus), "--seed", "1", "--out", path(&data)])), 0);
    let train = hiersumm::corpusforge::load_dataset(&data.join("train.jsonl")).unwrap();
    assert!(train.len() >= 60, "{}", train.len());

    let cfg = dir.path().join("micro.cfg");
    std::fs::write(
        &cfg,
        "dim = 16\nbatch_size = 8\nmax_steps = 2000\nlearning_rate = 0.003\ndropout = 0\neval_every = 500\n",
    )
    .unwrap();
    let ckpt = dir.path().join("model.ckpt");
    assert_eq!(run(args(&["train", "--data", path(&data), "--config", path(&cfg), "--out", path(&ckpt)])), 0);
    let log = std::fs::read_to_string(dir.path().join("model.ckpt.log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 4);

    let tuned = dir.path().join("tuned.ckpt");
    assert_eq!(
        run(args(&[
            "finetune",
            "--ckpt",
            path(&ckpt),
            "--data",
            path(&data),
            "--set",
            "max_steps=5",
            "--out",
            path(&tuned)
        ])),
        0
    );

    let test = data.join("test.jsonl");
    let gen = dir.path().join("gen.jsonl");
    assert_eq!(run(args(&["summarize", "--ckpt", path(&tuned), "--input", path(&test), "--out", path(&gen)])), 0);
    let base = dir.path().join("base.jsonl");
    assert_eq!(run(args(&["baseline", "--input", path(&test), "--out", path(&base)])), 0);
    for file in [&gen, &base] {
        assert_eq!(run(args(&["eval", "--generated", path(file), "--reference", path(&test)])), 0);
    }
    assert!(start.elapsed().as_secs() < 15 * 60);
}
