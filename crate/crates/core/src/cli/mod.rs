//! The `hiersumm` command line: synth, train, finetune, summarize, eval,
//! baseline.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 numeric failure during training.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline2step::{two_step_summarize, BaselineConfig};
use crate::corpusforge::{corpus_stats, interleave, load_corpus, load_dataset, InterleavedExample, SynthConfig};
use crate::error::{Error, Result};
use crate::hiernet::{checkpoint, HierModel};
use crate::io::{read_jsonl, write_atomic, write_jsonl};
use crate::rougemetrics::{limit_words, MetricsReport, DEFAULT_WORD_LIMIT};
use crate::textproc::TextCodec;
use crate::trainer::{encode_dataset, finetune, parse_freeze_spec, train, LogRecord};

pub use config::{RunConfig, KEYS};

#[derive(Debug, Parser)]
#[command(name = "hiersumm", version, about = "Summarize interleaved multi-thread texts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build interleaved train/eval/test sets from a document corpus.
    Synth(SynthArgs),
    /// Train a model from scratch.
    Train(TrainArgs),
    /// Continue training a checkpoint with frozen parameter groups.
    Finetune(FinetuneArgs),
    /// Generate summaries with a trained checkpoint.
    Summarize(SummarizeArgs),
    /// Score generated summaries against references.
    Eval(EvalArgs),
    /// Summarize with the cluster-then-extract baseline.
    Baseline(BaselineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// a=2, b=5, m=2, n=5
    Hard,
    /// a=8, b=12; needs --min-posts and --max-posts
    AmiLike,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSONL corpus of {"id", "summary", "sentences"} records.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "hard")]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for train.jsonl, eval.jsonl and test.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the preset's minimum posts per thread.
    #[arg(long)]
    pub min_posts: Option<usize>,
    /// Override the preset's maximum posts per thread.
    #[arg(long)]
    pub max_posts: Option<usize>,
    /// Train:eval:test proportions.
    #[arg(long, default_value = "170:4:4")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set max_steps=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Training log (JSONL); defaults to `<out>.log.jsonl`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory (train.jsonl, optional eval.jsonl) or a JSONL file.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// `default`, `none`, or a comma-separated list of groups
    /// (embed, enc_word, enc_post, dec_thread, dec_word, attn_gamma,
    /// attn_beta, attn_alpha, stop, thread_rep).
    #[arg(long, default_value = "default")]
    pub freeze: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// JSONL with a "posts" list per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WORD_LIMIT)]
    pub word_limit: usize,
    /// Channels decoded together.
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL with a "summary" list per line.
    #[arg(long)]
    pub generated: PathBuf,
    /// JSONL with a "summary" list per line, aligned with --generated.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WORD_LIMIT)]
    pub word_limit: usize,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// JSONL with a "posts" list per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Cosine similarity needed to join a cluster.
    #[arg(long, default_value_t = crate::baseline2step::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub max_clusters: usize,
    #[arg(long, default_value_t = DEFAULT_WORD_LIMIT)]
    pub word_limit: usize,
}

#[derive(Debug, Deserialize)]
struct PostsRecord {
    posts: Vec<String>,
}

/// One line of summarize, baseline and reference files.
#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary: Vec<String>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Diagnostics go to stderr, reports to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let keys = format!("Config keys and defaults:\n{}", RunConfig::default().to_text());
    let command = Cli::command()
        .mut_subcommand("train", |c| c.after_help(keys.clone()))
        .mut_subcommand("finetune", |c| c.after_help(keys.clone()));
    let parsed = command
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Finetune(a) => finetune_cmd(a, out),
        Command::Summarize(a) => summarize(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Baseline(a) => baseline(a, out),
    }
}

fn parse_split(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| Error::Config(format!("bad split {s:?}"))))
        .collect::<Result<_>>()?;
    match parts[..] {
        [a, b, c] if a > 0 && a + b + c > 0 => Ok([a, b, c]),
        _ => Err(Error::Config(format!("split must be three counts like 170:4:4, got {s:?}"))),
    }
}

/// Sizes of train/eval/test for `n` examples. Eval and test get at least
/// one example each when their ratio is nonzero and `n >= 3`.
pub fn split_sizes(n: usize, ratio: [usize; 3]) -> [usize; 3] {
    let total: usize = ratio.iter().sum();
    let part = |r: usize| {
        if r == 0 {
            0
        } else {
            let k = (n * r + total / 2) / total;
            if n >= 3 {
                k.max(1)
            } else {
                k
            }
        }
    };
    let (e, t) = (part(ratio[1]), part(ratio[2]));
    let e = e.min(n);
    let t = t.min(n - e);
    [n - e - t, e, t]
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = match a.preset {
        Preset::Hard => SynthConfig::hard(a.seed),
        Preset::AmiLike => {
            let (Some(m), Some(n)) = (a.min_posts, a.max_posts) else {
                return Err(Error::Config("--preset ami-like needs --min-posts and --max-posts".into()));
            };
            SynthConfig::ami_like(m, n, a.seed)
        }
    };
    if let Some(m) = a.min_posts {
        cfg.min_posts = m;
    }
    if let Some(n) = a.max_posts {
        cfg.max_posts = n;
    }
    cfg.validate()?;
    let ratio = parse_split(&a.split)?;
    let corpus = load_corpus(&a.corpus)?;
    let synthesis = interleave(&corpus, &cfg)?;
    let examples = synthesis.examples;
    if examples.is_empty() {
        return Err(Error::Data(format!(
            "corpus of {} documents produced no examples",
            corpus.len()
        )));
    }
    let [tr, ev, _] = split_sizes(examples.len(), ratio);
    std::fs::create_dir_all(&a.out)?;
    write_jsonl(&a.out.join("train.jsonl"), &examples[..tr])?;
    write_jsonl(&a.out.join("eval.jsonl"), &examples[tr..tr + ev])?;
    write_jsonl(&a.out.join("test.jsonl"), &examples[tr + ev..])?;
    writeln!(
        out,
        "{} examples ({} train, {} eval, {} test), {} windows skipped",
        examples.len(),
        tr,
        ev,
        examples.len() - tr - ev,
        synthesis.skipped_windows.len()
    )?;
    write!(out, "{}", corpus_stats(&examples))?;
    Ok(())
}

fn dataset_files(data: &Path) -> (PathBuf, Option<PathBuf>) {
    if data.is_dir() {
        let eval = data.join("eval.jsonl");
        (data.join("train.jsonl"), eval.exists().then_some(eval))
    } else {
        (data.to_path_buf(), None)
    }
}

fn load_run_config(args: &ModelArgs, base: RunConfig) -> Result<RunConfig> {
    let mut cfg = base;
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(&args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn log_path(args: &ModelArgs, out: &Path) -> PathBuf {
    args.log.clone().unwrap_or_else(|| {
        let mut name = out.as_os_str().to_os_string();
        name.push(".log.jsonl");
        PathBuf::from(name)
    })
}

fn load_split(data: &Path) -> Result<(Vec<InterleavedExample>, Vec<InterleavedExample>)> {
    let (train_file, eval_file) = dataset_files(data);
    let train = load_dataset(&train_file)?;
    if train.is_empty() {
        return Err(Error::Data(format!("{} has no examples", train_file.display())));
    }
    let eval = match eval_file {
        Some(f) => load_dataset(&f)?,
        None => Vec::new(),
    };
    Ok((train, eval))
}

fn texts(data: &[InterleavedExample]) -> Vec<&str> {
    data.iter()
        .flat_map(|e| e.posts.iter().chain(&e.summary))
        .map(String::as_str)
        .collect()
}

fn fit(model: &mut HierModel, cfg: &RunConfig, data: &Path, frozen: Option<&str>, log: &Path, out: &mut dyn Write) -> Result<()> {
    let (train_set, eval_set) = load_split(data)?;
    let train_enc = encode_dataset(&train_set, &model.codec, &model.config)?;
    let eval_enc = encode_dataset(&eval_set, &model.codec, &model.config)?;
    let mut records: Vec<LogRecord> = Vec::new();
    let report = match frozen {
        None => train(&mut model.params, &model.config, &train_enc, &eval_enc, &cfg.train, |r| {
            records.push(r.clone())
        }),
        Some(spec) => {
            let set = parse_freeze_spec(spec)?;
            finetune(&mut model.params, &model.config, &train_enc, &eval_enc, &cfg.train, set, |r| {
                records.push(r.clone())
            })
        }
    };
    write_jsonl(log, &records)?;
    let report = report?;
    if let Some(last) = report.records.last() {
        writeln!(out, "{}", serde_json::to_string(last)?)?;
    }
    Ok(())
}

fn train_cmd(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_run_config(&a.model, RunConfig::default())?;
    let (train_file, _) = dataset_files(&a.data);
    let train_set = load_dataset(&train_file)?;
    if train_set.is_empty() {
        return Err(Error::Data(format!("{} has no examples", train_file.display())));
    }
    let codec = TextCodec::learn(&texts(&train_set), cfg.segmentation, cfg.max_vocab, cfg.bpe_merges)?;
    let mut model_cfg = cfg.model.clone();
    model_cfg.vocab_size = codec.vocab.len();
    let mut model = HierModel::new(model_cfg, codec, cfg.train.seed)?;
    fit(&mut model, &cfg, &a.data, None, &log_path(&a.model, &a.out), out)?;
    checkpoint::save(&model, &a.out)
}

fn finetune_cmd(a: &FinetuneArgs, out: &mut dyn Write) -> Result<()> {
    let mut model = checkpoint::load(&a.ckpt)?;
    let base = RunConfig {
        model: model.config.clone(),
        ..RunConfig::default()
    };
    let cfg = load_run_config(&a.model, base)?;
    let mut expected = model.config.clone();
    expected.dropout = cfg.model.dropout;
    if cfg.model != expected {
        return Err(Error::Config("only dropout among the model keys can change when fine-tuning".into()));
    }
    model.config.dropout = cfg.model.dropout;
    fit(&mut model, &cfg, &a.data, Some(&a.freeze), &log_path(&a.model, &a.out), out)?;
    checkpoint::save(&model, &a.out)
}

fn summarize(a: &SummarizeArgs, out: &mut dyn Write) -> Result<()> {
    let model = checkpoint::load(&a.ckpt)?;
    let inputs: Vec<PostsRecord> = read_jsonl(&a.input)?;
    let mut records = Vec::with_capacity(inputs.len());
    let channels: Vec<Vec<String>> = inputs.into_iter().map(|r| r.posts).collect();
    for chunk in channels.chunks(a.batch_size.max(1)) {
        for summary in model.summarize_many(chunk)? {
            records.push(SummaryRecord {
                summary: limit_words(summary, a.word_limit),
            });
        }
    }
    write_jsonl(&a.out, &records)?;
    writeln!(out, "{} summaries written to {}", records.len(), a.out.display())?;
    Ok(())
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let gen: Vec<SummaryRecord> = read_jsonl(&a.generated)?;
    let refs: Vec<SummaryRecord> = read_jsonl(&a.reference)?;
    let gen: Vec<Vec<String>> = gen.into_iter().map(|r| r.summary).collect();
    let refs: Vec<Vec<String>> = refs.into_iter().map(|r| r.summary).collect();
    let report = MetricsReport::compute(&gen, &refs, a.word_limit)?;
    let json = serde_json::to_string(&report)?;
    if let Some(path) = &a.report {
        write_atomic(path, format!("{json}\n").as_bytes())?;
    }
    writeln!(out, "{json}")?;
    write!(out, "{report}")?;
    Ok(())
}

fn baseline(a: &BaselineArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = BaselineConfig {
        threshold: a.threshold,
        max_clusters: a.max_clusters,
        word_limit: a.word_limit,
    };
    let inputs: Vec<PostsRecord> = read_jsonl(&a.input)?;
    let records = inputs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            two_step_summarize(&r.posts, &cfg)
                .map(|summary| SummaryRecord { summary })
                .map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(&a.out, &records)?;
    writeln!(out, "{} summaries written to {}", records.len(), a.out.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_keeps_every_part_nonempty() {
        assert_eq!(split_sizes(178, [170, 4, 4]), [170, 4, 4]);
        assert_eq!(split_sizes(64, [170, 4, 4]), [62, 1, 1]);
        assert_eq!(split_sizes(3, [170, 4, 4]), [1, 1, 1]);
        assert_eq!(split_sizes(2, [170, 4, 4]), [2, 0, 0]);
        assert_eq!(split_sizes(10, [1, 1, 0]), [5, 5, 0]);
        assert!(parse_split("1:2").is_err());
    }

    #[test]
    fn help_and_usage_exit_codes() {
        assert_eq!(run(["hiersumm", "--help"]), 0);
        assert_eq!(run(["hiersumm", "synth", "--help"]), 0);
        assert_eq!(run(["hiersumm", "frobnicate"]), 1);
        assert_eq!(run(["hiersumm", "eval", "--generated", "x"]), 1);
    }
}
