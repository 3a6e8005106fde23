use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use attitude_core::annotate::synthetic::{DocSpec, VocabSpec};
use attitude_core::config::{RunConfig, TrainingMode};
use attitude_core::pipeline;

/// Sentiment attitude extraction: training, evaluation, distant-supervision
/// annotation and attention analysis.
#[derive(Parser, Debug)]
#[command(name = "attitude", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model; writes model.ckpt and train.log into the output directory.
    Train(RunArgs),
    /// Score a checkpoint (or train and score per fold when none is given).
    Eval(RunArgs),
    /// Label a news collection by distant supervision.
    Annotate(RunArgs),
    /// Attention-weight analysis of a checkpoint.
    Analyze(RunArgs),
    /// Write a synthetic corpus, news collection and resources.
    GenSynthetic(GenArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory (overrides paths.out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's training mode.
    #[arg(long, value_parser = ["sl", "ds"])]
    mode: Option<String>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of labeled documents (and of news documents).
    #[arg(long, default_value_t = 200)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
    /// Word vector dimension.
    #[arg(long, default_value_t = 32)]
    d_word: usize,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = mode.parse::<TrainingMode>()?;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &RunConfig) -> Result<PathBuf> {
        match (&self.out, cfg.path(|p| &p.out_dir)) {
            (Some(out), _) => Ok(out.clone()),
            (None, Some(dir)) => Ok(dir),
            (None, None) => bail!("no output directory: pass --out or set paths.out_dir"),
        }
    }

    fn checkpoint(&self) -> Result<&Path> {
        match &self.checkpoint {
            Some(p) => Ok(p),
            None => bail!("--checkpoint is required"),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.load()?;
            let out = args.out_dir(&cfg)?;
            let run = pipeline::run_train(&cfg, &out)?;
            println!(
                "trained {} for {} epochs (stopped early: {})",
                cfg.encoder.kind, run.outcome.epochs_run, run.outcome.stopped_early
            );
            if let Some(last) = run.outcome.log.iter().rev().find(|r| r.split == "train") {
                println!("train F1 {:.4} at epoch {}", last.f1, last.epoch);
            }
            println!("checkpoint: {}", run.checkpoint.display());
            println!("log: {}", run.log.display());
        }
        Command::Eval(args) => {
            let cfg = args.load()?;
            let report = pipeline::run_eval(&cfg, args.checkpoint.as_deref())?;
            if let Ok(out) = args.out_dir(&cfg) {
                pipeline::write_eval(&report, &out)?;
            }
            println!("{report}");
        }
        Command::Annotate(args) => {
            let cfg = args.load()?;
            let output = match (&args.out, cfg.path(|p| &p.ds_corpus)) {
                (Some(dir), _) => dir.join("ds_corpus.jsonl"),
                (None, Some(path)) => path,
                (None, None) => bail!("no output: pass --out or set paths.ds_corpus"),
            };
            let report = pipeline::run_annotate(&cfg, &output)?;
            println!("{report}");
            println!("output: {}", output.display());
        }
        Command::Analyze(args) => {
            let cfg = args.load()?;
            let out = args.out_dir(&cfg)?;
            let report = pipeline::run_analyze(&cfg, args.checkpoint()?, &out)?;
            println!("{report}");
        }
        Command::GenSynthetic(args) => {
            let vocab = VocabSpec { d_word: args.d_word, ..VocabSpec::default() };
            let files = pipeline::generate_synthetic(args.seed, args.size, &vocab, &DocSpec::default(), &args.out)?;
            println!("corpus: {}", files.corpus.display());
            println!("news: {}", files.news.display());
            println!("news gold: {}", files.news_gold.display());
            println!("config: {}", files.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Core errors already embed their I/O cause in the message.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
