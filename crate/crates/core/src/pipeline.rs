//! End-to-end runs driven by a [`RunConfig`]: training, evaluation,
//! annotation, attention analysis and synthetic data generation. The CLI
//! is a thin layer over these functions.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{analyze, AnalysisReport};
use crate::annotate::synthetic::{DocSpec, VocabSpec, World};
use crate::annotate::{annotate_corpus, load_news, write_news, AnnotationReport, PairList};
use crate::config::{EvalFormat, Need, RunConfig, TrainingMode};
use crate::corpus::{load_corpus, save_corpus, Document, Split};
use crate::dataset::{Example, Featurizer};
use crate::encoders::Model;
use crate::error::{Error, Result};
use crate::evaluation::{format_predictions, macro_f1, predict_examples, split_cv3, PairPrediction};
use crate::label::Scale;
use crate::text::embedding::{EmbeddingModel, WordEmbedder};
use crate::text::lexicon::{FrameLexicon, PosTable, SentimentLexicon, TableLemmatizer};
use crate::text::terms::TextProcessor;
use crate::training::{format_log, train_mixed, TrainOutcome};

/// Lexicons, tables and the embedder, loaded once per run.
#[derive(Debug)]
pub struct Resources {
    pub processor: TextProcessor,
    pub embedder: WordEmbedder,
    pub sentiment: SentimentLexicon,
}

impl Resources {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let frames = match cfg.path(|p| &p.frames) {
            Some(p) => FrameLexicon::load(&p)?,
            None => FrameLexicon::default(),
        };
        let sentiment = match cfg.path(|p| &p.sentiment_lexicon) {
            Some(p) => SentimentLexicon::load(&p)?,
            None => SentimentLexicon::default(),
        };
        let embeddings = match cfg.path(|p| &p.embeddings) {
            Some(p) => EmbeddingModel::load(&p)?,
            None => return Err(Error::Config(vec!["paths.embeddings is required".into()])),
        };
        if embeddings.dim() != cfg.encoder.d_word {
            return Err(Error::Config(vec![format!(
                "encoder.d_word is {} but the embedding model has {} dimensions",
                cfg.encoder.d_word,
                embeddings.dim()
            )]));
        }
        let processor = text_processor(cfg, frames)?.with_limits(cfg.encoder.n_max, cfg.text.max_pair_distance);
        Ok(Self { processor, embedder: WordEmbedder::new(embeddings, cfg.seed), sentiment })
    }

    pub fn examples(&self, docs: &[Document], scale: Scale) -> Result<Vec<Example>> {
        Featurizer { processor: &self.processor, embedder: &self.embedder, scale }.examples(docs)
    }
}

/// Frames plus the configured POS table, lemma table and negation token.
fn text_processor(cfg: &RunConfig, frames: FrameLexicon) -> Result<TextProcessor> {
    let pos = match cfg.path(|p| &p.pos_table) {
        Some(p) => PosTable::load(&p)?,
        None => PosTable::default(),
    };
    let mut processor = TextProcessor::new(frames, pos).with_negation(&cfg.text.negation);
    if let Some(p) = cfg.path(|p| &p.lemmas) {
        processor = processor.with_lemmatizer(Box::new(TableLemmatizer::load(&p)?));
    }
    Ok(processor)
}

fn required(cfg: &RunConfig, name: &str, select: impl Fn(&crate::config::PathsConfig) -> &Option<PathBuf>) -> Result<PathBuf> {
    cfg.path(select).ok_or_else(|| Error::Config(vec![format!("paths.{name} is required")]))
}

/// Documents used for gradient steps (those not marked `test`) and the
/// held-out test documents.
pub fn split_fixed(docs: &[Document]) -> (Vec<Document>, Vec<Document>) {
    docs.iter().cloned().partition(|d| d.split != Some(Split::Test))
}

/// The distantly supervised corpus in DS mode, empty in SL mode.
pub fn ds_documents(cfg: &RunConfig) -> Result<Vec<Document>> {
    if cfg.mode != TrainingMode::Ds {
        return Ok(Vec::new());
    }
    let docs = load_corpus(&required(cfg, "ds_corpus", |p| &p.ds_corpus)?)?;
    if docs.is_empty() {
        log::warn!("DS corpus is empty; training proceeds as in SL mode");
    }
    Ok(docs)
}

/// Builds a fresh model and trains it on `train_docs`.
pub fn fit(
    cfg: &RunConfig,
    res: &Resources,
    train_docs: &[Document],
    ds_docs: &[Document],
    heldout_docs: &[Document],
) -> Result<(Model, TrainOutcome)> {
    let scale = cfg.task.scale;
    let train_ex = res.examples(train_docs, scale)?;
    let ds_ex = res.examples(ds_docs, scale)?;
    let held_ex = res.examples(heldout_docs, scale)?;
    log::info!(
        "training {} on {} attitudes ({} contexts)",
        cfg.encoder.kind,
        train_ex.len() + ds_ex.len(),
        train_ex.iter().chain(&ds_ex).map(|e| e.inputs.len()).sum::<usize>()
    );
    let mut model = Model::new(cfg.encoder.clone(), cfg.seed)?;
    let heldout = (!held_ex.is_empty()).then_some(held_ex.as_slice());
    let outcome = train_mixed(&mut model, &train_ex, &ds_ex, heldout, scale, &cfg.training, cfg.seed)?;
    Ok((model, outcome))
}

#[derive(Debug)]
pub struct TrainRun {
    pub model: Model,
    pub outcome: TrainOutcome,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
}

/// Trains on the corpus' training documents (plus the DS corpus in DS
/// mode) and writes `model.ckpt` and `train.log` into `out_dir`.
pub fn run_train(cfg: &RunConfig, out_dir: &Path) -> Result<TrainRun> {
    cfg.validate_for(Need::Train)?;
    let res = Resources::load(cfg)?;
    let corpus = load_corpus(&required(cfg, "corpus", |p| &p.corpus)?)?;
    let (train_docs, test_docs) = split_fixed(&corpus);
    let (model, outcome) = fit(cfg, &res, &train_docs, &ds_documents(cfg)?, &test_docs)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let checkpoint = out_dir.join("model.ckpt");
    model.save(&checkpoint)?;
    let log = out_dir.join("train.log");
    std::fs::write(&log, format_log(&outcome.log)).map_err(|e| Error::io(&log, e))?;
    Ok(TrainRun { model, outcome, checkpoint, log })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub format: EvalFormat,
    /// `(fold name, F1)`; a single `test` entry in the fixed format.
    pub scores: Vec<(String, f64)>,
    #[serde(skip)]
    pub predictions: Vec<PairPrediction>,
}

impl EvalReport {
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().map(|(_, f)| f).sum::<f64>() / self.scores.len() as f64
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, score) in &self.scores {
            writeln!(f, "{name}\tF1\t{score:.6}")?;
        }
        write!(f, "mean\tF1\t{:.6}", self.mean())
    }
}

/// Featurization must follow the checkpoint's dimensions, not the config's.
fn with_model_encoder(cfg: &RunConfig, model: Option<&Model>) -> RunConfig {
    let mut out = cfg.clone();
    if let Some(m) = model {
        out.encoder = m.config().clone();
    }
    out
}

fn check_classes(model: &Model, scale: Scale) -> Result<()> {
    if model.config().classes != scale.class_count() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint has {} classes but the {:?} task needs {}",
            model.config().classes,
            scale,
            scale.class_count()
        )));
    }
    Ok(())
}

/// Scores a checkpoint, or trains and scores when `checkpoint` is `None`.
///
/// Fixed format: the `test` documents. CV-3: each fold is scored in turn;
/// without a checkpoint a model is trained per fold on the other two folds
/// (plus the DS corpus in DS mode).
pub fn run_eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<EvalReport> {
    cfg.validate_for(Need::Eval)?;
    let scale = cfg.task.scale;
    let loaded = checkpoint.map(Model::load).transpose()?;
    if let Some(m) = &loaded {
        check_classes(m, scale)?;
    }
    let res = Resources::load(&with_model_encoder(cfg, loaded.as_ref()))?;
    let corpus = load_corpus(&required(cfg, "corpus", |p| &p.corpus)?)?;
    let mut scores = Vec::new();
    let mut predictions = Vec::new();
    let mut score = |name: String, model: &Model, docs: &[Document]| -> Result<()> {
        let preds = predict_examples(model, &res.examples(docs, scale)?, scale)?;
        scores.push((name, macro_f1(&preds)));
        predictions.extend(preds);
        Ok(())
    };
    match cfg.task.eval_format {
        EvalFormat::Fixed => {
            let (train_docs, test_docs) = split_fixed(&corpus);
            if test_docs.is_empty() {
                return Err(Error::InvalidArgument("fixed evaluation needs documents marked \"split\":\"test\"".into()));
            }
            let model = match loaded {
                Some(m) => m,
                None => fit(cfg, &res, &train_docs, &ds_documents(cfg)?, &[])?.0,
            };
            score("test".into(), &model, &test_docs)?;
        }
        EvalFormat::Cv3 => {
            let folds = split_cv3(&corpus, cfg.seed)?;
            let ds = if loaded.is_none() { ds_documents(cfg)? } else { Vec::new() };
            for (k, fold) in folds.iter().enumerate() {
                let (held, rest): (Vec<Document>, Vec<Document>) =
                    corpus.iter().cloned().partition(|d| fold.doc_ids.contains(&d.doc_id));
                match &loaded {
                    Some(m) => score(format!("fold{}", k + 1), m, &held)?,
                    None => {
                        let (m, _) = fit(cfg, &res, &rest, &ds, &[])?;
                        score(format!("fold{}", k + 1), &m, &held)?;
                    }
                }
            }
        }
    }
    Ok(EvalReport { format: cfg.task.eval_format, scores, predictions })
}

pub fn write_eval(report: &EvalReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("eval.txt");
    std::fs::write(&path, format!("{report}\n")).map_err(|e| Error::io(&path, e))?;
    let path = out_dir.join("predictions.tsv");
    std::fs::write(&path, format_predictions(&report.predictions)).map_err(|e| Error::io(&path, e))
}

/// Annotates the configured news collection and writes the DS corpus to
/// `output`.
pub fn run_annotate(cfg: &RunConfig, output: &Path) -> Result<AnnotationReport> {
    cfg.validate_for(Need::Annotate)?;
    let frames = FrameLexicon::load(&required(cfg, "frames", |p| &p.frames)?)?;
    let processor = text_processor(cfg, frames)?;
    let pairs = match cfg.path(|p| &p.pair_list) {
        Some(p) => PairList::load(&p)?,
        None => PairList::default(),
    };
    let news = load_news(&required(cfg, "news", |p| &p.news)?)?;
    let (docs, report) = annotate_corpus(&news, &processor, &pairs, cfg.annotate.mode)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_corpus(&docs, output)?;
    Ok(report)
}

/// Attention analysis of a checkpoint over the corpus' test documents (all
/// documents when none is marked). Contexts are partitioned by gold
/// label, with neutral pairs added as in the three-scale task.
pub fn run_analyze(cfg: &RunConfig, checkpoint: &Path, out_dir: &Path) -> Result<AnalysisReport> {
    cfg.validate_for(Need::Analyze)?;
    let model = Model::load(checkpoint)?;
    if !model.kind().has_attention() {
        return Err(Error::InvalidArgument(format!("model kind `{}` has no attention to analyze", model.kind())));
    }
    let res = Resources::load(&with_model_encoder(cfg, Some(&model)))?;
    let corpus = load_corpus(&required(cfg, "corpus", |p| &p.corpus)?)?;
    let (train_docs, test_docs) = split_fixed(&corpus);
    let docs = if test_docs.is_empty() { train_docs } else { test_docs };
    let examples = res.examples(&docs, Scale::Three)?;
    let report = analyze(&model, &examples, &res.sentiment)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("analysis.txt");
    std::fs::write(&path, format!("{report}")).map_err(|e| Error::io(&path, e))?;
    report.write_kde(out_dir, 201)?;
    Ok(report)
}

/// Files written by [`generate_synthetic`].
#[derive(Clone, Debug)]
pub struct SyntheticFiles {
    pub config: PathBuf,
    pub corpus: PathBuf,
    pub news: PathBuf,
    pub news_gold: PathBuf,
}

/// Writes a synthetic labeled corpus (`corpus.jsonl`, three quarters marked
/// train), an independent news collection with its gold labels, every
/// resource file, and a `config.toml` wired to them.
pub fn generate_synthetic(seed: u64, size: usize, vocab: &VocabSpec, docs: &DocSpec, out_dir: &Path) -> Result<SyntheticFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let world = World::new(seed, vocab);
    let write = |name: &str, body: &[u8]| -> Result<PathBuf> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };

    let train_count = size - size / 4;
    let corpus: Vec<Document> = world
        .generate(seed.wrapping_add(1), size, docs, "d")
        .iter()
        .enumerate()
        .map(|(i, g)| Document { split: Some(if i < train_count { Split::Train } else { Split::Test }), ..g.to_document() })
        .collect();
    let corpus_path = out_dir.join("corpus.jsonl");
    save_corpus(&corpus, &corpus_path)?;

    let generated = world.generate(seed.wrapping_add(2), size, docs, "n");
    let mut buf = Vec::new();
    write_news(&generated.iter().map(|g| g.news.clone()).collect::<Vec<_>>(), &mut buf).map_err(|e| Error::io(out_dir, e))?;
    let news = write("news.jsonl", &buf)?;
    let news_gold = out_dir.join("news_gold.jsonl");
    save_corpus(&generated.iter().map(|g| g.to_document()).collect::<Vec<_>>(), &news_gold)?;

    write("frames.tsv", world.frame_lexicon_text().as_bytes())?;
    write("pos.tsv", world.pos_table_text().as_bytes())?;
    write("sentiment.tsv", world.sentiment_lexicon_text().as_bytes())?;
    write("pairs.tsv", world.pair_list(seed.wrapping_add(3), 0.9, 0.05).to_text().as_bytes())?;
    let mut emb = Vec::new();
    world.embeddings.write(&mut emb).map_err(|e| Error::io(out_dir, e))?;
    write("embeddings.txt", &emb)?;

    let mut cfg = RunConfig { seed, ..RunConfig::default() };
    cfg.task.eval_format = EvalFormat::Fixed;
    cfg.text.negation = crate::annotate::synthetic::NEGATION.into();
    cfg.encoder.d_word = vocab.d_word;
    cfg.encoder.filters = 32;
    cfg.encoder.lstm_hidden = 32;
    cfg.paths.corpus = Some("corpus.jsonl".into());
    cfg.paths.ds_corpus = Some("ds_corpus.jsonl".into());
    cfg.paths.news = Some("news.jsonl".into());
    cfg.paths.frames = Some("frames.tsv".into());
    cfg.paths.pos_table = Some("pos.tsv".into());
    cfg.paths.sentiment_lexicon = Some("sentiment.tsv".into());
    cfg.paths.embeddings = Some("embeddings.txt".into());
    cfg.paths.pair_list = Some("pairs.tsv".into());
    let config = write("config.toml", cfg.to_toml().as_bytes())?;
    Ok(SyntheticFiles { config, corpus: corpus_path, news, news_gold })
}
