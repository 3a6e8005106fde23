//! Run configuration: a TOML file with one section per module.
//!
//! ```toml
//! seed = 1
//! mode = "sl"
//!
//! [task]
//! scale = "three"
//! eval_format = "fixed"
//!
//! [encoder]
//! kind = "att-blstm"
//!
//! [paths]
//! corpus = "corpus.jsonl"
//! frames = "frames.tsv"
//! embeddings = "embeddings.txt"
//! ```
//!
//! Unknown keys are rejected. Relative paths resolve against the directory
//! holding the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::AnnotationMode;
use crate::encoders::EncoderConfig;
use crate::error::{Error, Result};
use crate::label::Scale;
use crate::text::terms::DEFAULT_PAIR_DISTANCE;
use crate::training::TrainConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    /// Supervised learning on the labeled corpus only.
    #[default]
    Sl,
    /// The labeled training split plus a distantly supervised corpus.
    Ds,
}

impl FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sl" => Ok(TrainingMode::Sl),
            "ds" => Ok(TrainingMode::Ds),
            other => Err(Error::InvalidArgument(format!("unknown training mode `{other}` (expected sl or ds)"))),
        }
    }
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingMode::Sl => "sl",
            TrainingMode::Ds => "ds",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalFormat {
    /// Three sentence-balanced folds.
    #[default]
    Cv3,
    /// The corpus' own train/test marks.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub scale: Scale,
    pub eval_format: EvalFormat,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { scale: Scale::Three, eval_format: EvalFormat::Cv3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextConfig {
    /// Particle that inverts the polarity of the frame right after it.
    pub negation: String,
    /// Maximum number of terms between the two participants of a context.
    pub max_pair_distance: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self { negation: "не".into(), max_pair_distance: DEFAULT_PAIR_DISTANCE }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotateConfig {
    pub mode: AnnotationMode,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Labeled corpus (JSONL).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    /// Distantly supervised corpus: written by `annotate`, read in DS mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ds_corpus: Option<PathBuf>,
    /// Raw news for `annotate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub news: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos_table: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentiment_lexicon: Option<PathBuf>,
    /// `form<TAB>lemma` table; words are only lowercased without it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_list: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: TrainingMode,
    pub task: TaskConfig,
    pub text: TextConfig,
    pub encoder: EncoderConfig,
    pub training: TrainConfig,
    pub annotate: AnnotateConfig,
    pub paths: PathsConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            mode: TrainingMode::Sl,
            task: TaskConfig::default(),
            text: TextConfig::default(),
            encoder: EncoderConfig::default(),
            training: TrainConfig::default(),
            annotate: AnnotateConfig::default(),
            paths: PathsConfig::default(),
            base_dir: None,
        }
    }
}

/// What a command needs from the `[paths]` section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Need {
    Train,
    Eval,
    Annotate,
    Analyze,
}

impl RunConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            Error::parse(source_name, line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// `path` made absolute against the config's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn path(&self, select: impl Fn(&PathsConfig) -> &Option<PathBuf>) -> Option<PathBuf> {
        select(&self.paths).as_ref().map(|p| self.resolve(p))
    }

    /// Every problem with the configuration, independent of any command.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.encoder.problems();
        out.extend(self.training.problems());
        if self.encoder.classes != self.task.scale.class_count() {
            out.push(format!(
                "encoder.classes is {} but the {:?} task has {} classes",
                self.encoder.classes,
                self.task.scale,
                self.task.scale.class_count()
            ));
        }
        if self.mode == TrainingMode::Ds && self.paths.ds_corpus.is_none() {
            out.push("mode = \"ds\" requires paths.ds_corpus".into());
        }
        if self.text.negation.trim().is_empty() {
            out.push("text.negation must not be empty".into());
        }
        out
    }

    /// Problems plus missing or unreadable paths needed by a command.
    pub fn problems_for(&self, need: Need) -> Vec<String> {
        let mut out = self.problems();
        let mut required: Vec<(&str, &Option<PathBuf>)> = Vec::new();
        let p = &self.paths;
        match need {
            Need::Train | Need::Eval | Need::Analyze => {
                required.extend([("corpus", &p.corpus), ("frames", &p.frames), ("embeddings", &p.embeddings)]);
                if need == Need::Train && self.mode == TrainingMode::Ds {
                    required.push(("ds_corpus", &p.ds_corpus));
                }
                if need == Need::Analyze {
                    required.push(("sentiment_lexicon", &p.sentiment_lexicon));
                }
            }
            Need::Annotate => {
                required.extend([("news", &p.news), ("frames", &p.frames)]);
                if self.annotate.mode != AnnotationMode::FrameOnly {
                    required.push(("pair_list", &p.pair_list));
                }
            }
        }
        let optional = [
            ("pos_table", &p.pos_table),
            ("sentiment_lexicon", &p.sentiment_lexicon),
            ("lemmas", &p.lemmas),
            ("pair_list", &p.pair_list),
        ];
        for (name, value) in required {
            match value {
                None => out.push(format!("paths.{name} is required")),
                Some(path) if !self.resolve(path).is_file() => {
                    out.push(format!("paths.{name}: {} does not exist", self.resolve(path).display()))
                }
                Some(_) => {}
            }
        }
        for (name, value) in optional {
            if let Some(path) = value {
                let full = self.resolve(path);
                if !full.is_file() && !out.iter().any(|m| m.starts_with(&format!("paths.{name}"))) {
                    out.push(format!("paths.{name}: {} does not exist", full.display()));
                }
            }
        }
        out.dedup();
        out
    }

    pub fn validate_for(&self, need: Need) -> Result<()> {
        let problems = self.problems_for(need);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}
