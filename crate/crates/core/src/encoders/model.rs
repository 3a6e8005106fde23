//! Encoder configuration, parameter layout and the full forward pass
//! `X -> s -> softmax(W_r·tanh(s) + b_r)`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{self, Combine, LstmVars, ScorerVars};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::init::{dropout_mask, xavier_with};
use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::text::features::{Feature, InputEmbedding};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncoderKind {
    #[serde(rename = "cnn")]
    Cnn,
    #[serde(rename = "pcnn")]
    Pcnn,
    #[serde(rename = "att-cnn-e")]
    AttCnnE,
    #[serde(rename = "att-pcnn-e")]
    AttPcnnE,
    #[serde(rename = "bilstm")]
    BiLstm,
    #[serde(rename = "att-blstm")]
    AttBlstm,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 6] = [
        EncoderKind::Cnn,
        EncoderKind::Pcnn,
        EncoderKind::AttCnnE,
        EncoderKind::AttPcnnE,
        EncoderKind::BiLstm,
        EncoderKind::AttBlstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Cnn => "cnn",
            EncoderKind::Pcnn => "pcnn",
            EncoderKind::AttCnnE => "att-cnn-e",
            EncoderKind::AttPcnnE => "att-pcnn-e",
            EncoderKind::BiLstm => "bilstm",
            EncoderKind::AttBlstm => "att-blstm",
        }
    }

    pub fn uses_convolution(self) -> bool {
        matches!(self, EncoderKind::Cnn | EncoderKind::Pcnn | EncoderKind::AttCnnE | EncoderKind::AttPcnnE)
    }

    pub fn is_piecewise(self) -> bool {
        matches!(self, EncoderKind::Pcnn | EncoderKind::AttPcnnE)
    }

    pub fn uses_lstm(self) -> bool {
        matches!(self, EncoderKind::BiLstm | EncoderKind::AttBlstm)
    }

    pub fn has_feature_attention(self) -> bool {
        matches!(self, EncoderKind::AttCnnE | EncoderKind::AttPcnnE)
    }

    /// Whether the model produces attention weights at all.
    pub fn has_attention(self) -> bool {
        self.has_feature_attention() || self == EncoderKind::AttBlstm
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown encoder kind `{s}`")))
    }
}

/// Everything that fixes the parameter shapes of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Convolution window `l`.
    pub window: usize,
    /// Filter count `t`.
    pub filters: usize,
    /// LSTM hidden size `h` per direction.
    pub lstm_hidden: usize,
    /// Attention scorer hidden size `h_mlp`.
    pub mlp_hidden: usize,
    pub classes: usize,
    pub d_word: usize,
    /// Width of each auxiliary feature embedding.
    pub d_feat: usize,
    /// Context length bound; sizes the distance tables.
    pub n_max: usize,
    pub keep_prob: f64,
    pub combine: Combine,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            kind: EncoderKind::AttBlstm,
            window: 3,
            filters: 300,
            lstm_hidden: 128,
            mlp_hidden: 10,
            classes: 3,
            d_word: 32,
            d_feat: 5,
            n_max: 50,
            keep_prob: 0.8,
            combine: Combine::Concat,
        }
    }
}

impl EncoderConfig {
    /// Per-term input width `m`.
    pub fn term_dim(&self) -> usize {
        self.d_word + Feature::ALL.len() * self.d_feat
    }

    /// Width of the embedded context vector `s`.
    pub fn context_dim(&self) -> usize {
        let m = self.term_dim();
        let (t, h) = (self.filters, self.lstm_hidden);
        let lstm = match self.combine {
            Combine::Concat => 2 * h,
            Combine::Sum => h,
        };
        match self.kind {
            EncoderKind::Cnn => t,
            EncoderKind::Pcnn => 3 * t,
            EncoderKind::AttCnnE => m + t,
            EncoderKind::AttPcnnE => m + 3 * t,
            EncoderKind::BiLstm | EncoderKind::AttBlstm => lstm,
        }
    }

    /// All violated constraints, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("window", self.window),
            ("filters", self.filters),
            ("lstm_hidden", self.lstm_hidden),
            ("mlp_hidden", self.mlp_hidden),
            ("d_word", self.d_word),
            ("d_feat", self.d_feat),
            ("n_max", self.n_max),
        ] {
            if v == 0 {
                out.push(format!("encoder.{name} must be at least 1"));
            }
        }
        if !(2..=3).contains(&self.classes) {
            out.push(format!("encoder.classes must be 2 or 3, got {}", self.classes));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            out.push(format!("encoder.keep_prob must lie in (0, 1], got {}", self.keep_prob));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Attention weights of one forward pass: one vector per feature for the
/// feature-attentive encoders, a single vector for self-attention, none
/// otherwise.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttentionTrace {
    pub alphas: Vec<Vec<f64>>,
}

impl AttentionTrace {
    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Position-wise average over the recorded vectors.
    pub fn mean(&self) -> Option<Vec<f64>> {
        let first = self.alphas.first()?;
        let k = self.alphas.len() as f64;
        Some(
            (0..first.len())
                .map(|i| self.alphas.iter().map(|a| a[i]).sum::<f64>() / k)
                .collect(),
        )
    }
}

/// Graph outputs of [`Model::forward`].
#[derive(Clone, Debug)]
pub struct Forward {
    /// Class probabilities `[1 x c]`.
    pub probs: Var,
    /// Embedded context vector `[1 x |s|]`.
    pub context: Var,
    /// Attention vectors `[n x 1]`.
    pub attention: Vec<Var>,
}

/// Model parameters together with the configuration that shaped them.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: EncoderConfig,
    params: ParamStore,
}

impl Model {
    /// Fresh model with Xavier-initialized weights and zero biases.
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let (m, t, h, hm, c) = (config.term_dim(), config.filters, config.lstm_hidden, config.mlp_hidden, config.classes);
        let mut xavier = |params: &mut ParamStore, name: &str, shape: &[usize]| {
            params.insert(name, xavier_with(shape, &mut rng)).map(|_| ())
        };
        let zeros = |params: &mut ParamStore, name: &str, shape: &[usize]| params.insert(name, Tensor::zeros(shape)).map(|_| ());

        for f in Feature::ALL {
            xavier(&mut params, f.name(), &[f.rows(config.n_max), config.d_feat])?;
        }
        if config.kind.uses_convolution() {
            xavier(&mut params, "conv.w", &[config.window * m, t])?;
        }
        if config.kind.has_feature_attention() {
            xavier(&mut params, "att.w_we", &[2 * m, hm])?;
            zeros(&mut params, "att.b_we", &[1, hm])?;
            xavier(&mut params, "att.w_a", &[hm, 1])?;
            zeros(&mut params, "att.b_a", &[1, 1])?;
        }
        if config.kind.uses_lstm() {
            for dir in ["fw", "bw"] {
                xavier(&mut params, &format!("lstm.{dir}.w_x"), &[m, 4 * h])?;
                xavier(&mut params, &format!("lstm.{dir}.w_h"), &[h, 4 * h])?;
                zeros(&mut params, &format!("lstm.{dir}.b"), &[1, 4 * h])?;
            }
        }
        if config.kind == EncoderKind::AttBlstm {
            let k = match config.combine {
                Combine::Concat => 2 * h,
                Combine::Sum => h,
            };
            xavier(&mut params, "selfatt.w", &[k, 1])?;
        }
        xavier(&mut params, "out.w", &[config.context_dim(), c])?;
        zeros(&mut params, "out.b", &[1, c])?;
        Ok(Self { config, params })
    }

    /// Reassembles a model from named tensors, checking every expected
    /// tensor is present with the right shape and nothing else is. The
    /// result uses the canonical parameter order regardless of input order.
    pub fn from_parts(config: EncoderConfig, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        let reference = Model::new(config.clone(), 0)?;
        let mut by_name: std::collections::HashMap<String, Tensor> = std::collections::HashMap::new();
        for (name, t) in tensors {
            if by_name.insert(name.clone(), t).is_some() {
                return Err(Error::Checkpoint(format!("duplicate parameter `{name}`")));
            }
        }
        let mut params = ParamStore::new();
        for (_, name, expected) in reference.params.iter() {
            let t = by_name
                .remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter `{name}`")))?;
            if t.shape() != expected.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter `{name}` has shape {:?}, expected {:?}",
                    t.shape(),
                    expected.shape()
                )));
            }
            params.insert(name, t)?;
        }
        if let Some(extra) = by_name.keys().min() {
            return Err(Error::Checkpoint(format!("unexpected parameter `{extra}` for {}", config.kind)));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn kind(&self) -> EncoderKind {
        self.config.kind
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn bind(&self, g: &mut Graph, name: &str) -> Var {
        let id = self.params.id(name).unwrap_or_else(|| panic!("model has parameter `{name}`"));
        g.param(&self.params, id)
    }

    /// Term matrix `X [n x m]`: fixed word vectors next to the gathered
    /// feature-table rows.
    fn embed(&self, g: &mut Graph, input: &InputEmbedding) -> Result<Var> {
        if input.is_empty() {
            return Err(Error::InvalidArgument("empty context".into()));
        }
        if input.words.cols() != self.config.d_word {
            return Err(Error::Shape(format!(
                "word vectors have {} dimensions, model expects {}",
                input.words.cols(),
                self.config.d_word
            )));
        }
        let mut parts = vec![g.constant(input.words.clone())];
        for (f, feat) in Feature::ALL.iter().enumerate() {
            let table = self.bind(g, feat.name());
            parts.push(g.gather_rows(table, &input.indices[f])?);
        }
        g.concat_cols(&parts)
    }

    /// Builds the forward graph for one context. Pass an RNG to run in
    /// training mode (dropout on the classifier input); `None` is inference.
    pub fn forward(&self, g: &mut Graph, input: &InputEmbedding, dropout: Option<&mut ChaCha8Rng>) -> Result<Forward> {
        let n = input.len();
        if input.subj_pos >= n || input.obj_pos >= n || input.subj_pos == input.obj_pos {
            return Err(Error::InvalidArgument(format!(
                "participant positions {} and {} invalid for a context of {n} terms",
                input.subj_pos, input.obj_pos
            )));
        }
        let x = self.embed(g, input)?;
        let kind = self.config.kind;
        let mut attention = Vec::new();

        let pooled = if kind.uses_convolution() {
            let w = self.bind(g, "conv.w");
            let c = layers::convolve(g, x, w, self.config.window)?;
            Some(if kind.is_piecewise() {
                layers::piecewise_max_pool(g, c, input.subj_pos, input.obj_pos)?
            } else {
                layers::max_pool(g, c)?
            })
        } else {
            None
        };

        let context = match kind {
            EncoderKind::Cnn | EncoderKind::Pcnn => pooled.expect("convolutional kind"),
            EncoderKind::AttCnnE | EncoderKind::AttPcnnE => {
                let scorer = ScorerVars {
                    w_we: self.bind(g, "att.w_we"),
                    b_we: self.bind(g, "att.b_we"),
                    w_a: self.bind(g, "att.w_a"),
                    b_a: self.bind(g, "att.b_a"),
                };
                let mut sum: Option<Var> = None;
                for pos in [input.obj_pos, input.subj_pos] {
                    let f = g.slice_rows(x, pos, pos + 1)?;
                    let (s_hat, alpha) = layers::feature_attention(g, x, f, scorer)?;
                    attention.push(alpha);
                    sum = Some(match sum {
                        Some(acc) => g.add(acc, s_hat)?,
                        None => s_hat,
                    });
                }
                let s_f = g.scale(sum.expect("two features"), 0.5);
                g.concat_cols(&[s_f, pooled.expect("convolutional kind")])?
            }
            EncoderKind::BiLstm | EncoderKind::AttBlstm => {
                let dir = |g: &mut Graph, d: &str| LstmVars {
                    w_x: self.bind(g, &format!("lstm.{d}.w_x")),
                    w_h: self.bind(g, &format!("lstm.{d}.w_h")),
                    b: self.bind(g, &format!("lstm.{d}.b")),
                };
                let fw = dir(g, "fw");
                let bw = dir(g, "bw");
                let hs = layers::bilstm(g, x, fw, bw, self.config.combine)?;
                if kind == EncoderKind::AttBlstm {
                    let w = self.bind(g, "selfatt.w");
                    let (s, alpha) = layers::self_attention(g, hs, w)?;
                    attention.push(alpha);
                    s
                } else {
                    layers::max_pool(g, hs)?
                }
            }
        };

        let mask = match dropout {
            Some(rng) => Some(dropout_mask(&[1, self.config.context_dim()], self.config.keep_prob, true, rng)?),
            None => None,
        };
        let w_r = self.bind(g, "out.w");
        let b_r = self.bind(g, "out.b");
        let probs = layers::classify(g, context, w_r, b_r, mask)?;
        Ok(Forward { probs, context, attention })
    }

    /// Inference: class probabilities and attention weights.
    pub fn predict(&self, input: &InputEmbedding) -> Result<(Vec<f64>, AttentionTrace)> {
        let mut g = Graph::new();
        let out = self.forward(&mut g, input, None)?;
        let trace = AttentionTrace { alphas: out.attention.iter().map(|&a| g.value(a).data().to_vec()).collect() };
        Ok((g.value(out.probs).data().to_vec(), trace))
    }

    /// Most probable class id (lowest id wins exact ties).
    pub fn predict_class(&self, input: &InputEmbedding) -> Result<usize> {
        let (probs, _) = self.predict(input)?;
        Ok(argmax(&probs))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
