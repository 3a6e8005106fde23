//! Word vectors: model file loading, n-gram fallback lookup, and persistent
//! random vectors for entity masks and token symbols.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lexicon::read_file;
use super::terms::{Term, TermGroup};
use crate::error::{Error, Result};
use crate::init::gaussian_vec;

/// Word → vector map with a fixed dimension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingModel {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: HashMap::new() }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "embedding vector of length {} in a {}-dimensional model",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Parses `word v1 … vd` lines. An optional word2vec-style header
    /// `count dim` on the first line is accepted and checked.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut model: Option<Self> = None;
        let mut header: Option<(usize, usize)> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 {
                if let (Ok(n), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    if d == 0 {
                        return Err(Error::parse(source_name, line_no, "header declares zero dimensions"));
                    }
                    header = Some((n, d));
                    model = Some(Self::new(d));
                    continue;
                }
            }
            if fields.len() < 2 {
                return Err(Error::parse(source_name, line_no, "expected `word v1 … vd`"));
            }
            let values = fields[1..]
                .iter()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::parse(source_name, line_no, "non-numeric or non-finite component"))?;
            let m = model.get_or_insert_with(|| Self::new(values.len()));
            if values.len() != m.dim {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    format!("vector has {} components, expected {}", values.len(), m.dim),
                ));
            }
            m.vectors.insert(fields[0].to_string(), values);
        }
        let model = model.ok_or_else(|| Error::parse(source_name, 0, "empty embedding model"))?;
        if let Some((n, _)) = header {
            if n != model.len() {
                return Err(Error::parse(
                    source_name,
                    1,
                    format!("header declares {n} words, found {}", model.len()),
                ));
            }
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    /// Writes the text format, words sorted for stable output.
    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        for w in words {
            write!(out, "{w}")?;
            for v in &self.vectors[w] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Character n-gram fallback for out-of-vocabulary words.
    ///
    /// The word is split into parts on `-`, `_` and whitespace; each part is
    /// scanned left to right, trying the longest n-gram (n = 3, 2, 1) at the
    /// current position and advancing past the first hit. All hits are
    /// averaged. Returns `None` when nothing matched.
    pub fn ngram_fallback(&self, word: &str) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut hits = 0usize;
        for part in word.split(|c: char| c == '-' || c == '_' || c.is_whitespace()).filter(|p| !p.is_empty()) {
            if let Some(v) = self.get(part) {
                add(&mut sum, v);
                hits += 1;
                continue;
            }
            let chars: Vec<char> = part.chars().collect();
            let mut p = 0;
            while p < chars.len() {
                let found = (1..=3.min(chars.len() - p)).rev().find_map(|n| {
                    let gram: String = chars[p..p + n].iter().collect();
                    self.get(&gram).map(|v| (n, v))
                });
                match found {
                    Some((n, v)) => {
                        add(&mut sum, v);
                        hits += 1;
                        p += n;
                    }
                    None => p += 1,
                }
            }
        }
        (hits > 0).then(|| sum.into_iter().map(|s| s / hits as f64).collect())
    }
}

fn add(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// 64-bit FNV-1a; used to derive per-symbol seeds independent of call order.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Embeds terms into `d_word` dimensions.
///
/// Words and frames use the model (with n-gram fallback); masks and tokens
/// get one Gaussian vector per symbol, fixed by the run seed.
#[derive(Debug)]
pub struct WordEmbedder {
    model: EmbeddingModel,
    seed: u64,
    std: f64,
    misses: AtomicUsize,
}

impl WordEmbedder {
    pub fn new(model: EmbeddingModel, seed: u64) -> Self {
        let std = 1.0 / (model.dim().max(1) as f64).sqrt();
        Self { model, seed, std, misses: AtomicUsize::new(0) }
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    /// Number of lookups that found nothing and produced a zero vector.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn symbol_vector(&self, symbol: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(symbol.as_bytes()));
        gaussian_vec(self.model.dim(), self.std, &mut rng)
    }

    pub fn lookup_word(&self, word: &str) -> Vec<f64> {
        if let Some(v) = self.model.get(word) {
            return v.to_vec();
        }
        match self.model.ngram_fallback(word) {
            Some(v) => v,
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                log::debug!("no vector for `{word}`");
                vec![0.0; self.model.dim()]
            }
        }
    }

    pub fn embed_term(&self, term: &Term) -> Vec<f64> {
        match term.group {
            TermGroup::Word | TermGroup::Frame { .. } => self.lookup_word(&term.surface),
            _ => self.symbol_vector(&term.surface),
        }
    }
}
