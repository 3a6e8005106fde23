//! Frame lexicon, sentiment lexicon, POS table and lemmatizers.
//!
//! All files are line-oriented UTF-8; blank lines and lines starting with
//! `#` are ignored.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A0→A1 polarity of a frame entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Pos,
    Neg,
    Neu,
}

impl Polarity {
    pub fn inverted(self) -> Self {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
            Polarity::Neu => Polarity::Neu,
        }
    }

    /// Row of the polarity feature table.
    pub fn index(self) -> usize {
        match self {
            Polarity::Neu => 0,
            Polarity::Pos => 1,
            Polarity::Neg => 2,
        }
    }

    pub const COUNT: usize = 3;

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Pos => "pos",
            Polarity::Neg => "neg",
            Polarity::Neu => "neu",
        }
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pos" | "positive" => Ok(Polarity::Pos),
            "neg" | "negative" => Ok(Polarity::Neg),
            "neu" | "neutral" => Ok(Polarity::Neu),
            other => Err(format!("unknown polarity `{other}`")),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Splits on tabs when present, otherwise on runs of whitespace.
fn fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub text: String,
    /// Lowercased tokens of `text`, matched against lemmas.
    pub tokens: Vec<String>,
    pub polarity: Polarity,
    /// Parsed but not used by the pipeline; only the sign matters.
    pub weight: f64,
}

/// Frame entries keyed by their first token.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameLexicon {
    entries: Vec<FrameEntry>,
    by_first: HashMap<String, Vec<usize>>,
}

impl FrameLexicon {
    pub fn new(entries: impl IntoIterator<Item = FrameEntry>) -> Self {
        let mut lex = Self::default();
        for e in entries {
            lex.push(e);
        }
        lex
    }

    fn push(&mut self, entry: FrameEntry) {
        let idx = self.entries.len();
        let first = entry.tokens[0].clone();
        self.entries.push(entry);
        let bucket = self.by_first.entry(first).or_default();
        bucket.push(idx);
        let entries = &self.entries;
        bucket.sort_by(|&a, &b| entries[b].tokens.len().cmp(&entries[a].tokens.len()).then(a.cmp(&b)));
    }

    /// Convenience constructor from `(text, polarity)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Polarity)>) -> Self {
        Self::new(pairs.into_iter().map(|(t, p)| FrameEntry {
            text: t.to_string(),
            tokens: t.split_whitespace().map(str::to_lowercase).collect(),
            polarity: p,
            weight: 1.0,
        }))
    }

    /// Parses `entry<TAB>polarity[<TAB>weight]` records.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lex = Self::default();
        for (line_no, line) in content_lines(text) {
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() < 2 || f.len() > 3 {
                return Err(Error::parse(source_name, line_no, "expected `entry<TAB>polarity[<TAB>weight]`"));
            }
            let tokens: Vec<String> = f[0].split_whitespace().map(str::to_lowercase).collect();
            if tokens.is_empty() {
                return Err(Error::parse(source_name, line_no, "empty frame entry"));
            }
            let polarity = f[1].parse::<Polarity>().map_err(|m| Error::parse(source_name, line_no, m))?;
            let weight = match f.get(2) {
                Some(w) => w
                    .parse::<f64>()
                    .ok()
                    .filter(|w| w.is_finite())
                    .ok_or_else(|| Error::parse(source_name, line_no, format!("bad weight `{w}`")))?,
                None => 1.0,
            };
            lex.push(FrameEntry { text: f[0].to_string(), tokens, polarity, weight });
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FrameEntry] {
        &self.entries
    }

    /// Longest entry matching `lemmas` starting at index 0.
    pub fn longest_match(&self, lemmas: &[&str]) -> Option<&FrameEntry> {
        let first = lemmas.first()?;
        self.by_first.get(*first)?.iter().map(|&i| &self.entries[i]).find(|e| {
            e.tokens.len() <= lemmas.len() && e.tokens.iter().zip(lemmas).all(|(t, l)| t == l)
        })
    }
}

/// Terms with a sentiment label; used to classify words in attention analysis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SentimentLexicon {
    terms: HashMap<String, String>,
}

impl SentimentLexicon {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self { terms: pairs.into_iter().map(|(t, l)| (t.to_lowercase(), l.to_string())).collect() }
    }

    /// Parses `term<TAB>label` (or whitespace-separated) lines.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut terms = HashMap::new();
        for (line_no, line) in content_lines(text) {
            let f = fields(line);
            if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
                return Err(Error::parse(source_name, line_no, "expected `term<TAB>label`"));
            }
            terms.insert(f[0].to_lowercase(), f[1].to_string());
        }
        Ok(Self { terms })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.terms.contains_key(lemma)
    }

    pub fn label(&self, lemma: &str) -> Option<&str> {
        self.terms.get(lemma).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Coarse part-of-speech tags. `Unknown` is also used for every non-word term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Unknown,
    Noun,
    Verb,
    Adj,
    Adv,
    Prep,
    Conj,
    Pron,
    Num,
    Part,
}

impl PosTag {
    pub const ALL: [PosTag; 10] = [
        PosTag::Unknown,
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Prep,
        PosTag::Conj,
        PosTag::Pron,
        PosTag::Num,
        PosTag::Part,
    ];
    pub const COUNT: usize = Self::ALL.len();

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Unknown => "UNKNOWN",
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Prep => "PREP",
            PosTag::Conj => "CONJ",
            PosTag::Pron => "PRON",
            PosTag::Num => "NUM",
            PosTag::Part => "PART",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let up = s.trim().to_ascii_uppercase();
        PosTag::ALL
            .into_iter()
            .find(|t| t.as_str() == up)
            .or(match up.as_str() {
                "S" => Some(PosTag::Noun),
                "V" => Some(PosTag::Verb),
                "PR" | "ADP" => Some(PosTag::Prep),
                "A" => Some(PosTag::Adj),
                _ => None,
            })
            .ok_or_else(|| format!("unknown POS tag `{s}`"))
    }
}

/// Lemma → POS lookup; anything absent is [`PosTag::Unknown`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PosTable {
    tags: HashMap<String, PosTag>,
}

impl PosTable {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, PosTag)>) -> Self {
        Self { tags: pairs.into_iter().map(|(w, t)| (w.to_lowercase(), t)).collect() }
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut tags = HashMap::new();
        for (line_no, line) in content_lines(text) {
            let f = fields(line);
            if f.len() != 2 || f[0].is_empty() {
                return Err(Error::parse(source_name, line_no, "expected `word<TAB>TAG`"));
            }
            let tag = f[1].parse::<PosTag>().map_err(|m| Error::parse(source_name, line_no, m))?;
            tags.insert(f[0].to_lowercase(), tag);
        }
        Ok(Self { tags })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    pub fn tag(&self, lemma: &str) -> PosTag {
        self.tags.get(lemma).copied().unwrap_or(PosTag::Unknown)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, word: &str) -> String;
}

/// Lowercasing identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct LowercaseLemmatizer;

impl Lemmatizer for LowercaseLemmatizer {
    fn lemma(&self, word: &str) -> String {
        word.to_lowercase()
    }
}

/// Table-driven lemmatizer that falls back to lowercasing.
#[derive(Clone, Debug, Default)]
pub struct TableLemmatizer {
    forms: HashMap<String, String>,
}

impl TableLemmatizer {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut forms = HashMap::new();
        for (line_no, line) in content_lines(text) {
            let f = fields(line);
            if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
                return Err(Error::parse(source_name, line_no, "expected `form<TAB>lemma`"));
            }
            forms.insert(f[0].to_lowercase(), f[1].to_lowercase());
        }
        Ok(Self { forms })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }
}

impl Lemmatizer for TableLemmatizer {
    fn lemma(&self, word: &str) -> String {
        let lower = word.to_lowercase();
        self.forms.get(&lower).cloned().unwrap_or(lower)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_lexicon_parses_and_prefers_longest() {
        let lex = FrameLexicon::parse(
            "# comment\ncontinue\tpos\t1.0\nsupport\tpos\t0.7\nnot necessary\tneg\nnot\tneu\t1\n",
            "frames",
        )
        .unwrap();
        assert_eq!(lex.len(), 4);
        assert_eq!(lex.longest_match(&["not", "necessary", "x"]).unwrap().text, "not necessary");
        assert_eq!(lex.longest_match(&["not", "x"]).unwrap().text, "not");
        assert!(lex.longest_match(&["nothing"]).is_none());
        assert_eq!(lex.entries()[1].weight, 0.7);
    }

    #[test]
    fn frame_lexicon_errors_carry_line_numbers() {
        let err = FrameLexicon::parse("ok\tpos\n\nbad line\n", "f.tsv").unwrap_err();
        assert!(err.to_string().starts_with("f.tsv:3:"), "{err}");
        assert!(FrameLexicon::parse("x\tmaybe\n", "f").is_err());
        assert!(FrameLexicon::parse("x\tpos\tNaN\n", "f").is_err());
    }

    #[test]
    fn pos_table_and_sentiment_lexicon() {
        let pos = PosTable::parse("war\tNOUN\nbetween PREP\n", "pos").unwrap();
        assert_eq!(pos.tag("war"), PosTag::Noun);
        assert_eq!(pos.tag("between"), PosTag::Prep);
        assert_eq!(pos.tag("zzz"), PosTag::Unknown);
        assert!(PosTable::parse("war\tBOGUS\n", "pos").is_err());

        let sent = SentimentLexicon::parse("danger\tneg\nGood\tpos\n", "s").unwrap();
        assert!(sent.contains("good"));
        assert_eq!(sent.label("danger"), Some("neg"));
        assert!(SentimentLexicon::parse("lonely\n", "s").is_err());
    }

    #[test]
    fn polarity_inversion() {
        assert_eq!(Polarity::Pos.inverted(), Polarity::Neg);
        assert_eq!(Polarity::Neg.inverted(), Polarity::Pos);
        assert_eq!(Polarity::Neu.inverted(), Polarity::Neu);
    }

    #[test]
    fn table_lemmatizer_falls_back_to_lowercase() {
        let lem = TableLemmatizer::parse("Talking\ttalk\n", "lem").unwrap();
        assert_eq!(lem.lemma("TALKING"), "talk");
        assert_eq!(lem.lemma("Danger"), "danger");
    }
}
