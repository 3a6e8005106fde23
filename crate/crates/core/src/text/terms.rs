//! Term sequences: entity masking, frame matching with negation, token
//! classification and the bounded context window around an attitude pair.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexicon::{FrameLexicon, Lemmatizer, LowercaseLemmatizer, Polarity, PosTable, PosTag};
use super::markup::{is_punct, is_url, parse_marked, EntityMention, MarkedSentence, RawToken};
use crate::error::Result;
use crate::label::Label;

pub const MASK_SUBJECT: &str = "$E_subj$";
pub const MASK_OBJECT: &str = "$E_obj$";
pub const MASK_OTHER: &str = "$E$";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Punct,
    Number,
    Url,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Subject,
    Object,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermGroup {
    EntityMaskSubject,
    EntityMaskObject,
    EntityMaskOther,
    /// Frame entry; `polarity` already accounts for a preceding negation.
    Frame { polarity: Polarity, negated: bool },
    Token(TokenKind),
    Word,
}

impl TermGroup {
    pub fn is_mask(self) -> bool {
        matches!(self, TermGroup::EntityMaskSubject | TermGroup::EntityMaskObject | TermGroup::EntityMaskOther)
    }

    pub fn is_frame(self) -> bool {
        matches!(self, TermGroup::Frame { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub group: TermGroup,
    /// Lemma for words, entry text for frames, symbol for masks and tokens.
    pub surface: String,
    pub position: usize,
    pub pos: PosTag,
    /// Set on `$E$` masks whose entity is a synonym of a participant.
    pub synonym_of: Option<Role>,
}

impl Term {
    /// A0→A1 polarity as seen by the feature table (`Neu` for non-frames).
    pub fn polarity(&self) -> Polarity {
        match self.group {
            TermGroup::Frame { polarity, .. } => polarity,
            _ => Polarity::Neu,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.group {
            TermGroup::Frame { polarity, negated } => {
                let body = self.surface.replace(' ', "-");
                if negated {
                    write!(f, "not-{body}_{}", polarity.as_str())
                } else {
                    write!(f, "{body}_{}", polarity.as_str())
                }
            }
            _ => f.write_str(&self.surface),
        }
    }
}

/// A bounded term window around one ordered attitude pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub terms: Vec<Term>,
    pub subj_pos: usize,
    pub obj_pos: usize,
    pub label: Label,
    pub doc_id: String,
    pub sentence_id: usize,
}

impl Context {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Space-joined term rendering, e.g. `$E_obj$ and $E_subj$ <DOT>`.
    pub fn render(&self) -> String {
        self.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// One analyzed sentence term before participant masking.
#[derive(Clone, Debug, PartialEq)]
pub enum SentenceTerm {
    Entity(EntityMention),
    Frame { text: String, polarity: Polarity, negated: bool },
    Token { kind: TokenKind, symbol: String },
    Word { lemma: String, pos: PosTag },
}

/// Why a pair produced no context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rejection {
    MissingParticipant(Role),
    SameEntity,
    TooFar { distance: usize, limit: usize },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::MissingParticipant(r) => write!(f, "missing {r:?} mention"),
            Rejection::SameEntity => f.write_str("subject and object are synonyms"),
            Rejection::TooFar { distance, limit } => write!(f, "pair distance {distance} exceeds {limit}"),
        }
    }
}

pub fn token_symbol(text: &str) -> Option<(TokenKind, String)> {
    if is_url(text) {
        return Some((TokenKind::Url, "<URL>".into()));
    }
    let mut chars = text.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if is_punct(c) {
            let sym = match c {
                ',' => "<COMMA>",
                '.' => "<DOT>",
                ':' => "<COLON>",
                ';' => "<SEMICOLON>",
                '!' => "<EXCL>",
                '?' => "<QUESTION>",
                '"' | '\'' | '«' | '»' | '“' | '”' | '„' | '‘' | '’' => "<QUOTE>",
                '(' | ')' | '[' | ']' | '{' | '}' => "<PAREN>",
                '-' | '—' | '–' => "<DASH>",
                '…' => "<ELLIPSIS>",
                _ => "<PUNCT>",
            };
            return Some((TokenKind::Punct, sym.into()));
        }
    }
    if text.chars().any(|c| c.is_ascii_digit()) && text.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return Some((TokenKind::Number, "<NUM>".into()));
    }
    None
}

/// Sentence analysis and context construction settings plus resources.
pub struct TextProcessor {
    pub frames: FrameLexicon,
    pub pos: PosTable,
    pub lemmatizer: Box<dyn Lemmatizer>,
    /// Particle inverting the polarity of an immediately following frame.
    pub negation: String,
    pub n_max: usize,
    pub max_pair_distance: usize,
}

impl fmt::Debug for TextProcessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TextProcessor")
            .field("frames", &self.frames.len())
            .field("negation", &self.negation)
            .field("n_max", &self.n_max)
            .field("max_pair_distance", &self.max_pair_distance)
            .finish()
    }
}

pub const DEFAULT_N_MAX: usize = 50;
pub const DEFAULT_PAIR_DISTANCE: usize = 10;

impl TextProcessor {
    pub fn new(frames: FrameLexicon, pos: PosTable) -> Self {
        Self {
            frames,
            pos,
            lemmatizer: Box::new(LowercaseLemmatizer),
            negation: "не".into(),
            n_max: DEFAULT_N_MAX,
            max_pair_distance: DEFAULT_PAIR_DISTANCE,
        }
    }

    pub fn with_negation(mut self, negation: &str) -> Self {
        self.negation = negation.to_lowercase();
        self
    }

    pub fn with_limits(mut self, n_max: usize, max_pair_distance: usize) -> Self {
        self.n_max = n_max;
        self.max_pair_distance = max_pair_distance;
        self
    }

    pub fn with_lemmatizer(mut self, lemmatizer: Box<dyn Lemmatizer>) -> Self {
        self.lemmatizer = lemmatizer;
        self
    }

    /// Classifies every token of a marked sentence.
    pub fn analyze(&self, sentence: &MarkedSentence) -> Vec<SentenceTerm> {
        // Lemmatize plain words once; `None` marks entities and tokens.
        let lemmas: Vec<Option<String>> = sentence
            .tokens
            .iter()
            .map(|t| match t {
                RawToken::Text(s) if token_symbol(s).is_none() => Some(self.lemmatizer.lemma(s)),
                _ => None,
            })
            .collect();

        let mut out: Vec<SentenceTerm> = Vec::with_capacity(sentence.tokens.len());
        let mut i = 0;
        while i < sentence.tokens.len() {
            match &sentence.tokens[i] {
                RawToken::Entity(e) => {
                    out.push(SentenceTerm::Entity(e.clone()));
                    i += 1;
                }
                RawToken::Text(s) => {
                    if let Some((kind, symbol)) = token_symbol(s) {
                        out.push(SentenceTerm::Token { kind, symbol });
                        i += 1;
                        continue;
                    }
                    let run: Vec<&str> = lemmas[i..].iter().map_while(|l| l.as_deref()).collect();
                    if let Some(entry) = self.frames.longest_match(&run) {
                        let negated = matches!(
                            out.last(),
                            Some(SentenceTerm::Word { lemma, .. }) if *lemma == self.negation
                        );
                        if negated {
                            out.pop();
                        }
                        let polarity = if negated { entry.polarity.inverted() } else { entry.polarity };
                        out.push(SentenceTerm::Frame { text: entry.text.to_lowercase(), polarity, negated });
                        i += entry.tokens.len();
                    } else {
                        let lemma = run[0].to_string();
                        let pos = self.pos.tag(&lemma);
                        out.push(SentenceTerm::Word { lemma, pos });
                        i += 1;
                    }
                }
            }
        }
        out
    }

    /// Builds the masked context for the ordered pair `(subject, object)`
    /// given as synonym groups. The closest pair of mentions is used.
    #[allow(clippy::too_many_arguments)]
    pub fn build_context(
        &self,
        terms: &[SentenceTerm],
        subject_group: &str,
        object_group: &str,
        label: Label,
        doc_id: &str,
        sentence_id: usize,
    ) -> std::result::Result<Context, Rejection> {
        if subject_group == object_group {
            return Err(Rejection::SameEntity);
        }
        let positions = |group: &str| -> Vec<usize> {
            terms
                .iter()
                .enumerate()
                .filter_map(|(i, t)| match t {
                    SentenceTerm::Entity(e) if e.synonym_group == group => Some(i),
                    _ => None,
                })
                .collect()
        };
        let subj = positions(subject_group);
        let obj = positions(object_group);
        if subj.is_empty() {
            return Err(Rejection::MissingParticipant(Role::Subject));
        }
        if obj.is_empty() {
            return Err(Rejection::MissingParticipant(Role::Object));
        }
        let (s, o) = subj
            .iter()
            .flat_map(|&s| obj.iter().map(move |&o| (s, o)))
            .min_by_key(|&(s, o)| (s.abs_diff(o), s, o))
            .expect("both lists non-empty");
        let distance = s.abs_diff(o);
        if distance > self.max_pair_distance {
            return Err(Rejection::TooFar { distance, limit: self.max_pair_distance });
        }

        let (start, end) = window(terms.len(), s, o, self.n_max);
        let mut out = Vec::with_capacity(end - start);
        for (i, t) in terms[start..end].iter().enumerate() {
            let abs = start + i;
            let (group, surface, pos, synonym_of) = match t {
                SentenceTerm::Entity(_) if abs == s => (TermGroup::EntityMaskSubject, MASK_SUBJECT.to_string(), PosTag::Unknown, None),
                SentenceTerm::Entity(_) if abs == o => (TermGroup::EntityMaskObject, MASK_OBJECT.to_string(), PosTag::Unknown, None),
                SentenceTerm::Entity(e) => {
                    let syn = if e.synonym_group == subject_group {
                        Some(Role::Subject)
                    } else if e.synonym_group == object_group {
                        Some(Role::Object)
                    } else {
                        None
                    };
                    (TermGroup::EntityMaskOther, MASK_OTHER.to_string(), PosTag::Unknown, syn)
                }
                SentenceTerm::Frame { text, polarity, negated } => (
                    TermGroup::Frame { polarity: *polarity, negated: *negated },
                    text.clone(),
                    PosTag::Unknown,
                    None,
                ),
                SentenceTerm::Token { kind, symbol } => (TermGroup::Token(*kind), symbol.clone(), PosTag::Unknown, None),
                SentenceTerm::Word { lemma, pos } => (TermGroup::Word, lemma.clone(), *pos, None),
            };
            out.push(Term { group, surface, position: i, pos, synonym_of });
        }
        Ok(Context {
            terms: out,
            subj_pos: s - start,
            obj_pos: o - start,
            label,
            doc_id: doc_id.to_string(),
            sentence_id,
        })
    }

    /// Parses a marked sentence and builds the context for a pair in one go.
    pub fn parse_context(
        &self,
        sentence: &str,
        subject_group: &str,
        object_group: &str,
        label: Label,
    ) -> Result<std::result::Result<Context, Rejection>> {
        let marked = parse_marked(sentence)?;
        let terms = self.analyze(&marked);
        Ok(self.build_context(&terms, subject_group, object_group, label, "", 0))
    }
}

/// Window `[start, end)` of at most `n_max` terms centered on the pair midpoint.
fn window(len: usize, a: usize, b: usize, n_max: usize) -> (usize, usize) {
    if len <= n_max {
        return (0, len);
    }
    let mid = (a + b) / 2;
    let start = mid.saturating_sub(n_max / 2).min(len - n_max);
    (start, start + n_max)
}
