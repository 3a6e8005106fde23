//! Seeded synthetic news for desk-scale experiments.
//!
//! A [`World`] fixes a toy vocabulary (entities, polarized frame words,
//! filler words with POS tags, a few sentiment words), word vectors and a
//! table of directed entity relations. News documents are then sampled
//! from it: each document expresses one relation. Sentences mentioning
//! both participants always put a run of frames between subject and
//! object whose aggregate polarity equals the relation's label, so a
//! context's gold label is decidable from its frames. Other sentences pair
//! unrelated entities with no frames between them; distractor frames may
//! appear outside the participant span.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{NewsDoc, PairList};
use crate::corpus::{AttitudeRecord, Document};
use crate::label::Label;
use crate::text::embedding::EmbeddingModel;
use crate::text::lexicon::{FrameLexicon, Polarity, PosTable, PosTag, SentimentLexicon};
use crate::text::terms::TextProcessor;

pub const NEGATION: &str = "not";

/// Vocabulary and relation-table sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSpec {
    pub entities: usize,
    /// Entities that also get a second surface form in the same synonym group.
    pub aliases: usize,
    pub pos_frames: usize,
    pub neg_frames: usize,
    pub nouns: usize,
    pub verbs: usize,
    pub adjectives: usize,
    pub prepositions: usize,
    pub sentiment_words: usize,
    pub relations: usize,
    /// Share of positive relations.
    pub pos_share: f64,
    pub d_word: usize,
    /// Spread of frame vectors around their polarity centre, relative to
    /// the unit-variance filler vectors.
    pub frame_spread: f64,
}

impl Default for VocabSpec {
    fn default() -> Self {
        Self {
            entities: 40,
            aliases: 10,
            pos_frames: 12,
            neg_frames: 12,
            nouns: 60,
            verbs: 30,
            adjectives: 20,
            prepositions: 8,
            sentiment_words: 12,
            relations: 200,
            pos_share: 0.5,
            d_word: 32,
            frame_spread: 0.5,
        }
    }
}

/// Per-document sampling rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocSpec {
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Content sentences mentioning both participants (at least one).
    pub max_pair_sentences: usize,
    /// Titles following the subject–frames–object pattern.
    pub title_match_rate: f64,
    /// Frames placed outside the participant span.
    pub distractor_rate: f64,
    /// Frames preceded by the negation particle (with the opposite lexicon polarity).
    pub negation_rate: f64,
    /// Negative runs that also contain a positive frame.
    pub mixed_rate: f64,
    pub max_frames: usize,
    /// Mentions using the alias surface form where one exists.
    pub alias_rate: f64,
}

impl Default for DocSpec {
    fn default() -> Self {
        Self {
            min_sentences: 3,
            max_sentences: 6,
            max_pair_sentences: 2,
            title_match_rate: 0.85,
            distractor_rate: 0.3,
            negation_rate: 0.1,
            mixed_rate: 0.2,
            max_frames: 2,
            alias_rate: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub surface: String,
    pub id: String,
    pub alias: Option<(String, String)>,
}

impl Entity {
    pub fn group(&self) -> &str {
        &self.id
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub subject: usize,
    pub object: usize,
    pub label: Label,
}

/// A news document with the attitudes implied by its construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDoc {
    pub news: NewsDoc,
    pub gold: Vec<AttitudeRecord>,
    /// Whether the title follows the subject–frames–object pattern.
    pub title_matches: bool,
}

impl GeneratedDoc {
    /// The document in the training corpus format (title as sentence 0).
    pub fn to_document(&self) -> Document {
        Document {
            doc_id: self.news.doc_id.clone(),
            split: None,
            sentences: self.news.all_sentences().map(str::to_string).collect(),
            attitudes: self.gold.clone(),
        }
    }
}

/// The fixed vocabulary and relation table.
#[derive(Clone, Debug)]
pub struct World {
    pub entities: Vec<Entity>,
    pub pos_frames: Vec<String>,
    pub neg_frames: Vec<String>,
    pub fillers: Vec<(String, PosTag)>,
    pub sentiment: Vec<(String, Label)>,
    pub relations: Vec<Relation>,
    pub embeddings: EmbeddingModel,
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gr", "st", "tr"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn pseudo_word(rng: &mut impl Rng, taken: &mut HashSet<String>) -> String {
    loop {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("non-empty"));
            w.push_str(VOWELS.choose(rng).expect("non-empty"));
        }
        if w != NEGATION && taken.insert(w.clone()) {
            return w;
        }
    }
}

fn gaussian(d: usize, std: f64, rng: &mut impl Rng) -> Vec<f64> {
    let n = Normal::new(0.0, std).expect("finite std");
    (0..d).map(|_| n.sample(rng)).collect()
}

impl World {
    pub fn new(seed: u64, spec: &VocabSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taken = HashSet::new();
        let mut words = |n: usize, rng: &mut ChaCha8Rng| (0..n).map(|_| pseudo_word(rng, &mut taken)).collect::<Vec<_>>();

        let names = words(spec.entities + spec.aliases.min(spec.entities), &mut rng);
        let entities: Vec<Entity> = (0..spec.entities)
            .map(|i| {
                let surface = capitalize(&names[i]);
                let alias = (i < spec.aliases).then(|| (capitalize(&names[spec.entities + i]), format!("e{i}a")));
                Entity { surface, id: format!("e{i}"), alias }
            })
            .collect();
        let pos_frames = words(spec.pos_frames, &mut rng);
        let neg_frames = words(spec.neg_frames, &mut rng);
        let mut fillers = Vec::new();
        for (n, tag) in [
            (spec.nouns, PosTag::Noun),
            (spec.verbs, PosTag::Verb),
            (spec.adjectives, PosTag::Adj),
            (spec.prepositions, PosTag::Prep),
        ] {
            fillers.extend(words(n, &mut rng).into_iter().map(|w| (w, tag)));
        }
        let sentiment: Vec<(String, Label)> = words(spec.sentiment_words, &mut rng)
            .into_iter()
            .enumerate()
            .map(|(i, w)| (w, if i % 2 == 0 { Label::Pos } else { Label::Neg }))
            .collect();

        let d = spec.d_word;
        let unit = 1.0 / (d.max(1) as f64).sqrt();
        let mut embeddings = EmbeddingModel::new(d);
        let pos_centre = gaussian(d, unit, &mut rng);
        let neg_centre: Vec<f64> = pos_centre.iter().map(|x| -x).collect();
        let mut put = |w: &str, v: Vec<f64>| embeddings.insert(w, v).expect("dimension matches");
        for (frames, centre) in [(&pos_frames, &pos_centre), (&neg_frames, &neg_centre)] {
            for f in frames {
                let noise = gaussian(d, unit * spec.frame_spread, &mut rng);
                put(f, centre.iter().zip(noise).map(|(c, n)| c + n).collect());
            }
        }
        for w in fillers.iter().map(|(w, _)| w).chain(sentiment.iter().map(|(w, _)| w)) {
            put(w, gaussian(d, unit, &mut rng));
        }
        put(NEGATION, gaussian(d, unit, &mut rng));

        let max_relations = spec.entities * spec.entities.saturating_sub(1) / 2;
        let mut relations = Vec::new();
        let mut used = HashSet::new();
        while relations.len() < spec.relations.min(max_relations) {
            let s = rng.random_range(0..spec.entities);
            let o = rng.random_range(0..spec.entities);
            if s == o || !used.insert((s.min(o), s.max(o))) {
                continue;
            }
            let label = if rng.random_bool(spec.pos_share.clamp(0.0, 1.0)) { Label::Pos } else { Label::Neg };
            relations.push(Relation { subject: s, object: o, label });
        }
        Self { entities, pos_frames, neg_frames, fillers, sentiment, relations, embeddings }
    }

    pub fn frame_lexicon(&self) -> FrameLexicon {
        FrameLexicon::from_pairs(
            self.pos_frames
                .iter()
                .map(|f| (f.as_str(), Polarity::Pos))
                .chain(self.neg_frames.iter().map(|f| (f.as_str(), Polarity::Neg))),
        )
    }

    pub fn frame_lexicon_text(&self) -> String {
        let mut out = String::from("# entry\tA0->A1 polarity\tweight\n");
        for f in &self.pos_frames {
            out.push_str(&format!("{f}\tpos\t1.0\n"));
        }
        for f in &self.neg_frames {
            out.push_str(&format!("{f}\tneg\t1.0\n"));
        }
        out
    }

    fn pos_entries(&self) -> Vec<(&str, PosTag)> {
        self.fillers
            .iter()
            .map(|(w, t)| (w.as_str(), *t))
            .chain(self.sentiment.iter().map(|(w, _)| (w.as_str(), PosTag::Adj)))
            .chain(self.pos_frames.iter().chain(&self.neg_frames).map(|f| (f.as_str(), PosTag::Verb)))
            .chain([(NEGATION, PosTag::Part)])
            .collect()
    }

    pub fn pos_table(&self) -> PosTable {
        PosTable::new(self.pos_entries())
    }

    pub fn pos_table_text(&self) -> String {
        self.pos_entries().iter().map(|(w, t)| format!("{w}\t{t}\n")).collect()
    }

    pub fn sentiment_lexicon(&self) -> SentimentLexicon {
        SentimentLexicon::new(self.sentiment.iter().map(|(w, l)| (w.as_str(), l.as_str())))
    }

    pub fn sentiment_lexicon_text(&self) -> String {
        self.sentiment.iter().map(|(w, l)| format!("{w}\t{l}\n")).collect()
    }

    /// A text processor configured for this world's lexicons and negation.
    pub fn processor(&self) -> TextProcessor {
        TextProcessor::new(self.frame_lexicon(), self.pos_table()).with_negation(NEGATION)
    }

    /// The relation table as a pair list. `coverage` is the share of
    /// relations listed; `flip_rate` the share of listed ones whose
    /// polarity is deliberately wrong (to exercise conflict handling).
    pub fn pair_list(&self, seed: u64, coverage: f64, flip_rate: f64) -> PairList {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for r in &self.relations {
            if !rng.random_bool(coverage.clamp(0.0, 1.0)) {
                continue;
            }
            let label = if rng.random_bool(flip_rate.clamp(0.0, 1.0)) { flip(r.label) } else { r.label };
            entries.push((self.entities[r.subject].id.clone(), self.entities[r.object].id.clone(), label));
        }
        PairList::new(entries).expect("relation table has no duplicates")
    }

    /// Samples `size` news documents named `{prefix}{index}`.
    pub fn generate(&self, seed: u64, size: usize, spec: &DocSpec, prefix: &str) -> Vec<GeneratedDoc> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..size).map(|i| self.document(&mut rng, spec, format!("{prefix}{i}"))).collect()
    }

    fn document(&self, rng: &mut ChaCha8Rng, spec: &DocSpec, doc_id: String) -> GeneratedDoc {
        let rel = self.relations.choose(rng).expect("world has relations");
        let (a, b) = (rel.subject, rel.object);
        let title_matches = rng.random_bool(spec.title_match_rate);
        let title = if title_matches {
            let mut t = Vec::new();
            if rng.random_bool(0.3) {
                t.extend([capitalize(&self.filler(rng, PosTag::Noun)), ":".to_string()]);
            }
            t.push(self.mention(rng, a, spec));
            t.extend(self.frame_run(rng, rel.label, spec));
            t.push(self.mention(rng, b, spec));
            t.join(" ")
        } else {
            // Only one participant: the title is no context for the pair,
            // so a frameless title cannot contradict the gold label.
            let mut t = self.fillers(rng, 1, 2);
            let e = if rng.random_bool(0.5) { a } else { b };
            t.push(self.mention(rng, e, spec));
            t.extend(self.fillers(rng, 1, 2));
            if rng.random_bool(spec.distractor_rate) {
                t.push(self.any_frame(rng));
            }
            t.join(" ")
        };

        let total = rng.random_range(spec.min_sentences.max(1)..=spec.max_sentences.max(spec.min_sentences.max(1)));
        let pair_count = rng.random_range(1..=spec.max_pair_sentences.max(1)).min(total);
        let mut sentences: Vec<String> = (0..pair_count).map(|_| self.pair_sentence(rng, a, b, rel.label, spec)).collect();
        for _ in pair_count..total {
            let s = if rng.random_bool(0.6) {
                self.neutral_sentence(rng, a, b, spec)
            } else {
                let e = if rng.random_bool(0.5) { a } else { b };
                self.single_sentence(rng, e, spec)
            };
            sentences.push(s);
        }
        sentences.shuffle(rng);
        let gold = vec![AttitudeRecord::new(self.entities[a].id.clone(), self.entities[b].id.clone(), rel.label)];
        GeneratedDoc { news: NewsDoc { doc_id, title, sentences }, gold, title_matches }
    }

    fn mention(&self, rng: &mut ChaCha8Rng, entity: usize, spec: &DocSpec) -> String {
        let e = &self.entities[entity];
        match &e.alias {
            Some((surface, id)) if rng.random_bool(spec.alias_rate) => format!("[[{surface}|{id}|{}]]", e.id),
            _ => format!("[[{}|{}|{}]]", e.surface, e.id, e.id),
        }
    }

    fn filler(&self, rng: &mut ChaCha8Rng, tag: PosTag) -> String {
        let pool: Vec<&String> = self.fillers.iter().filter(|(_, t)| *t == tag).map(|(w, _)| w).collect();
        pool.choose(rng).map(|w| w.to_string()).unwrap_or_else(|| self.fillers[0].0.clone())
    }

    fn fillers(&self, rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<String> {
        let n = rng.random_range(min..=max);
        (0..n)
            .map(|_| {
                if !self.sentiment.is_empty() && rng.random_bool(0.1) {
                    self.sentiment.choose(rng).expect("non-empty").0.clone()
                } else {
                    self.fillers.choose(rng).expect("world has fillers").0.clone()
                }
            })
            .collect()
    }

    fn any_frame(&self, rng: &mut ChaCha8Rng) -> String {
        if rng.random_bool(0.5) { &self.pos_frames } else { &self.neg_frames }.choose(rng).expect("frames").clone()
    }

    /// One frame with the given effective polarity, possibly as a negated
    /// frame of the opposite lexicon polarity.
    fn frame_with(&self, rng: &mut ChaCha8Rng, polarity: Label, spec: &DocSpec) -> Vec<String> {
        let negate = rng.random_bool(spec.negation_rate);
        let lexical = if negate { flip(polarity) } else { polarity };
        let pool = if lexical == Label::Pos { &self.pos_frames } else { &self.neg_frames };
        let frame = pool.choose(rng).expect("frames").clone();
        if negate {
            vec![NEGATION.to_string(), frame]
        } else {
            vec![frame]
        }
    }

    /// Frames whose aggregate polarity is `label`, optionally interleaved
    /// with one filler word.
    fn frame_run(&self, rng: &mut ChaCha8Rng, label: Label, spec: &DocSpec) -> Vec<String> {
        let k = rng.random_range(1..=spec.max_frames.max(1));
        let mut polarities = vec![label; k];
        if label == Label::Neg && k >= 2 && rng.random_bool(spec.mixed_rate) {
            let i = rng.random_range(0..k);
            polarities[i] = Label::Pos;
            let j = (i + 1) % k;
            polarities[j] = Label::Neg;
        }
        let mut out = Vec::new();
        for (i, p) in polarities.into_iter().enumerate() {
            if i > 0 && rng.random_bool(0.3) {
                out.extend(self.fillers(rng, 1, 1));
            }
            out.extend(self.frame_with(rng, p, spec));
        }
        out
    }

    fn pair_sentence(&self, rng: &mut ChaCha8Rng, a: usize, b: usize, label: Label, spec: &DocSpec) -> String {
        let mut t = Vec::new();
        let distract = rng.random_bool(spec.distractor_rate);
        let before = rng.random_bool(0.5);
        if distract && before {
            t.push(self.any_frame(rng));
        }
        t.extend(self.fillers(rng, 0, 2));
        t.push(self.mention(rng, a, spec));
        t.extend(self.fillers(rng, 0, 1));
        t.extend(self.frame_run(rng, label, spec));
        t.extend(self.fillers(rng, 0, 1));
        t.push(self.mention(rng, b, spec));
        t.extend(self.fillers(rng, 0, 2));
        if distract && !before {
            t.push(self.any_frame(rng));
        }
        t.push(".".into());
        t.join(" ")
    }

    /// Two entities other than the pair `(a, b)` together (at most one of
    /// them a participant), with no frame between them.
    fn neutral_sentence(&self, rng: &mut ChaCha8Rng, a: usize, b: usize, spec: &DocSpec) -> String {
        let first = if rng.random_bool(0.5) { if rng.random_bool(0.5) { a } else { b } } else { self.other_entity(rng, &[a, b]) };
        let second = self.other_entity(rng, &[a, b, first]);
        let (x, y) = if rng.random_bool(0.5) { (first, second) } else { (second, first) };
        let mut t = Vec::new();
        let distract = rng.random_bool(spec.distractor_rate);
        if distract && rng.random_bool(0.5) {
            t.push(self.any_frame(rng));
            t.extend(self.fillers(rng, 0, 1));
        }
        t.push(self.mention(rng, x, spec));
        t.extend(self.fillers(rng, 1, 3));
        t.push(self.mention(rng, y, spec));
        t.extend(self.fillers(rng, 0, 2));
        if distract && t.iter().all(|w| !self.is_frame(w)) {
            t.push(self.any_frame(rng));
        }
        t.push(".".into());
        t.join(" ")
    }

    fn single_sentence(&self, rng: &mut ChaCha8Rng, e: usize, spec: &DocSpec) -> String {
        let mut t = self.fillers(rng, 0, 2);
        t.push(self.mention(rng, e, spec));
        t.extend(self.fillers(rng, 1, 3));
        if rng.random_bool(spec.distractor_rate) {
            t.push(self.any_frame(rng));
        }
        t.push(".".into());
        t.join(" ")
    }

    fn is_frame(&self, w: &str) -> bool {
        self.pos_frames.iter().chain(&self.neg_frames).any(|f| f == w)
    }

    fn other_entity(&self, rng: &mut ChaCha8Rng, avoid: &[usize]) -> usize {
        loop {
            let e = rng.random_range(0..self.entities.len());
            if !avoid.contains(&e) {
                return e;
            }
        }
    }
}

fn flip(label: Label) -> Label {
    match label {
        Label::Pos => Label::Neg,
        Label::Neg => Label::Pos,
        Label::Neu => Label::Neu,
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
