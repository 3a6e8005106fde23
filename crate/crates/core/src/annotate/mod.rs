//! Distant-supervision labeling of news documents.
//!
//! A news title that names two neighbouring entities with a run of frame
//! entries between them yields an attitude (the frame factor); a
//! preassigned list of entity pairs yields another (the pair factor).
//! Content sentences that mention both participants become additional
//! contexts, with the title always kept as the first one.

pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AttitudeRecord, Document};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::text::lexicon::Polarity;
use crate::text::markup::{parse_marked, MarkedSentence};
use crate::text::terms::{SentenceTerm, TextProcessor};

/// A raw news document: a title plus content sentences, all with inline
/// entity markup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewsDoc {
    pub doc_id: String,
    pub title: String,
    #[serde(default)]
    pub sentences: Vec<String>,
}

impl NewsDoc {
    /// Title first, then the content sentences; index 0 is the title.
    pub fn all_sentences(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.title.as_str()).chain(self.sentences.iter().map(String::as_str))
    }
}

pub fn parse_news(text: &str, source_name: &str) -> Result<Vec<NewsDoc>> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: NewsDoc = serde_json::from_str(line).map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
        if doc.doc_id.is_empty() {
            return Err(Error::parse(source_name, i + 1, "empty doc_id"));
        }
        for (k, s) in doc.all_sentences().enumerate() {
            parse_marked(s).map_err(|e| Error::parse(source_name, i + 1, format!("sentence {k}: {e}")))?;
        }
        if !ids.insert(doc.doc_id.clone()) {
            return Err(Error::parse(source_name, i + 1, format!("duplicate doc_id `{}`", doc.doc_id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_news(path: &Path) -> Result<Vec<NewsDoc>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_news(&text, &path.display().to_string())
}

pub fn write_news(docs: &[NewsDoc], out: &mut impl std::io::Write) -> std::io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut *out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Ordered entity pairs (synonym groups) with preassigned polarity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairList {
    entries: BTreeMap<(String, String), Label>,
}

impl PairList {
    pub fn new(entries: impl IntoIterator<Item = (String, String, Label)>) -> Result<Self> {
        let mut list = Self::default();
        for (s, o, l) in entries {
            list.insert(s, o, l).map_err(Error::InvalidArgument)?;
        }
        Ok(list)
    }

    fn insert(&mut self, subject: String, object: String, label: Label) -> std::result::Result<(), String> {
        if !label.is_sentiment() {
            return Err(format!("pair {subject}→{object}: polarity must be pos or neg"));
        }
        if subject == object {
            return Err(format!("pair {subject}→{object} relates an entity to itself"));
        }
        let key = (subject, object);
        if self.entries.contains_key(&key) {
            return Err(format!("duplicate pair {}→{}", key.0, key.1));
        }
        self.entries.insert(key, label);
        Ok(())
    }

    /// Parses `subject<TAB>object<TAB>pos|neg` lines; `#` starts a comment.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut list = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 3 || f[0].is_empty() || f[1].is_empty() {
                return Err(Error::parse(source_name, i + 1, "expected `subject<TAB>object<TAB>polarity`"));
            }
            let label = f[2].parse::<Label>().map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
            list.insert(f[0].to_string(), f[1].to_string(), label).map_err(|m| Error::parse(source_name, i + 1, m))?;
        }
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|((s, o), l)| format!("{s}\t{o}\t{l}\n")).collect()
    }

    pub fn get(&self, subject: &str, object: &str) -> Option<Label> {
        self.entries.get(&(subject.to_string(), object.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Label)> {
        self.entries.iter().map(|((s, o), l)| (s.as_str(), o.as_str(), *l))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    FrameBased,
    PairBased,
    Both,
}

/// A directed attitude found by the annotator. Participants are synonym
/// groups; `sentences` holds supporting sentence indices with 0 = title.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledAttitude {
    pub subject: String,
    pub object: String,
    pub polarity: Label,
    pub source: Factor,
    pub sentences: Vec<usize>,
}

impl LabeledAttitude {
    fn new(subject: &str, object: &str, polarity: Label, source: Factor) -> Self {
        Self { subject: subject.into(), object: object.into(), polarity, source, sentences: vec![0] }
    }

    pub fn record(&self) -> AttitudeRecord {
        AttitudeRecord::new(self.subject.clone(), self.object.clone(), self.polarity)
    }
}

impl fmt::Display for LabeledAttitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}→{}_{}", self.subject, self.object, self.polarity)
    }
}

/// Frame factor over an analyzed title: every pair of neighbouring entity
/// mentions (no other mention between them) separated by at least one
/// frame entry. Positive iff every frame between them is positive after
/// negation; any other mix is negative.
pub fn frame_based_label(title: &[SentenceTerm]) -> Vec<LabeledAttitude> {
    let mentions: Vec<(usize, &str)> = title
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match t {
            SentenceTerm::Entity(e) => Some((i, e.synonym_group.as_str())),
            _ => None,
        })
        .collect();
    let mut out: Vec<LabeledAttitude> = Vec::new();
    for w in mentions.windows(2) {
        let ((i, subj), (j, obj)) = (w[0], w[1]);
        if subj == obj {
            continue;
        }
        let polarities: Vec<Polarity> = title[i + 1..j]
            .iter()
            .filter_map(|t| match t {
                SentenceTerm::Frame { polarity, .. } => Some(*polarity),
                _ => None,
            })
            .collect();
        if polarities.is_empty() {
            continue;
        }
        let label = if polarities.iter().all(|&p| p == Polarity::Pos) { Label::Pos } else { Label::Neg };
        match out.iter_mut().find(|a| a.subject == subj && a.object == obj) {
            // The same pair matched twice with different signs: negative wins,
            // as it would had both frame runs been one set.
            Some(prev) if prev.polarity != label => prev.polarity = Label::Neg,
            Some(_) => {}
            None => out.push(LabeledAttitude::new(subj, obj, label, Factor::FrameBased)),
        }
    }
    out
}

/// Pair factor: listed ordered pairs whose subject is mentioned before the
/// object somewhere in the title.
pub fn pair_based_label(title: &MarkedSentence, pairs: &PairList) -> Vec<LabeledAttitude> {
    let groups: Vec<&str> = title.entities().map(|e| e.synonym_group.as_str()).collect();
    let mut out: Vec<LabeledAttitude> = Vec::new();
    for (i, subj) in groups.iter().enumerate() {
        for obj in &groups[i + 1..] {
            if subj == obj || out.iter().any(|a| a.subject == *subj && a.object == *obj) {
                continue;
            }
            if let Some(label) = pairs.get(subj, obj) {
                out.push(LabeledAttitude::new(subj, obj, label, Factor::PairBased));
            }
        }
    }
    out
}

/// Indices (1-based, title excluded) of content sentences mentioning both
/// participants of `attitude`.
pub fn filter_sentences(content: &[MarkedSentence], subject: &str, object: &str) -> Vec<usize> {
    content
        .iter()
        .enumerate()
        .filter(|(_, s)| s.mentions_group(subject) && s.mentions_group(object))
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationMode {
    #[default]
    BothFactors,
    FrameOnly,
    PairOnly,
}

impl AnnotationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationMode::BothFactors => "both_factors",
            AnnotationMode::FrameOnly => "frame_only",
            AnnotationMode::PairOnly => "pair_only",
        }
    }
}

impl fmt::Display for AnnotationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnnotationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").to_ascii_lowercase().as_str() {
            "both_factors" | "both" => Ok(AnnotationMode::BothFactors),
            "frame_only" | "frame" => Ok(AnnotationMode::FrameOnly),
            "pair_only" | "pair" => Ok(AnnotationMode::PairOnly),
            other => Err(Error::InvalidArgument(format!("unknown annotation mode `{other}`"))),
        }
    }
}

/// Pair on which the two factors disagreed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub doc_id: String,
    pub subject: String,
    pub object: String,
    pub frame_polarity: Label,
    pub pair_polarity: Label,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AnnotationReport {
    pub documents_read: usize,
    pub documents_emitted: usize,
    pub attitudes_emitted: usize,
    pub conflicts: Vec<Conflict>,
}

impl fmt::Display for AnnotationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "documents read: {}\ndocuments emitted: {}\nattitudes emitted: {}\nconflicts dropped: {}",
            self.documents_read,
            self.documents_emitted,
            self.attitudes_emitted,
            self.conflicts.len()
        )
    }
}

/// Per-document annotation result before conversion to the corpus format.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedDoc {
    pub doc_id: String,
    pub attitudes: Vec<LabeledAttitude>,
    pub conflicts: Vec<Conflict>,
}

/// Labels one news document.
pub fn annotate_doc(
    doc: &NewsDoc,
    processor: &TextProcessor,
    pairs: &PairList,
    mode: AnnotationMode,
) -> Result<AnnotatedDoc> {
    let marked: Vec<MarkedSentence> = doc
        .all_sentences()
        .enumerate()
        .map(|(i, s)| parse_marked(s).map_err(|e| Error::parse(format!("{}#{i}", doc.doc_id), 0, e.to_string())))
        .collect::<Result<_>>()?;
    let title = &marked[0];
    let by_frames = || frame_based_label(&processor.analyze(title));
    let mut conflicts = Vec::new();
    let mut attitudes = match mode {
        AnnotationMode::FrameOnly => by_frames(),
        AnnotationMode::PairOnly => pair_based_label(title, pairs),
        AnnotationMode::BothFactors => {
            let listed = pair_based_label(title, pairs);
            by_frames()
                .into_iter()
                .filter_map(|mut a| {
                    let p = listed.iter().find(|p| p.subject == a.subject && p.object == a.object)?;
                    if p.polarity == a.polarity {
                        a.source = Factor::Both;
                        Some(a)
                    } else {
                        conflicts.push(Conflict {
                            doc_id: doc.doc_id.clone(),
                            subject: a.subject.clone(),
                            object: a.object.clone(),
                            frame_polarity: a.polarity,
                            pair_polarity: p.polarity,
                        });
                        None
                    }
                })
                .collect()
        }
    };
    for a in &mut attitudes {
        a.sentences.extend(filter_sentences(&marked[1..], &a.subject, &a.object));
    }
    Ok(AnnotatedDoc { doc_id: doc.doc_id.clone(), attitudes, conflicts })
}

/// Converts an annotation into the training corpus format: the title plus
/// every sentence supporting some attitude, in original order.
pub fn to_document(doc: &NewsDoc, annotated: &AnnotatedDoc) -> Document {
    let keep: std::collections::BTreeSet<usize> =
        annotated.attitudes.iter().flat_map(|a| a.sentences.iter().copied()).chain([0]).collect();
    let sentences = doc.all_sentences().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, s)| s.to_string()).collect();
    Document {
        doc_id: doc.doc_id.clone(),
        split: None,
        sentences,
        attitudes: annotated.attitudes.iter().map(LabeledAttitude::record).collect(),
    }
}

/// Annotates a news collection. Documents without attitudes are left out
/// of the output corpus.
pub fn annotate_corpus(
    docs: &[NewsDoc],
    processor: &TextProcessor,
    pairs: &PairList,
    mode: AnnotationMode,
) -> Result<(Vec<Document>, AnnotationReport)> {
    let mut out = Vec::new();
    let mut report = AnnotationReport { documents_read: docs.len(), ..Default::default() };
    for doc in docs {
        let annotated = annotate_doc(doc, processor, pairs, mode)?;
        report.conflicts.extend(annotated.conflicts.iter().cloned());
        if annotated.attitudes.is_empty() {
            continue;
        }
        report.attitudes_emitted += annotated.attitudes.len();
        out.push(to_document(doc, &annotated));
    }
    report.documents_emitted = out.len();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::lexicon::{FrameLexicon, PosTable};

    fn processor() -> TextProcessor {
        TextProcessor::new(
            FrameLexicon::from_pairs([
                ("continue", Polarity::Pos),
                ("supporting", Polarity::Pos),
                ("support", Polarity::Pos),
                ("condemn", Polarity::Neg),
                ("threat", Polarity::Neg),
            ]),
            PosTable::default(),
        )
        .with_negation("not")
    }

    fn title(p: &TextProcessor, s: &str) -> Vec<SentenceTerm> {
        p.analyze(&parse_marked(s).unwrap())
    }

    #[test]
    fn frame_polarity_is_pos_only_when_all_frames_are_pos() {
        let p = processor();
        let words = [("support", true), ("condemn", false)];
        // Every sequence of 1..=3 frames.
        for k in 1..=3u32 {
            for code in 0..2usize.pow(k) {
                let picks: Vec<_> = (0..k).map(|b| words[(code >> b) & 1]).collect();
                let body: Vec<&str> = picks.iter().map(|w| w.0).collect();
                let s = format!("[[A|a]] {} [[B|b]]", body.join(" "));
                let got = frame_based_label(&title(&p, &s));
                assert_eq!(got.len(), 1, "{s}");
                let want = if picks.iter().all(|w| w.1) { Label::Pos } else { Label::Neg };
                assert_eq!(got[0].polarity, want, "{s}");
            }
        }
    }

    #[test]
    fn frame_factor_needs_neighbours_and_frames() {
        let p = processor();
        assert!(frame_based_label(&title(&p, "[[A|a]] meets [[B|b]]")).is_empty());
        assert!(frame_based_label(&title(&p, "[[A|a]] support")).is_empty());
        // C sits between A and B, so only A→C and C→B are neighbours.
        let got = frame_based_label(&title(&p, "[[A|a]] support [[C|c]] and [[B|b]]"));
        assert_eq!(got.len(), 1);
        assert_eq!((got[0].subject.as_str(), got[0].object.as_str()), ("a", "c"));
        // Negation flips the frame inside the title.
        let got = frame_based_label(&title(&p, "[[A|a]] not condemn [[B|b]]"));
        assert_eq!(got[0].polarity, Label::Pos);
        let got = frame_based_label(&title(&p, "[[A|a]] not support [[B|b]]"));
        assert_eq!(got[0].polarity, Label::Neg);
    }

    #[test]
    fn pair_factor_respects_direction() {
        let pairs = PairList::parse("a\tb\tneg\n", "pairs").unwrap();
        let t = parse_marked("[[A|a]] and [[B|b]]").unwrap();
        let got = pair_based_label(&t, &pairs);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].polarity, Label::Neg);
        let rev = parse_marked("[[B|b]] and [[A|a]]").unwrap();
        assert!(pair_based_label(&rev, &pairs).is_empty());
        assert!(pair_based_label(&t, &PairList::default()).is_empty());
    }

    #[test]
    fn pair_list_parsing() {
        let list = PairList::parse("# c\na\tb\tpos\nb\ta\tnegative\n", "p").unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(PairList::parse(&list.to_text(), "p").unwrap(), list);
        for bad in ["a\tb\n", "a\tb\tpos\na\tb\tneg\n", "a\ta\tpos\n", "a\tb\tneu\n", "a\tb\tmaybe\n"] {
            assert!(PairList::parse(bad, "p").is_err(), "{bad:?}");
        }
    }

    #[test]
    fn filter_keeps_only_sentences_with_both_participants() {
        let content: Vec<_> = ["[[A|a]] x [[B|b2|b]]", "[[A|a]] only", "none", "[[B|b]] then [[A|a]]"]
            .iter()
            .map(|s| parse_marked(s).unwrap())
            .collect();
        assert_eq!(filter_sentences(&content, "a", "b"), vec![1, 4]);
        for id in filter_sentences(&content, "a", "b") {
            assert!(content[id - 1].mentions_group("a") && content[id - 1].mentions_group("b"));
        }
    }

    fn doc(title: &str, sentences: &[&str]) -> NewsDoc {
        NewsDoc { doc_id: "n".into(), title: title.into(), sentences: sentences.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn modes_and_conflicts() {
        let p = processor();
        let d = doc("[[A|a]] support [[B|b]]", &["[[B|b]] and [[A|a]] met", "[[A|a]] alone"]);
        let agree = PairList::parse("a\tb\tpos\n", "p").unwrap();
        let disagree = PairList::parse("a\tb\tneg\n", "p").unwrap();
        let none = PairList::default();

        let (docs, rep) = annotate_corpus(std::slice::from_ref(&d), &p, &agree, AnnotationMode::BothFactors).unwrap();
        assert_eq!(rep.attitudes_emitted, 1);
        assert_eq!(docs[0].sentences.len(), 2, "title plus the sentence with both");
        assert_eq!(docs[0].attitudes, vec![AttitudeRecord::new("a", "b", Label::Pos)]);

        let (docs, rep) = annotate_corpus(std::slice::from_ref(&d), &p, &none, AnnotationMode::BothFactors).unwrap();
        assert!(docs.is_empty());
        assert!(rep.conflicts.is_empty());

        let (docs, rep) = annotate_corpus(std::slice::from_ref(&d), &p, &disagree, AnnotationMode::BothFactors).unwrap();
        assert!(docs.is_empty());
        assert_eq!(rep.conflicts.len(), 1);
        assert_eq!(rep.conflicts[0].pair_polarity, Label::Neg);

        let (_, rep) = annotate_corpus(std::slice::from_ref(&d), &p, &none, AnnotationMode::FrameOnly).unwrap();
        assert_eq!(rep.attitudes_emitted, 1);
        let (docs, _) = annotate_corpus(std::slice::from_ref(&d), &p, &disagree, AnnotationMode::PairOnly).unwrap();
        assert_eq!(docs[0].attitudes[0].label, Label::Neg);

        let (docs, rep) = annotate_corpus(&[], &p, &agree, AnnotationMode::BothFactors).unwrap();
        assert!(docs.is_empty());
        assert_eq!(rep, AnnotationReport::default());
    }

    #[test]
    fn title_only_support_is_kept() {
        let p = processor();
        let d = doc("[[A|a]] support [[B|b]]", &["nothing here"]);
        let a = annotate_doc(&d, &p, &PairList::default(), AnnotationMode::FrameOnly).unwrap();
        assert_eq!(a.attitudes[0].sentences, vec![0]);
        assert_eq!(to_document(&d, &a).sentences, vec!["[[A|a]] support [[B|b]]".to_string()]);
    }

    #[test]
    fn news_parsing() {
        let text = "{\"doc_id\":\"x\",\"title\":\"[[A|a]] t\",\"sentences\":[\"s\"]}\n\n";
        let docs = parse_news(text, "n").unwrap();
        assert_eq!(docs.len(), 1);
        let mut buf = Vec::new();
        write_news(&docs, &mut buf).unwrap();
        assert_eq!(parse_news(std::str::from_utf8(&buf).unwrap(), "n").unwrap(), docs);
        assert!(parse_news("{\"doc_id\":\"x\",\"title\":\"[[broken\"}", "n").is_err());
        assert!(parse_news("{\"doc_id\":\"\",\"title\":\"t\"}", "n").is_err());
        assert!(parse_news("{\"doc_id\":\"x\",\"title\":\"t\",\"extra\":1}", "n").is_err());
        assert!(parse_news(&format!("{}{}", text, text), "n").is_err());
    }
}
