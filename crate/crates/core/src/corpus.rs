//! Line-delimited JSON corpus: one document per line with marked-up
//! sentences and document-level attitudes.
//!
//! ```text
//! {"doc_id":"d1","split":"train","sentences":["[[USA|usa]] supports [[Georgia|georgia]] ."],
//!  "attitudes":[{"subject":"usa","object":"georgia","label":"pos"}]}
//! ```
//!
//! Attitude participants name synonym groups (which default to the entity
//! id when the markup omits them).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::text::markup::{parse_marked, MarkedSentence};
use crate::text::terms::{Context, TextProcessor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeRecord {
    pub subject: String,
    pub object: String,
    pub label: Label,
}

impl AttitudeRecord {
    pub fn new(subject: impl Into<String>, object: impl Into<String>, label: Label) -> Self {
        Self { subject: subject.into(), object: object.into(), label }
    }
}

impl fmt::Display for AttitudeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}→{}_{}", self.subject, self.object, self.label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub sentences: Vec<String>,
    #[serde(default)]
    pub attitudes: Vec<AttitudeRecord>,
}

impl Document {
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    /// Parses every sentence's markup; errors name the document and sentence.
    pub fn marked_sentences(&self) -> Result<Vec<MarkedSentence>> {
        self.sentences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                parse_marked(s).map_err(|e| Error::parse(format!("{}#{i}", self.doc_id), 0, e.to_string()))
            })
            .collect()
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        let mut seen = std::collections::HashSet::new();
        for a in &self.attitudes {
            if a.subject == a.object {
                return Err(format!("attitude {a} relates an entity to itself"));
            }
            if !seen.insert((&a.subject, &a.object)) {
                return Err(format!("duplicate attitude {}→{}", a.subject, a.object));
            }
        }
        Ok(())
    }
}

/// Parses the JSONL corpus format. Blank lines are skipped; document ids
/// must be unique.
pub fn parse_corpus(text: &str, source_name: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(line).map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
        doc.check().map_err(|m| Error::parse(source_name, i + 1, m))?;
        for (k, s) in doc.sentences.iter().enumerate() {
            parse_marked(s).map_err(|e| Error::parse(source_name, i + 1, format!("sentence {k}: {e}")))?;
        }
        if !ids.insert(doc.doc_id.clone()) {
            return Err(Error::parse(source_name, i + 1, format!("duplicate doc_id `{}`", doc.doc_id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, &path.display().to_string())
}

pub fn write_corpus(docs: &[Document], out: &mut impl Write) -> std::io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut *out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(docs: &[Document], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_corpus(docs, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// All contexts of one document-level attitude.
#[derive(Clone, Debug, PartialEq)]
pub struct AttitudeContexts {
    pub doc_id: String,
    pub attitude: AttitudeRecord,
    pub contexts: Vec<Context>,
}

/// Builds the contexts of every attitude in `attitudes` from the sentences
/// of `doc`. Each sentence contributes at most one context per attitude;
/// rejected pairs (missing participant, too far apart) are skipped.
pub fn attitude_contexts(
    doc: &Document,
    attitudes: &[AttitudeRecord],
    processor: &TextProcessor,
) -> Result<Vec<AttitudeContexts>> {
    let analyzed: Vec<_> = doc.marked_sentences()?.iter().map(|s| processor.analyze(s)).collect();
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    let out = attitudes
        .iter()
        .map(|a| {
            let contexts = analyzed
                .iter()
                .enumerate()
                .filter_map(|(sid, terms)| {
                    match processor.build_context(terms, &a.subject, &a.object, a.label, &doc.doc_id, sid) {
                        Ok(c) => Some(c),
                        Err(r) => {
                            *rejected.entry(r.to_string()).or_default() += 1;
                            None
                        }
                    }
                })
                .collect();
            AttitudeContexts { doc_id: doc.doc_id.clone(), attitude: a.clone(), contexts }
        })
        .collect();
    for (reason, n) in rejected {
        log::trace!("{}: {n} sentence(s) rejected: {reason}", doc.doc_id);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::lexicon::{FrameLexicon, PosTable};

    const LINE: &str = r#"{"doc_id":"d1","split":"train","sentences":["[[USA|usa]] supports [[Georgia|georgia]] .","[[Georgia|georgia]] thanks [[US|us2|usa]] ."],"attitudes":[{"subject":"usa","object":"georgia","label":"pos"}]}"#;

    #[test]
    fn parse_and_round_trip() {
        let text = format!("{LINE}\n\n");
        let docs = parse_corpus(&text, "c").unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].split, Some(Split::Train));
        assert_eq!(docs[0].attitudes[0], AttitudeRecord::new("usa", "georgia", Label::Pos));
        let mut buf = Vec::new();
        write_corpus(&docs, &mut buf).unwrap();
        assert_eq!(parse_corpus(std::str::from_utf8(&buf).unwrap(), "c").unwrap(), docs);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = format!("{LINE}\n{{\"doc_id\":\"x\",\"sentences\":[],\"bogus\":1}}\n");
        match parse_corpus(&bad, "c") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let dup = format!("{LINE}\n{LINE}\n");
        assert!(parse_corpus(&dup, "c").is_err());
        let self_rel = r#"{"doc_id":"x","sentences":[],"attitudes":[{"subject":"a","object":"a","label":"pos"}]}"#;
        assert!(parse_corpus(self_rel, "c").is_err());
        let bad_markup = r#"{"doc_id":"x","sentences":["[[broken"]}"#;
        assert!(parse_corpus(bad_markup, "c").is_err());
    }

    #[test]
    fn contexts_follow_synonym_groups() {
        let docs = parse_corpus(LINE, "c").unwrap();
        let p = TextProcessor::new(FrameLexicon::default(), PosTable::default());
        let out = attitude_contexts(&docs[0], &docs[0].attitudes, &p).unwrap();
        assert_eq!(out.len(), 1);
        // Both sentences mention the pair; the second through the synonym `us2`.
        assert_eq!(out[0].contexts.len(), 2);
        assert_eq!(out[0].contexts[1].render(), "$E_obj$ thanks $E_subj$ <DOT>");
        assert_eq!(out[0].contexts[1].sentence_id, 1);
    }
}
