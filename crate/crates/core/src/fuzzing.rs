//! Entry points shared by the fuzz targets and the seed-corpus replay test.
//!
//! Each function feeds arbitrary bytes to one parser or decoder. Errors are
//! expected; panics are bugs. Where a writer exists, an accepted input must
//! survive a write/parse round trip unchanged.

use crate::annotate::{parse_news, write_news, PairList};
use crate::config::RunConfig;
use crate::corpus::{parse_corpus, write_corpus};
use crate::encoders::Model;
use crate::text::embedding::EmbeddingModel;
use crate::text::lexicon::{FrameLexicon, PosTable, SentimentLexicon, TableLemmatizer};
use crate::text::markup::parse_marked;

pub type Target = fn(&[u8]);

/// Every target by name, in the layout of the `fuzz/` directory.
pub const TARGETS: [(&str, Target); 11] = [
    ("markup", markup),
    ("corpus", corpus),
    ("news", news),
    ("embeddings", embeddings),
    ("frame_lexicon", frame_lexicon),
    ("sentiment_lexicon", sentiment_lexicon),
    ("pos_table", pos_table),
    ("lemma_table", lemma_table),
    ("pair_list", pair_list),
    ("config", config),
    ("checkpoint", checkpoint),
];

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn markup(data: &[u8]) {
    if let Some(t) = text(data) {
        if let Ok(s) = parse_marked(t) {
            for e in s.entities() {
                assert!(!e.synonym_group.is_empty());
            }
        }
    }
}

pub fn corpus(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(docs) = parse_corpus(t, "fuzz") {
        let mut out = Vec::new();
        write_corpus(&docs, &mut out).unwrap();
        let again = parse_corpus(std::str::from_utf8(&out).unwrap(), "fuzz").expect("written corpus parses");
        assert_eq!(docs, again);
    }
}

pub fn news(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(docs) = parse_news(t, "fuzz") {
        let mut out = Vec::new();
        write_news(&docs, &mut out).unwrap();
        let again = parse_news(std::str::from_utf8(&out).unwrap(), "fuzz").expect("written news parses");
        assert_eq!(docs, again);
    }
}

pub fn embeddings(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(model) = EmbeddingModel::parse(t, "fuzz") {
        let mut out = Vec::new();
        model.write(&mut out).unwrap();
        let again = EmbeddingModel::parse(std::str::from_utf8(&out).unwrap(), "fuzz").expect("written model parses");
        assert_eq!((again.len(), again.dim()), (model.len(), model.dim()));
    }
}

pub fn frame_lexicon(data: &[u8]) {
    if let Some(t) = text(data) {
        let _ = FrameLexicon::parse(t, "fuzz");
    }
}

pub fn sentiment_lexicon(data: &[u8]) {
    if let Some(t) = text(data) {
        let _ = SentimentLexicon::parse(t, "fuzz");
    }
}

pub fn pos_table(data: &[u8]) {
    if let Some(t) = text(data) {
        let _ = PosTable::parse(t, "fuzz");
    }
}

pub fn lemma_table(data: &[u8]) {
    if let Some(t) = text(data) {
        let _ = TableLemmatizer::parse(t, "fuzz");
    }
}

pub fn pair_list(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(list) = PairList::parse(t, "fuzz") {
        let again = PairList::parse(&list.to_text(), "fuzz").expect("written pair list parses");
        assert_eq!(list, again);
    }
}

pub fn config(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(cfg) = RunConfig::parse(t, "fuzz") {
        let _ = cfg.problems();
        let again = RunConfig::parse(&cfg.to_toml(), "fuzz").expect("written config parses");
        // NaN never equals itself; compare the serialized forms instead.
        assert_eq!(cfg.to_toml(), again.to_toml());
    }
}

pub fn checkpoint(data: &[u8]) {
    if let Ok(model) = Model::from_bytes(data) {
        let bytes = model.to_bytes();
        assert_eq!(Model::from_bytes(&bytes).expect("written checkpoint decodes").to_bytes(), bytes);
    }
}
