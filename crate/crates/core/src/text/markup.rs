//! Inline entity markup and tokenization.
//!
//! Entities are written as `[[surface|entity_id|synonym_group]]`; the
//! synonym group may be omitted (`[[surface|entity_id]]`), in which case it
//! defaults to the entity id. Everything else is split into word and
//! punctuation tokens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub entity_id: String,
    pub synonym_group: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawToken {
    Entity(EntityMention),
    Text(String),
}

/// A sentence split into entity mentions and plain tokens.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MarkedSentence {
    pub tokens: Vec<RawToken>,
}

impl MarkedSentence {
    pub fn entities(&self) -> impl Iterator<Item = &EntityMention> {
        self.tokens.iter().filter_map(|t| match t {
            RawToken::Entity(e) => Some(e),
            RawToken::Text(_) => None,
        })
    }

    /// Whether any mention belongs to `synonym_group`.
    pub fn mentions_group(&self, synonym_group: &str) -> bool {
        self.entities().any(|e| e.synonym_group == synonym_group)
    }
}

fn markup_error(offset: usize, message: impl Into<String>) -> Error {
    Error::parse("markup", offset, message)
}

/// Parses one marked sentence. Errors report the byte offset of the
/// offending markup in the `line` field.
pub fn parse_marked(text: &str) -> Result<MarkedSentence> {
    let mut tokens = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find("[[") {
        let plain = &rest[..open];
        if let Some(close) = plain.find("]]") {
            return Err(markup_error(offset + close, "`]]` without matching `[[`"));
        }
        tokenize_into(plain, &mut tokens);
        let inner_start = open + 2;
        let Some(close) = rest[inner_start..].find("]]") else {
            return Err(markup_error(offset + open, "unterminated `[[`"));
        };
        let inner = &rest[inner_start..inner_start + close];
        if inner.contains("[[") {
            return Err(markup_error(offset + open, "nested `[[`"));
        }
        tokens.push(RawToken::Entity(parse_mention(inner).map_err(|m| markup_error(offset + open, m))?));
        let consumed = inner_start + close + 2;
        rest = &rest[consumed..];
        offset += consumed;
    }
    if let Some(close) = rest.find("]]") {
        return Err(markup_error(offset + close, "`]]` without matching `[[`"));
    }
    tokenize_into(rest, &mut tokens);
    Ok(MarkedSentence { tokens })
}

fn parse_mention(inner: &str) -> std::result::Result<EntityMention, String> {
    let fields: Vec<&str> = inner.split('|').map(str::trim).collect();
    let (surface, id, group) = match fields.as_slice() {
        [s, id] => (*s, *id, *id),
        [s, id, g] => (*s, *id, if g.is_empty() { *id } else { *g }),
        _ => return Err(format!("expected `surface|entity_id|synonym_group`, got `{inner}`")),
    };
    if surface.is_empty() || id.is_empty() {
        return Err(format!("empty surface or entity id in `{inner}`"));
    }
    if id.chars().any(char::is_whitespace) || group.chars().any(char::is_whitespace) {
        return Err(format!("whitespace in entity id or synonym group in `{inner}`"));
    }
    Ok(EntityMention { surface: surface.to_string(), entity_id: id.to_string(), synonym_group: group.to_string() })
}

/// Renders a sentence back to marked text.
pub fn render_marked(sentence: &MarkedSentence) -> String {
    sentence
        .tokens
        .iter()
        .map(|t| match t {
            RawToken::Entity(e) => format!("[[{}|{}|{}]]", e.surface, e.entity_id, e.synonym_group),
            RawToken::Text(s) => s.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '«' | '»' | '—' | '–' | '…' | '“' | '”' | '„' | '‘' | '’')
}

pub(crate) fn is_url(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn tokenize_into(text: &str, out: &mut Vec<RawToken>) {
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        if is_url(chunk) {
            let mut end = chars.len();
            while end > 0 && matches!(chars[end - 1], '.' | ',' | ';' | ':' | ')' | '!' | '?') {
                end -= 1;
            }
            out.push(RawToken::Text(chars[..end].iter().collect()));
            out.extend(chars[end..].iter().map(|c| RawToken::Text(c.to_string())));
            continue;
        }
        let mut start = 0;
        while start < chars.len() && is_punct(chars[start]) {
            out.push(RawToken::Text(chars[start].to_string()));
            start += 1;
        }
        let mut end = chars.len();
        while end > start && is_punct(chars[end - 1]) {
            end -= 1;
        }
        if start < end {
            out.push(RawToken::Text(chars[start..end].iter().collect()));
        }
        out.extend(chars[end..].iter().map(|c| RawToken::Text(c.to_string())));
    }
}
