//! Documents → model-ready examples (one per document-level attitude).

use crate::corpus::{attitude_contexts, AttitudeRecord, Document};
use crate::error::Result;
use crate::evaluation::task_attitudes;
use crate::label::Scale;
use crate::text::embedding::WordEmbedder;
use crate::text::features::{assemble_features, InputEmbedding};
use crate::text::terms::{Context, TextProcessor};

/// A document-level attitude with its embedded contexts.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub doc_id: String,
    pub attitude: AttitudeRecord,
    pub contexts: Vec<Context>,
    pub inputs: Vec<InputEmbedding>,
}

/// Everything needed to turn documents into examples.
#[derive(Debug)]
pub struct Featurizer<'a> {
    pub processor: &'a TextProcessor,
    pub embedder: &'a WordEmbedder,
    pub scale: Scale,
}

impl Featurizer<'_> {
    /// Examples for every task attitude of every document, in document order.
    /// Attitudes without any valid context are kept with empty inputs so
    /// evaluation can account for them.
    pub fn examples(&self, docs: &[Document]) -> Result<Vec<Example>> {
        let mut out = Vec::new();
        for doc in docs {
            let attitudes = task_attitudes(doc, self.scale)?;
            for ac in attitude_contexts(doc, &attitudes, self.processor)? {
                let inputs = ac
                    .contexts
                    .iter()
                    .map(|c| assemble_features(c, self.embedder, self.processor.n_max))
                    .collect::<Result<Vec<_>>>()?;
                out.push(Example { doc_id: ac.doc_id, attitude: ac.attitude, contexts: ac.contexts, inputs });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use crate::label::Label;
    use crate::text::embedding::EmbeddingModel;
    use crate::text::lexicon::{FrameLexicon, PosTable};

    #[test]
    fn examples_cover_task_attitudes() {
        let docs = parse_corpus(
            r#"{"doc_id":"d","sentences":["[[A|a]] likes [[B|b]] .","[[C|c]] far away ."],"attitudes":[{"subject":"a","object":"b","label":"pos"},{"subject":"a","object":"c","label":"neg"}]}"#,
            "c",
        )
        .unwrap();
        let p = TextProcessor::new(FrameLexicon::default(), PosTable::default());
        let e = WordEmbedder::new(EmbeddingModel::parse("likes 1 0\n", "m").unwrap(), 1);
        let two = Featurizer { processor: &p, embedder: &e, scale: Scale::Two }.examples(&docs).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].inputs.len(), 1);
        assert!(two[1].inputs.is_empty(), "a and c never share a sentence");
        let three = Featurizer { processor: &p, embedder: &e, scale: Scale::Three }.examples(&docs).unwrap();
        assert_eq!(three.len(), 3);
        assert_eq!(three[2].attitude, AttitudeRecord::new("b", "a", Label::Neu));
    }
}
