//! Raw text to model input: markup, lexicons, term sequences, embeddings.

pub mod embedding;
pub mod features;
pub mod lexicon;
pub mod markup;
pub mod terms;

pub use embedding::{EmbeddingModel, WordEmbedder};
pub use features::{assemble_features, Feature, InputEmbedding};
pub use lexicon::{FrameLexicon, Lemmatizer, Polarity, PosTable, PosTag, SentimentLexicon};
pub use markup::{parse_marked, EntityMention, MarkedSentence, RawToken};
pub use terms::{Context, Rejection, Role, Term, TermGroup, TextProcessor, TokenKind};
