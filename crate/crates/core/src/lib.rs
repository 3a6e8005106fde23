//! Sentiment attitude extraction between named entities.
//!
//! The crate covers the whole pipeline: turning marked-up sentences into
//! masked term contexts, six attention and non-attention context encoders
//! built on a small reverse-mode autodiff tape, bag-structured training,
//! distant-supervision labeling of news titles, document-level evaluation
//! and the attention-weight distribution analysis.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod annotate;
pub mod autodiff;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod encoders;
pub mod error;
pub mod evaluation;
#[doc(hidden)]
pub mod fuzzing;
pub mod init;
pub mod label;
pub mod optim;
pub mod params;
pub mod pipeline;
pub mod tensor;
pub mod text;
pub mod training;

pub use error::{Error, Result};
pub use label::{Label, Scale};
pub use tensor::Tensor;
