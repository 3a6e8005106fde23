//! Context encoders (CNN, PCNN, their feature-attentive variants, BiLSTM and
//! self-attentive BiLSTM) and the shared classifier head.

mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod model;

pub use checkpoint::FORMAT_VERSION;
pub use gradcheck::{check_gradients, GradCheckReport};
pub use layers::Combine;
pub use model::{AttentionTrace, EncoderConfig, EncoderKind, Forward, Model};
