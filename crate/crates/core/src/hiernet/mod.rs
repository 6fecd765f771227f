//! Hierarchical encoder-decoder over interleaved posts.
//!
//! Words are encoded per post, posts per channel. A thread-level decoder
//! picks posts and words through sigmoid gates, and a word-level decoder
//! writes one summary sentence per thread step.

pub mod checkpoint;
mod config;
mod decoder;
mod encoder;
mod layers;
mod model;
mod params;

#[cfg(test)]
mod tests;

pub use config::ModelConfig;
pub use decoder::{
    decode_sentence, thread_step, AttentionKeys, AttentionState, DecodeMode, SentenceDecoding, ThreadState,
    ThreadStepOutput,
};
pub use encoder::{encode_channel, encode_posts, ChannelBatch, ChannelEncoding};
pub use model::{generate, teacher_forward, Generated, HierModel, StopStep, TeacherForward, WordStep};
pub use params::{Bound, ParamEntry, ParamGroup, Parameters};
