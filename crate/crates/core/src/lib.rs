//! End-to-end summarization of interleaved multi-thread texts.
//!
//! The crate is organised as a small laboratory:
//!
//! - [`ndgrad`]: a reverse-mode differentiation tape over dense `f64` arrays.
//! - [`textproc`]: tokenization, word vocabularies and byte-pair encoding.
//! - [`corpusforge`]: ingestion of document/summary corpora and synthesis of
//!   interleaved text/summary pairs.
//! - [`hiernet`]: the hierarchical encoder-decoder with three attention levels
//!   and a stop head.
//! - [`trainer`]: the joint objective, Adam, and pretrain/fine-tune with frozen
//!   parameter groups.
//! - [`rougemetrics`]: ROUGE-1/2/L and summary statistics.
//! - [`baseline2step`]: a cluster-then-extract comparison system.
//! - [`cli`]: the `hiersumm` command-line front end.

pub mod baseline2step;
pub mod cli;
pub mod corpusforge;
pub mod error;
pub mod hiernet;
pub mod io;
pub mod ndgrad;
pub mod rng;
pub mod rougemetrics;
pub mod textproc;
pub mod trainer;

pub use error::{Error, Result};
