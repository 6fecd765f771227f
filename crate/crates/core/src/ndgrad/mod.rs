//! Minimal reverse-mode differentiation over dense `f64` arrays.
//!
//! A [`Graph`] records primitive operations as they are evaluated. Calling
//! [`Graph::backward`] on a scalar node sweeps the record in reverse and
//! leaves gradients on every leaf created with `requires_grad`.
//! [`grad_check`] compares those gradients with central differences.

mod gradcheck;
mod graph;
mod ops;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport};
pub use graph::{Graph, Var};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
