use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

use super::ops::Op;
use super::tensor::Tensor;

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

struct Node {
    value: Tensor,
    op: Op,
    inputs: Vec<Var>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

/// Computation record for one forward pass.
///
/// Nodes are appended in evaluation order, so every input of node `i` has an
/// index below `i`. A graph is single-owner: build it, run
/// [`Graph::backward`], read gradients, drop it.
pub struct Graph {
    nodes: Vec<Node>,
    training: bool,
    rng: Rng,
}

impl Graph {
    /// Evaluation-mode graph; `seed` drives dropout masks once training is enabled.
    pub fn new(seed: u64) -> Self {
        Self {
            nodes: Vec::new(),
            training: false,
            rng: rng::seeded(seed),
        }
    }

    pub fn training(seed: u64) -> Self {
        let mut g = Self::new(seed);
        g.training = true;
        g
    }

    pub fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            inputs: Vec::new(),
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last [`Graph::backward`] loss with respect to a leaf.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let node = &self.nodes[v.0];
        node.grad
            .as_ref()
            .map(|g| Tensor::from_parts(node.value.shape().to_vec(), g.clone()))
    }

    fn push(&mut self, op: Op, inputs: Vec<Var>) -> Result<Var> {
        let value = {
            let xs: Vec<&Tensor> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
            op.forward(&xs)?
        };
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            inputs,
            requires_grad,
            grad: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::MatMul, vec![a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Add, vec![a, b])
    }

    /// `x + bias`, with `bias` broadcast over every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        self.push(Op::AddRow, vec![x, bias])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Mul, vec![a, b])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        self.push(Op::Scale(c), vec![x])
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Result<Var> {
        self.push(Op::AddScalar(c), vec![x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.push(Op::Sigmoid, vec![x])
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.push(Op::Tanh, vec![x])
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        self.push(Op::Log, vec![x])
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        self.push(Op::Exp, vec![x])
    }

    pub fn concat_cols(&mut self, xs: &[Var]) -> Result<Var> {
        self.push(Op::ConcatCols, xs.to_vec())
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        self.push(Op::SliceCols { start, len }, vec![x])
    }

    /// Stacks matrices vertically into a `[sum rows, cols]` matrix.
    pub fn concat_rows(&mut self, xs: &[Var]) -> Result<Var> {
        self.push(Op::ConcatRows, xs.to_vec())
    }

    /// Row lookup; with an embedding table as `x` this is an embedding lookup.
    pub fn gather_rows(&mut self, x: Var, indices: Vec<usize>) -> Result<Var> {
        self.push(Op::GatherRows(indices), vec![x])
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        self.push(Op::Reshape(shape), vec![x])
    }

    /// Mean over the second-to-last axis of `x: [.., n, d]`, counting only
    /// positions whose mask entry is nonzero. Fully masked groups give zeros.
    pub fn masked_mean(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        self.push(Op::MaskedMean(mask), vec![x])
    }

    /// Softmax over the last axis restricted to unmasked entries; masked
    /// entries are exactly zero.
    pub fn softmax(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        self.push(Op::Softmax(mask), vec![x])
    }

    /// Repeats every row `times` times: `[r, c] -> [r * times, c]`.
    pub fn repeat_rows(&mut self, x: Var, times: usize) -> Result<Var> {
        self.push(Op::RepeatRows(times), vec![x])
    }

    /// `out[g] = sum_j weights[g, j] * values[g, j, :]` for `values: [.., n, d]`.
    pub fn group_weighted_sum(&mut self, weights: Var, values: Var) -> Result<Var> {
        self.push(Op::GroupWeightedSum, vec![weights, values])
    }

    /// Row-wise `mask * new + (1 - mask) * prev`.
    pub fn blend(&mut self, new: Var, prev: Var, mask: Vec<f64>) -> Result<Var> {
        self.push(Op::Blend(mask), vec![new, prev])
    }

    /// Multiplies each row by a constant.
    pub fn mask_rows(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        self.push(Op::MaskRows(mask), vec![x])
    }

    /// Inverted dropout. Identity in evaluation mode or when `rate == 0`.
    pub fn dropout(&mut self, x: Var, rate: f64) -> Result<Var> {
        if !self.training || rate <= 0.0 {
            return Ok(x);
        }
        if rate >= 1.0 {
            return Err(Error::Contract(format!("dropout rate {rate} must be below 1")));
        }
        let keep = 1.0 / (1.0 - rate);
        let n = self.value(x).numel();
        let mask = (0..n)
            .map(|_| if self.rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        self.push(Op::Dropout(mask), vec![x])
    }

    /// `sum_r weights[r] * -log softmax(logits[r])[targets[r]]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: Vec<usize>, weights: Vec<f64>) -> Result<Var> {
        self.push(Op::CrossEntropy { targets, weights }, vec![logits])
    }

    /// `sum_r weights[r] * BCE(sigmoid(logits[r]), targets[r])`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Vec<f64>, weights: Vec<f64>) -> Result<Var> {
        self.push(Op::BceLogits { targets, weights }, vec![logits])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.push(Op::Sum, vec![x])
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Afterwards every `requires_grad` leaf holds a gradient; leaves that do
    /// not influence `loss` hold zeros.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            let node = &self.nodes[i];
            let needs: Vec<bool> = node.inputs.iter().map(|v| self.nodes[v.0].requires_grad).collect();
            let grads = {
                let xs: Vec<&Tensor> = node.inputs.iter().map(|v| &self.nodes[v.0].value).collect();
                node.op.backward(&xs, &node.value, &g, &needs)
            };
            let inputs = node.inputs.clone();
            for ((input, grad), need) in inputs.into_iter().zip(grads).zip(needs) {
                let (Some(grad), true) = (grad, need) else {
                    continue;
                };
                match &mut self.nodes[input.0].grad {
                    Some(acc) => acc.iter_mut().zip(&grad).for_each(|(a, b)| *a += b),
                    slot @ None => *slot = Some(grad),
                }
            }
        }
        for node in &mut self.nodes {
            if node.requires_grad && matches!(node.op, Op::Leaf) && node.grad.is_none() {
                node.grad = Some(vec![0.0; node.value.numel()]);
            }
        }
        Ok(())
    }

    /// Recomputes every recorded node from its inputs and checks the result
    /// is bit-identical to the stored value.
    pub fn verify_replay(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            if node.inputs.iter().any(|v| v.0 >= i) {
                return Err(Error::Contract(format!("node {i} is not topologically ordered")));
            }
            let xs: Vec<&Tensor> = node.inputs.iter().map(|v| &self.nodes[v.0].value).collect();
            let again = node.op.forward(&xs)?;
            let same = again.shape() == node.value.shape()
                && again
                    .data()
                    .iter()
                    .zip(node.value.data())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return Err(Error::Contract(format!(
                    "replay of node {i} ({}) differs",
                    node.op.name()
                )));
            }
        }
        Ok(())
    }
}
