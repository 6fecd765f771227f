//! Building blocks expressed with graph primitives.

use crate::error::Result;
use crate::ndgrad::{Graph, Tensor, Var};

use super::params::Bound;

#[derive(Clone, Copy)]
pub(crate) struct Lstm {
    w: Var,
    b: Var,
    hidden: usize,
}

impl Lstm {
    pub fn bind(p: &Bound, prefix: &str, hidden: usize) -> Self {
        Self {
            w: p.var(&format!("{prefix}.w")),
            b: p.var(&format!("{prefix}.b")),
            hidden,
        }
    }

    /// One step with gate layout `[input, forget, cell, output]`.
    pub fn step(&self, g: &mut Graph, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let d = self.hidden;
        let xh = g.concat_cols(&[x, h])?;
        let z = g.matmul(xh, self.w)?;
        let z = g.add_row(z, self.b)?;
        let i = g.slice_cols(z, 0, d)?;
        let i = g.sigmoid(i)?;
        let f = g.slice_cols(z, d, d)?;
        let f = g.sigmoid(f)?;
        let u = g.slice_cols(z, 2 * d, d)?;
        let u = g.tanh(u)?;
        let o = g.slice_cols(z, 3 * d, d)?;
        let o = g.sigmoid(o)?;
        let fc = g.mul(f, c)?;
        let iu = g.mul(i, u)?;
        let c = g.add(fc, iu)?;
        let tc = g.tanh(c)?;
        let h = g.mul(o, tc)?;
        Ok((h, c))
    }

    /// Step that only advances rows whose mask is 1; other rows keep `(h, c)`.
    pub fn masked_step(&self, g: &mut Graph, x: Var, h: Var, c: Var, mask: &[f64]) -> Result<(Var, Var)> {
        let (hn, cn) = self.step(g, x, h, c)?;
        if mask.iter().all(|&m| m == 1.0) {
            return Ok((hn, cn));
        }
        Ok((g.blend(hn, h, mask.to_vec())?, g.blend(cn, c, mask.to_vec())?))
    }
}

pub(crate) fn linear(g: &mut Graph, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = g.matmul(x, w)?;
    g.add_row(y, b)
}

/// Additive scorer `score · tanh(key·K + query·Q + bias)`.
#[derive(Clone, Copy)]
pub(crate) struct Additive {
    key: Var,
    query: Var,
    bias: Var,
    score: Var,
}

impl Additive {
    pub fn bind(p: &Bound, prefix: &str) -> Self {
        Self {
            key: p.var(&format!("{prefix}.key")),
            query: p.var(&format!("{prefix}.query")),
            bias: p.var(&format!("{prefix}.bias")),
            score: p.var(&format!("{prefix}.score")),
        }
    }

    /// Projects keys once so that several queries can reuse them.
    pub fn project_keys(&self, g: &mut Graph, keys: Var) -> Result<Var> {
        g.matmul(keys, self.key)
    }

    /// Scores `[batch * per_query, 1]` for projected keys laid out
    /// batch-major and one query row per batch element.
    pub fn scores(&self, g: &mut Graph, projected: Var, query: Var, per_query: usize) -> Result<Var> {
        let q = linear(g, query, self.query, self.bias)?;
        let q = g.repeat_rows(q, per_query)?;
        let t = g.add(projected, q)?;
        let t = g.tanh(t)?;
        g.matmul(t, self.score)
    }
}

/// `[rows, d]` constant of zeros.
pub(crate) fn zeros(g: &mut Graph, rows: usize, d: usize) -> Var {
    g.constant(Tensor::zeros(&[rows, d]))
}

/// Repeats a learned `[d]` vector into `[rows, d]`.
pub(crate) fn broadcast(g: &mut Graph, v: Var, rows: usize) -> Result<Var> {
    let d = g.value(v).numel();
    let r = g.reshape(v, vec![1, d])?;
    g.repeat_rows(r, rows)
}
