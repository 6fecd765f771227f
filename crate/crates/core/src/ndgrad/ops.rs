//! Primitive operations: forward kernels and their vector-Jacobian products.

use crate::error::{Error, Result};

use super::tensor::Tensor;

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Leaf,
    MatMul,
    Add,
    AddRow,
    Mul,
    Scale(f64),
    AddScalar(f64),
    Sigmoid,
    Tanh,
    Log,
    Exp,
    ConcatCols,
    SliceCols { start: usize, len: usize },
    ConcatRows,
    GatherRows(Vec<usize>),
    Reshape(Vec<usize>),
    MaskedMean(Vec<f64>),
    Softmax(Vec<f64>),
    RepeatRows(usize),
    GroupWeightedSum,
    Blend(Vec<f64>),
    MaskRows(Vec<f64>),
    Dropout(Vec<f64>),
    CrossEntropy { targets: Vec<usize>, weights: Vec<f64> },
    BceLogits { targets: Vec<f64>, weights: Vec<f64> },
    Sum,
}

fn gemm(m: usize, k: usize, n: usize, a: (&[f64], isize, isize), b: (&[f64], isize, isize), c: &mut [f64]) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: slice lengths and strides describe in-bounds m×k, k×n and m×n views.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(x.shape().to_vec(), x.data().iter().map(|&v| f(v)).collect())
}

fn drop_axis(shape: &[usize], from_end: usize) -> Vec<usize> {
    let mut s = shape.to_vec();
    s.remove(shape.len() - from_end);
    if s.is_empty() {
        s.push(1);
    }
    s
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(op, a.shape(), b.shape()));
    }
    Ok(())
}

fn rows_mask(op: &'static str, x: &Tensor, mask: &[f64]) -> Result<()> {
    if mask.len() != x.rows() {
        return Err(Error::dim(op, x.shape(), &[mask.len()]));
    }
    Ok(())
}

impl Op {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul => "matmul",
            Op::Add => "add",
            Op::AddRow => "add_row",
            Op::Mul => "mul",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Sigmoid => "sigmoid",
            Op::Tanh => "tanh",
            Op::Log => "log",
            Op::Exp => "exp",
            Op::ConcatCols => "concat_cols",
            Op::SliceCols { .. } => "slice_cols",
            Op::ConcatRows => "concat_rows",
            Op::GatherRows(_) => "gather_rows",
            Op::Reshape(_) => "reshape",
            Op::MaskedMean(_) => "masked_mean",
            Op::Softmax(_) => "softmax",
            Op::RepeatRows(_) => "repeat_rows",
            Op::GroupWeightedSum => "group_weighted_sum",
            Op::Blend(_) => "blend",
            Op::MaskRows(_) => "mask_rows",
            Op::Dropout(_) => "dropout",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::BceLogits { .. } => "bce_logits",
            Op::Sum => "sum",
        }
    }

    pub(crate) fn forward(&self, xs: &[&Tensor]) -> Result<Tensor> {
        let name = self.name();
        let out = match self {
            Op::Leaf => return Err(Error::Contract("leaf nodes have no forward kernel".into())),
            Op::MatMul => {
                let (a, b) = (xs[0], xs[1]);
                if b.shape().len() != 2 || a.cols() != b.shape()[0] {
                    return Err(Error::dim(name, a.shape(), b.shape()));
                }
                let (m, k, n) = (a.rows(), a.cols(), b.cols());
                let mut c = vec![0.0; m * n];
                gemm(m, k, n, (a.data(), k as isize, 1), (b.data(), n as isize, 1), &mut c);
                let mut shape = a.shape().to_vec();
                *shape.last_mut().unwrap() = n;
                Tensor::from_parts(shape, c)
            }
            Op::Add | Op::Mul => {
                let (a, b) = (xs[0], xs[1]);
                same_shape(name, a, b)?;
                let data = a
                    .data()
                    .iter()
                    .zip(b.data())
                    .map(|(x, y)| if matches!(self, Op::Add) { x + y } else { x * y })
                    .collect();
                Tensor::from_parts(a.shape().to_vec(), data)
            }
            Op::AddRow => {
                let (x, b) = (xs[0], xs[1]);
                if b.numel() != x.cols() {
                    return Err(Error::dim(name, x.shape(), b.shape()));
                }
                let n = x.cols();
                let mut data = x.data().to_vec();
                for row in data.chunks_mut(n) {
                    for (v, bias) in row.iter_mut().zip(b.data()) {
                        *v += bias;
                    }
                }
                Tensor::from_parts(x.shape().to_vec(), data)
            }
            Op::Scale(c) => map(xs[0], |v| v * c),
            Op::AddScalar(c) => map(xs[0], |v| v + c),
            Op::Sigmoid => map(xs[0], sigmoid),
            Op::Tanh => map(xs[0], f64::tanh),
            Op::Log => map(xs[0], f64::ln),
            Op::Exp => map(xs[0], f64::exp),
            Op::ConcatCols => {
                let rows = xs[0].rows();
                for x in xs {
                    if x.rows() != rows {
                        return Err(Error::dim(name, xs[0].shape(), x.shape()));
                    }
                }
                let total: usize = xs.iter().map(|x| x.cols()).sum();
                let mut data = Vec::with_capacity(rows * total);
                for r in 0..rows {
                    for x in xs {
                        let c = x.cols();
                        data.extend_from_slice(&x.data()[r * c..(r + 1) * c]);
                    }
                }
                let mut shape = xs[0].shape().to_vec();
                *shape.last_mut().unwrap() = total;
                Tensor::from_parts(shape, data)
            }
            Op::SliceCols { start, len } => {
                let x = xs[0];
                if *len == 0 || start + len > x.cols() {
                    return Err(Error::dim(name, x.shape(), &[*start, *len]));
                }
                let c = x.cols();
                let mut data = Vec::with_capacity(x.rows() * len);
                for row in x.data().chunks(c) {
                    data.extend_from_slice(&row[*start..start + len]);
                }
                let mut shape = x.shape().to_vec();
                *shape.last_mut().unwrap() = *len;
                Tensor::from_parts(shape, data)
            }
            Op::ConcatRows => {
                let cols = xs[0].cols();
                let mut data = Vec::new();
                for x in xs {
                    if x.cols() != cols {
                        return Err(Error::dim(name, xs[0].shape(), x.shape()));
                    }
                    data.extend_from_slice(x.data());
                }
                Tensor::from_parts(vec![data.len() / cols, cols], data)
            }
            Op::GatherRows(idx) => {
                let x = xs[0];
                let (r, c) = (x.rows(), x.cols());
                if idx.is_empty() {
                    return Err(Error::Contract("gather_rows needs at least one index".into()));
                }
                let mut data = Vec::with_capacity(idx.len() * c);
                for &i in idx {
                    if i >= r {
                        return Err(Error::dim(name, x.shape(), &[i]));
                    }
                    data.extend_from_slice(&x.data()[i * c..(i + 1) * c]);
                }
                Tensor::from_parts(vec![idx.len(), c], data)
            }
            Op::Reshape(shape) => xs[0].reshaped(shape.clone())?,
            Op::MaskedMean(mask) => {
                let x = xs[0];
                let (groups, n, d) = group_dims(name, x, mask.len())?;
                let mut data = vec![0.0; groups * d];
                for g in 0..groups {
                    let m = &mask[g * n..(g + 1) * n];
                    let count: f64 = m.iter().sum();
                    if count == 0.0 {
                        continue;
                    }
                    let out = &mut data[g * d..(g + 1) * d];
                    for (j, &w) in m.iter().enumerate() {
                        if w != 0.0 {
                            let row = &x.data()[(g * n + j) * d..(g * n + j + 1) * d];
                            for (o, v) in out.iter_mut().zip(row) {
                                *o += w * v;
                            }
                        }
                    }
                    for o in out.iter_mut() {
                        *o /= count;
                    }
                }
                Tensor::from_parts(drop_axis(x.shape(), 2), data)
            }
            Op::Softmax(mask) => {
                let x = xs[0];
                if mask.len() != x.numel() {
                    return Err(Error::dim(name, x.shape(), &[mask.len()]));
                }
                let c = x.cols();
                let mut data = vec![0.0; x.numel()];
                for ((row, m), out) in x.data().chunks(c).zip(mask.chunks(c)).zip(data.chunks_mut(c)) {
                    let max = row
                        .iter()
                        .zip(m)
                        .filter(|(_, &w)| w != 0.0)
                        .map(|(&v, _)| v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    if max == f64::NEG_INFINITY {
                        continue;
                    }
                    let mut z = 0.0;
                    for ((o, &v), &w) in out.iter_mut().zip(row).zip(m) {
                        if w != 0.0 {
                            *o = (v - max).exp();
                            z += *o;
                        }
                    }
                    for o in out.iter_mut() {
                        *o /= z;
                    }
                }
                Tensor::from_parts(x.shape().to_vec(), data)
            }
            Op::RepeatRows(times) => {
                let x = xs[0];
                let c = x.cols();
                let mut data = Vec::with_capacity(x.numel() * times);
                for row in x.data().chunks(c) {
                    for _ in 0..*times {
                        data.extend_from_slice(row);
                    }
                }
                Tensor::from_parts(vec![x.rows() * times, c], data)
            }
            Op::GroupWeightedSum => {
                let (w, v) = (xs[0], xs[1]);
                let (groups, n, d) = group_dims(name, v, w.numel())?;
                let mut data = vec![0.0; groups * d];
                for g in 0..groups {
                    let out = &mut data[g * d..(g + 1) * d];
                    for j in 0..n {
                        let a = w.data()[g * n + j];
                        if a == 0.0 {
                            continue;
                        }
                        let row = &v.data()[(g * n + j) * d..(g * n + j + 1) * d];
                        for (o, x) in out.iter_mut().zip(row) {
                            *o += a * x;
                        }
                    }
                }
                Tensor::from_parts(drop_axis(v.shape(), 2), data)
            }
            Op::Blend(mask) => {
                let (new, prev) = (xs[0], xs[1]);
                same_shape(name, new, prev)?;
                rows_mask(name, new, mask)?;
                let c = new.cols();
                let mut data = Vec::with_capacity(new.numel());
                for (r, &m) in mask.iter().enumerate() {
                    let src = if m == 1.0 {
                        new.data()[r * c..(r + 1) * c].to_vec()
                    } else if m == 0.0 {
                        prev.data()[r * c..(r + 1) * c].to_vec()
                    } else {
                        new.data()[r * c..(r + 1) * c]
                            .iter()
                            .zip(&prev.data()[r * c..(r + 1) * c])
                            .map(|(a, b)| m * a + (1.0 - m) * b)
                            .collect()
                    };
                    data.extend(src);
                }
                Tensor::from_parts(new.shape().to_vec(), data)
            }
            Op::MaskRows(mask) => {
                let x = xs[0];
                rows_mask(name, x, mask)?;
                let c = x.cols();
                let mut data = x.data().to_vec();
                for (row, &m) in data.chunks_mut(c).zip(mask) {
                    if m != 1.0 {
                        row.iter_mut().for_each(|v| *v *= m);
                    }
                }
                Tensor::from_parts(x.shape().to_vec(), data)
            }
            Op::Dropout(mask) => {
                let x = xs[0];
                if mask.len() != x.numel() {
                    return Err(Error::dim(name, x.shape(), &[mask.len()]));
                }
                let data = x.data().iter().zip(mask).map(|(v, m)| v * m).collect();
                Tensor::from_parts(x.shape().to_vec(), data)
            }
            Op::CrossEntropy { targets, weights } => {
                let x = xs[0];
                if targets.len() != x.rows() || weights.len() != x.rows() {
                    return Err(Error::dim(name, x.shape(), &[targets.len(), weights.len()]));
                }
                let c = x.cols();
                let mut total = 0.0;
                for ((row, &t), &w) in x.data().chunks(c).zip(targets).zip(weights) {
                    if w == 0.0 {
                        continue;
                    }
                    if t >= c {
                        return Err(Error::dim(name, x.shape(), &[t]));
                    }
                    total += w * (log_sum_exp(row) - row[t]);
                }
                Tensor::scalar(total)
            }
            Op::BceLogits { targets, weights } => {
                let x = xs[0];
                if targets.len() != x.numel() || weights.len() != x.numel() {
                    return Err(Error::dim(name, x.shape(), &[targets.len(), weights.len()]));
                }
                let total = x
                    .data()
                    .iter()
                    .zip(targets)
                    .zip(weights)
                    .filter(|(_, &w)| w != 0.0)
                    .map(|((&v, &y), &w)| w * (softplus(v) - y * v))
                    .sum();
                Tensor::scalar(total)
            }
            Op::Sum => Tensor::scalar(xs[0].data().iter().sum()),
        };
        if !out.is_finite() {
            return Err(Error::Numeric(format!("{name} produced a non-finite output")));
        }
        Ok(out)
    }

    /// Gradients with respect to each input, given the output gradient.
    /// Entries for inputs with `needs[i] == false` may be `None`.
    pub(crate) fn backward(
        &self,
        xs: &[&Tensor],
        out: &Tensor,
        g: &[f64],
        needs: &[bool],
    ) -> Vec<Option<Vec<f64>>> {
        let want = |i: usize| needs.get(i).copied().unwrap_or(false);
        match self {
            Op::Leaf => vec![],
            Op::MatMul => {
                let (a, b) = (xs[0], xs[1]);
                let (m, k, n) = (a.rows(), a.cols(), b.cols());
                let da = want(0).then(|| {
                    let mut da = vec![0.0; m * k];
                    gemm(m, n, k, (g, n as isize, 1), (b.data(), 1, n as isize), &mut da);
                    da
                });
                let db = want(1).then(|| {
                    let mut db = vec![0.0; k * n];
                    gemm(k, m, n, (a.data(), 1, k as isize), (g, n as isize, 1), &mut db);
                    db
                });
                vec![da, db]
            }
            Op::Add => vec![want(0).then(|| g.to_vec()), want(1).then(|| g.to_vec())],
            Op::AddRow => {
                let n = xs[0].cols();
                let db = want(1).then(|| {
                    let mut db = vec![0.0; n];
                    for row in g.chunks(n) {
                        for (d, v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                    db
                });
                vec![want(0).then(|| g.to_vec()), db]
            }
            Op::Mul => {
                let (a, b) = (xs[0].data(), xs[1].data());
                vec![
                    want(0).then(|| g.iter().zip(b).map(|(g, b)| g * b).collect()),
                    want(1).then(|| g.iter().zip(a).map(|(g, a)| g * a).collect()),
                ]
            }
            Op::Scale(c) => vec![Some(g.iter().map(|v| v * c).collect())],
            Op::AddScalar(_) => vec![Some(g.to_vec())],
            Op::Sigmoid => vec![Some(
                g.iter().zip(out.data()).map(|(g, y)| g * y * (1.0 - y)).collect(),
            )],
            Op::Tanh => vec![Some(
                g.iter().zip(out.data()).map(|(g, y)| g * (1.0 - y * y)).collect(),
            )],
            Op::Log => vec![Some(g.iter().zip(xs[0].data()).map(|(g, x)| g / x).collect())],
            Op::Exp => vec![Some(g.iter().zip(out.data()).map(|(g, y)| g * y).collect())],
            Op::ConcatCols => {
                let total = out.cols();
                let mut offset = 0;
                xs.iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let c = x.cols();
                        let grad = want(i).then(|| {
                            let mut d = Vec::with_capacity(x.numel());
                            for row in g.chunks(total) {
                                d.extend_from_slice(&row[offset..offset + c]);
                            }
                            d
                        });
                        offset += c;
                        grad
                    })
                    .collect()
            }
            Op::SliceCols { start, len } => {
                let c = xs[0].cols();
                let mut d = vec![0.0; xs[0].numel()];
                for (drow, grow) in d.chunks_mut(c).zip(g.chunks(*len)) {
                    drow[*start..start + len].copy_from_slice(grow);
                }
                vec![Some(d)]
            }
            Op::ConcatRows => {
                let mut offset = 0;
                xs.iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let n = x.numel();
                        let grad = want(i).then(|| g[offset..offset + n].to_vec());
                        offset += n;
                        grad
                    })
                    .collect()
            }
            Op::GatherRows(idx) => {
                let c = xs[0].cols();
                let mut d = vec![0.0; xs[0].numel()];
                for (k, &i) in idx.iter().enumerate() {
                    for (dv, gv) in d[i * c..(i + 1) * c].iter_mut().zip(&g[k * c..(k + 1) * c]) {
                        *dv += gv;
                    }
                }
                vec![Some(d)]
            }
            Op::Reshape(_) => vec![Some(g.to_vec())],
            Op::MaskedMean(mask) => {
                let x = xs[0];
                let d = x.cols();
                let groups = out.numel() / d;
                let n = mask.len() / groups;
                let mut dx = vec![0.0; x.numel()];
                for gi in 0..groups {
                    let m = &mask[gi * n..(gi + 1) * n];
                    let count: f64 = m.iter().sum();
                    if count == 0.0 {
                        continue;
                    }
                    let grow = &g[gi * d..(gi + 1) * d];
                    for (j, &w) in m.iter().enumerate() {
                        if w != 0.0 {
                            let scale = w / count;
                            let row = &mut dx[(gi * n + j) * d..(gi * n + j + 1) * d];
                            for (r, gv) in row.iter_mut().zip(grow) {
                                *r = scale * gv;
                            }
                        }
                    }
                }
                vec![Some(dx)]
            }
            Op::Softmax(_) => {
                let c = out.cols();
                let mut dx = vec![0.0; out.numel()];
                for ((y, gr), d) in out.data().chunks(c).zip(g.chunks(c)).zip(dx.chunks_mut(c)) {
                    let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((dv, yv), gv) in d.iter_mut().zip(y).zip(gr) {
                        *dv = yv * (gv - dot);
                    }
                }
                vec![Some(dx)]
            }
            Op::RepeatRows(times) => {
                let c = xs[0].cols();
                let mut d = vec![0.0; xs[0].numel()];
                for (r, drow) in d.chunks_mut(c).enumerate() {
                    for t in 0..*times {
                        let base = (r * times + t) * c;
                        for (dv, gv) in drow.iter_mut().zip(&g[base..base + c]) {
                            *dv += gv;
                        }
                    }
                }
                vec![Some(d)]
            }
            Op::GroupWeightedSum => {
                let (w, v) = (xs[0], xs[1]);
                let d = v.cols();
                let groups = out.numel() / d;
                let n = w.numel() / groups;
                let dw = want(0).then(|| {
                    let mut dw = vec![0.0; w.numel()];
                    for gi in 0..groups {
                        let grow = &g[gi * d..(gi + 1) * d];
                        for j in 0..n {
                            let row = &v.data()[(gi * n + j) * d..(gi * n + j + 1) * d];
                            dw[gi * n + j] = row.iter().zip(grow).map(|(a, b)| a * b).sum();
                        }
                    }
                    dw
                });
                let dv = want(1).then(|| {
                    let mut dv = vec![0.0; v.numel()];
                    for gi in 0..groups {
                        let grow = &g[gi * d..(gi + 1) * d];
                        for j in 0..n {
                            let a = w.data()[gi * n + j];
                            if a == 0.0 {
                                continue;
                            }
                            let row = &mut dv[(gi * n + j) * d..(gi * n + j + 1) * d];
                            for (r, gv) in row.iter_mut().zip(grow) {
                                *r = a * gv;
                            }
                        }
                    }
                    dv
                });
                vec![dw, dv]
            }
            Op::Blend(mask) => {
                let c = out.cols();
                let scaled = |keep_new: bool| {
                    let mut d = g.to_vec();
                    for (row, &m) in d.chunks_mut(c).zip(mask) {
                        let s = if keep_new { m } else { 1.0 - m };
                        if s != 1.0 {
                            row.iter_mut().for_each(|v| *v *= s);
                        }
                    }
                    d
                };
                vec![want(0).then(|| scaled(true)), want(1).then(|| scaled(false))]
            }
            Op::MaskRows(mask) => {
                let c = out.cols();
                let mut d = g.to_vec();
                for (row, &m) in d.chunks_mut(c).zip(mask) {
                    if m != 1.0 {
                        row.iter_mut().for_each(|v| *v *= m);
                    }
                }
                vec![Some(d)]
            }
            Op::Dropout(mask) => vec![Some(g.iter().zip(mask).map(|(g, m)| g * m).collect())],
            Op::CrossEntropy { targets, weights } => {
                let x = xs[0];
                let c = x.cols();
                let gs = g[0];
                let mut d = vec![0.0; x.numel()];
                for (((row, drow), &t), &w) in
                    x.data().chunks(c).zip(d.chunks_mut(c)).zip(targets).zip(weights)
                {
                    if w == 0.0 {
                        continue;
                    }
                    let lse = log_sum_exp(row);
                    for (dv, &v) in drow.iter_mut().zip(row) {
                        *dv = gs * w * (v - lse).exp();
                    }
                    drow[t] -= gs * w;
                }
                vec![Some(d)]
            }
            Op::BceLogits { targets, weights } => {
                let gs = g[0];
                vec![Some(
                    xs[0]
                        .data()
                        .iter()
                        .zip(targets)
                        .zip(weights)
                        .map(|((&v, &y), &w)| gs * w * (sigmoid(v) - y))
                        .collect(),
                )]
            }
            Op::Sum => vec![Some(vec![g[0]; xs[0].numel()])],
        }
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Splits `x` viewed as `[groups, n, d]` where `groups * n == mask_len`.
fn group_dims(name: &'static str, x: &Tensor, mask_len: usize) -> Result<(usize, usize, usize)> {
    let shape = x.shape();
    if shape.len() < 2 || x.rows() != mask_len {
        return Err(Error::dim(name, shape, &[mask_len]));
    }
    let n = shape[shape.len() - 2];
    Ok((mask_len / n, n, x.cols()))
}
