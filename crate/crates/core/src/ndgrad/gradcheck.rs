use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng;

use super::graph::{Graph, Var};
use super::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Check at most this many entries per tensor, chosen by `seed`.
    pub max_entries_per_tensor: Option<usize>,
    /// Seed for the graph (dropout) and for subsampling.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            tolerance: 1e-4,
            max_entries_per_tensor: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Name and flat index of the entry with the largest relative error.
    pub worst_parameter: Option<(String, usize)>,
    pub checked: usize,
    pub passed: bool,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn evaluate<F>(f: &mut F, params: &[(String, Tensor)], seed: u64) -> Result<f64>
where
    F: FnMut(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new(seed);
    let vars: Vec<Var> = params.iter().map(|(_, t)| g.constant(t.clone())).collect();
    let loss = f(&mut g, &vars)?;
    Ok(g.value(loss).item())
}

/// Compares reverse-mode gradients of `f` against central differences
/// `(f(θ + h) - f(θ - h)) / 2h`, entry by entry.
///
/// `f` receives a fresh graph seeded with `opts.seed` and one variable per
/// parameter, and returns a scalar loss. It must be deterministic.
pub fn grad_check<F>(mut f: F, params: &[(String, Tensor)], opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    F: FnMut(&mut Graph, &[Var]) -> Result<Var>,
{
    if params.is_empty() {
        return Ok(GradCheckReport {
            passed: true,
            ..Default::default()
        });
    }

    let mut g = Graph::new(opts.seed);
    let vars: Vec<Var> = params.iter().map(|(_, t)| g.param(t.clone())).collect();
    let loss = f(&mut g, &vars)?;
    let base = g.value(loss).item();
    g.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| g.grad(v).expect("leaf gradient")).collect();
    drop(g);

    let again = evaluate(&mut f, params, opts.seed)?;
    if again.to_bits() != base.to_bits() {
        return Err(Error::Contract(format!(
            "function is not deterministic under a fixed seed: {base} vs {again}"
        )));
    }

    let mut work: Vec<(String, Tensor)> = params.to_vec();
    let mut report = GradCheckReport::default();
    let mut picker = rng::seeded(opts.seed);
    for p in 0..work.len() {
        let n = work[p].1.numel();
        let entries: Vec<usize> = match opts.max_entries_per_tensor {
            Some(k) if k < n => {
                let mut e = sample(&mut picker, n, k).into_vec();
                e.sort_unstable();
                e
            }
            _ => (0..n).collect(),
        };
        for i in entries {
            let orig = work[p].1.data()[i];
            work[p].1.data_mut()[i] = orig + opts.step;
            let plus = evaluate(&mut f, &work, opts.seed)?;
            work[p].1.data_mut()[i] = orig - opts.step;
            let minus = evaluate(&mut f, &work, opts.seed)?;
            work[p].1.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * opts.step);
            let err = relative_error(analytic[p].data()[i], numeric);
            report.checked += 1;
            if err > report.max_rel_err || report.worst_parameter.is_none() {
                report.max_rel_err = err;
                report.worst_parameter = Some((work[p].0.clone(), i));
            }
        }
    }
    report.passed = report.max_rel_err < opts.tolerance;
    Ok(report)
}
