use crate::error::{Error, Result};
use crate::hiernet::Parameters;
use crate::ndgrad::Tensor;

/// Rescales `grads` in place so that their joint L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Option<Tensor>], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flatten()
        .flat_map(|t| t.data())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = max_norm / norm;
        for t in grads.iter_mut().flatten() {
            t.data_mut().iter_mut().for_each(|x| *x *= k);
        }
    }
    norm
}

/// Adam with bias correction. Moments are kept per parameter tensor.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. `grads[i]` belongs to entry `i`; entries of
    /// frozen groups and entries without a gradient are left untouched.
    pub fn step(&mut self, params: &mut Parameters, grads: &[Option<Tensor>]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Contract(format!("{} gradients for {} tensors", grads.len(), params.len())));
        }
        if self.m.is_empty() {
            self.m = params.entries().iter().map(|e| vec![0.0; e.tensor.numel()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let frozen = params.frozen().clone();
        for (i, entry) in params.entries_mut().iter_mut().enumerate() {
            let Some(grad) = &grads[i] else { continue };
            if frozen.contains(&entry.group) {
                continue;
            }
            if grad.shape() != entry.tensor.shape() {
                return Err(Error::dim("adam", grad.shape(), entry.tensor.shape()));
            }
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, (w, &gr)) in entry.tensor.data_mut().iter_mut().zip(grad.data()).enumerate() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gr;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gr * gr;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
