//! Adaptive-moment optimizer with global gradient-norm clipping.

use std::collections::BTreeMap;

use tapegrad::ParameterSet;

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// global L2 clip threshold
    pub max_grad_norm: f64,
    /// updates skipped because a gradient was non-finite
    pub skipped: usize,
    t: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, max_grad_norm: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_grad_norm,
            skipped: 0,
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    /// Applies one update from the gradients accumulated in `params`.
    /// Returns false (and counts a skip) if any gradient is non-finite;
    /// parameters are untouched in that case.
    pub fn step(&mut self, params: &mut ParameterSet) -> bool {
        let names: Vec<String> = params.names().to_vec();
        let mut sq_norm = 0.0;
        for name in &names {
            let p = params.get(name);
            if !p.trainable {
                continue;
            }
            for g in &p.grad {
                if !g.is_finite() {
                    self.skipped += 1;
                    return false;
                }
                sq_norm += g * g;
            }
        }
        let norm = sq_norm.sqrt();
        let clip = if norm > self.max_grad_norm { self.max_grad_norm / norm } else { 1.0 };

        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for name in &names {
            let p = params.get_mut(name);
            if !p.trainable {
                continue;
            }
            let n = p.data.len();
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
            for i in 0..n {
                let g = p.grad[i] * clip;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.data.values[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        true
    }
}
