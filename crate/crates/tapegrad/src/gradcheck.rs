//! Central finite-difference oracle for analytic gradients.

use crate::params::ParameterSet;

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_param: Vec<ParamCheck>,
    pub max_rel_err: f64,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tol
    }

    pub fn failures(&self) -> impl Iterator<Item = &ParamCheck> {
        self.per_param.iter().filter(move |c| c.max_rel_err >= self.tol)
    }
}

/// Compares the analytic gradients already accumulated in `params` against
/// central difference quotients of `f`. `f` must be deterministic (dropout
/// disabled) and must not read the gradient accumulators.
///
/// Error is relative with an absolute floor: |a-n| / max(|a|, |n|, 1e-3),
/// so near-zero gradients are compared absolutely at 1e-3 scale.
pub fn grad_check(
    params: &mut ParameterSet,
    mut f: impl FnMut(&ParameterSet) -> f64,
    step: f64,
    tol: f64,
) -> GradCheckReport {
    let names: Vec<String> = params.names().to_vec();
    let mut per_param = Vec::new();
    let mut max_rel_err: f64 = 0.0;
    for name in &names {
        if !params.get(name).trainable {
            continue;
        }
        let n_entries = params.get(name).data.len();
        let mut worst = (0.0f64, 0usize);
        for i in 0..n_entries {
            let orig = params.get(name).data.values[i];
            params.get_mut(name).data.values[i] = orig + step;
            let f_plus = f(params);
            params.get_mut(name).data.values[i] = orig - step;
            let f_minus = f(params);
            params.get_mut(name).data.values[i] = orig;

            let numeric = (f_plus - f_minus) / (2.0 * step);
            let analytic = params.get(name).grad[i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-3);
            let rel = (analytic - numeric).abs() / denom;
            if rel > worst.0 {
                worst = (rel, i);
            }
        }
        max_rel_err = max_rel_err.max(worst.0);
        per_param.push(ParamCheck {
            name: name.clone(),
            max_rel_err: worst.0,
            worst_index: worst.1,
        });
    }
    GradCheckReport { per_param, max_rel_err, tol }
}
