//! Finite-difference check of the analytic gradients.

use serde::Serialize;

use crate::error::ModelError;
use crate::model::{DmintModel, Example};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Step is `rel_step · max(|θ|, 1)`.
    pub rel_step: f64,
    /// How many times the step is divided by 10 when it crosses a kink.
    pub max_shrinks: u32,
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            rel_step: 1e-3,
            max_shrinks: 3,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    /// Coordinates still crossing a kink after every shrink.
    pub skipped: usize,
    pub analytic_norm: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }

    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// `‖a − f‖ / max(‖a‖, ‖f‖)`, or 0 when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, f)| a - f).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-12 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Compares every coordinate of every parameter tensor against a central
/// difference of the mean batch loss.
pub fn check_gradients(
    model: &mut DmintModel,
    batch: &[Example],
    config: GradCheckConfig,
) -> Result<GradCheckReport, ModelError> {
    let (_, grads) = model.loss_and_grads(batch)?;
    let (_, base_sig) = model.loss_and_kink_signature(batch)?;
    let mut tensors = Vec::new();
    for id in model.params().ids().collect::<Vec<_>>() {
        let name = model.params().name(id).to_string();
        let analytic_full = grads.get(id).clone();
        let shape = analytic_full.raw_dim();
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        let mut skipped = 0;
        for idx in ndarray::indices(shape) {
            let theta = model.params().get(id)[idx];
            let mut h = config.rel_step * theta.abs().max(1.0);
            let mut estimate = None;
            for _ in 0..=config.max_shrinks {
                model.params_mut().get_mut(id)[idx] = theta + h;
                let (plus, sig_plus) = model.loss_and_kink_signature(batch)?;
                model.params_mut().get_mut(id)[idx] = theta - h;
                let (minus, sig_minus) = model.loss_and_kink_signature(batch)?;
                model.params_mut().get_mut(id)[idx] = theta;
                if sig_plus == base_sig && sig_minus == base_sig {
                    estimate = Some((plus - minus) / (2.0 * h));
                    break;
                }
                h *= 0.1;
            }
            match estimate {
                Some(fd) => {
                    analytic.push(analytic_full[idx]);
                    numeric.push(fd);
                }
                None => skipped += 1,
            }
        }
        let analytic_norm = analytic.iter().map(|x| x * x).sum::<f64>().sqrt();
        tensors.push(TensorCheck {
            name,
            checked: analytic.len(),
            skipped,
            analytic_norm,
            rel_error: relative_error(&analytic, &numeric),
        });
    }
    let max_rel_error = tensors.iter().map(|t| t.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        tensors,
        max_rel_error,
        tolerance: config.tolerance,
    })
}
