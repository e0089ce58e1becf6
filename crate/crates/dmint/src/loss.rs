//! Summed binary cross-entropy over the categories of one task.

/// Predictions are clipped to `[CLIP_EPS, 1 - CLIP_EPS]` before the log.
pub const CLIP_EPS: f64 = 1e-7;

fn clip(p: f64) -> f64 {
    p.clamp(CLIP_EPS, 1.0 - CLIP_EPS)
}

/// `-Σ_k [y_k ln ŷ_k + (1 - y_k) ln(1 - ŷ_k)]`.
pub fn bce_sum(pred: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), target.len());
    pred.iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = clip(p);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum()
}

/// Gradient of [`bce_sum`] with respect to the pre-sigmoid logits, where
/// `pred = σ(logit)`. Clipped entries have zero gradient.
pub fn bce_logit_grad(pred: &[f64], target: &[f64]) -> Vec<f64> {
    pred.iter()
        .zip(target)
        .map(|(&p, &y)| {
            if p <= CLIP_EPS || p >= 1.0 - CLIP_EPS {
                0.0
            } else {
                p - y
            }
        })
        .collect()
}
