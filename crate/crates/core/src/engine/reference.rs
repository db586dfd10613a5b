use crate::error::{Error, Result};
use crate::grad::GradientSet;
use crate::rng::NoiseStreamKey;

use super::clip::clip_by_global_norm;
use super::noise::gaussian_noise;

/// Classic per-example DP-SGD gradient.
///
/// Clips every example gradient to norm `c`, sums them in order, adds
/// `Normal(0, (c·z)²)` noise from `key` and divides by the batch size.
pub fn dpsgd_reference_step(
    per_example_grads: &[GradientSet],
    c: f64,
    z: f64,
    key: NoiseStreamKey,
) -> Result<GradientSet> {
    let (first, rest) = per_example_grads.split_first().ok_or(Error::EmptyBatch)?;
    let mut sum = clip_by_global_norm(first, c);
    for g in rest {
        sum.axpy(1.0, &clip_by_global_norm(g, c))?;
    }
    let noise = gaussian_noise(key, c * z, &sum);
    sum.axpy(1.0, &noise)?;
    let batch = per_example_grads.len() as f64;
    Ok(sum.map(|v| v / batch))
}
