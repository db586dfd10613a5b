//! The eDP-SGD gradient pipeline.
//!
//! A batch is split into `N` micro-batches, one per worker lane. Each lane
//! receives the mean-loss gradient of its micro-batch and, independently of
//! the other lanes:
//!
//! 1. divides layer `k` by its scale factor `α_k`,
//! 2. clips the scaled gradient to global norm `C`,
//! 3. multiplies layer `k` back by `α_k`,
//! 4. adds `y / N` with `y ~ Normal(0, (C·z_t)²)` elementwise, where
//!    `z_t = z₀·d(t)` depends only on the epoch.
//!
//! The lanes are then averaged without weights, summing in worker order.
//! Because each lane owns its noise stream, the result is bit-identical no
//! matter how many threads run the lanes.
//!
//! The aggregate noise per element has variance `(C·z_t)² / N³`.

mod clip;
mod noise;
mod partition;
mod reference;
mod scaling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{linear_combine, GradientSet};
use crate::rng::{NoiseStreamKey, StreamDomain};
use clip::clip_factor;
use scaling::{inverse_factors, scaled_down_norm};

pub use clip::clip_by_global_norm;
pub use noise::{decay_multiplier, gaussian_noise, DecayKind};
pub use partition::partition_batch;
pub use reference::dpsgd_reference_step;
pub use scaling::{
    apply_scaling, calibrate_scales, ScaleDirection, ScaleProfile, DEFAULT_SCALE_FLOOR,
};

/// Privacy parameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Clipping bound `C`.
    pub clip_c: f64,
    /// Base noise multiplier `z₀`; zero disables noise.
    pub z0: f64,
    #[serde(default)]
    pub decay: DecayKind,
    #[serde(default)]
    pub tau: f64,
    /// Number of worker lanes `N`.
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            clip_c: 1.0,
            z0: 1.0,
            decay: DecayKind::None,
            tau: 0.0,
            workers: 8,
            seed: 0,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.clip_c > 0.0 && self.clip_c.is_finite()) {
            problems.push(format!("dp.clip_c must be positive, got {}", self.clip_c));
        }
        if !(self.z0 >= 0.0 && self.z0.is_finite()) {
            problems.push(format!("dp.z0 must be non-negative, got {}", self.z0));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            problems.push(format!("dp.tau must be non-negative, got {}", self.tau));
        }
        if self.workers == 0 {
            problems.push("dp.workers must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::BadConfig(problems))
        }
    }

    /// Noise multiplier in effect during `epoch`.
    pub fn noise_multiplier(&self, epoch: u64) -> f64 {
        self.z0 * decay_multiplier(self.decay, self.tau, epoch)
    }
}

/// How the per-worker lanes of [`edp_step_with`] are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Lanes run on the current rayon pool.
    #[default]
    Parallel,
}

/// Scale down and clip: the internal checkpoint where `‖·‖₂ ≤ C` must hold.
pub fn scale_and_clip(g: &GradientSet, profile: &ScaleProfile, clip_c: f64) -> Result<GradientSet> {
    let (inverses, factor) = lane_clip(g, profile, clip_c)?;
    let factor = factor.unwrap_or(1.0);
    let mut out = g.clone();
    for (layer, inv) in out.layers_mut().iter_mut().zip(inverses) {
        layer
            .values
            .iter_mut()
            .for_each(|v| *v = (*v * inv) * factor);
    }
    Ok(out)
}

/// Inverse layer factors and the clip factor of the scaled-down gradient.
fn lane_clip(
    g: &GradientSet,
    profile: &ScaleProfile,
    clip_c: f64,
) -> Result<(Vec<f64>, Option<f64>)> {
    let inverses = inverse_factors(g, profile)?;
    let norm = scaled_down_norm(g, &inverses, 1.0);
    let factor = clip_factor(norm, clip_c, |f| scaled_down_norm(g, &inverses, f));
    Ok((inverses, factor))
}

/// Everything one worker lane does to its micro-batch gradient.
///
/// Scaling down, clipping and scaling back up reduce to multiplying `g` by
/// the clip factor, so the scaled-down gradient is never materialised.
pub fn worker_pipeline(
    g: &GradientSet,
    config: &DpConfig,
    profile: &ScaleProfile,
    key: NoiseStreamKey,
) -> Result<GradientSet> {
    let mut out = g.clone();
    if let (_, Some(factor)) = lane_clip(g, profile, config.clip_c)? {
        for layer in out.layers_mut() {
            layer.values.iter_mut().for_each(|v| *v *= factor);
        }
    }
    let z_t = config.noise_multiplier(key.epoch);
    if z_t > 0.0 {
        let std = config.clip_c * z_t;
        let n = config.workers as f64;
        let mut stream = key.gaussian(StreamDomain::Noise);
        for layer in out.layers_mut() {
            for d in layer.values.iter_mut() {
                *d += (std * stream.next_standard()) / n;
            }
        }
    }
    Ok(out)
}

/// One eDP-SGD step over `config.workers` micro-batch gradients.
pub fn edp_step(
    per_worker_grads: &[GradientSet],
    config: &DpConfig,
    profile: &ScaleProfile,
    epoch: u64,
    step: u64,
) -> Result<GradientSet> {
    edp_step_with(
        per_worker_grads,
        config,
        profile,
        epoch,
        step,
        Execution::default(),
    )
}

/// [`edp_step`] with an explicit execution strategy for the worker lanes.
pub fn edp_step_with(
    per_worker_grads: &[GradientSet],
    config: &DpConfig,
    profile: &ScaleProfile,
    epoch: u64,
    step: u64,
    execution: Execution,
) -> Result<GradientSet> {
    if per_worker_grads.len() != config.workers {
        return Err(Error::WorkerCount {
            expected: config.workers,
            got: per_worker_grads.len(),
        });
    }
    let lane = |(m, g): (usize, &GradientSet)| {
        let key = NoiseStreamKey::new(config.seed, epoch, step, m as u64);
        worker_pipeline(g, config, profile, key)
    };
    let weight = 1.0 / config.workers as f64;
    match execution {
        Execution::Serial => {
            // Folding lane by lane matches `linear_combine` bit for bit.
            let mut lanes = per_worker_grads.iter().enumerate().map(lane);
            let mut sum = lanes.next().ok_or(Error::EmptyBatch)??.scale(weight);
            for g in lanes {
                sum.axpy(weight, &g?)?;
            }
            Ok(sum)
        }
        Execution::Parallel => {
            let lanes: Vec<GradientSet> = per_worker_grads
                .par_iter()
                .enumerate()
                .map(lane)
                .collect::<Result<_>>()?;
            let terms: Vec<(f64, &GradientSet)> = lanes.iter().map(|g| (weight, g)).collect();
            linear_combine(&terms)
        }
    }
}
