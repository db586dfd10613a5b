use serde::{Deserialize, Serialize};

use crate::grad::GradientSet;
use crate::rng::{NoiseStreamKey, StreamDomain};

/// Shape of the epoch-indexed noise decay `d(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    #[default]
    None,
    /// `1 / (1 + τ·t)`
    Linear,
    /// `exp(−τ·t)`
    Exponential,
}

/// Multiplier applied to the base noise multiplier at epoch `t` (from 0).
pub fn decay_multiplier(kind: DecayKind, tau: f64, epoch: u64) -> f64 {
    let t = epoch as f64;
    match kind {
        DecayKind::None => 1.0,
        DecayKind::Linear => 1.0 / (1.0 + tau * t),
        DecayKind::Exponential => (-tau * t).exp(),
    }
}

/// I.i.d. `Normal(0, std²)` values laid out like `template`.
///
/// Draws come from the noise stream of `key`, in layer order then element
/// order, so the same key always reproduces the same values.
pub fn gaussian_noise(key: NoiseStreamKey, std: f64, template: &GradientSet) -> GradientSet {
    if std == 0.0 {
        return template.zeros_like();
    }
    let mut stream = key.gaussian(StreamDomain::Noise);
    template.map(|_| std * stream.next_standard())
}
