use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::GradientSet;

/// Lower clamp applied to calibrated scale factors unless configured otherwise.
pub const DEFAULT_SCALE_FLOOR: f64 = 1e-3;

/// Per-layer scale factors `α_k`, calibrated once from first-iteration norms.
///
/// After calibration every factor lies in `[floor, 1]` and the layer with the
/// largest first-iteration norm has factor exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    alpha: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleDirection {
    /// Divide each layer by its factor before clipping.
    Down,
    /// Multiply each layer by its factor after clipping.
    Up,
}

impl ScaleProfile {
    /// Profile with every factor set to 1.
    pub fn uniform<'a>(layer_ids: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            alpha: layer_ids
                .into_iter()
                .map(|id| (id.to_owned(), 1.0))
                .collect(),
        }
    }

    /// Builds a profile from explicit factors; each must be in (0, 1].
    pub fn from_factors<S: Into<String>>(
        factors: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Self> {
        let alpha: BTreeMap<String, f64> =
            factors.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let bad: Vec<String> = alpha
            .iter()
            .filter(|(_, &a)| !(a > 0.0 && a <= 1.0))
            .map(|(k, a)| format!("scale for `{k}` is {a}, expected (0, 1]"))
            .collect();
        if !bad.is_empty() {
            return Err(Error::BadConfig(bad));
        }
        Ok(Self { alpha })
    }

    pub fn get(&self, layer_id: &str) -> Option<f64> {
        self.alpha.get(layer_id).copied()
    }

    pub fn factors(&self) -> &BTreeMap<String, f64> {
        &self.alpha
    }

    fn factor_for(&self, layer_id: &str) -> Result<f64> {
        self.get(layer_id)
            .ok_or_else(|| Error::ScaleCoverage(layer_id.to_owned()))
    }
}

/// Calibrates `α_k = max(floor, ‖g_k‖ / max_j ‖g_j‖)` from one gradient.
pub fn calibrate_scales(first_iteration_grads: &GradientSet, floor: f64) -> Result<ScaleProfile> {
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(Error::BadConfig(vec![format!(
            "scale floor {floor} outside (0, 1]"
        )]));
    }
    if first_iteration_grads.num_layers() == 0 {
        return Err(Error::EmptyGradient);
    }
    let norms: Vec<(&str, f64)> = first_iteration_grads
        .layers()
        .iter()
        .map(|l| (l.id.as_str(), GradientSet::layer_sq_norm(&l.values).sqrt()))
        .collect();
    let max = norms.iter().map(|&(_, n)| n).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateCalibration);
    }
    Ok(ScaleProfile {
        alpha: norms
            .into_iter()
            .map(|(id, n)| (id.to_owned(), (n / max).max(floor)))
            .collect(),
    })
}

/// Divides (`Down`) or multiplies (`Up`) each layer by its scale factor.
pub fn apply_scaling(
    g: &GradientSet,
    profile: &ScaleProfile,
    direction: ScaleDirection,
) -> Result<GradientSet> {
    let mut out = g.clone();
    scale_in_place(&mut out, profile, direction)?;
    Ok(out)
}

/// `1/α_k` for each layer of `g`, in layer order.
pub(crate) fn inverse_factors(g: &GradientSet, profile: &ScaleProfile) -> Result<Vec<f64>> {
    g.layers()
        .iter()
        .map(|layer| profile.factor_for(&layer.id).map(|a| 1.0 / a))
        .collect()
}

/// `‖(g · α⁻¹) · factor‖₂`, summed exactly as the norm of the materialised
/// product.
pub(crate) fn scaled_down_norm(g: &GradientSet, inverses: &[f64], factor: f64) -> f64 {
    g.layers()
        .iter()
        .zip(inverses)
        .map(|(layer, &inv)| {
            layer
                .values
                .iter()
                .map(|&v| {
                    let w = (v * inv) * factor;
                    w * w
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

fn scale_in_place(
    g: &mut GradientSet,
    profile: &ScaleProfile,
    direction: ScaleDirection,
) -> Result<()> {
    for layer in g.layers_mut() {
        let alpha = profile.factor_for(&layer.id)?;
        match direction {
            ScaleDirection::Down => layer.values.iter_mut().for_each(|v| *v /= alpha),
            ScaleDirection::Up => layer.values.iter_mut().for_each(|v| *v *= alpha),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_norms(norms: &[(&str, f64)]) -> GradientSet {
        // Two elements per layer so the norm is spread, (n·0.6, n·0.8).
        GradientSet::from_layers(norms.iter().map(|&(id, n)| (id, vec![0.6 * n, 0.8 * n]))).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn max_normalization() {
        let p = calibrate_scales(&with_norms(&[("a", 2.0), ("b", 4.0), ("c", 8.0)]), 1e-3).unwrap();
        assert!(close(p.get("a").unwrap(), 0.25));
        assert!(close(p.get("b").unwrap(), 0.5));
        assert_eq!(p.get("c").unwrap(), 1.0);
    }

    #[test]
    fn single_layer_is_one() {
        let p = calibrate_scales(&with_norms(&[("only", 0.37)]), 1e-3).unwrap();
        assert_eq!(p.get("only"), Some(1.0));
    }

    #[test]
    fn floor_clamps_vanishing_layer() {
        let p = calibrate_scales(&with_norms(&[("a", 1e-9), ("b", 1.0)]), 1e-3).unwrap();
        assert_eq!(p.get("a"), Some(1e-3));
        assert_eq!(p.get("b"), Some(1.0));
    }

    #[test]
    fn calibration_errors() {
        let zero = with_norms(&[("a", 0.0), ("b", 0.0)]);
        assert_eq!(
            calibrate_scales(&zero, 1e-3).unwrap_err().code(),
            "degenerate-calibration"
        );
        let g = with_norms(&[("a", 1.0)]);
        assert_eq!(calibrate_scales(&g, 0.0).unwrap_err().code(), "bad-config");
        assert_eq!(calibrate_scales(&g, 1.5).unwrap_err().code(), "bad-config");
    }

    #[test]
    fn down_then_up_round_trips() {
        let g = GradientSet::from_layers([("a", vec![0.3, -1.7, 2.2]), ("b", vec![9.1])]).unwrap();
        let p = ScaleProfile::from_factors([("a", 0.013), ("b", 0.77)]).unwrap();
        let down = apply_scaling(&g, &p, ScaleDirection::Down).unwrap();
        let back = apply_scaling(&down, &p, ScaleDirection::Up).unwrap();
        for (x, y) in back.values().zip(g.values()) {
            assert!((x - y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn identity_profile_and_definition() {
        let g = GradientSet::from_layers([("a", vec![2.0, -3.0])]).unwrap();
        let id = ScaleProfile::uniform(g.layer_ids());
        assert_eq!(apply_scaling(&g, &id, ScaleDirection::Down).unwrap(), g);
        assert_eq!(apply_scaling(&g, &id, ScaleDirection::Up).unwrap(), g);
        let half = ScaleProfile::from_factors([("a", 0.5)]).unwrap();
        let down = apply_scaling(&g, &half, ScaleDirection::Down).unwrap();
        assert_eq!(down.layer("a").unwrap()[0], 4.0);
    }

    #[test]
    fn missing_layer_is_a_coverage_error() {
        let g = GradientSet::from_layers([("a", vec![1.0]), ("b", vec![1.0])]).unwrap();
        let p = ScaleProfile::uniform(["a"]);
        let err = apply_scaling(&g, &p, ScaleDirection::Down).unwrap_err();
        assert_eq!(err.code(), "scale-coverage");
    }

    #[test]
    fn invalid_factors_rejected() {
        assert!(ScaleProfile::from_factors([("a", 0.0)]).is_err());
        assert!(ScaleProfile::from_factors([("a", 1.1)]).is_err());
    }
}
