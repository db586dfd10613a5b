use crate::grad::GradientSet;

/// Rescales `g` so its global L2 norm is at most `c`.
///
/// A gradient already inside the ball (including the zero gradient) is
/// returned unchanged. Otherwise the result is `g · c/‖g‖`, with the factor
/// nudged down by single ulps until the recomputed norm is `≤ c`, so the
/// bound holds exactly in floating point and not just in real arithmetic.
pub fn clip_by_global_norm(g: &GradientSet, c: f64) -> GradientSet {
    let mut out = g.clone();
    clip_in_place(&mut out, c);
    out
}

pub(crate) fn clip_in_place(g: &mut GradientSet, c: f64) {
    let norm = g.norm_unchecked();
    if let Some(factor) = clip_factor(norm, c, |f| scaled_norm(g, f)) {
        for layer in g.layers_mut() {
            layer.values.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Factor that brings a vector of norm `norm` inside the `c` ball, or `None`
/// when it is already inside. `norm_at(f)` must return the norm of the
/// vector multiplied by `f`, computed the way the caller will materialise it.
pub(crate) fn clip_factor(norm: f64, c: f64, norm_at: impl Fn(f64) -> f64) -> Option<f64> {
    debug_assert!(c > 0.0, "clip bound must be positive");
    if !(norm > c) {
        return None;
    }
    let mut factor = c / norm;
    while norm_at(factor) > c {
        factor = factor.next_down();
    }
    Some(factor)
}

/// `‖g · factor‖₂`, summed exactly as the norm of the materialised product.
fn scaled_norm(g: &GradientSet, factor: f64) -> f64 {
    g.layers()
        .iter()
        .map(|l| {
            l.values
                .iter()
                .map(|&v| (v * factor) * (v * factor))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}
