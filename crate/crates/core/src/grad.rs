//! Gradient container and the exact linear algebra the DP pipeline is built on.
//!
//! A [`GradientSet`] is an ordered list of named layers, each a flat `f64`
//! array. Layer ids are opaque strings owned by the model. Two sets may only
//! be combined when they have the same ids, in the same order, with the same
//! lengths; nothing is ever broadcast.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named block of a [`GradientSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub id: String,
    pub values: Vec<f64>,
}

/// Ordered map from layer id to a flat array of reals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientSet {
    layers: Vec<Layer>,
}

impl GradientSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from `(id, values)` pairs, keeping their order.
    pub fn from_layers<I, S>(layers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut set = Self::new();
        for (id, values) in layers {
            set.push_layer(id, values)?;
        }
        Ok(set)
    }

    /// Appends a layer. Ids must be unique within a set.
    pub fn push_layer(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let id = id.into();
        if self.layers.iter().any(|l| l.id == id) {
            return Err(Error::ShapeMismatch(format!("duplicate layer id `{id}`")));
        }
        self.layers.push(Layer { id, values });
        Ok(())
    }

    /// A set with the same layout as `self` and every element zero.
    pub fn zeros_like(&self) -> Self {
        self.map(|_| 0.0)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer(&self, id: &str) -> Option<&[f64]> {
        self.layers
            .iter()
            .find(|l| l.id == id)
            .map(|l| l.values.as_slice())
    }

    pub fn layer_mut(&mut self, id: &str) -> Option<&mut Vec<f64>> {
        self.layers
            .iter_mut()
            .find(|l| l.id == id)
            .map(|l| &mut l.values)
    }

    pub fn layer_ids(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().map(|l| l.id.as_str())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Total number of scalar elements across all layers.
    pub fn num_elements(&self) -> usize {
        self.layers.iter().map(|l| l.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_elements() == 0
    }

    /// Every element across layers, in layer order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.values.iter().copied())
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// Applies `f` to every element.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    id: l.id.clone(),
                    values: l.values.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// Checks that `other` has the same ids, order and lengths.
    pub fn check_compatible(&self, other: &GradientSet) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} layers vs {} layers",
                self.layers.len(),
                other.layers.len()
            )));
        }
        for (a, b) in self.layers.iter().zip(&other.layers) {
            if a.id != b.id {
                return Err(Error::ShapeMismatch(format!(
                    "layer `{}` vs layer `{}`",
                    a.id, b.id
                )));
            }
            if a.values.len() != b.values.len() {
                return Err(Error::ShapeMismatch(format!(
                    "layer `{}` has length {} vs {}",
                    a.id,
                    a.values.len(),
                    b.values.len()
                )));
            }
        }
        Ok(())
    }

    /// In-place `self += coeff * other`.
    pub fn axpy(&mut self, coeff: f64, other: &GradientSet) -> Result<()> {
        self.check_compatible(other)?;
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, &s) in dst.values.iter_mut().zip(&src.values) {
                *d += coeff * s;
            }
        }
        Ok(())
    }

    /// Sum of squares over one layer's elements.
    pub fn layer_sq_norm(values: &[f64]) -> f64 {
        values.iter().map(|v| v * v).sum()
    }

    /// Global L2 norm without the empty-set check; an empty set has norm 0.
    pub(crate) fn norm_unchecked(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| Self::layer_sq_norm(&l.values))
            .sum::<f64>()
            .sqrt()
    }
}

/// Global L2 norm over every element of every layer, as if concatenated.
pub fn l2_norm(g: &GradientSet) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::EmptyGradient);
    }
    Ok(g.norm_unchecked())
}

/// Elementwise `Σ cᵢ·gᵢ`, accumulated in ascending term order.
pub fn linear_combine(terms: &[(f64, &GradientSet)]) -> Result<GradientSet> {
    let (&(c0, first), rest) = terms
        .split_first()
        .ok_or_else(|| Error::ShapeMismatch("linear_combine needs at least one term".into()))?;
    let mut out = first.scale(c0);
    for &(c, g) in rest {
        out.axpy(c, g)?;
    }
    Ok(out)
}
