//! Small trainable classifiers with hand-written backpropagation.
//!
//! Both models keep their parameters in a [`GradientSet`] whose layer ids
//! match the ids of the gradients they produce, so optimizer updates are
//! plain `linear_combine`s.

mod data;
mod mlp;
mod softmax;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::GradientSet;

pub use data::{generate_blobs, BlobDataset, BlobSpec};
pub use mlp::Mlp2;
pub use softmax::SoftmaxRegressor;

/// One labelled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Example {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

/// Behaviour shared by the toy classifiers.
pub trait Classifier: Send + Sync {
    fn input_dim(&self) -> usize;
    fn classes(&self) -> usize;
    fn params(&self) -> &GradientSet;
    fn params_mut(&mut self) -> &mut GradientSet;

    /// Pre-softmax scores for a batch, one row per example.
    fn logits_batch(&self, x: &Array2<f64>) -> Array2<f64>;

    /// Exact gradient of the mean cross-entropy over a validated batch.
    fn backprop(&self, x: &Array2<f64>, labels: &[usize]) -> GradientSet;

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = self.batch_matrix(std::slice::from_ref(&x))?;
        Ok(self.logits_batch(&batch).row(0).to_vec())
    }

    /// Posterior over classes.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Mean cross-entropy loss over `examples`.
    fn mean_loss(&self, examples: &[Example]) -> Result<f64> {
        let (x, labels) = self.prepare(examples)?;
        let logits = self.logits_batch(&x);
        let total: f64 = logits
            .axis_iter(Axis(0))
            .zip(&labels)
            .map(|(row, &y)| log_sum_exp(row.as_slice().unwrap()) - row[y])
            .sum();
        Ok(total / examples.len() as f64)
    }

    fn accuracy(&self, examples: &[Example]) -> Result<f64> {
        let (x, labels) = self.prepare(examples)?;
        let logits = self.logits_batch(&x);
        let hits = logits
            .axis_iter(Axis(0))
            .zip(&labels)
            .filter(|(row, &y)| argmax(row.as_slice().unwrap()) == y)
            .count();
        Ok(hits as f64 / examples.len() as f64)
    }

    fn grad_mean_loss(&self, examples: &[Example]) -> Result<GradientSet> {
        let (x, labels) = self.prepare(examples)?;
        Ok(self.backprop(&x, &labels))
    }

    /// One gradient per example, each computed on its own.
    fn grad_per_example(&self, examples: &[Example]) -> Result<Vec<GradientSet>> {
        if examples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        examples
            .iter()
            .map(|e| self.grad_mean_loss(std::slice::from_ref(e)))
            .collect()
    }

    #[doc(hidden)]
    fn batch_matrix(&self, rows: &[&[f64]]) -> Result<Array2<f64>> {
        let d = self.input_dim();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::BadInput(format!(
                    "expected {d} features, got {}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        Ok(Array2::from_shape_vec((rows.len(), d), flat).expect("row lengths checked"))
    }

    #[doc(hidden)]
    fn prepare(&self, examples: &[Example]) -> Result<(Array2<f64>, Vec<usize>)> {
        if examples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let rows: Vec<&[f64]> = examples.iter().map(|e| e.features.as_slice()).collect();
        let x = self.batch_matrix(&rows)?;
        let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.classes()) {
            return Err(Error::BadInput(format!(
                "label {bad} out of range for {} classes",
                self.classes()
            )));
        }
        Ok((x, labels))
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

fn argmax(z: &[f64]) -> usize {
    z.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Rows of `logits` turned into `(softmax − onehot) / batch`, in place.
pub(crate) fn softmax_residual(logits: &mut Array2<f64>, labels: &[usize]) {
    let inv_batch = 1.0 / labels.len() as f64;
    for (mut row, &y) in logits.axis_iter_mut(Axis(0)).zip(labels) {
        let p = softmax(&row.to_vec());
        for (dst, (c, pc)) in row.iter_mut().zip(p.into_iter().enumerate()) {
            let target = if c == y { 1.0 } else { 0.0 };
            *dst = (pc - target) * inv_batch;
        }
    }
}

/// Deterministic uniform initialisation in `[-0.1, 0.1]`.
pub(crate) fn init_uniform(seed: u64, shapes: &[(&str, usize)]) -> GradientSet {
    use crate::rng::{open_unit, NoiseStreamKey, StreamDomain};
    let mut rng = NoiseStreamKey::root(seed).rng(StreamDomain::Init);
    GradientSet::from_layers(shapes.iter().map(|&(id, len)| {
        (
            id,
            (0..len).map(|_| 0.2 * open_unit(&mut rng) - 0.1).collect(),
        )
    }))
    .expect("layer ids are distinct")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Softmax,
    Mlp2,
}

/// Either toy model, chosen at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Softmax(SoftmaxRegressor),
    Mlp2(Mlp2),
}

impl AnyModel {
    pub fn new(
        kind: ModelKind,
        input_dim: usize,
        hidden: usize,
        classes: usize,
        seed: u64,
    ) -> Self {
        match kind {
            ModelKind::Softmax => {
                AnyModel::Softmax(SoftmaxRegressor::new(input_dim, classes, seed))
            }
            ModelKind::Mlp2 => AnyModel::Mlp2(Mlp2::new(input_dim, hidden, classes, seed)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Softmax(_) => ModelKind::Softmax,
            AnyModel::Mlp2(_) => ModelKind::Mlp2,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            AnyModel::Softmax(m) => m,
            AnyModel::Mlp2(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Classifier {
        match self {
            AnyModel::Softmax(m) => m,
            AnyModel::Mlp2(m) => m,
        }
    }

    pub fn checkpoint(&self, seed: u64) -> ModelCheckpoint {
        ModelCheckpoint {
            kind: self.kind(),
            input_dim: self.input_dim(),
            hidden: match self {
                AnyModel::Softmax(_) => 0,
                AnyModel::Mlp2(m) => m.hidden(),
            },
            classes: self.classes(),
            seed,
            layers: self.params().clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &ModelCheckpoint) -> Result<Self> {
        let mut model = Self::new(
            ckpt.kind,
            ckpt.input_dim,
            ckpt.hidden,
            ckpt.classes,
            ckpt.seed,
        );
        model
            .params()
            .check_compatible(&ckpt.layers)
            .map_err(|e| Error::BadInput(format!("checkpoint layout: {e}")))?;
        *model.params_mut() = ckpt.layers.clone();
        Ok(model)
    }
}

impl Classifier for AnyModel {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn classes(&self) -> usize {
        self.inner().classes()
    }
    fn params(&self) -> &GradientSet {
        self.inner().params()
    }
    fn params_mut(&mut self) -> &mut GradientSet {
        self.inner_mut().params_mut()
    }
    fn logits_batch(&self, x: &Array2<f64>) -> Array2<f64> {
        self.inner().logits_batch(x)
    }
    fn backprop(&self, x: &Array2<f64>, labels: &[usize]) -> GradientSet {
        self.inner().backprop(x, labels)
    }
}

/// Self-describing JSON form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub kind: ModelKind,
    pub input_dim: usize,
    #[serde(default)]
    pub hidden: usize,
    pub classes: usize,
    pub seed: u64,
    pub layers: GradientSet,
}
