use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::{init_uniform, softmax_residual, Classifier};
use crate::grad::GradientSet;

/// Two affine layers with a tanh between them.
///
/// Layers: `"l1.w"` (hidden × input), `"l1.b"`, `"l2.w"` (classes × hidden),
/// `"l2.b"`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp2 {
    input_dim: usize,
    hidden: usize,
    classes: usize,
    params: GradientSet,
}

impl Mlp2 {
    pub fn new(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden,
            classes,
            params: init_uniform(
                seed,
                &[
                    ("l1.w", hidden * input_dim),
                    ("l1.b", hidden),
                    ("l2.w", classes * hidden),
                    ("l2.b", classes),
                ],
            ),
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn matrix(&self, id: &str, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, cols), self.params.layer(id).unwrap()).unwrap()
    }

    fn vector(&self, id: &str) -> ArrayView1<'_, f64> {
        ArrayView1::from(self.params.layer(id).unwrap())
    }

    fn hidden_activations(&self, x: &Array2<f64>) -> Array2<f64> {
        let w1 = self.matrix("l1.w", self.hidden, self.input_dim);
        let mut h = x.dot(&w1.t()) + self.vector("l1.b");
        h.mapv_inplace(f64::tanh);
        h
    }

    fn output(&self, h: &Array2<f64>) -> Array2<f64> {
        let w2 = self.matrix("l2.w", self.classes, self.hidden);
        h.dot(&w2.t()) + self.vector("l2.b")
    }
}

impl Classifier for Mlp2 {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn classes(&self) -> usize {
        self.classes
    }

    fn params(&self) -> &GradientSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut GradientSet {
        &mut self.params
    }

    fn logits_batch(&self, x: &Array2<f64>) -> Array2<f64> {
        self.output(&self.hidden_activations(x))
    }

    fn backprop(&self, x: &Array2<f64>, labels: &[usize]) -> GradientSet {
        let h = self.hidden_activations(x);
        let mut d2 = self.output(&h);
        softmax_residual(&mut d2, labels);
        let dw2 = d2.t().dot(&h);
        let db2 = d2.sum_axis(Axis(0));
        let mut d1 = d2.dot(&self.matrix("l2.w", self.classes, self.hidden));
        d1.zip_mut_with(&h, |d, &a| *d *= 1.0 - a * a);
        let dw1 = d1.t().dot(x);
        let db1 = d1.sum_axis(Axis(0));
        GradientSet::from_layers([
            ("l1.w", dw1.into_iter().collect()),
            ("l1.b", db1.to_vec()),
            ("l2.w", dw2.into_iter().collect()),
            ("l2.b", db2.to_vec()),
        ])
        .expect("fixed layer ids")
    }
}
