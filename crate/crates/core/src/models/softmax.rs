use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::{init_uniform, softmax_residual, Classifier};
use crate::grad::GradientSet;

/// Multinomial logistic regression, `softmax(W·x + b)`.
///
/// Layers: `"w"` (classes × features, row-major) and `"b"` (classes).
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxRegressor {
    input_dim: usize,
    classes: usize,
    params: GradientSet,
}

impl SoftmaxRegressor {
    pub fn new(input_dim: usize, classes: usize, seed: u64) -> Self {
        Self {
            input_dim,
            classes,
            params: init_uniform(seed, &[("w", classes * input_dim), ("b", classes)]),
        }
    }

    /// Model with every weight and bias set to zero.
    pub fn zeros(input_dim: usize, classes: usize) -> Self {
        let mut m = Self::new(input_dim, classes, 0);
        m.params = m.params.zeros_like();
        m
    }

    fn weights(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape(
            (self.classes, self.input_dim),
            self.params.layer("w").unwrap(),
        )
        .unwrap()
    }

    fn bias(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(self.params.layer("b").unwrap())
    }
}

impl Classifier for SoftmaxRegressor {
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
        x.dot(&self.weights().t()) + self.bias()
    }

    fn backprop(&self, x: &Array2<f64>, labels: &[usize]) -> GradientSet {
        let mut delta = self.logits_batch(x);
        softmax_residual(&mut delta, labels);
        let dw = delta.t().dot(x);
        let db = delta.sum_axis(Axis(0));
        GradientSet::from_layers([("w", dw.into_iter().collect()), ("b", db.to_vec())])
            .expect("fixed layer ids")
    }
}
