//! Parameter update rules applied to whatever gradient the pipeline returns.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grad::GradientSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    Sgd,
    #[default]
    Adam,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Stateful optimizer over a [`GradientSet`] of parameters.
#[derive(Debug, Clone)]
pub struct Optimizer {
    rule: UpdateRule,
    lr: f64,
    moments: Option<(GradientSet, GradientSet)>,
    t: i32,
}

impl Optimizer {
    pub fn new(rule: UpdateRule, lr: f64) -> Self {
        Self {
            rule,
            lr,
            moments: None,
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut GradientSet, grad: &GradientSet) -> Result<()> {
        params.check_compatible(grad)?;
        match self.rule {
            UpdateRule::Sgd => params.axpy(-self.lr, grad),
            UpdateRule::Adam => {
                self.t += 1;
                let (m, v) = self
                    .moments
                    .get_or_insert_with(|| (grad.zeros_like(), grad.zeros_like()));
                let bc1 = 1.0 - ADAM_BETA1.powi(self.t);
                let bc2 = 1.0 - ADAM_BETA2.powi(self.t);
                let layers = params
                    .layers_mut()
                    .iter_mut()
                    .zip(grad.layers())
                    .zip(m.layers_mut().iter_mut().zip(v.layers_mut().iter_mut()));
                for ((p, g), (m, v)) in layers {
                    for (((p, &g), m), v) in p
                        .values
                        .iter_mut()
                        .zip(&g.values)
                        .zip(m.values.iter_mut())
                        .zip(v.values.iter_mut())
                    {
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                        *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                    }
                }
                Ok(())
            }
        }
    }
}
