//! Membership-inference evaluation with a shadow model.
//!
//! The attacker trains a shadow model with the target's recipe on data it
//! controls, labels the shadow's outputs on its own training set as members
//! and on held-out data as non-members, and fits a logistic attack model on
//! the posteriors sorted in descending order. The attack model then scores
//! the target's outputs and success is reported as AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Classifier, Example, SoftmaxRegressor};
use crate::optim::{Optimizer, UpdateRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Member,
    NonMember,
}

impl Membership {
    pub fn flipped(self) -> Self {
        match self {
            Membership::Member => Membership::NonMember,
            Membership::NonMember => Membership::Member,
        }
    }
}

/// Sorted posterior vector of one queried example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub features: Vec<f64>,
    pub label: Membership,
}

impl AttackRecord {
    /// Record from a raw posterior; the features are sorted descending.
    pub fn from_posterior(mut posterior: Vec<f64>, label: Membership) -> Self {
        posterior.sort_by(|a, b| b.total_cmp(a));
        Self {
            features: posterior,
            label,
        }
    }
}

/// Balanced member / non-member example sets.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSplit {
    members: Vec<Example>,
    non_members: Vec<Example>,
}

impl AttackSplit {
    /// Truncates the larger side so both have the same size.
    pub fn balanced(mut members: Vec<Example>, mut non_members: Vec<Example>) -> Result<Self> {
        let n = members.len().min(non_members.len());
        if n == 0 {
            return Err(Error::DegenerateAttackData);
        }
        members.truncate(n);
        non_members.truncate(n);
        Ok(Self {
            members,
            non_members,
        })
    }

    pub fn members(&self) -> &[Example] {
        &self.members
    }

    pub fn non_members(&self) -> &[Example] {
        &self.non_members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Queries `model` on every split example, members first.
pub fn build_attack_records<M: Classifier + ?Sized>(
    model: &M,
    split: &AttackSplit,
) -> Result<Vec<AttackRecord>> {
    let tagged = split
        .members
        .iter()
        .map(|e| (e, Membership::Member))
        .chain(split.non_members.iter().map(|e| (e, Membership::NonMember)));
    tagged
        .map(|(e, label)| {
            if e.label >= model.classes() {
                return Err(Error::BadInput(format!(
                    "label {} but model has {} classes",
                    e.label,
                    model.classes()
                )));
            }
            Ok(AttackRecord::from_posterior(
                model.forward(&e.features)?,
                label,
            ))
        })
        .collect()
}

const ATTACK_ITERATIONS: usize = 400;
const ATTACK_LR: f64 = 0.05;

/// Logistic classifier over standardised sorted-posterior features.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    classifier: SoftmaxRegressor,
}

impl AttackModel {
    fn standardise(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Attack score: the model's probability that the record is a member.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        Ok(self.classifier.forward(&self.standardise(features))?[1])
    }

    pub fn predict(&self, features: &[f64]) -> Result<Membership> {
        Ok(if self.score(features)? > 0.5 {
            Membership::Member
        } else {
            Membership::NonMember
        })
    }

    /// AUC of this attack on a set of labelled records.
    pub fn evaluate(&self, records: &[AttackRecord]) -> Result<f64> {
        let scored = records
            .iter()
            .map(|r| Ok((self.score(&r.features)?, r.label)))
            .collect::<Result<Vec<_>>>()?;
        auc(&scored)
    }
}

/// Fits the attack classifier on shadow records (full-batch Adam).
pub fn train_attack_model(shadow_records: &[AttackRecord], seed: u64) -> Result<AttackModel> {
    let has = |l| shadow_records.iter().any(|r| r.label == l);
    if !has(Membership::Member) || !has(Membership::NonMember) {
        return Err(Error::DegenerateAttackData);
    }
    let dim = shadow_records[0].features.len();
    if shadow_records.iter().any(|r| r.features.len() != dim) {
        return Err(Error::BadInput(
            "attack features have differing lengths".into(),
        ));
    }
    let n = shadow_records.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|j| shadow_records.iter().map(|r| r.features[j]).sum::<f64>() / n)
        .collect();
    let scale: Vec<f64> = (0..dim)
        .map(|j| {
            let var = shadow_records
                .iter()
                .map(|r| (r.features[j] - mean[j]).powi(2))
                .sum::<f64>()
                / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut model = AttackModel {
        mean,
        scale,
        classifier: SoftmaxRegressor::new(dim, 2, seed),
    };
    let examples: Vec<Example> = shadow_records
        .iter()
        .map(|r| {
            let class = usize::from(r.label == Membership::Member);
            Example::new(model.standardise(&r.features), class)
        })
        .collect();
    let mut opt = Optimizer::new(UpdateRule::Adam, ATTACK_LR);
    for _ in 0..ATTACK_ITERATIONS {
        let g = model.classifier.grad_mean_loss(&examples)?;
        opt.step(model.classifier.params_mut(), &g)?;
    }
    Ok(model)
}

/// Mann–Whitney AUC: the probability a random member outscores a random
/// non-member, ties counting one half.
pub fn auc(scores: &[(f64, Membership)]) -> Result<f64> {
    let n_pos = scores.iter().filter(|s| s.1 == Membership::Member).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateEval);
    }
    if scores.iter().any(|s| s.0.is_nan()) {
        return Err(Error::BadInput("NaN attack score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));
    // Doubled mid-ranks keep the statistic in exact integer arithmetic.
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].0 == scores[order[i]].0 {
            j += 1;
        }
        let doubled_mid = (i + 1 + j + 1) as u64;
        let members_in_tie = order[i..=j]
            .iter()
            .filter(|&&k| scores[k].1 == Membership::Member)
            .count() as u64;
        doubled_rank_sum += doubled_mid * members_in_tie;
        i = j + 1;
    }
    let (p, q) = (n_pos as u64, n_neg as u64);
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * p * q) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(members: &[f64], non: &[f64]) -> Vec<(f64, Membership)> {
        members
            .iter()
            .map(|&s| (s, Membership::Member))
            .chain(non.iter().map(|&s| (s, Membership::NonMember)))
            .collect()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&labelled(&[0.9, 0.8], &[0.1, 0.2, 0.3])).unwrap(), 1.0);
        assert_eq!(auc(&labelled(&[0.4, 0.4], &[0.4, 0.4])).unwrap(), 0.5);
        assert_eq!(auc(&labelled(&[0.9, 0.4], &[0.6, 0.1])).unwrap(), 0.75);
        assert_eq!(auc(&labelled(&[0.1], &[0.9])).unwrap(), 0.0);
    }

    #[test]
    fn auc_needs_both_labels() {
        assert_eq!(
            auc(&labelled(&[0.3], &[])).unwrap_err().code(),
            "degenerate-eval"
        );
        assert_eq!(
            auc(&labelled(&[], &[0.3])).unwrap_err().code(),
            "degenerate-eval"
        );
    }

    #[test]
    fn records_sort_descending() {
        let r = AttackRecord::from_posterior(vec![0.1, 0.7, 0.2], Membership::Member);
        assert_eq!(r.features, vec![0.7, 0.2, 0.1]);
    }

    #[test]
    fn attack_training_needs_both_labels() {
        let only = vec![AttackRecord::from_posterior(vec![0.5, 0.5], Membership::Member); 4];
        assert_eq!(
            train_attack_model(&only, 0).unwrap_err().code(),
            "degenerate-attack-data"
        );
    }

    #[test]
    fn identical_features_give_constant_scores() {
        let records: Vec<_> = (0..20)
            .map(|i| {
                let label = if i % 2 == 0 {
                    Membership::Member
                } else {
                    Membership::NonMember
                };
                AttackRecord::from_posterior(vec![0.6, 0.3, 0.1], label)
            })
            .collect();
        let model = train_attack_model(&records, 3).unwrap();
        let s0 = model.score(&records[0].features).unwrap();
        assert!(records
            .iter()
            .all(|r| model.score(&r.features).unwrap() == s0));
        assert_eq!(model.evaluate(&records).unwrap(), 0.5);
    }

    #[test]
    fn balanced_split_truncates() {
        let ex = |v: f64| Example::new(vec![v], 0);
        let s =
            AttackSplit::balanced(vec![ex(1.0), ex(2.0), ex(3.0)], vec![ex(4.0), ex(5.0)]).unwrap();
        assert_eq!(s.members().len(), 2);
        assert_eq!(s.non_members().len(), 2);
        assert!(AttackSplit::balanced(vec![], vec![ex(1.0)]).is_err());
    }
}
