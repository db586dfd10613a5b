use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OptimizerKind};
use crate::accountant::{PrivacyLedger, StepRecord};
use crate::engine::ScaleProfile;
use crate::error::{Error, Result};
use crate::models::ModelCheckpoint;

/// Privacy outcome of a DP run.
///
/// `rho_total`, `epsilon` and `log10_epsilon` are `null` when some step ran
/// without noise, since no finite guarantee exists then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySection {
    pub delta: f64,
    pub rho_total: Option<f64>,
    pub epsilon: Option<f64>,
    pub log10_epsilon: Option<f64>,
    pub z_schedule: Vec<StepRecord>,
}

impl PrivacySection {
    pub(crate) fn from_schedule(delta: f64, z_schedule: Vec<StepRecord>) -> Result<Self> {
        let (rho_total, epsilon) = match PrivacyLedger::from_steps(z_schedule.iter().copied()) {
            Ok(ledger) => (Some(ledger.rho_total()), Some(ledger.epsilon(delta)?)),
            Err(Error::InfinitePrivacyLoss) => (None, None),
            Err(e) => return Err(e),
        };
        Ok(Self {
            delta,
            rho_total,
            epsilon,
            log10_epsilon: epsilon.filter(|e| *e > 0.0).map(f64::log10),
            z_schedule,
        })
    }

    /// Recomputes `ε` from the embedded schedule and compares within `tol`.
    pub fn verify(&self, tol: f64) -> Result<bool> {
        let fresh = Self::from_schedule(self.delta, self.z_schedule.clone())?;
        Ok(match (fresh.epsilon, self.epsilon) {
            (Some(a), Some(b)) => (a - b).abs() <= tol * b.abs().max(1.0),
            (None, None) => true,
            _ => false,
        })
    }
}

/// Membership-inference outcome against the report's model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSection {
    pub auc: f64,
    pub member_records: usize,
    pub non_member_records: usize,
    pub shadow_seed: u64,
    pub attack_seed: u64,
    pub shadow_auc: f64,
}

/// Non-deterministic measurements, kept apart from everything else.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub epoch_seconds: Vec<f64>,
}

impl Timing {
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epoch_seconds.is_empty() {
            return 0.0;
        }
        self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub epoch_loss: Vec<f64>,
    pub steps_per_epoch: u64,
    pub grad_evals_per_epoch: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_profile: Option<ScaleProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSection>,
    pub checkpoint: ModelCheckpoint,
    pub timing: Timing,
}

impl RunReport {
    /// Expected gradient evaluations per epoch for an optimizer.
    pub fn expected_grad_evals(
        optimizer: OptimizerKind,
        batches: u64,
        batch_size: u64,
        workers: u64,
    ) -> u64 {
        match optimizer {
            OptimizerKind::Sgd => batches,
            OptimizerKind::Dpsgd => batches * batch_size,
            OptimizerKind::Edpsgd => batches * workers,
        }
    }

    /// JSON of everything except the timing section.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        serde_json::to_string(&copy).expect("report serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_pretty())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::NoTarget(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::NoTarget(format!("{} is not a run report: {e}", path.display())))
    }
}
