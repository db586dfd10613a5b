//! zCDP privacy accounting.
//!
//! Each optimizer step is treated as a Gaussian mechanism with noise
//! multiplier `z_t`, which is `ρ = 1/(2·z_t²)`-zCDP. zCDP composes by adding
//! `ρ`, and a total budget converts to `(ε, δ)`-DP through
//! `ε = ρ + 2·√(ρ·ln(1/δ))`.
//!
//! No privacy amplification by subsampling is applied, so the reported `ε` is
//! a conservative upper bound.

use serde::{Deserialize, Serialize};

use crate::engine::DpConfig;
use crate::error::{Error, Result};

/// zCDP cost of one step with noise multiplier `z_t`.
pub fn step_rho(z_t: f64) -> Result<f64> {
    if !(z_t > 0.0) {
        return Err(Error::InfinitePrivacyLoss);
    }
    Ok(1.0 / (2.0 * z_t * z_t))
}

/// Converts a zCDP budget to `ε` at the given `δ`.
pub fn to_epsilon(rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if !(rho >= 0.0) {
        return Err(Error::BadInput(format!(
            "rho must be non-negative, got {rho}"
        )));
    }
    Ok(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: u64,
    pub step: u64,
    pub z: f64,
}

/// Running zCDP total plus the steps that produced it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    rho_total: f64,
    steps: Vec<StepRecord>,
}

impl PrivacyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a ledger from a step history.
    pub fn from_steps(steps: impl IntoIterator<Item = StepRecord>) -> Result<Self> {
        steps
            .into_iter()
            .try_fold(Self::new(), |l, s| l.record_step(s.epoch, s.step, s.z))
    }

    /// Returns the ledger with one more composed step.
    pub fn record_step(mut self, epoch: u64, step: u64, z_t: f64) -> Result<Self> {
        self.rho_total += step_rho(z_t)?;
        self.steps.push(StepRecord {
            epoch,
            step,
            z: z_t,
        });
        Ok(self)
    }

    pub fn rho_total(&self) -> f64 {
        self.rho_total
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// Sum of per-step `ρ` recomputed from the history.
    pub fn recompute_rho(&self) -> Result<f64> {
        self.steps.iter().map(|s| step_rho(s.z)).sum()
    }

    pub fn epsilon(&self, delta: f64) -> Result<f64> {
        to_epsilon(self.rho_total, delta)
    }

    /// Serializable summary at a given `δ`.
    pub fn report(&self, delta: f64) -> Result<LedgerReport> {
        let epsilon = self.epsilon(delta)?;
        Ok(LedgerReport {
            rho_total: self.rho_total,
            delta,
            epsilon,
            log10_epsilon: epsilon.log10(),
            steps: self.steps.clone(),
        })
    }
}

/// JSON form of a ledger as embedded in run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub rho_total: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub log10_epsilon: f64,
    pub steps: Vec<StepRecord>,
}

impl LedgerReport {
    /// Recomputes `ε` from the embedded schedule and checks it against the
    /// stored value within `tol` (relative).
    pub fn verify(&self, tol: f64) -> Result<bool> {
        let ledger = PrivacyLedger::from_steps(self.steps.iter().copied())?;
        let eps = ledger.epsilon(self.delta)?;
        Ok((eps - self.epsilon).abs() <= tol * self.epsilon.abs().max(1.0))
    }
}

/// Total `ε` of a run with `epochs × steps_per_epoch` steps at `z_t = z₀·d(t)`.
pub fn epsilon_for_schedule(
    config: &DpConfig,
    epochs: u64,
    steps_per_epoch: u64,
    delta: f64,
) -> Result<f64> {
    ledger_for_schedule(config, epochs, steps_per_epoch)?.epsilon(delta)
}

/// Ledger for a full schedule, one record per optimizer step.
pub fn ledger_for_schedule(
    config: &DpConfig,
    epochs: u64,
    steps_per_epoch: u64,
) -> Result<PrivacyLedger> {
    if config.z0 == 0.0 {
        return Err(Error::InfinitePrivacyLoss);
    }
    if epochs == 0 || steps_per_epoch == 0 {
        return Err(Error::BadConfig(vec![
            "epochs and steps_per_epoch must be at least 1".into(),
        ]));
    }
    let mut ledger = PrivacyLedger::new();
    for epoch in 0..epochs {
        let z = config.noise_multiplier(epoch);
        for step in 0..steps_per_epoch {
            ledger = ledger.record_step(epoch, step, z)?;
        }
    }
    Ok(ledger)
}
