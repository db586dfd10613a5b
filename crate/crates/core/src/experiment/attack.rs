use std::path::Path;

use super::config::ExperimentConfig;
use super::report::{AttackSection, RunReport};
use super::train::{experiment_data, run_training_with, RunOptions};
use crate::error::{Error, Result};
use crate::mia::{build_attack_records, train_attack_model, AttackRecord, AttackSplit};
use crate::models::{AnyModel, ModelCheckpoint};

/// Offset between the shadow seed and the attack-classifier seed.
const ATTACK_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttackOptions {
    /// Shadow seed; defaults to the target seed plus one.
    pub seed: Option<u64>,
    pub run: RunOptions,
}

/// Records for a trained model on its own member / non-member split.
fn records_for(
    config: &ExperimentConfig,
    checkpoint: &ModelCheckpoint,
) -> Result<Vec<AttackRecord>> {
    let model = AnyModel::from_checkpoint(checkpoint)?;
    let (train, test) = experiment_data(config)?;
    build_attack_records(&model, &AttackSplit::balanced(train, test)?)
}

/// Shadow-model attack against the model embedded in `target`.
///
/// The shadow reuses the target's whole recipe (data generator parameters,
/// model, optimizer, DP settings) with a different master seed.
pub fn attack_report(target: &RunReport, options: AttackOptions) -> Result<AttackSection> {
    let shadow_seed = options.seed.unwrap_or(target.config.seed.wrapping_add(1));
    if shadow_seed == target.config.seed {
        return Err(Error::BadConfig(vec![
            "shadow seed must differ from the target seed".into(),
        ]));
    }
    let attack_seed = shadow_seed.wrapping_add(ATTACK_SEED_OFFSET);

    let shadow_config = ExperimentConfig {
        seed: shadow_seed,
        ..target.config.clone()
    };
    let shadow = run_training_with(&shadow_config, options.run)?;
    let shadow_records = records_for(&shadow.config, &shadow.checkpoint)?;
    let attack = train_attack_model(&shadow_records, attack_seed)?;

    let target_records = records_for(&target.config, &target.checkpoint)?;
    let members = target_records
        .iter()
        .filter(|r| r.label == crate::mia::Membership::Member)
        .count();
    Ok(AttackSection {
        auc: attack.evaluate(&target_records)?,
        member_records: members,
        non_member_records: target_records.len() - members,
        shadow_seed,
        attack_seed,
        shadow_auc: attack.evaluate(&shadow_records)?,
    })
}

/// Reads a report, attacks its model and returns the amended report.
pub fn run_attack(
    target_report_path: impl AsRef<Path>,
    options: AttackOptions,
) -> Result<RunReport> {
    let mut report = RunReport::read(target_report_path)?;
    report.attack = Some(attack_report(&report, options)?);
    Ok(report)
}
