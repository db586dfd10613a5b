use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{ExperimentConfig, OptimizerKind};
use super::report::{PrivacySection, RunReport, Timing};
use crate::accountant::StepRecord;
use crate::engine::{
    calibrate_scales, dpsgd_reference_step, edp_step_with, partition_batch, DpConfig, Execution,
    ScaleProfile,
};
use crate::error::{Error, Result};
use crate::grad::GradientSet;
use crate::models::{AnyModel, BlobDataset, Classifier, Example};
use crate::optim::Optimizer;
use crate::rng::{NoiseStreamKey, StreamDomain};

/// Execution knobs that must not change a run's results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Threads for the worker lanes; 1 runs them serially.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

/// Target data of an experiment: `(train, test)`.
pub fn experiment_data(config: &ExperimentConfig) -> Result<(Vec<Example>, Vec<Example>)> {
    BlobDataset::generate(config.blob_spec())?.split(config.train_fraction, config.seed)
}

pub fn run_training(config: &ExperimentConfig) -> Result<RunReport> {
    run_training_with(config, RunOptions::default())
}

pub fn run_training_with(config: &ExperimentConfig, options: RunOptions) -> Result<RunReport> {
    config.validate()?;
    if options.threads == 0 {
        return Err(Error::BadConfig(vec!["threads must be at least 1".into()]));
    }
    if options.threads == 1 {
        return Trainer::new(config, Execution::Serial)?.run();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| Error::BadConfig(vec![format!("thread pool: {e}")]))?;
    pool.install(|| Trainer::new(config, Execution::Parallel)?.run())
}

struct Trainer {
    config: ExperimentConfig,
    dp: Option<DpConfig>,
    execution: Execution,
    train: Vec<Example>,
    test: Vec<Example>,
    model: AnyModel,
    optimizer: Optimizer,
    profile: Option<ScaleProfile>,
    schedule: Vec<StepRecord>,
}

impl Trainer {
    fn new(config: &ExperimentConfig, execution: Execution) -> Result<Self> {
        let config = config.normalized();
        let (train, test) = experiment_data(&config)?;
        let model = AnyModel::new(
            config.model.kind,
            config.dataset.dimension,
            config.model.hidden,
            config.dataset.classes,
            config.seed,
        );
        Ok(Self {
            dp: config.dp_config(),
            optimizer: Optimizer::new(config.update, config.learning_rate),
            config,
            execution,
            train,
            test,
            model,
            profile: None,
            schedule: Vec::new(),
        })
    }

    fn epoch_order(&self, epoch: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(
            &mut NoiseStreamKey::new(self.config.seed, epoch, 0, 0).rng(StreamDomain::Shuffle),
        );
        order
    }

    fn batch(&self, order: &[usize], step: usize) -> Vec<Example> {
        let b = self.config.batch_size;
        order[step * b..(step + 1) * b]
            .iter()
            .map(|&i| self.train[i].clone())
            .collect()
    }

    fn steps_per_epoch(&self) -> usize {
        self.train.len() / self.config.batch_size
    }

    /// The DP (or plain) gradient for one batch and the number of gradient
    /// evaluations it took.
    fn gradient(&self, batch: &[Example], epoch: u64, step: u64) -> Result<(GradientSet, u64)> {
        match (self.config.optimizer, &self.dp) {
            (OptimizerKind::Sgd, _) => Ok((self.model.grad_mean_loss(batch)?, 1)),
            (OptimizerKind::Dpsgd, Some(dp)) => {
                let per_example = self.model.grad_per_example(batch)?;
                let key = NoiseStreamKey::new(dp.seed, epoch, step, 0);
                let g =
                    dpsgd_reference_step(&per_example, dp.clip_c, dp.noise_multiplier(epoch), key)?;
                Ok((g, per_example.len() as u64))
            }
            (OptimizerKind::Edpsgd, Some(dp)) => {
                let ranges = partition_batch(batch.len(), dp.workers)?;
                let lane =
                    |r: &std::ops::Range<usize>| self.model.grad_mean_loss(&batch[r.clone()]);
                let worker_grads: Vec<GradientSet> = match self.execution {
                    Execution::Serial => ranges.iter().map(lane).collect::<Result<_>>()?,
                    Execution::Parallel => ranges.par_iter().map(lane).collect::<Result<_>>()?,
                };
                let profile = self.profile.as_ref().expect("calibrated before training");
                let g = edp_step_with(&worker_grads, dp, profile, epoch, step, self.execution)?;
                Ok((g, worker_grads.len() as u64))
            }
            (_, None) => unreachable!("private optimizers always carry a DP config"),
        }
    }

    fn run(mut self) -> Result<RunReport> {
        let steps = self.steps_per_epoch();
        let mut epoch_loss = Vec::with_capacity(self.config.epochs as usize);
        let mut timing = Timing::default();
        let mut grad_evals = 0u64;

        if self.config.optimizer == OptimizerKind::Edpsgd && self.config.epochs > 0 {
            let first = self.batch(&self.epoch_order(0), 0);
            let g = self.model.grad_mean_loss(&first)?;
            self.profile = Some(calibrate_scales(&g, self.config.scale_floor())?);
        }

        for epoch in 0..self.config.epochs {
            let order = self.epoch_order(epoch);
            let z_t = self.dp.as_ref().map(|dp| dp.noise_multiplier(epoch));
            let mut elapsed = 0.0;
            for step in 0..steps {
                let batch = self.batch(&order, step);
                let started = Instant::now();
                let (grad, evals) = self.gradient(&batch, epoch, step as u64)?;
                self.optimizer.step(self.model.params_mut(), &grad)?;
                elapsed += started.elapsed().as_secs_f64();
                grad_evals += evals;
                if let Some(z) = z_t {
                    self.schedule.push(StepRecord {
                        epoch,
                        step: step as u64,
                        z,
                    });
                }
            }
            timing.epoch_seconds.push(elapsed);
            epoch_loss.push(self.model.mean_loss(&self.train)?);
        }

        let privacy = match &self.dp {
            Some(_) => Some(PrivacySection::from_schedule(
                self.config.delta,
                std::mem::take(&mut self.schedule),
            )?),
            None => None,
        };
        Ok(RunReport {
            train_accuracy: self.model.accuracy(&self.train)?,
            test_accuracy: self.model.accuracy(&self.test)?,
            epoch_loss,
            steps_per_epoch: steps as u64,
            grad_evals_per_epoch: grad_evals / self.config.epochs.max(1),
            scale_profile: self.profile.take(),
            privacy,
            attack: None,
            checkpoint: self.model.checkpoint(self.config.seed),
            config: self.config,
            timing,
        })
    }
}
