use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OptimizerKind};
use super::train::run_training;
use crate::error::{Error, Result};

/// One optimizer's timing relative to plain SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub optimizer: OptimizerKind,
    /// Median over repetitions of the mean epoch wall time.
    pub median_epoch_seconds: f64,
    pub grad_evals_per_epoch: u64,
    pub wall_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub repetitions: usize,
    pub batches_per_epoch: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn row(&self, optimizer: OptimizerKind) -> &BenchRow {
        self.rows
            .iter()
            .find(|r| r.optimizer == optimizer)
            .expect("every optimizer is benchmarked")
    }

    /// Plain-text table in the style `optimizer  time/epoch  factor`.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<8} {:>14} {:>12} {:>10}\n",
            "method", "time/epoch", "grad evals", "factor"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<8} {:>13.4}s {:>12} {:>9.2}x\n",
                r.optimizer.name(),
                r.median_epoch_seconds,
                r.grad_evals_per_epoch,
                r.wall_factor
            ));
        }
        out
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times SGD, DP-SGD and eDP-SGD on identical data and model.
///
/// Repetitions run one after another to keep timings independent.
pub fn run_bench(config: &ExperimentConfig, repetitions: usize) -> Result<BenchTable> {
    if repetitions < 3 {
        return Err(Error::BadConfig(vec![format!(
            "bench needs at least 3 repetitions, got {repetitions}"
        )]));
    }
    let mut times = vec![Vec::with_capacity(repetitions); OptimizerKind::ALL.len()];
    let mut evals = vec![0; OptimizerKind::ALL.len()];
    let mut batches = 0;
    for _ in 0..repetitions {
        for (i, optimizer) in OptimizerKind::ALL.into_iter().enumerate() {
            let run_config = ExperimentConfig {
                optimizer,
                ..config.clone()
            };
            let report = run_training(&run_config)?;
            times[i].push(report.timing.mean_epoch_seconds());
            evals[i] = report.grad_evals_per_epoch;
            batches = report.steps_per_epoch;
        }
    }
    let mut rows: Vec<BenchRow> = OptimizerKind::ALL
        .into_iter()
        .zip(times.into_iter().zip(evals))
        .map(|(optimizer, (times, evals))| BenchRow {
            optimizer,
            median_epoch_seconds: median(times),
            grad_evals_per_epoch: evals,
            wall_factor: 0.0,
        })
        .collect();
    let base = rows[0].median_epoch_seconds;
    for r in &mut rows {
        r.wall_factor = r.median_epoch_seconds / base;
    }
    Ok(BenchTable {
        repetitions,
        batches_per_epoch: batches,
        rows,
    })
}
