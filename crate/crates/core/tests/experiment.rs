mod common;

use edpsgd::engine::DecayKind;
use edpsgd::experiment::{
    attack_report, run_attack, run_bench, run_training, run_training_with, AttackOptions,
    DpSettings, ExperimentConfig, OptimizerKind, RunOptions, RunReport,
};
use edpsgd::models::ModelKind;

fn small(optimizer: OptimizerKind) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
seed = 42
optimizer = "{}"
epochs = 3
batch_size = 20
learning_rate = 0.05

[dataset]
size = 200
classes = 3
dimension = 5
spread = 0.6

[model]
kind = "mlp2"
hidden = 8

[dp]
clip_c = 1.0
z0 = 0.8
workers = 4
"#,
        optimizer.name()
    ))
    .unwrap()
}

fn with_dp(config: &ExperimentConfig, f: impl FnOnce(&mut DpSettings)) -> ExperimentConfig {
    let mut c = config.clone();
    f(c.dp.as_mut().unwrap());
    c
}

#[test]
fn inactive_mechanism_reproduces_plain_training() {
    let sgd = run_training(&small(OptimizerKind::Sgd)).unwrap();
    let edp = run_training(&with_dp(&small(OptimizerKind::Edpsgd), |d| {
        d.z0 = 0.0;
        d.clip_c = 1e12;
        d.workers = 1;
    }))
    .unwrap();
    for (a, b) in sgd
        .checkpoint
        .layers
        .values()
        .zip(edp.checkpoint.layers.values())
    {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn reports_count_gradient_evaluations() {
    let expected = [
        (OptimizerKind::Sgd, 10),
        (OptimizerKind::Dpsgd, 200),
        (OptimizerKind::Edpsgd, 40),
    ];
    for (kind, evals) in expected {
        let r = run_training(&small(kind)).unwrap();
        assert_eq!(r.steps_per_epoch, 5);
        assert_eq!(r.grad_evals_per_epoch, evals / 2, "{}", kind.name());
        assert_eq!(RunReport::expected_grad_evals(kind, 5, 20, 4), evals / 2);
        assert_eq!(r.epoch_loss.len(), 3);
        assert_eq!(r.timing.epoch_seconds.len(), 3);
    }
    assert_eq!(
        RunReport::expected_grad_evals(OptimizerKind::Sgd, 10, 256, 8),
        10
    );
    assert_eq!(
        RunReport::expected_grad_evals(OptimizerKind::Edpsgd, 10, 256, 8),
        80
    );
    assert_eq!(
        RunReport::expected_grad_evals(OptimizerKind::Dpsgd, 10, 256, 8),
        2560
    );
}

#[test]
fn privacy_sections_verify_and_order_by_decay() {
    let flat = run_training(&small(OptimizerKind::Edpsgd)).unwrap();
    let decayed = run_training(&with_dp(&small(OptimizerKind::Edpsgd), |d| {
        d.decay = DecayKind::Linear;
        d.tau = 0.5;
    }))
    .unwrap();
    let (p, q) = (flat.privacy.unwrap(), decayed.privacy.unwrap());
    assert!(p.verify(1e-12).unwrap() && q.verify(1e-12).unwrap());
    assert_eq!(p.z_schedule.len(), 15);
    assert!(q.epsilon.unwrap() > p.epsilon.unwrap());
    assert!(q.log10_epsilon.unwrap() > p.log10_epsilon.unwrap());

    let sgd = run_training(&small(OptimizerKind::Sgd)).unwrap();
    assert!(sgd.privacy.is_none() && sgd.config.dp.is_none());
    let noiseless = run_training(&with_dp(&small(OptimizerKind::Dpsgd), |d| d.z0 = 0.0)).unwrap();
    assert_eq!(noiseless.privacy.unwrap().epsilon, None);
}

#[test]
fn scale_profile_is_recorded_for_edpsgd_only() {
    let edp = run_training(&small(OptimizerKind::Edpsgd)).unwrap();
    let profile = edp.scale_profile.unwrap();
    assert_eq!(profile.factors().len(), 4);
    assert!(profile.factors().values().any(|&a| a == 1.0));
    assert!(run_training(&small(OptimizerKind::Dpsgd))
        .unwrap()
        .scale_profile
        .is_none());
}

#[test]
fn reruns_and_thread_counts_agree_bit_for_bit() {
    for kind in OptimizerKind::ALL {
        let c = small(kind);
        let a = run_training(&c).unwrap().deterministic_json();
        let b = run_training_with(&c, RunOptions { threads: 3 })
            .unwrap()
            .deterministic_json();
        assert_eq!(a, b, "{}", kind.name());
    }
}

#[test]
fn different_seeds_differ() {
    let a = run_training(&small(OptimizerKind::Edpsgd)).unwrap();
    let b = run_training(&ExperimentConfig {
        seed: 43,
        ..small(OptimizerKind::Edpsgd)
    })
    .unwrap();
    assert_ne!(a.checkpoint.layers, b.checkpoint.layers);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let mut c = small(OptimizerKind::Edpsgd);
    c.batch_size = 500;
    assert_eq!(run_training(&c).unwrap_err().code(), "bad-config");
    let e = run_training_with(&small(OptimizerKind::Sgd), RunOptions { threads: 0 }).unwrap_err();
    assert_eq!(e.code(), "bad-config");
}

#[test]
fn reports_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let report = run_training(&small(OptimizerKind::Edpsgd)).unwrap();
    report.write(&path).unwrap();
    assert_eq!(RunReport::read(&path).unwrap(), report);

    let attacked = run_attack(&path, AttackOptions::default()).unwrap();
    let section = attacked.attack.as_ref().unwrap();
    assert_eq!(section.shadow_seed, 43);
    assert_eq!(section.member_records, section.non_member_records);
    assert_eq!(
        attacked,
        run_attack(&path, AttackOptions::default()).unwrap()
    );
}

#[test]
fn attacking_a_missing_report_is_no_target() {
    let dir = tempfile::tempdir().unwrap();
    let e = run_attack(dir.path().join("absent.json"), AttackOptions::default()).unwrap_err();
    assert_eq!(e.code(), "no-target");
    std::fs::write(dir.path().join("junk.json"), "{}").unwrap();
    let e = run_attack(dir.path().join("junk.json"), AttackOptions::default()).unwrap_err();
    assert_eq!(e.code(), "no-target");
}

#[test]
fn shadow_seed_must_differ_from_target() {
    let report = run_training(&small(OptimizerKind::Sgd)).unwrap();
    let opts = AttackOptions {
        seed: Some(42),
        ..AttackOptions::default()
    };
    assert_eq!(
        attack_report(&report, opts).unwrap_err().code(),
        "bad-config"
    );
}

#[test]
fn untrained_targets_leak_nothing() {
    let aucs: Vec<f64> = (0..10)
        .map(|seed| {
            let mut c = common::mia_config(seed);
            c.epochs = 0;
            let report = run_training(&c).unwrap();
            attack_report(&report, AttackOptions::default())
                .unwrap()
                .auc
        })
        .collect();
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    assert!((0.45..=0.55).contains(&mean), "{aucs:?}");
}

#[test]
fn bench_needs_three_repetitions_and_counts_work() {
    let mut c = small(OptimizerKind::Sgd);
    c.epochs = 1;
    c.model.kind = ModelKind::Softmax;
    assert_eq!(run_bench(&c, 2).unwrap_err().code(), "bad-config");
    let table = run_bench(&c, 3).unwrap();
    assert_eq!(table.batches_per_epoch, 5);
    let evals: Vec<u64> = OptimizerKind::ALL
        .iter()
        .map(|&k| table.row(k).grad_evals_per_epoch)
        .collect();
    assert_eq!(evals, vec![5, 100, 20]);
    assert_eq!(table.row(OptimizerKind::Sgd).wall_factor, 1.0);
    assert!(table.render().lines().count() == 4);
}

#[test]
fn plain_training_fits_separable_blobs() {
    let config = ExperimentConfig::from_toml_str(
        r#"
seed = 5
optimizer = "sgd"
epochs = 200
batch_size = 32

[dataset]
size = 400
classes = 4
dimension = 10
spread = 0.2

[model]
kind = "mlp2"
"#,
    )
    .unwrap();
    let report = run_training(&config).unwrap();
    assert!(report.train_accuracy >= 0.99, "{}", report.train_accuracy);
    assert!(report.epoch_loss.last() < report.epoch_loss.first());
}
