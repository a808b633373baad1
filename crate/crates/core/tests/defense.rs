use beamsec::channel::{build_dataset, Dataset, ScenarioParams};
use beamsec::defense::{adversarial_train, evaluate_robustness, rounds_csv, split_holdout, DefenseConfig, RoundRecord};
use beamsec::numcore::{init_model, mse_loss, predict_rows, train, TrainConfig};
use beamsec::rng;

fn small_data() -> Dataset {
    build_dataset(&ScenarioParams::default(), 600).unwrap()
}

fn quick_train() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn one_round_equals_plain_training_on_the_fit_rows() {
    let data = small_data();
    let cfg = DefenseConfig {
        max_rounds: 1,
        ..DefenseConfig::default()
    };
    let model = init_model(data.num_features(), 3).unwrap();
    let out = adversarial_train(model.clone(), &data, &quick_train(), &cfg, &mut rng::stream(9)).unwrap();
    assert_eq!(out.rounds.len(), 1);
    assert_eq!(out.best_round, 0);

    // Replay: same holdout shuffle, then a plain fit on the remaining rows.
    let mut r = rng::stream(9);
    let (fit, holdout) = split_holdout(&data, cfg.holdout_fraction, &mut r);
    let mut plain = model;
    train(&mut plain, &fit.features, &fit.labels, &quick_train(), &mut r).unwrap();
    assert_eq!(out.model, plain);
    assert_eq!(out.rounds[0].dataset_rows, fit.len());
    let clean = mse_loss(&predict_rows(&plain, &holdout.features).unwrap(), &holdout.labels).unwrap();
    assert_eq!(out.rounds[0].clean_mse, clean);
}

#[test]
fn each_round_appends_one_adversarial_copy() {
    let data = small_data();
    let cfg = DefenseConfig {
        max_rounds: 3,
        steady_state_rel_tol: 1e-12,
        ..DefenseConfig::default()
    };
    let model = init_model(data.num_features(), 3).unwrap();
    let out = adversarial_train(model, &data, &quick_train(), &cfg, &mut rng::stream(1)).unwrap();
    let base = out.rounds[0].dataset_rows;
    for (i, r) in out.rounds.iter().enumerate() {
        assert_eq!(r.round, i);
        assert_eq!(r.dataset_rows, base * (i + 1));
        assert!(r.clean_mse.is_finite() && r.adv_mse >= 0.0);
    }
    let best = out
        .rounds
        .iter()
        .min_by(|a, b| a.adv_mse.total_cmp(&b.adv_mse))
        .unwrap();
    assert_eq!(out.best_round, best.round);
}

#[test]
fn partial_augmentation_samples_a_fraction() {
    let data = small_data();
    let cfg = DefenseConfig {
        max_rounds: 2,
        augment_fraction: 0.5,
        steady_state_rel_tol: 1e-12,
        ..DefenseConfig::default()
    };
    let model = init_model(data.num_features(), 3).unwrap();
    let out = adversarial_train(model, &data, &quick_train(), &cfg, &mut rng::stream(1)).unwrap();
    if out.rounds.len() == 2 {
        let base = out.rounds[0].dataset_rows;
        assert_eq!(out.rounds[1].dataset_rows, base + (base as f64 * 0.5).ceil() as usize);
    }
}

#[test]
fn stops_once_improvement_falls_below_tolerance() {
    let data = small_data();
    let cfg = DefenseConfig {
        max_rounds: 10,
        steady_state_rel_tol: 10.0,
        ..DefenseConfig::default()
    };
    let model = init_model(data.num_features(), 3).unwrap();
    let out = adversarial_train(model, &data, &quick_train(), &cfg, &mut rng::stream(1)).unwrap();
    assert_eq!(out.rounds.len(), 2);
}

#[test]
fn robustness_at_zero_is_clean_mse() {
    let data = small_data();
    let mut model = init_model(data.num_features(), 5).unwrap();
    train(&mut model, &data.features, &data.labels, &quick_train(), &mut rng::stream(2)).unwrap();
    let pts = evaluate_robustness(&model, &data, &[0.0, 1e-6, 0.1]).unwrap();
    let clean = mse_loss(&predict_rows(&model, &data.features).unwrap(), &data.labels).unwrap();
    assert_eq!(pts[0].mse, clean);
    assert!((pts[1].mse - clean).abs() / clean < 1e-4);
    assert!(pts[2].mse > clean);
    assert!(evaluate_robustness(&model, &data, &[]).is_err());
}

#[test]
fn invalid_config_is_rejected() {
    let data = small_data();
    let model = init_model(data.num_features(), 5).unwrap();
    let bad = DefenseConfig {
        holdout_fraction: 1.5,
        ..DefenseConfig::default()
    };
    let err = adversarial_train(model, &data, &quick_train(), &bad, &mut rng::stream(0)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn rounds_csv_layout() {
    let csv = rounds_csv(&[
        RoundRecord {
            round: 0,
            clean_mse: 0.000123456789,
            adv_mse: 0.5,
            dataset_rows: 900,
        },
        RoundRecord {
            round: 1,
            clean_mse: 1.0 / 3.0,
            adv_mse: 2e-7,
            dataset_rows: 1800,
        },
    ]);
    assert_eq!(
        csv,
        "round,clean_mse,adv_mse,dataset_rows\n0,0.000123457,0.5,900\n1,0.333333,2e-7,1800\n"
    );
}

#[test]
fn default_scenario_defense_does_not_end_worse_than_first_adversarial_round() {
    let cfg = beamsec::harness::ExperimentConfig::default();
    let ctx = beamsec::harness::RepContext::prepare(&cfg, 0).unwrap();
    let model = cfg.architecture.build(ctx.train.num_features(), 0).unwrap();
    let out = adversarial_train(model, &ctx.train, &cfg.train_cfg, &cfg.defense_cfg, &mut rng::stream(0)).unwrap();
    assert!(out.rounds.len() <= cfg.defense_cfg.max_rounds);
    if out.rounds.len() > 1 {
        assert!(out.rounds.last().unwrap().adv_mse <= out.rounds[1].adv_mse);
    }
    let best = &out.rounds[out.best_round];
    assert!(out.rounds.iter().all(|r| best.adv_mse <= r.adv_mse));
}
