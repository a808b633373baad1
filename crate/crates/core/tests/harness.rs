use beamsec::harness::{
    emit_report, run_experiment, summarize, ExperimentConfig, ExperimentResult, ReportFormat, ScenarioId, Summary,
    SUMMARY_HEADER,
};
use beamsec::numcore::TrainConfig;
use proptest::prelude::*;

fn tiny(reps: usize, grid: Vec<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        repetitions: reps,
        attack_grid: grid,
        num_instances: 400,
        train_cfg: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    };
    cfg.defense_cfg.max_rounds = 2;
    cfg
}

#[test]
fn one_repetition_one_budget_gives_three_rows() {
    let res = run_experiment(&tiny(1, vec![0.1])).unwrap();
    let ids: Vec<_> = res.rows.iter().map(|r| (r.scenario, r.epsilon)).collect();
    assert_eq!(
        ids,
        vec![(ScenarioId::Sc1, 0.0), (ScenarioId::Sc2, 0.1), (ScenarioId::Sc3, 0.1)]
    );
    assert!(res.rows.iter().all(|r| r.mse.is_finite() && r.mse >= 0.0));
    assert_eq!(res.defense_rounds.len(), 1);
}

#[test]
fn row_count_is_reps_times_grid_per_attacked_scenario() {
    let mut cfg = tiny(3, vec![0.02, 0.04, 0.06, 0.08]);
    cfg.scenarios = vec![ScenarioId::Sc1, ScenarioId::Sc2];
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.rows.len(), 3 + 3 * 4);
    let mut seen = std::collections::BTreeSet::new();
    for r in &res.rows {
        assert!(seen.insert((r.scenario, r.epsilon.to_bits(), r.repetition)));
        if r.scenario == ScenarioId::Sc1 {
            assert_eq!(r.epsilon, 0.0);
        }
    }
    let s = summarize(&res).unwrap();
    assert_eq!(s.rows.len(), 1 + 4);
    assert!(s.rows.iter().all(|r| r.n == 3));
}

#[test]
fn rows_are_sorted_by_scenario_budget_repetition() {
    let res = run_experiment(&tiny(2, vec![0.1, 0.05])).unwrap();
    let keys: Vec<_> = res.rows.iter().map(|r| (r.scenario, r.epsilon, r.repetition)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    assert_eq!(keys, sorted);
}

#[test]
fn attacked_error_converges_to_clean_error() {
    let mut cfg = tiny(1, vec![1e-6, 1e-3]);
    cfg.scenarios = vec![ScenarioId::Sc1, ScenarioId::Sc2];
    let res = run_experiment(&cfg).unwrap();
    let sc1 = res.mse(ScenarioId::Sc1, 0.0, 0).unwrap();
    let rel = |eps: f64| (res.mse(ScenarioId::Sc2, eps, 0).unwrap() - sc1).abs() / sc1;
    // The gap is first order in ε, so shrinking ε a thousandfold shrinks it
    // about a thousandfold.
    assert!(rel(1e-6) < 1e-4, "{}", rel(1e-6));
    assert!(rel(1e-6) <= 2e-3 * rel(1e-3), "{} vs {}", rel(1e-6), rel(1e-3));
}

#[test]
fn results_are_reproducible_and_parse_back() {
    let cfg = tiny(2, vec![0.1]);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.results_csv(), b.results_csv());
    let parsed = ExperimentResult::parse_results_csv(&a.results_csv()).unwrap();
    assert_eq!(parsed.rows.len(), a.rows.len());
    for (p, q) in parsed.rows.iter().zip(&a.rows) {
        assert_eq!((p.scenario, p.epsilon, p.repetition, p.mse), (q.scenario, q.epsilon, q.repetition, q.mse));
    }
}

#[test]
fn different_seeds_differ() {
    let a = run_experiment(&tiny(1, vec![0.1])).unwrap();
    let mut cfg = tiny(1, vec![0.1]);
    cfg.base_seed = 1;
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a.results_csv(), b.results_csv());
}

#[test]
fn reports_are_written_and_stable() {
    let res = run_experiment(&tiny(2, vec![0.05, 0.1])).unwrap();
    let summary = summarize(&res).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = emit_report(&summary, ReportFormat::Csv, dir.path()).unwrap();
    let first = std::fs::read(&csv[0]).unwrap();
    emit_report(&summary, ReportFormat::Csv, dir.path()).unwrap();
    assert_eq!(std::fs::read(&csv[0]).unwrap(), first);
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next(), Some(SUMMARY_HEADER));
    assert_eq!(text.lines().count(), 1 + 1 + 2 + 2);

    let json = emit_report(&summary, ReportFormat::Json, dir.path()).unwrap();
    let back = Summary::from_json(&std::fs::read_to_string(&json[0]).unwrap()).unwrap();
    assert_eq!(back, summary.rounded());
}

#[test]
fn report_to_unwritable_directory_is_io_error() {
    let res = run_experiment(&tiny(1, vec![0.1])).unwrap();
    let summary = summarize(&res).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, b"x").unwrap();
    let err = emit_report(&summary, ReportFormat::Csv, &file.join("sub")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn config_errors_name_the_field() {
    let err = ExperimentConfig::from_json_str(r#"{"scenario_params": {"num_antennas": 0}}"#).unwrap_err();
    assert!(err.to_string().contains("scenario_params.num_antennas"), "{err}");
    let err = ExperimentConfig::from_json_str(r#"{"defense_cfg": {"max_rounds": -1}}"#).unwrap_err();
    assert!(err.to_string().contains("defense_cfg.max_rounds"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summary_statistics_bracket_the_data(values in prop::collection::vec(0.0f64..1.0, 1..30)) {
        let text: String = std::iter::once("scenario,epsilon,repetition,mse\n".to_string())
            .chain(values.iter().enumerate().map(|(i, v)| format!("SC2,0.1,{i},{v}\n")))
            .collect();
        let res = ExperimentResult::parse_results_csv(&text).unwrap();
        let s = summarize(&res).unwrap();
        prop_assert_eq!(s.rows.len(), 1);
        let row = &s.rows[0];
        prop_assert_eq!(row.n, values.len());
        prop_assert!(row.min_mse <= row.mean_mse + 1e-15 && row.mean_mse <= row.max_mse + 1e-15);
        prop_assert!(row.std_mse >= 0.0 && row.std_mse <= (row.max_mse - row.min_mse) + 1e-15);
    }

    #[test]
    fn json_round_trip_after_rounding(values in prop::collection::vec(1e-9f64..10.0, 1..10)) {
        let text: String = std::iter::once("scenario,epsilon,repetition,mse\n".to_string())
            .chain(values.iter().enumerate().map(|(i, v)| format!("SC1,0,{i},{v}\n")))
            .collect();
        let s = summarize(&ExperimentResult::parse_results_csv(&text).unwrap()).unwrap();
        let back = Summary::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s.rounded());
    }
}
