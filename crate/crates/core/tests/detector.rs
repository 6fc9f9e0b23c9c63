mod common;

use common::*;
use scada_ae::detector::{anomaly_scores_with, apply_threshold};
use scada_ae::evaluate::{criticality, write_case_study_csv, ComparisonReport, CASE_STUDY_HEADER};
use scada_ae::{
    anomaly_scores, case_study_report, compare_models, derive_labels, detect, evaluate_month, load_model,
    save_model, train_multi_asset, ConfusionCounts, DetectorModel, Error, Parallelism, TurbineData,
};

#[test]
fn training_is_deterministic_and_seed_sensitive() {
    let farm = farm();
    let a = trained(&farm, 0, 4);
    let b = trained(&farm, 0, 4);
    assert_eq!(a, b);
    let c = trained(&farm, 0, 5);
    assert_ne!(bits(&a.network.flatten_params()), bits(&c.network.flatten_params()));
    assert_eq!(a.metadata.loss_history.len(), 6);
    assert!(a.threshold.is_finite() && a.threshold >= 0.0);
}

#[test]
fn scores_are_pointwise_and_schedule_independent() {
    let farm = farm();
    let model = trained(&farm, 0, 1);
    let eval = eval_slice(&farm, 0);
    let seq = anomaly_scores_with(&model, &eval, Parallelism::Sequential).unwrap();
    let par = anomaly_scores_with(&model, &eval, Parallelism::default()).unwrap();
    assert_eq!(bits(&seq), bits(&par));
    assert!(seq.iter().all(|s| *s >= 0.0));

    // reversed rows (re-timestamped so the frame stays sorted) give reversed scores
    let n = eval.len();
    let rows: Vec<usize> = (0..n).rev().collect();
    let values: Vec<f64> = rows.iter().flat_map(|&r| eval.row(r).to_vec()).collect();
    let modes: Vec<String> = rows.iter().map(|&r| eval.op_modes()[r].clone()).collect();
    let reversed = scada_ae::ScadaFrame::new(eval.schema_arc(), eval.timestamps().to_vec(), modes, values).unwrap();
    let rs = anomaly_scores(&model, &reversed).unwrap();
    assert!(rows.iter().enumerate().all(|(i, &r)| rs[i].to_bits() == seq[r].to_bits()));
}

#[test]
fn artifact_round_trip_is_bit_exact() {
    let farm = farm();
    let model = trained(&farm, 0, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    let eval = eval_slice(&farm, 1);
    assert_eq!(bits(&anomaly_scores(&model, &eval).unwrap()), bits(&anomaly_scores(&loaded, &eval).unwrap()));

    std::fs::write(&path, "{\"format_version\": 99}").unwrap();
    assert!(matches!(load_model(&path), Err(Error::BadArtifact(_))));
    assert!(matches!(load_model(dir.path().join("missing.json")), Err(Error::Io { .. })));
}

#[test]
fn multi_asset_records_all_sources() {
    let farm = farm();
    let (f0, l0) = training_slice(&farm, 0);
    let (f1, l1) = training_slice(&farm, 1);
    let model = train_multi_asset(
        &[TurbineData::new("T01", &f0, &l0), TurbineData::new("T02", &f1, &l1)],
        &small_config(2),
    )
    .unwrap();
    assert_eq!(model.metadata.source_turbines, vec!["T01", "T02"]);
    assert_eq!(model.metadata.training_window.end, train_end(&farm));
}

#[test]
fn month_metrics_match_a_hand_count() {
    let farm = farm();
    let model = trained(&farm, 0, 1);
    let t = &farm.turbines[0];
    let eval = eval_slice(&farm, 0);
    let labels = derive_labels(&eval, &t.config);
    let det = detect(&model, &eval).unwrap();
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (d, l) in det.iter().zip(labels.as_slice()) {
        match (*d, l.is_anomalous()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let m = evaluate_month(&model, &eval, &t.config).unwrap();
    assert_eq!(m.counts, ConfusionCounts { tp, fp, tn, fn_ });
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    assert!((m.f_half - 1.25 * p * r / (0.25 * p + r)).abs() < 1e-12);

    // a model that never fires scores 0, one that fires exactly on anomalies scores 1
    let mut silent = model.clone();
    silent.threshold = f64::MAX;
    assert_eq!(evaluate_month(&silent, &eval, &t.config).unwrap().f_half, 0.0);
    let oracle = ConfusionCounts::from_predictions(&labels.as_bools(), &labels.as_bools()).unwrap();
    assert_eq!(oracle.f_beta(0.5), 1.0);

    assert!(matches!(
        evaluate_month(&model, &eval.slice_period(eval.end_timestamp().unwrap(), eval.end_timestamp().unwrap()), &t.config),
        Err(Error::EmptyResult(_))
    ));
}

#[test]
fn comparison_against_baseline() {
    let farm = farm();
    let a = trained(&farm, 1, 1);
    let b = trained(&farm, 0, 1);
    let t = &farm.turbines[1];
    let eval = eval_slice(&farm, 1);
    let models: Vec<(String, &DetectorModel)> = vec![("base".into(), &a), ("other".into(), &b)];
    let report = compare_models(&models, "base", &eval, &t.config).unwrap();
    assert_eq!(report.row("base").unwrap().delta_f_half, 0.0);
    let fa = evaluate_month(&a, &eval, &t.config).unwrap().f_half;
    let fb = evaluate_month(&b, &eval, &t.config).unwrap().f_half;
    assert_eq!(report.row("other").unwrap().delta_f_half, fb - fa);

    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    assert_eq!(ComparisonReport::read_csv(&buf[..], "base").unwrap(), report);
    assert!(matches!(compare_models(&models, "nope", &eval, &t.config), Err(Error::UnknownModel(_))));
    assert!(matches!(compare_models(&[], "base", &eval, &t.config), Err(Error::EmptyResult(_))));
}

#[test]
fn case_study_trace() {
    let farm = farm();
    let model = trained(&farm, 0, 1);
    let eval = eval_slice(&farm, 0);
    let rows = case_study_report(&model, &eval).unwrap();
    assert_eq!(rows.len(), eval.len());
    assert!(rows.iter().all(|r| r.threshold.to_bits() == model.threshold.to_bits()));
    let scores = anomaly_scores(&model, &eval).unwrap();
    let det = apply_threshold(&scores, model.threshold);
    let crit = criticality(&det, eval.op_modes()).unwrap();
    assert!(rows.iter().zip(&crit.values).all(|(r, c)| r.criticality == *c));

    let mut buf = Vec::new();
    write_case_study_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CASE_STUDY_HEADER.join(","));
    assert_eq!(lines.count(), eval.len());
}
