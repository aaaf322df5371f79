use cvqnn::data::{prepare, synthetic_sine, ColumnStats, NormStats, SplitSpec};
use cvqnn::forecast::{
    forecast_metrics, predict_series, recursive_forecast, spec_for, transfer_apply, TransferMode,
};
use cvqnn::models::{build_cv_model, evaluate, CircuitSpec, ModelKind, ParamVector};
use cvqnn::training::TrainConfig;
use cvqnn::weights::PretrainedWeights;
use cvqnn::Error;
use proptest::prelude::*;

fn named(spec: &CircuitSpec, values: &[(&str, f64)]) -> ParamVector {
    let v = spec
        .slots()
        .iter()
        .map(|s| values.iter().find(|(n, _)| n == s).map_or(0.0, |p| p.1))
        .collect();
    spec.params(v).unwrap()
}

fn stats(min: f64, max: f64) -> NormStats {
    NormStats {
        columns: vec![("value".into(), ColumnStats { min, max })],
    }
}

#[test]
fn metric_arithmetic() {
    let actual = [2642.0, 2750.0];
    let norm = [0.0, 0.0];
    let over = |d: f64| actual.map(|a| a + d);
    let m = forecast_metrics(&norm, &norm, &over(73.11), &actual).unwrap();
    assert!((m.rmse - 73.11).abs() < 1e-9);
    assert!((m.pct_rmse - 2.66).abs() < 0.005, "{}", m.pct_rmse);
    let m = forecast_metrics(&norm, &norm, &over(171.0), &actual).unwrap();
    assert!((m.mae - 171.0).abs() < 1e-9);
    assert!((m.pct_mae - 6.34).abs() < 0.005, "{}", m.pct_mae);
    assert!(forecast_metrics(&[], &[], &[], &[]).is_err());
}

#[test]
fn perfect_predictions_score_zero() {
    let series = synthetic_sine(60, 20.0, 0.0, 1.0).unwrap();
    let data = prepare(&series, "value", &["value".into()], SplitSpec::Ratio(0.8)).unwrap();
    let spec = build_cv_model(ModelKind::Cv3, 1).unwrap();
    let params = named(&spec, &[("disp_b", 0.1)]);
    let mut test = data.test.clone();
    test.labels = test
        .inputs
        .iter()
        .map(|x| evaluate(&spec, &params, x).unwrap().value)
        .collect();
    let r = predict_series(&spec, &params, &test, &data.stats).unwrap();
    let m = r.metrics.unwrap();
    assert_eq!((m.mse, m.rmse, m.pct_rmse), (0.0, 0.0, 0.0));
    assert_eq!(r.predictions.len(), test.len());
}

proptest! {
    #[test]
    fn metrics_are_scale_consistent(
        pairs in prop::collection::vec((1.0f64..100.0, -5.0f64..5.0), 1..20),
        c in 0.01f64..100.0,
    ) {
        let actual: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        let zeros = vec![0.0; actual.len()];
        let a = forecast_metrics(&zeros, &zeros, &pred, &actual).unwrap();
        let sa: Vec<f64> = actual.iter().map(|v| v * c).collect();
        let sp: Vec<f64> = pred.iter().map(|v| v * c).collect();
        let b = forecast_metrics(&zeros, &zeros, &sp, &sa).unwrap();
        prop_assert!((b.rmse - c * a.rmse).abs() <= 1e-10 * (1.0 + b.rmse));
        prop_assert!((b.mae - c * a.mae).abs() <= 1e-10 * (1.0 + b.mae));
        prop_assert!((b.pct_rmse - a.pct_rmse).abs() < 1e-10);
        prop_assert!((b.pct_mae - a.pct_mae).abs() < 1e-10);
        prop_assert!(a.rmse >= 0.0 && a.mae >= 0.0 && a.pct_rmse >= 0.0);
    }
}

#[test]
fn horizon_one_is_a_single_prediction() {
    let series = synthetic_sine(80, 25.0, 0.3, 1.0).unwrap();
    let data = prepare(&series, "value", &["value".into()], SplitSpec::Ratio(0.8)).unwrap();
    let w = PretrainedWeights::builtin("cv2").unwrap();
    let spec = w.build_spec().unwrap();
    let one = predict_series(&spec, &w.params, &data.test.recent(1), &data.stats).unwrap();
    let last_input = data
        .stats
        .denormalize("value", data.test.inputs.last().unwrap()[0])
        .unwrap();
    let rec = recursive_forecast(&spec, &w.params, &[last_input], 1, &data.stats, "value").unwrap();
    assert_eq!(rec.predictions.len(), 1);
    assert!((rec.predictions[0] - one.predictions[0]).abs() < 1e-12);
}

#[test]
fn identity_map_holds_a_constant_window() {
    // squeezing by ln 2 halves the doubled displacement readout
    let spec = spec_for(ModelKind::Cv3, 1, 40).unwrap();
    let params = named(&spec, &[("squeeze_r", std::f64::consts::LN_2)]);
    let st = stats(0.0, 1.0);
    let r = recursive_forecast(&spec, &params, &[0.9, 0.4], 100, &st, "value").unwrap();
    assert_eq!(r.predictions.len(), 100);
    for p in &r.predictions {
        assert!((p - 0.4).abs() < 1e-5, "{p}");
    }
}

#[test]
fn recursion_is_deterministic_and_validated() {
    let w = PretrainedWeights::builtin("cv3").unwrap();
    let spec = w.build_spec().unwrap();
    let st = stats(0.0, 10.0);
    let a = recursive_forecast(&spec, &w.params, &[3.0], 30, &st, "value").unwrap();
    let b = recursive_forecast(&spec, &w.params, &[3.0], 30, &st, "value").unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.predictions), bits(&b.predictions));
    assert!(matches!(
        recursive_forecast(&spec, &w.params, &[], 3, &st, "value"),
        Err(Error::Usage(_))
    ));
    assert!(recursive_forecast(&spec, &w.params, &[3.0], 0, &st, "value").is_err());
}

#[test]
fn frozen_transfer() {
    let series = synthetic_sine(120, 30.0, 1.0, 1.5).unwrap();
    let data = prepare(&series, "value", &["value".into()], SplitSpec::Ratio(0.8)).unwrap();
    let w = PretrainedWeights::builtin("cv2").unwrap();
    let before = w.clone();
    let cfg = TrainConfig::for_model(ModelKind::Cv2);
    let frozen = transfer_apply(&w, &data, TransferMode::Frozen, &cfg).unwrap();
    let zero = transfer_apply(&w, &data, TransferMode::FineTune(0), &cfg).unwrap();
    assert_eq!(w, before);
    assert_eq!(frozen.params, w.params);
    assert!(frozen.history.is_none());
    assert_eq!(frozen.result, zero.result);
    assert_eq!(TransferMode::FineTune(0).to_string(), "frozen");

    let tuned = transfer_apply(&w, &data, TransferMode::FineTune(1), &cfg).unwrap();
    assert_eq!(tuned.history.unwrap().costs.len(), 1);
    assert_ne!(tuned.params, w.params);
    assert_eq!(w, before);
}

#[test]
fn transfer_rejects_feature_mismatch() {
    let series = cvqnn::data::TimeSeries::from_columns(
        vec![
            cvqnn::data::Column {
                name: "a".into(),
                values: (0..20).map(f64::from).collect(),
            },
            cvqnn::data::Column {
                name: "b".into(),
                values: (0..20).map(|i| f64::from(i * i)).collect(),
            },
        ],
        "test",
    )
    .unwrap();
    let data = prepare(
        &series,
        "a",
        &["a".into(), "b".into()],
        SplitSpec::Ratio(0.8),
    )
    .unwrap();
    let w = PretrainedWeights::builtin("cv2").unwrap();
    let r = transfer_apply(&w, &data, TransferMode::Frozen, &TrainConfig::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn forecast_csv() {
    let spec = build_cv_model(ModelKind::Cv3, 1).unwrap();
    let r = recursive_forecast(
        &spec,
        &spec.zero_params(),
        &[1.0],
        3,
        &stats(0.0, 2.0),
        "value",
    )
    .unwrap();
    let mut out = Vec::new();
    r.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("index,actual,predicted\n0,,"));
    assert_eq!(text.lines().count(), 4);
}
