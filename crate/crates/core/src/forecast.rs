//! One-step prediction, closed-loop forecasting, frozen/fine-tuned transfer
//! and forecast metrics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{NormStats, Prepared, WindowedDataset};
use crate::error::{Error, Result};
use crate::models::{evaluate, CircuitSpec, ModelKind, ParamVector};
use crate::training::{train_from, TrainConfig, TrainHistory};
use crate::weights::PretrainedWeights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    /// Normalized units.
    pub mse: f64,
    pub rmse: f64,
    /// rmse / max|actual| * 100.
    pub pct_rmse: f64,
    pub mae: f64,
    /// mae / mean|actual| * 100.
    pub pct_mae: f64,
}

/// `mse` from the normalized pair, the rest from raw values.
pub fn forecast_metrics(
    predicted_norm: &[f64],
    actual_norm: &[f64],
    predicted: &[f64],
    actual: &[f64],
) -> Result<ForecastMetrics> {
    let n = actual.len();
    if n == 0 || predicted.len() != n || predicted_norm.len() != n || actual_norm.len() != n {
        return Err(Error::usage(
            "metrics need equal, nonempty prediction and actual series",
        ));
    }
    let mean = |it: &mut dyn Iterator<Item = f64>| it.sum::<f64>() / n as f64;
    let mse = mean(
        &mut predicted_norm
            .iter()
            .zip(actual_norm)
            .map(|(p, a)| (p - a) * (p - a)),
    );
    let rmse = mean(&mut predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a))).sqrt();
    let mae = mean(&mut predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()));
    let peak = actual.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let level = mean(&mut actual.iter().map(|a| a.abs()));
    let pct = |v: f64, by: f64| if by > 0.0 { v / by * 100.0 } else { f64::NAN };
    Ok(ForecastMetrics {
        mse,
        rmse,
        pct_rmse: pct(rmse, peak),
        mae,
        pct_mae: pct(mae, level),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    /// Raw units.
    pub predictions: Vec<f64>,
    pub actuals: Option<Vec<f64>>,
    pub metrics: Option<ForecastMetrics>,
    /// Samples whose evaluation lost more than the warning threshold to the cutoff.
    pub truncation_warnings: usize,
}

impl ForecastResult {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "actual", "predicted"])
            .map_err(crate::data::csv_err)?;
        for (i, p) in self.predictions.iter().enumerate() {
            let actual = self
                .actuals
                .as_ref()
                .map_or(String::new(), |a| a[i].to_string());
            w.write_record([i.to_string(), actual, p.to_string()])
                .map_err(crate::data::csv_err)?;
        }
        w.flush().map_err(|e| Error::io("forecast csv", e))
    }
}

fn check_stats(dataset: &WindowedDataset, stats: &NormStats) -> Result<()> {
    stats.get(&dataset.target)?;
    for f in &dataset.feature_names {
        stats.get(f)?;
    }
    Ok(())
}

/// Evaluates every sample independently and compares with its label.
pub fn predict_series(
    spec: &CircuitSpec,
    params: &ParamVector,
    dataset: &WindowedDataset,
    stats: &NormStats,
) -> Result<ForecastResult> {
    check_stats(dataset, stats)?;
    if dataset.is_empty() {
        return Err(Error::data("nothing to predict"));
    }
    let evals: Vec<_> = dataset
        .inputs
        .par_iter()
        .map(|x| evaluate(spec, params, x))
        .collect::<Result<_>>()?;
    let norm: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let target = &dataset.target;
    let predictions = crate::data::minmax_invert(&norm, stats, target)?;
    let actuals = crate::data::minmax_invert(&dataset.labels, stats, target)?;
    let metrics = forecast_metrics(&norm, &dataset.labels, &predictions, &actuals)?;
    Ok(ForecastResult {
        predictions,
        actuals: Some(actuals),
        metrics: Some(metrics),
        truncation_warnings: evals.iter().filter(|e| e.warning.is_some()).count(),
    })
}

/// Closed-loop forecast: the newest `n_features` raw values feed the model,
/// and each prediction is appended to the window.
pub fn recursive_forecast(
    spec: &CircuitSpec,
    params: &ParamVector,
    seed_window: &[f64],
    horizon: usize,
    stats: &NormStats,
    target: &str,
) -> Result<ForecastResult> {
    let width = spec.n_features();
    if seed_window.is_empty() || seed_window.len() < width {
        return Err(Error::usage(format!(
            "seed window of {} value(s) for a {width}-feature model",
            seed_window.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::usage("horizon must be >= 1"));
    }
    let mut window: Vec<f64> = seed_window[seed_window.len() - width..].to_vec();
    let mut predictions = Vec::with_capacity(horizon);
    let mut warnings = 0;
    for _ in 0..horizon {
        let features: Vec<f64> = window
            .iter()
            .map(|&v| stats.normalize(target, v).map(|x| x.clamp(0.0, 1.0)))
            .collect::<Result<_>>()?;
        let e = evaluate(spec, params, &features)?;
        warnings += usize::from(e.warning.is_some());
        let next = stats.denormalize(target, e.value)?;
        predictions.push(next);
        window.remove(0);
        window.push(next);
    }
    Ok(ForecastResult {
        predictions,
        actuals: None,
        metrics: None,
        truncation_warnings: warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    Frozen,
    FineTune(usize),
}

impl std::fmt::Display for TransferMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransferMode::Frozen | TransferMode::FineTune(0) => f.write_str("frozen"),
            TransferMode::FineTune(n) => write!(f, "fine-tune ({n} epochs)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub result: ForecastResult,
    pub params: ParamVector,
    pub history: Option<TrainHistory>,
}

/// Applies pretrained weights to a dataset prepared with its own statistics.
/// Fine-tuning trains on `data.train` from the weights before predicting
/// `data.test`; zero fine-tune epochs is the frozen path.
pub fn transfer_apply(
    weights: &PretrainedWeights,
    data: &Prepared,
    mode: TransferMode,
    config: &TrainConfig,
) -> Result<TransferOutcome> {
    let spec = weights.build_spec()?;
    if data.test.n_features() != spec.n_features() {
        return Err(Error::config(format!(
            "{} weights take {} feature(s), dataset has {}",
            weights.kind,
            spec.n_features(),
            data.test.n_features()
        )));
    }
    let (params, history) = match mode {
        TransferMode::Frozen | TransferMode::FineTune(0) => (weights.params.clone(), None),
        TransferMode::FineTune(epochs) => {
            let cfg = TrainConfig {
                epochs,
                ..config.clone()
            };
            let (p, h) = train_from(&spec, &data.train, &cfg, weights.params.clone())?;
            (p, Some(h))
        }
    };
    let result = predict_series(&spec, &params, &data.test, &data.stats)?;
    Ok(TransferOutcome {
        result,
        params,
        history,
    })
}

/// Convenience for building the circuit described by a model kind and feature count.
pub fn spec_for(kind: ModelKind, n_features: usize, cutoff: usize) -> Result<CircuitSpec> {
    use crate::models::*;
    let options = CvOptions {
        cutoff,
        ..CvOptions::default()
    };
    match kind {
        ModelKind::Cv2 if n_features >= 3 => extend_cv_model_with(n_features, options),
        ModelKind::Cv1 | ModelKind::Cv2 | ModelKind::Cv3 => {
            build_cv_model_with(kind, n_features, options)
        }
        ModelKind::CvGeneric(m) => {
            if n_features != m {
                return Err(Error::config(format!(
                    "{kind} takes {m} feature(s), got {n_features}"
                )));
            }
            build_generic_cv_layer(m, cutoff)
        }
        ModelKind::Dv2(_) | ModelKind::Dv4(_) => build_dv_model(kind, n_features),
    }
}
