use std::path::Path;

use cvqnn::data::{
    chronological_split, inject_noise, load_series, make_supervised, minmax_apply, prepare,
    read_series, NormStats, Prepared, TimeSeries,
};
use cvqnn::forecast::{
    predict_series, recursive_forecast, spec_for, transfer_apply, ForecastResult, TransferMode,
};
use cvqnn::models::{draw as draw_circuit, Backend, CircuitSpec, Encoding, ModelKind, ParamVector};
use cvqnn::training::{train as fit, TrainConfig, TrainHistory};
use cvqnn::weights::PretrainedWeights;

use crate::artifacts::Artifacts;
use crate::plot::{line_chart, Series};
use crate::{
    BenchmarkCmd, DataArgs, DrawCmd, Failure, ForecastCmd, ModelArgs, PredictCmd, TrainCmd,
    TrainingArgs, TransferCmd,
};

const BUILTIN_SINE: &str = include_str!("../fixtures/sine.csv");

type Outcome<T = ()> = Result<T, Failure>;

struct Loaded {
    series: TimeSeries,
    features: Vec<String>,
}

fn load(args: &DataArgs) -> Outcome<Loaded> {
    let features = if args.feature_cols.is_empty() {
        vec![args.target_col.clone()]
    } else {
        args.feature_cols.clone()
    };
    let ts = args.timestamp_col.as_deref();
    let series = match args.dataset.strip_prefix("builtin:") {
        Some("sine") => read_series(
            BUILTIN_SINE.as_bytes(),
            "builtin:sine",
            &args.target_col,
            &features,
            ts,
            b',',
        )?,
        Some(other) => {
            return Err(Failure::usage(format!(
                "no bundled dataset '{other}' (have: sine)"
            )))
        }
        None => load_series(Path::new(&args.dataset), &args.target_col, &features, ts)?,
    };
    Ok(Loaded { series, features })
}

/// Normalizes with stored stats when they cover every column, else fits fresh ones.
fn prepare_reusing(
    loaded: &Loaded,
    args: &DataArgs,
    stored: Option<&NormStats>,
) -> Outcome<(Prepared, &'static str)> {
    let target = &args.target_col;
    let covered = stored
        .filter(|s| s.get(target).is_ok() && loaded.features.iter().all(|f| s.get(f).is_ok()));
    match covered {
        Some(stats) => {
            let normalized = minmax_apply(&loaded.series, stats)?;
            let windows = make_supervised(&normalized, target, &loaded.features, 1)?;
            let (train, test) = chronological_split(&windows, args.split)?;
            let data = Prepared {
                stats: stats.clone(),
                train,
                test,
            };
            Ok((data, "stored with the weights"))
        }
        None => Ok((
            prepare(&loaded.series, target, &loaded.features, args.split)?,
            "fitted on this dataset's training rows",
        )),
    }
}

fn resolve_kind(model: &ModelArgs) -> Outcome<ModelKind> {
    match (model.encoding, model.model.backend()) {
        (None, _) => Ok(model.model),
        (Some(_), Backend::Cv) => Err(Failure::usage("--encoding applies to dv2 and dv4 only")),
        (Some(e), Backend::Dv) => Ok(model.model.with_encoding(e)),
    }
}

fn train_config(kind: ModelKind, args: &TrainingArgs, cutoff: usize) -> Outcome<TrainConfig> {
    let mut cfg = TrainConfig::for_model(kind);
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    if let Some(b) = args.batch {
        cfg.batch_size = b;
    }
    cfg.seed = args.seed;
    cfg.cutoff = cutoff;
    cfg.validate()?;
    Ok(cfg)
}

fn with_noise(data: &Prepared, args: &TrainingArgs) -> Outcome<Prepared> {
    Ok(Prepared {
        train: inject_noise(&data.train, args.noise_sigma, args.seed)?,
        ..data.clone()
    })
}

struct Summary(Vec<String>);

impl Summary {
    fn line(&mut self, s: impl Into<String>) {
        self.0.push(s.into());
    }

    fn metrics(&mut self, r: &ForecastResult) {
        if let Some(m) = &r.metrics {
            self.line(format!(
                "test mse {:.6} (normalized), rmse {:.6}, pct_rmse {:.3}%, mae {:.6}, pct_mae {:.3}%",
                m.mse, m.rmse, m.pct_rmse, m.mae, m.pct_mae
            ));
        }
        if r.truncation_warnings > 0 {
            self.line(format!(
                "truncation warnings: {} sample(s) lost probability to the Fock cutoff",
                r.truncation_warnings
            ));
        }
    }

    fn finish(self, out: &mut Artifacts) -> Outcome {
        let text = self.0.join("\n") + "\n";
        print!("{text}");
        out.put("summary.txt", text.as_bytes())?;
        out.report();
        Ok(())
    }
}

fn put_history(out: &mut Artifacts, h: &TrainHistory) -> Outcome {
    out.put_with("history.csv", |buf| h.write_csv(buf))?;
    let mut costs = vec![h.initial_cost];
    costs.extend(&h.costs);
    let svg = line_chart(
        "Training cost",
        "epoch",
        "cost",
        &[Series::new("cost", &costs)],
    );
    out.put("training.svg", svg.as_bytes())
}

fn put_predictions(out: &mut Artifacts, r: &ForecastResult, title: &str) -> Outcome {
    out.put_with("predictions.csv", |buf| r.write_csv(buf))?;
    let mut lines = vec![];
    if let Some(a) = &r.actuals {
        lines.push(Series::new("actual", a));
    }
    lines.push(Series::new("predicted", &r.predictions));
    let svg = line_chart(title, "test sample", "value", &lines);
    out.put("predictions.svg", svg.as_bytes())
}

fn put_weights(out: &mut Artifacts, path: &Path, w: &PretrainedWeights) -> Outcome {
    out.put_at(path, w.to_json()?.as_bytes())
}

fn final_cost(h: &TrainHistory) -> f64 {
    h.costs.last().copied().unwrap_or(h.initial_cost)
}

struct Trained {
    spec: CircuitSpec,
    params: ParamVector,
    history: TrainHistory,
    config: TrainConfig,
}

fn train_model(
    kind: ModelKind,
    n_features: usize,
    cutoff: usize,
    data: &Prepared,
    args: &TrainingArgs,
) -> Outcome<Trained> {
    let spec = spec_for(kind, n_features, cutoff)?;
    let config = train_config(kind, args, cutoff)?;
    let noisy = with_noise(data, args)?;
    let (params, history) = fit(&spec, &noisy.train, &config)?;
    Ok(Trained {
        spec,
        params,
        history,
        config,
    })
}

pub fn train(cmd: &TrainCmd) -> Outcome {
    let kind = resolve_kind(&cmd.model)?;
    let loaded = load(&cmd.data)?;
    let data = prepare(
        &loaded.series,
        &cmd.data.target_col,
        &loaded.features,
        cmd.data.split,
    )?;
    let t = train_model(
        kind,
        loaded.features.len(),
        cmd.model.cutoff,
        &data,
        &cmd.training,
    )?;
    let result = predict_series(&t.spec, &t.params, &data.test, &data.stats)?;
    let weights = PretrainedWeights::from_training(
        &t.spec,
        t.params.clone(),
        Some(data.stats.clone()),
        &t.config,
        loaded.series.source.clone(),
    );

    let mut out = Artifacts::new(&cmd.out.out_dir);
    let weights_path = cmd
        .weights_out
        .clone()
        .unwrap_or_else(|| out.path("weights.json"));
    put_weights(&mut out, &weights_path, &weights)?;
    put_history(&mut out, &t.history)?;
    put_predictions(&mut out, &result, &format!("{kind} test predictions"))?;

    let mut s = Summary(vec![]);
    s.line(format!(
        "model: {kind} ({} trainable parameters)",
        t.spec.slots().len()
    ));
    s.line(format!(
        "dataset: {} ({} training, {} test samples)",
        loaded.series.source,
        data.train.len(),
        data.test.len()
    ));
    s.line(format!("noise sigma: {}", cmd.training.noise_sigma));
    s.line(format!(
        "epochs run: {}{}",
        t.history.costs.len(),
        if t.history.stopped_early {
            " (stopped early)"
        } else {
            ""
        }
    ));
    let m = result.metrics.expect("labelled test split");
    s.line(format!(
        "final cost {:.6}, rmse {:.6}, pct_rmse {:.3}%",
        final_cost(&t.history),
        m.rmse,
        m.pct_rmse
    ));
    s.metrics(&result);
    s.finish(&mut out)
}

pub fn predict(cmd: &PredictCmd) -> Outcome {
    let weights = PretrainedWeights::resolve(&cmd.weights_in)?;
    let spec = weights.build_spec()?;
    let loaded = load(&cmd.data)?;
    check_width(&spec, loaded.features.len())?;
    let (data, stats_from) = prepare_reusing(&loaded, &cmd.data, weights.norm_stats.as_ref())?;
    let result = predict_series(&spec, &weights.params, &data.test, &data.stats)?;

    let mut out = Artifacts::new(&cmd.out.out_dir);
    put_predictions(
        &mut out,
        &result,
        &format!("{} test predictions", weights.kind),
    )?;
    let mut s = Summary(vec![]);
    s.line(format!("model: {} from {}", weights.kind, cmd.weights_in));
    s.line(format!(
        "dataset: {} ({} test samples)",
        loaded.series.source,
        data.test.len()
    ));
    s.line(format!("normalization: {stats_from}"));
    s.metrics(&result);
    s.finish(&mut out)
}

fn check_width(spec: &CircuitSpec, n_features: usize) -> Outcome {
    if spec.n_features() != n_features {
        return Err(cvqnn::Error::Config(format!(
            "{} weights take {} feature(s), {} given",
            spec.kind(),
            spec.n_features(),
            n_features
        ))
        .into());
    }
    Ok(())
}

pub fn transfer(cmd: &TransferCmd) -> Outcome {
    let weights = PretrainedWeights::resolve(&cmd.weights_in)?;
    let loaded = load(&cmd.data)?;
    let data = prepare(
        &loaded.series,
        &cmd.data.target_col,
        &loaded.features,
        cmd.data.split,
    )?;
    let cutoff = weights.cutoff.unwrap_or(cvqnn::models::DEFAULT_CUTOFF);
    let cfg = train_config(weights.kind, &cmd.training, cutoff)?;
    let mode = match cmd.fine_tune {
        0 => TransferMode::Frozen,
        n => TransferMode::FineTune(n),
    };
    let outcome = transfer_apply(&weights, &with_noise(&data, &cmd.training)?, mode, &cfg)?;

    let mut out = Artifacts::new(&cmd.out.out_dir);
    put_predictions(
        &mut out,
        &outcome.result,
        &format!("{} transfer ({mode})", weights.kind),
    )?;
    if let Some(h) = &outcome.history {
        put_history(&mut out, h)?;
    }
    if let Some(path) = &cmd.weights_out {
        let spec = weights.build_spec()?;
        let tuned = PretrainedWeights::from_training(
            &spec,
            outcome.params.clone(),
            Some(data.stats.clone()),
            &cfg,
            format!("{} tuned on {}", cmd.weights_in, loaded.series.source),
        );
        put_weights(&mut out, path, &tuned)?;
    }
    let mut s = Summary(vec![]);
    s.line(format!("model: {} from {}", weights.kind, cmd.weights_in));
    s.line(format!("mode: {mode}"));
    s.line(format!(
        "dataset: {} ({} test samples)",
        loaded.series.source,
        data.test.len()
    ));
    if let Some(h) = &outcome.history {
        s.line(format!("noise sigma: {}", cmd.training.noise_sigma));
        s.line(format!("fine-tune final cost {:.6}", final_cost(h)));
    }
    s.metrics(&outcome.result);
    s.finish(&mut out)
}

pub fn forecast(cmd: &ForecastCmd) -> Outcome {
    if cmd.horizon == 0 {
        return Err(Failure::usage("--horizon must be at least 1"));
    }
    let target = &cmd.data.target_col;
    let loaded = load(&cmd.data)?;
    if loaded.features.iter().any(|f| f != target) {
        return Err(Failure::usage(
            "closed-loop forecasting feeds predictions back as inputs, so --feature-cols must be the target only",
        ));
    }
    let mut out = Artifacts::new(&cmd.out.out_dir);
    let mut s = Summary(vec![]);

    let (spec, params, stats) = match &cmd.weights_in {
        Some(location) => {
            let w = PretrainedWeights::resolve(location)?;
            let spec = w.build_spec()?;
            let (data, stats_from) = prepare_reusing(&loaded, &cmd.data, w.norm_stats.as_ref())?;
            s.line(format!("model: {} from {location}", w.kind));
            s.line(format!("normalization: {stats_from}"));
            (spec, w.params, data.stats)
        }
        None => {
            let kind = resolve_kind(&cmd.model)?;
            let data = prepare(&loaded.series, target, &loaded.features, cmd.data.split)?;
            let t = train_model(kind, 1, cmd.model.cutoff, &data, &cmd.training)?;
            put_history(&mut out, &t.history)?;
            let weights = PretrainedWeights::from_training(
                &t.spec,
                t.params.clone(),
                Some(data.stats.clone()),
                &t.config,
                loaded.series.source.clone(),
            );
            let path = cmd
                .weights_out
                .clone()
                .unwrap_or_else(|| out.path("weights.json"));
            put_weights(&mut out, &path, &weights)?;
            s.line(format!(
                "model: {kind} trained for {} epochs",
                t.history.costs.len()
            ));
            s.line(format!("final cost {:.6}", final_cost(&t.history)));
            (t.spec, t.params, data.stats)
        }
    };
    let history = loaded.series.column(target)?;
    let width = spec.n_features();
    if history.len() < width {
        return Err(Failure::usage(format!(
            "series has {} value(s), the model needs a window of {width}",
            history.len()
        )));
    }
    let seed = &history[history.len() - width..];
    let result = recursive_forecast(&spec, &params, seed, cmd.horizon, &stats, target)?;

    out.put_with("forecast.csv", |buf| result.write_csv(buf))?;
    let shown = history.len().min(cmd.horizon.max(100));
    let recent = &history[history.len() - shown..];
    let svg = line_chart(
        &format!(
            "{} closed-loop forecast, {} steps",
            spec.kind(),
            cmd.horizon
        ),
        "step",
        target,
        &[
            Series::new("history", recent),
            Series {
                label: "forecast",
                values: &result.predictions,
                offset: shown,
            },
        ],
    );
    out.put("forecast.svg", svg.as_bytes())?;

    s.line(format!(
        "dataset: {} ({} values)",
        loaded.series.source,
        history.len()
    ));
    s.line(format!("horizon: {}", cmd.horizon));
    s.line(format!("seed window: {seed:?}"));
    s.line(format!("noise sigma: {}", cmd.training.noise_sigma));
    s.metrics(&result);
    s.finish(&mut out)
}

const ROSTER: [ModelKind; 4] = [
    ModelKind::Cv2,
    ModelKind::Dv2(Encoding::Angle),
    ModelKind::Dv2(Encoding::Amplitude),
    ModelKind::Dv4(Encoding::Angle),
];

pub fn benchmark(cmd: &BenchmarkCmd) -> Outcome {
    let loaded = load(&cmd.data)?;
    let data = prepare(
        &loaded.series,
        &cmd.data.target_col,
        &loaded.features,
        cmd.data.split,
    )?;
    let header = ["model", "encoding", "wires", "cost", "pct_rmse"];
    let mut rows: Vec<[String; 5]> = vec![];
    for kind in ROSTER {
        let t = train_model(
            kind,
            loaded.features.len(),
            cmd.cutoff,
            &data,
            &cmd.training,
        )?;
        let r = predict_series(&t.spec, &t.params, &data.test, &data.stats)?;
        let (name, encoding) = match kind {
            ModelKind::Dv2(e) => ("dv2".to_string(), e.to_string()),
            ModelKind::Dv4(e) => ("dv4".to_string(), e.to_string()),
            other => (other.to_string(), "displacement".to_string()),
        };
        rows.push([
            name,
            encoding,
            t.spec.wires().to_string(),
            format!("{:.7}", final_cost(&t.history)),
            format!("{:.3}", r.metrics.expect("labelled").pct_rmse),
        ]);
    }

    let mut csv = header.join(",") + "\n";
    for r in &rows {
        csv += &(r.join(",") + "\n");
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap()
        })
        .collect();
    let render = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut table = vec![render(header.to_vec())];
    table.extend(
        rows.iter()
            .map(|r| render(r.iter().map(String::as_str).collect())),
    );

    let mut out = Artifacts::new(&cmd.out.out_dir);
    out.put("benchmark.csv", csv.as_bytes())?;
    let mut s = Summary(table);
    s.line(format!(
        "dataset: {} ({} training, {} test samples), noise sigma: {}",
        loaded.series.source,
        data.train.len(),
        data.test.len(),
        cmd.training.noise_sigma
    ));
    s.finish(&mut out)
}

pub fn draw(cmd: &DrawCmd) -> Outcome {
    let kind = resolve_kind(&cmd.model)?;
    let spec = spec_for(kind, cmd.features, cmd.model.cutoff)?;
    print!("{}", draw_circuit(&spec));
    Ok(())
}
