//! Square loss, gradients, Adam and the training loop.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::models::{evaluate, Backend, CircuitSpec, ModelKind, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMethod {
    FiniteDiff,
    ParamShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub cutoff: usize,
    pub lr_thresholds: Vec<f64>,
    pub lr_factor: f64,
    pub grad_method: GradMethod,
    pub fd_step: f64,
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            cutoff: crate::models::DEFAULT_CUTOFF,
            lr_thresholds: vec![0.002, 0.0016],
            lr_factor: 0.5,
            grad_method: GradMethod::FiniteDiff,
            fd_step: 1e-4,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    /// Defaults with the model's epoch budget and gradient method.
    pub fn for_model(kind: ModelKind) -> Self {
        TrainConfig {
            epochs: kind.default_epochs(),
            grad_method: match kind.backend() {
                Backend::Cv => GradMethod::FiniteDiff,
                Backend::Dv => GradMethod::ParamShift,
            },
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return fail(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return fail(format!("{name} must be in (0, 1), got {b}"));
            }
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return fail("epochs and batch size must be >= 1".into());
        }
        if self.lr_thresholds.windows(2).any(|w| w[0] <= w[1]) {
            return fail("lr thresholds must be strictly descending".into());
        }
        if !(self.lr_factor > 0.0 && self.lr_factor <= 1.0) {
            return fail(format!(
                "lr factor must be in (0, 1], got {}",
                self.lr_factor
            ));
        }
        if !self.fd_step.is_finite() || self.fd_step <= 0.0 {
            return fail(format!(
                "finite-difference step must be > 0, got {}",
                self.fd_step
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, for provenance.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub current_lr: f64,
}

impl AdamState {
    pub fn new(n: usize, lr: f64) -> Self {
        AdamState {
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
            current_lr: lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Full-train cost before the first step.
    pub initial_cost: f64,
    pub costs: Vec<f64>,
    /// Learning rate in effect during each epoch.
    pub lrs: Vec<f64>,
    pub final_params: ParamVector,
    pub stopped_early: bool,
    pub steps: u64,
}

impl TrainHistory {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "cost", "lr"])
            .map_err(crate::data::csv_err)?;
        for (i, (c, lr)) in self.costs.iter().zip(&self.lrs).enumerate() {
            w.write_record([(i + 1).to_string(), c.to_string(), lr.to_string()])
                .map_err(crate::data::csv_err)?;
        }
        w.flush().map_err(|e| Error::io("history csv", e))
    }
}

pub fn square_loss(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() || labels.is_empty() {
        return Err(Error::usage(format!(
            "square loss over {} predictions and {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / labels.len() as f64)
}

/// Model outputs for every input, evaluated in parallel and returned in order.
pub fn predict_batch(
    spec: &CircuitSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
) -> Result<Vec<f64>> {
    inputs
        .par_iter()
        .map(|x| evaluate(spec, params, x).map(|e| e.value))
        .collect()
}

pub fn batch_loss(
    spec: &CircuitSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
    labels: &[f64],
) -> Result<f64> {
    square_loss(&predict_batch(spec, params, inputs)?, labels)
}

/// Gradient of the mean square loss on `(inputs, labels)`.
pub fn gradient(
    spec: &CircuitSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
    labels: &[f64],
    method: GradMethod,
    fd_step: f64,
) -> Result<Vec<f64>> {
    if inputs.len() != labels.len() || labels.is_empty() {
        return Err(Error::usage(
            "gradient needs equal, nonempty inputs and labels",
        ));
    }
    let n = params.len();
    match method {
        GradMethod::FiniteDiff => {
            let probes: Vec<(usize, f64)> =
                (0..n).flat_map(|i| [(i, fd_step), (i, -fd_step)]).collect();
            let losses: Vec<f64> = probes
                .par_iter()
                .map(|&(i, h)| {
                    let p = params.with_value(i, params.values()[i] + h);
                    batch_loss(spec, &p, inputs, labels)
                })
                .collect::<Result<_>>()?;
            Ok(losses
                .chunks(2)
                .map(|pm| (pm[0] - pm[1]) / (2.0 * fd_step))
                .collect())
        }
        GradMethod::ParamShift => {
            if spec.backend() != Backend::Dv {
                return Err(Error::config(
                    "the parameter-shift rule applies to qubit rotations only; use finite differences",
                ));
            }
            let base = predict_batch(spec, params, inputs)?;
            let shift = std::f64::consts::FRAC_PI_2;
            (0..n)
                .map(|i| {
                    let up = predict_batch(
                        spec,
                        &params.with_value(i, params.values()[i] + shift),
                        inputs,
                    )?;
                    let down = predict_batch(
                        spec,
                        &params.with_value(i, params.values()[i] - shift),
                        inputs,
                    )?;
                    let sum: f64 = (0..labels.len())
                        .map(|k| 2.0 * (base[k] - labels[k]) * (up[k] - down[k]) / 2.0)
                        .sum();
                    Ok(sum / labels.len() as f64)
                })
                .collect()
        }
    }
}

/// One bias-corrected Adam update at the state's current learning rate.
pub fn adam_step(
    state: &AdamState,
    params: &ParamVector,
    grads: &[f64],
    config: &TrainConfig,
) -> Result<(ParamVector, AdamState)> {
    if grads.len() != params.len() || state.first_moment.len() != params.len() {
        return Err(Error::usage(format!(
            "adam step over {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training {
            message: format!("non-finite gradient for slot '{}'", params.names()[i]),
            history: None,
        });
    }
    let t = state.step_count + 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let bias1 = 1.0 - b1.powi(t as i32);
    let bias2 = 1.0 - b2.powi(t as i32);
    let mut next = state.clone();
    next.step_count = t;
    let mut values = params.values().to_vec();
    for i in 0..values.len() {
        let g = grads[i];
        next.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        next.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        let m_hat = next.first_moment[i] / bias1;
        let v_hat = next.second_moment[i] / bias2;
        values[i] -= state.current_lr * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok((params.with_values(values), next))
}

/// Progressive learning-rate reduction: every threshold fires once, the first
/// time an epoch cost falls below it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LrSchedule {
    consumed: Vec<bool>,
}

impl LrSchedule {
    pub fn new(config: &TrainConfig) -> Self {
        LrSchedule {
            consumed: vec![false; config.lr_thresholds.len()],
        }
    }

    pub fn step(&mut self, epoch_cost: f64, current_lr: f64, config: &TrainConfig) -> f64 {
        let mut lr = current_lr;
        for (i, &threshold) in config.lr_thresholds.iter().enumerate() {
            if !self.consumed[i] && epoch_cost < threshold {
                self.consumed[i] = true;
                lr *= config.lr_factor;
            }
        }
        lr
    }

    /// Marks thresholds as already spent.
    pub fn with_consumed(mut self, consumed: &[bool]) -> Self {
        for (c, &d) in self.consumed.iter_mut().zip(consumed) {
            *c = d;
        }
        self
    }
}

/// Stateless form of [`LrSchedule::step`] for a schedule with nothing consumed.
pub fn lr_schedule(epoch_cost: f64, current_lr: f64, config: &TrainConfig) -> f64 {
    LrSchedule::new(config).step(epoch_cost, current_lr, config)
}

/// Seeded uniform(-0.05, 0.05) initial values.
pub fn init_params(spec: &CircuitSpec, seed: u64) -> ParamVector {
    let mut rng = Pcg64::seed_from_u64(seed);
    let values = spec
        .slots()
        .iter()
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            -0.05 + 0.1 * u
        })
        .collect();
    spec.params(values).expect("finite initial values")
}

const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_EPOCHS: usize = 3;
const EARLY_STOP_TOL: f64 = 1e-6;

pub fn train(
    spec: &CircuitSpec,
    dataset: &WindowedDataset,
    config: &TrainConfig,
) -> Result<(ParamVector, TrainHistory)> {
    train_from(spec, dataset, config, init_params(spec, config.seed))
}

/// Training loop starting from given parameters.
pub fn train_from(
    spec: &CircuitSpec,
    dataset: &WindowedDataset,
    config: &TrainConfig,
    initial: ParamVector,
) -> Result<(ParamVector, TrainHistory)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::data("training set is empty"));
    }
    if dataset.n_features() != spec.n_features() {
        return Err(Error::config(format!(
            "{} expects {} feature(s), dataset has {}",
            spec.kind(),
            spec.n_features(),
            dataset.n_features()
        )));
    }
    if initial.names() != spec.slots() {
        return Err(Error::usage(
            "initial parameters do not match the circuit slots",
        ));
    }
    let mut rng = Pcg64::seed_from_u64(config.seed);
    let mut params = initial;
    let mut adam = AdamState::new(params.len(), config.learning_rate);
    let mut schedule = LrSchedule::new(config);
    let initial_cost = batch_loss(spec, &params, &dataset.inputs, &dataset.labels)?;
    let mut history = TrainHistory {
        initial_cost,
        costs: Vec::new(),
        lrs: Vec::new(),
        final_params: params.clone(),
        stopped_early: false,
        steps: 0,
    };
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut diverged_for = 0;
    let mut best = initial_cost;
    let mut stale = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr_used = adam.current_lr;
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&i| dataset.inputs[i].clone()).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| dataset.labels[i]).collect();
            let grads = gradient(spec, &params, &xs, &ys, config.grad_method, config.fd_step)?;
            let (p, a) = adam_step(&adam, &params, &grads, config).map_err(|e| match e {
                Error::Training { message, .. } => Error::Training {
                    message: format!("epoch {}: {message}", epoch + 1),
                    history: Some(Box::new(history.clone())),
                },
                other => other,
            })?;
            params = p;
            adam = a;
        }
        let cost = batch_loss(spec, &params, &dataset.inputs, &dataset.labels)?;
        history.costs.push(cost);
        history.lrs.push(lr_used);
        history.final_params = params.clone();
        history.steps = adam.step_count;
        log::debug!("epoch {} cost {cost:.6e} lr {lr_used:.3e}", epoch + 1);

        if !cost.is_finite() || cost > DIVERGENCE_FACTOR * initial_cost {
            diverged_for += 1;
        } else {
            diverged_for = 0;
        }
        if diverged_for >= DIVERGENCE_EPOCHS || !cost.is_finite() {
            return Err(Error::Training {
                message: format!(
                    "training diverged at epoch {}: cost {cost:.4e} vs initial {initial_cost:.4e}",
                    epoch + 1
                ),
                history: Some(Box::new(history)),
            });
        }
        adam.current_lr = schedule.step(cost, adam.current_lr, config);

        if let Some(patience) = config.early_stop_patience {
            if cost < best - EARLY_STOP_TOL {
                best = cost;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok((params, history))
}
