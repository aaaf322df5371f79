//! Parameterized circuit specifications for the CV and DV networks, and their
//! forward pass.

mod build;
mod draw;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    apply_gate, cached_gate, quadrature_expectation, CvGateKind, FockState, TruncationWarning,
};
use crate::qubit::{
    amplitude_encode, apply_qubit_gate, z_expectation, QubitGate, QubitGateKind, QubitState,
};

pub use build::{
    build_cv_model, build_cv_model_with, build_dv_model, build_generic_cv_layer, extend_cv_model,
    extend_cv_model_with, Ancilla, CvOptions, Nonlinearity, DEFAULT_CUTOFF,
};
pub use draw::draw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Angle,
    Amplitude,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Angle => "angle",
            Encoding::Amplitude => "amplitude",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "angle" => Ok(Encoding::Angle),
            "amplitude" => Ok(Encoding::Amplitude),
            _ => Err(Error::config(format!("unknown encoding '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Cv1,
    Cv2,
    Cv3,
    CvGeneric(usize),
    Dv2(Encoding),
    Dv4(Encoding),
}

impl ModelKind {
    pub fn trainable_count(self) -> usize {
        match self {
            ModelKind::Cv1 => 8,
            ModelKind::Cv2 => 6,
            ModelKind::Cv3 => 4,
            ModelKind::CvGeneric(m) => (8 * m).saturating_sub(2),
            ModelKind::Dv2(_) => 4,
            ModelKind::Dv4(_) => 8,
        }
    }

    pub fn backend(self) -> Backend {
        match self {
            ModelKind::Dv2(_) | ModelKind::Dv4(_) => Backend::Dv,
            _ => Backend::Cv,
        }
    }

    /// Default epoch budget used by training when none is given.
    pub fn default_epochs(self) -> usize {
        match self {
            ModelKind::Cv1 => 20,
            ModelKind::Cv3 => 100,
            _ => 50,
        }
    }

    pub fn with_encoding(self, encoding: Encoding) -> Self {
        match self {
            ModelKind::Dv2(_) => ModelKind::Dv2(encoding),
            ModelKind::Dv4(_) => ModelKind::Dv4(encoding),
            other => other,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Cv1 => f.write_str("cv1"),
            ModelKind::Cv2 => f.write_str("cv2"),
            ModelKind::Cv3 => f.write_str("cv3"),
            ModelKind::CvGeneric(m) => write!(f, "cv-generic:{m}"),
            ModelKind::Dv2(e) => write!(f, "dv2-{e}"),
            ModelKind::Dv4(e) => write!(f, "dv4-{e}"),
        }
    }
}

/// Accepts `cv1`, `cv2`, `cv3`, `cv-generic:M`, `dv2`, `dv4`, optionally with
/// a `-angle` / `-amplitude` suffix on the DV kinds (angle by default).
impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(m) = lower.strip_prefix("cv-generic:") {
            let m = m
                .parse()
                .map_err(|_| Error::config(format!("bad mode count in '{s}'")))?;
            return Ok(ModelKind::CvGeneric(m));
        }
        let (base, enc) = match lower.split_once('-') {
            Some((b, e)) => (b, e.parse()?),
            None => (lower.as_str(), Encoding::Angle),
        };
        let kind = match base {
            "cv1" => ModelKind::Cv1,
            "cv2" => ModelKind::Cv2,
            "cv3" => ModelKind::Cv3,
            "dv2" => ModelKind::Dv2(enc),
            "dv4" => ModelKind::Dv4(enc),
            _ => return Err(Error::config(format!("unknown model kind '{s}'"))),
        };
        if kind.backend() == Backend::Cv && lower.contains('-') {
            return Err(Error::config(format!(
                "'{s}': encodings apply to DV models only"
            )));
        }
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Cv,
    Dv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Cv(CvGateKind),
    Qubit(QubitGateKind),
}

impl GateKind {
    pub fn label(self) -> &'static str {
        match self {
            GateKind::Cv(k) => k.label(),
            GateKind::Qubit(k) => k.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamBinding {
    Fixed(f64),
    Trainable(String),
    /// The slot's value enters with its sign flipped.
    Negated(String),
    /// `scale * features[index]`.
    Input {
        index: usize,
        scale: f64,
    },
}

impl ParamBinding {
    pub fn trainable(name: &str) -> Self {
        ParamBinding::Trainable(name.to_string())
    }

    pub fn input(index: usize) -> Self {
        ParamBinding::Input { index, scale: 1.0 }
    }

    pub fn slot(&self) -> Option<&str> {
        match self {
            ParamBinding::Trainable(s) | ParamBinding::Negated(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateDescriptor {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub params: Vec<ParamBinding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    kind: ModelKind,
    wires: usize,
    cutoff: Option<usize>,
    n_features: usize,
    gates: Vec<GateDescriptor>,
    slots: Vec<String>,
}

impl CircuitSpec {
    /// Checks slot uniqueness, slot usage, input indices and wire ranges.
    pub fn new(
        kind: ModelKind,
        wires: usize,
        cutoff: Option<usize>,
        n_features: usize,
        gates: Vec<GateDescriptor>,
        slots: Vec<String>,
    ) -> Result<Self> {
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].contains(s) {
                return Err(Error::config(format!("duplicate slot name '{s}'")));
            }
        }
        for g in &gates {
            if g.wires.iter().any(|&w| w >= wires) {
                return Err(Error::config(format!(
                    "{} gate on a missing wire",
                    g.kind.label()
                )));
            }
            for p in &g.params {
                match p {
                    ParamBinding::Input { index, .. } if *index >= n_features => {
                        return Err(Error::config(format!(
                            "input {index} exceeds {n_features} features"
                        )))
                    }
                    ParamBinding::Trainable(s) | ParamBinding::Negated(s) if !slots.contains(s) => {
                        return Err(Error::config(format!("undeclared slot '{s}'")))
                    }
                    _ => {}
                }
            }
        }
        for s in &slots {
            if !gates
                .iter()
                .any(|g| g.params.iter().any(|p| p.slot() == Some(s)))
            {
                return Err(Error::config(format!("slot '{s}' is never used")));
            }
        }
        if kind.backend() == Backend::Cv && cutoff.is_none() {
            return Err(Error::config("CV circuits need a cutoff"));
        }
        Ok(CircuitSpec {
            kind,
            wires,
            cutoff,
            n_features,
            gates,
            slots,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn backend(&self) -> Backend {
        self.kind.backend()
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn cutoff(&self) -> Option<usize> {
        self.cutoff
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn gates(&self) -> &[GateDescriptor] {
        &self.gates
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    /// Same circuit at another truncation (CV only).
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        if self.backend() != Backend::Cv {
            return Err(Error::config("cutoff applies to CV circuits only"));
        }
        if cutoff < 2 {
            return Err(Error::config(format!("cutoff must be >= 2, got {cutoff}")));
        }
        Ok(CircuitSpec {
            cutoff: Some(cutoff),
            ..self.clone()
        })
    }

    pub fn zero_params(&self) -> ParamVector {
        ParamVector {
            names: self.slots.clone(),
            values: vec![0.0; self.slots.len()],
        }
    }

    pub fn params(&self, values: Vec<f64>) -> Result<ParamVector> {
        ParamVector::new(self.slots.clone(), values)
    }

    fn resolve(&self, binding: &ParamBinding, params: &ParamVector, features: &[f64]) -> f64 {
        match binding {
            ParamBinding::Fixed(v) => *v,
            ParamBinding::Trainable(s) => params.get(s).expect("slot validated"),
            ParamBinding::Negated(s) => -params.get(s).expect("slot validated"),
            ParamBinding::Input { index, scale } => scale * features[*index],
        }
    }

    fn check_inputs(&self, params: &ParamVector, features: &[f64]) -> Result<()> {
        if params.names != self.slots {
            return Err(Error::usage(format!(
                "parameter slots {:?} do not match circuit slots {:?}",
                params.names, self.slots
            )));
        }
        if features.len() != self.n_features {
            return Err(Error::usage(format!(
                "expected {} features, got {}",
                self.n_features,
                features.len()
            )));
        }
        if let Some((i, x)) = features
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::data(format!(
                "feature {i} = {x} is outside [0, 1]; normalize first"
            )));
        }
        Ok(())
    }
}

/// Trainable values in slot declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::usage(format!(
                "{} slot names for {} values",
                names.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("slot '{}' is not finite", names[i])));
        }
        Ok(ParamVector { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    /// Copy with one coordinate replaced; no finiteness check, for gradient probes.
    pub(crate) fn with_value(&self, index: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.values[index] = value;
        out
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        ParamVector {
            names: self.names.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub warning: Option<TruncationWarning>,
}

/// Forward pass. CV circuits return `<x>` on wire 0; DV circuits return
/// `(1 - <Z_0>) / 2`.
pub fn evaluate(spec: &CircuitSpec, params: &ParamVector, features: &[f64]) -> Result<Evaluation> {
    spec.check_inputs(params, features)?;
    match spec.backend() {
        Backend::Cv => evaluate_cv(spec, params, features),
        Backend::Dv => evaluate_dv(spec, params, features),
    }
}

fn evaluate_cv(spec: &CircuitSpec, params: &ParamVector, features: &[f64]) -> Result<Evaluation> {
    let cutoff = spec.cutoff.expect("CV spec has a cutoff");
    let mut state = FockState::vacuum(spec.wires, cutoff)?;
    let mut values = Vec::with_capacity(2);
    for g in &spec.gates {
        let GateKind::Cv(kind) = g.kind else {
            return Err(Error::config("qubit gate in a CV circuit"));
        };
        values.clear();
        values.extend(g.params.iter().map(|b| spec.resolve(b, params, features)));
        let matrix = cached_gate(kind, &values, cutoff)?;
        state = apply_gate(&state, &matrix, &g.wires)?;
    }
    Ok(Evaluation {
        value: quadrature_expectation(&state, 0)?,
        warning: state.truncation_warning(),
    })
}

fn evaluate_dv(spec: &CircuitSpec, params: &ParamVector, features: &[f64]) -> Result<Evaluation> {
    let encoding = match spec.kind {
        ModelKind::Dv2(e) | ModelKind::Dv4(e) => e,
        _ => unreachable!("DV backend implies a DV kind"),
    };
    let mut state = match encoding {
        // An all-zero vector has no direction; it is read as |0...0>.
        Encoding::Amplitude if features.iter().all(|&x| x == 0.0) => QubitState::zero(spec.wires)?,
        Encoding::Amplitude => amplitude_encode(features, spec.wires)?,
        Encoding::Angle => QubitState::zero(spec.wires)?,
    };
    for g in &spec.gates {
        let GateKind::Qubit(kind) = g.kind else {
            return Err(Error::config("CV gate in a DV circuit"));
        };
        let angle = g
            .params
            .first()
            .map_or(0.0, |b| spec.resolve(b, params, features));
        let gate = QubitGate {
            kind,
            angle,
            wires: g.wires.clone(),
        };
        state = apply_qubit_gate(&state, &gate)?;
    }
    Ok(Evaluation {
        value: (1.0 - z_expectation(&state, 0)?) / 2.0,
        warning: None,
    })
}
