//! Dense statevector simulation for 2 to 4 qubits. Wire 0 is the most
//! significant bit of the basis index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

impl QubitState {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(QubitState {
            amplitudes,
            n_qubits,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = amplitudes.len().trailing_zeros() as usize;
        if !amplitudes.len().is_power_of_two() {
            return Err(Error::usage(format!(
                "{} amplitudes is not a power of two",
                amplitudes.len()
            )));
        }
        check_qubits(n_qubits)?;
        Ok(QubitState {
            amplitudes,
            n_qubits,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.n_qubits {
            return Err(Error::usage(format!(
                "wire {wire} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::config(format!(
            "qubit count must be in {MIN_QUBITS}..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitGateKind {
    H,
    RX,
    RY,
    RZ,
    CNOT,
}

impl QubitGateKind {
    pub fn arity(self) -> usize {
        match self {
            QubitGateKind::CNOT => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            QubitGateKind::RX | QubitGateKind::RY | QubitGateKind::RZ
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitGateKind::H => "H",
            QubitGateKind::RX => "RX",
            QubitGateKind::RY => "RY",
            QubitGateKind::RZ => "RZ",
            QubitGateKind::CNOT => "CNOT",
        }
    }
}

impl std::fmt::Display for QubitGateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A gate with its angle bound. For CNOT `wires` is (control, target).
#[derive(Debug, Clone, PartialEq)]
pub struct QubitGate {
    pub kind: QubitGateKind,
    pub angle: f64,
    pub wires: Vec<usize>,
}

impl QubitGate {
    pub fn h(wire: usize) -> Self {
        QubitGate {
            kind: QubitGateKind::H,
            angle: 0.0,
            wires: vec![wire],
        }
    }

    pub fn rx(angle: f64, wire: usize) -> Self {
        QubitGate {
            kind: QubitGateKind::RX,
            angle,
            wires: vec![wire],
        }
    }

    pub fn ry(angle: f64, wire: usize) -> Self {
        QubitGate {
            kind: QubitGateKind::RY,
            angle,
            wires: vec![wire],
        }
    }

    pub fn rz(angle: f64, wire: usize) -> Self {
        QubitGate {
            kind: QubitGateKind::RZ,
            angle,
            wires: vec![wire],
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        QubitGate {
            kind: QubitGateKind::CNOT,
            angle: 0.0,
            wires: vec![control, target],
        }
    }

    /// 2x2 matrix [[u00, u01], [u10, u11]] for single-qubit kinds.
    fn single_matrix(&self) -> [[Complex64; 2]; 2] {
        let half = self.angle / 2.0;
        let (c, s) = (half.cos(), half.sin());
        let re = |x: f64| Complex64::new(x, 0.0);
        match self.kind {
            QubitGateKind::H => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[re(h), re(h)], [re(h), re(-h)]]
            }
            QubitGateKind::RX => [
                [re(c), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), re(c)],
            ],
            QubitGateKind::RY => [[re(c), re(-s)], [re(s), re(c)]],
            QubitGateKind::RZ => [
                [Complex64::from_polar(1.0, -half), ZERO],
                [ZERO, Complex64::from_polar(1.0, half)],
            ],
            QubitGateKind::CNOT => unreachable!("CNOT has no 2x2 matrix"),
        }
    }
}

pub fn apply_qubit_gate(state: &QubitState, gate: &QubitGate) -> Result<QubitState> {
    if gate.wires.len() != gate.kind.arity() {
        return Err(Error::usage(format!(
            "{} takes {} wire(s), got {}",
            gate.kind,
            gate.kind.arity(),
            gate.wires.len()
        )));
    }
    for &w in &gate.wires {
        state.check_wire(w)?;
    }
    let mut out = state.amplitudes.clone();
    if gate.kind == QubitGateKind::CNOT {
        let (control, target) = (gate.wires[0], gate.wires[1]);
        if control == target {
            return Err(Error::usage("CNOT control and target must differ"));
        }
        let (cm, tm) = (state.mask(control), state.mask(target));
        for i in 0..out.len() {
            if i & cm != 0 && i & tm == 0 {
                out.swap(i, i | tm);
            }
        }
    } else {
        let u = gate.single_matrix();
        let m = state.mask(gate.wires[0]);
        for i in 0..out.len() {
            if i & m == 0 {
                let (a0, a1) = (state.amplitudes[i], state.amplitudes[i | m]);
                out[i] = u[0][0] * a0 + u[0][1] * a1;
                out[i | m] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }
    Ok(QubitState {
        amplitudes: out,
        n_qubits: state.n_qubits,
    })
}

/// RY(pi x_i) on wire i for each feature.
pub fn angle_encode(features: &[f64], n_qubits: usize) -> Result<Vec<QubitGate>> {
    if features.len() > n_qubits {
        return Err(Error::usage(format!(
            "{} features do not fit on {n_qubits} qubits",
            features.len()
        )));
    }
    features
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::data(format!(
                    "feature {i} = {x} is outside [0, 1]; normalize first"
                )));
            }
            Ok(QubitGate::ry(std::f64::consts::PI * x, i))
        })
        .collect()
}

/// L2-normalized features, zero-padded to 2^n_qubits.
pub fn amplitude_encode(features: &[f64], n_qubits: usize) -> Result<QubitState> {
    check_qubits(n_qubits)?;
    let dim = 1 << n_qubits;
    if features.len() > dim {
        return Err(Error::usage(format!(
            "{} features exceed {dim} amplitudes",
            features.len()
        )));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("non-finite feature"));
    }
    let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::data("cannot amplitude-encode an all-zero vector"));
    }
    let mut amplitudes = vec![ZERO; dim];
    for (a, &x) in amplitudes.iter_mut().zip(features) {
        *a = Complex64::new(x / norm, 0.0);
    }
    Ok(QubitState {
        amplitudes,
        n_qubits,
    })
}

pub fn z_expectation(state: &QubitState, wire: usize) -> Result<f64> {
    state.check_wire(wire)?;
    let m = state.mask(wire);
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if i & m == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum())
}
