use num_complex::Complex64;

use super::gates::CvGateMatrix;
use crate::error::{Error, Result};

/// Norm drift above which a gate application is reported as truncation loss.
pub const TRUNCATION_WARN_DRIFT: f64 = 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pure state of `modes` qumodes, each truncated at `cutoff` photons.
///
/// Amplitudes are stored row-major over the mode indices, so mode 0 is the
/// slowest-varying digit.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amplitudes: Vec<Complex64>,
    modes: usize,
    cutoff: usize,
}

/// Norm loss detected after a gate pushed amplitude past the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWarning {
    pub drift: f64,
}

impl FockState {
    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        if modes < 1 || cutoff < 2 {
            return Err(Error::config(format!(
                "vacuum needs modes >= 1 and cutoff >= 2, got modes={modes} cutoff={cutoff}"
            )));
        }
        let len = cutoff
            .checked_pow(modes as u32)
            .ok_or_else(|| Error::config("state dimension overflows"))?;
        let mut amplitudes = vec![ZERO; len];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(FockState {
            amplitudes,
            modes,
            cutoff,
        })
    }

    /// Wraps raw amplitudes. The length must be `cutoff^modes`; the norm is not adjusted.
    pub fn from_amplitudes(
        amplitudes: Vec<Complex64>,
        modes: usize,
        cutoff: usize,
    ) -> Result<Self> {
        if modes < 1 || cutoff < 2 {
            return Err(Error::config("modes >= 1 and cutoff >= 2 required"));
        }
        if Some(amplitudes.len()) != cutoff.checked_pow(modes as u32) {
            return Err(Error::usage(format!(
                "expected {cutoff}^{modes} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        Ok(FockState {
            amplitudes,
            modes,
            cutoff,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Flat index of the basis state `|n_0, ..., n_{m-1}>`.
    pub fn index_of(&self, photons: &[usize]) -> Option<usize> {
        if photons.len() != self.modes || photons.iter().any(|&n| n >= self.cutoff) {
            return None;
        }
        Some(photons.iter().fold(0, |acc, &n| acc * self.cutoff + n))
    }

    pub fn amplitude(&self, photons: &[usize]) -> Option<Complex64> {
        self.index_of(photons).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_drift(&self) -> f64 {
        (self.norm_sqr() - 1.0).abs()
    }

    pub fn truncation_warning(&self) -> Option<TruncationWarning> {
        let drift = self.norm_drift();
        (drift > TRUNCATION_WARN_DRIFT).then_some(TruncationWarning { drift })
    }

    fn stride(&self, wire: usize) -> usize {
        self.cutoff.pow((self.modes - 1 - wire) as u32)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.modes {
            return Err(Error::usage(format!(
                "wire {wire} out of range for {} modes",
                self.modes
            )));
        }
        Ok(())
    }

    /// Flat offsets of every basis state whose digits on `wires` are zero.
    fn base_offsets(&self, wires: &[usize]) -> Vec<usize> {
        let mut bases = vec![0usize];
        for wire in 0..self.modes {
            if wires.contains(&wire) {
                continue;
            }
            let stride = self.stride(wire);
            bases = bases
                .iter()
                .flat_map(|&b| (0..self.cutoff).map(move |n| b + n * stride))
                .collect();
        }
        bases
    }
}

/// Applies `gate` to the listed wires; the gate's first mode maps onto `wires[0]`.
///
/// Gates never renormalise. Norm loss beyond [`TRUNCATION_WARN_DRIFT`] is
/// logged; callers can inspect it through [`FockState::truncation_warning`].
pub fn apply_gate(state: &FockState, gate: &CvGateMatrix, wires: &[usize]) -> Result<FockState> {
    if gate.arity() != wires.len() {
        return Err(Error::usage(format!(
            "{} gate acts on {} wires, got {}",
            gate.kind(),
            gate.arity(),
            wires.len()
        )));
    }
    if gate.cutoff() != state.cutoff {
        return Err(Error::usage(format!(
            "gate cutoff {} does not match state cutoff {}",
            gate.cutoff(),
            state.cutoff
        )));
    }
    for &w in wires {
        state.check_wire(w)?;
    }
    if wires.len() == 2 && wires[0] == wires[1] {
        return Err(Error::usage("gate wires must be distinct"));
    }

    let d = state.cutoff;
    // positions of the gate's local basis inside one slice of the state
    let local: Vec<usize> = match wires {
        [w] => (0..d).map(|n| n * state.stride(*w)).collect(),
        [w1, w2] => {
            let (s1, s2) = (state.stride(*w1), state.stride(*w2));
            (0..d * d).map(|i| (i / d) * s1 + (i % d) * s2).collect()
        }
        _ => unreachable!("arity checked above"),
    };
    let dim = local.len();
    let entries = gate.entries().as_slice(); // column-major
    let diagonal = gate.kind().is_diagonal();

    let mut out = vec![ZERO; state.amplitudes.len()];
    let mut slice = vec![ZERO; dim];
    for base in state.base_offsets(wires) {
        for (k, off) in local.iter().enumerate() {
            slice[k] = state.amplitudes[base + off];
        }
        if diagonal {
            for (k, off) in local.iter().enumerate() {
                out[base + off] = entries[k * dim + k] * slice[k];
            }
            continue;
        }
        for (col, &v) in slice.iter().enumerate() {
            if v == ZERO {
                continue;
            }
            let column = &entries[col * dim..(col + 1) * dim];
            for (row, off) in local.iter().enumerate() {
                out[base + off] += column[row] * v;
            }
        }
    }

    let next = FockState {
        amplitudes: out,
        modes: state.modes,
        cutoff: state.cutoff,
    };
    if let Some(w) = next.truncation_warning() {
        log::debug!(
            "{} gate on wires {:?} lost norm {:.3e} to the cutoff",
            gate.kind(),
            wires,
            w.drift
        );
    }
    Ok(next)
}

/// Raw complex value of <psi| x |psi> on one wire, x = a + a^dag.
pub fn quadrature_expectation_raw(state: &FockState, wire: usize) -> Result<Complex64> {
    state.check_wire(wire)?;
    let d = state.cutoff;
    let stride = state.stride(wire);
    let amps = &state.amplitudes;
    let mut acc = ZERO;
    for base in state.base_offsets(&[wire]) {
        for n in 0..d {
            // (x psi)_n = sqrt(n) psi_{n-1} + sqrt(n+1) psi_{n+1}
            let mut x_psi = ZERO;
            if n > 0 {
                x_psi += amps[base + (n - 1) * stride] * (n as f64).sqrt();
            }
            if n + 1 < d {
                x_psi += amps[base + (n + 1) * stride] * ((n + 1) as f64).sqrt();
            }
            acc += amps[base + n * stride].conj() * x_psi;
        }
    }
    Ok(acc)
}

/// Expectation of the x quadrature (hbar = 2, so a coherent state gives 2 Re alpha).
pub fn quadrature_expectation(state: &FockState, wire: usize) -> Result<f64> {
    Ok(quadrature_expectation_raw(state, wire)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::gates::{gaussian_gate_matrix, identity_gate, CvGateKind};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn vacuum_layouts() {
        let v = FockState::vacuum(1, 4).unwrap();
        assert_eq!(v.amplitudes().len(), 4);
        assert_eq!(v.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(v.amplitudes()[1..].iter().all(|a| *a == ZERO));
        let v2 = FockState::vacuum(2, 3).unwrap();
        assert_eq!(v2.amplitudes().len(), 9);
        assert_eq!(v2.amplitude(&[0, 0]), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(v2.norm_sqr(), 1.0);
        assert!(matches!(FockState::vacuum(0, 4), Err(Error::Config(_))));
        assert!(matches!(FockState::vacuum(1, 1), Err(Error::Config(_))));
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let s = FockState::vacuum(2, 5).unwrap();
        let d = gaussian_gate_matrix(CvGateKind::Displacement, &[0.4, 0.3], 5).unwrap();
        let s = apply_gate(&s, &d, &[1]).unwrap();
        let id = identity_gate(CvGateKind::Beamsplitter, 5);
        assert_eq!(apply_gate(&s, &id, &[0, 1]).unwrap(), s);
        let id1 = identity_gate(CvGateKind::Rotation, 5);
        assert_eq!(apply_gate(&s, &id1, &[0]).unwrap(), s);
    }

    #[test]
    fn coherent_state_amplitudes_and_quadrature() {
        let s = FockState::vacuum(1, 12).unwrap();
        let d = gaussian_gate_matrix(CvGateKind::Displacement, &[0.5], 12).unwrap();
        let s = apply_gate(&s, &d, &[0]).unwrap();
        assert!((s.amplitudes()[0].re - (-0.125f64).exp()).abs() < 1e-10);
        assert!((s.amplitudes()[0].re - 0.8825).abs() < 1e-4);
        assert!((quadrature_expectation(&s, 0).unwrap() - 1.0).abs() < 1e-6);
        let r = gaussian_gate_matrix(CvGateKind::Rotation, &[FRAC_PI_2], 12).unwrap();
        let s = apply_gate(&s, &r, &[0]).unwrap();
        assert!(quadrature_expectation(&s, 0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn vacuum_quadrature_is_zero() {
        let s = FockState::vacuum(3, 4).unwrap();
        for w in 0..3 {
            assert_eq!(quadrature_expectation(&s, w).unwrap(), 0.0);
        }
        assert!(matches!(
            quadrature_expectation(&s, 3),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn hom_on_two_single_photons() {
        let d = 4;
        let mut amps = vec![ZERO; d * d];
        amps[d + 1] = Complex64::new(1.0, 0.0);
        let s = FockState::from_amplitudes(amps, 2, d).unwrap();
        let bs = gaussian_gate_matrix(CvGateKind::Beamsplitter, &[FRAC_PI_4, 0.0], d).unwrap();
        let out = apply_gate(&s, &bs, &[0, 1]).unwrap();
        assert!(out.amplitude(&[1, 1]).unwrap().norm() < 1e-10);
        let a20 = out.amplitude(&[2, 0]).unwrap();
        let a02 = out.amplitude(&[0, 2]).unwrap();
        assert!((a20.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((a20 + a02).norm() < 1e-12);
    }

    #[test]
    fn usage_errors() {
        let s = FockState::vacuum(2, 4).unwrap();
        let bs = gaussian_gate_matrix(CvGateKind::Beamsplitter, &[0.1, 0.0], 4).unwrap();
        assert!(matches!(apply_gate(&s, &bs, &[0]), Err(Error::Usage(_))));
        assert!(matches!(apply_gate(&s, &bs, &[0, 0]), Err(Error::Usage(_))));
        assert!(matches!(apply_gate(&s, &bs, &[0, 2]), Err(Error::Usage(_))));
        let r = gaussian_gate_matrix(CvGateKind::Rotation, &[0.1], 5).unwrap();
        assert!(matches!(apply_gate(&s, &r, &[0]), Err(Error::Usage(_))));
    }

    #[test]
    fn strong_displacement_reports_truncation() {
        let s = FockState::vacuum(1, 4).unwrap();
        let d = gaussian_gate_matrix(CvGateKind::Displacement, &[1.5], 4).unwrap();
        let out = apply_gate(&s, &d, &[0]).unwrap();
        let w = out.truncation_warning().expect("norm loss expected");
        assert!(w.drift > TRUNCATION_WARN_DRIFT);
    }
}
