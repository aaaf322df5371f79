use std::f64::consts::{FRAC_PI_2, PI};

use super::{CircuitSpec, Encoding, GateDescriptor, GateKind, ModelKind, ParamBinding};
use crate::error::{Error, Result};
use crate::fock::CvGateKind;
use crate::qubit::QubitGateKind;

pub const DEFAULT_CUTOFF: usize = 12;

/// What the second wire of a single-feature CV2 receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ancilla {
    #[default]
    Duplicate,
    Vacuum,
}

/// Nonlinear gate closing the wire-0 tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    #[default]
    CubicPhase,
    Kerr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub cutoff: usize,
    pub ancilla: Ancilla,
    pub nonlinearity: Nonlinearity,
    /// Extended CV2: every beamsplitter gets its own slots instead of sharing.
    pub per_splitter: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            cutoff: DEFAULT_CUTOFF,
            ancilla: Ancilla::default(),
            nonlinearity: Nonlinearity::default(),
            per_splitter: false,
        }
    }
}

fn cv(kind: CvGateKind, wires: &[usize], params: Vec<ParamBinding>) -> GateDescriptor {
    GateDescriptor {
        kind: GateKind::Cv(kind),
        wires: wires.to_vec(),
        params,
    }
}

fn qb(kind: QubitGateKind, wires: &[usize], params: Vec<ParamBinding>) -> GateDescriptor {
    GateDescriptor {
        kind: GateKind::Qubit(kind),
        wires: wires.to_vec(),
        params,
    }
}

fn t(name: &str) -> ParamBinding {
    ParamBinding::trainable(name)
}

fn encode(wire: usize, feature: usize) -> GateDescriptor {
    cv(
        CvGateKind::Displacement,
        &[wire],
        vec![ParamBinding::input(feature)],
    )
}

fn tail(gates: &mut Vec<GateDescriptor>, slots: &mut Vec<String>, nonlinearity: Nonlinearity) {
    gates.push(cv(CvGateKind::Displacement, &[0], vec![t("disp_b")]));
    slots.push("disp_b".into());
    match nonlinearity {
        Nonlinearity::CubicPhase => {
            gates.push(cv(CvGateKind::CubicPhase, &[0], vec![t("cubic_gamma")]));
            slots.push("cubic_gamma".into());
        }
        Nonlinearity::Kerr => {
            gates.push(cv(CvGateKind::Kerr, &[0], vec![t("final_kappa")]));
            slots.push("final_kappa".into());
        }
    }
}

fn strs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn build_cv_model(kind: ModelKind, n_features: usize) -> Result<CircuitSpec> {
    build_cv_model_with(kind, n_features, CvOptions::default())
}

pub fn build_cv_model_with(
    kind: ModelKind,
    n_features: usize,
    options: CvOptions,
) -> Result<CircuitSpec> {
    let bad = || Error::config(format!("{kind} does not take {n_features} feature(s)"));
    let mut gates = Vec::new();
    let mut slots;
    let wires;
    match kind {
        ModelKind::Cv2 => {
            if !(1..=2).contains(&n_features) {
                return Err(if n_features > 2 {
                    Error::config(format!(
                        "{kind} with {n_features} features needs extend_cv_model"
                    ))
                } else {
                    bad()
                });
            }
            wires = 2;
            gates.push(encode(0, 0));
            match (n_features, options.ancilla) {
                (2, _) => gates.push(encode(1, 1)),
                (_, Ancilla::Duplicate) => gates.push(encode(1, 0)),
                (_, Ancilla::Vacuum) => {}
            }
            gates.push(cv(
                CvGateKind::Beamsplitter,
                &[0, 1],
                vec![t("bs_theta"), t("bs_phi")],
            ));
            gates.push(cv(
                CvGateKind::Rotation,
                &[0],
                vec![ParamBinding::Fixed(FRAC_PI_2)],
            ));
            gates.push(cv(CvGateKind::Squeezing, &[0], vec![t("squeeze_r")]));
            gates.push(cv(CvGateKind::Rotation, &[0], vec![t("rot_theta")]));
            slots = strs(&["bs_theta", "bs_phi", "squeeze_r", "rot_theta"]);
        }
        ModelKind::Cv1 => {
            if !(1..=2).contains(&n_features) {
                return Err(bad());
            }
            wires = 2;
            gates.push(encode(0, 0));
            if n_features == 2 {
                gates.push(encode(1, 1));
            }
            gates.push(cv(
                CvGateKind::Displacement,
                &[1],
                vec![ParamBinding::Fixed(1.0), ParamBinding::Fixed(FRAC_PI_2)],
            ));
            gates.push(cv(
                CvGateKind::Beamsplitter,
                &[0, 1],
                vec![t("bs_theta"), t("bs_phi")],
            ));
            gates.push(cv(
                CvGateKind::Rotation,
                &[0],
                vec![ParamBinding::Fixed(FRAC_PI_2)],
            ));
            gates.push(cv(CvGateKind::Squeezing, &[0], vec![t("squeeze_r1")]));
            gates.push(cv(CvGateKind::Rotation, &[0], vec![t("rot_theta")]));
            gates.push(cv(
                CvGateKind::Squeezing,
                &[0],
                vec![ParamBinding::Negated("squeeze_r2".into())],
            ));
            gates.push(cv(CvGateKind::CrossKerr, &[0, 1], vec![t("kerr_kappa")]));
            slots = strs(&[
                "bs_theta",
                "bs_phi",
                "squeeze_r1",
                "rot_theta",
                "squeeze_r2",
                "kerr_kappa",
            ]);
        }
        ModelKind::Cv3 => {
            if n_features != 1 {
                return Err(bad());
            }
            wires = 1;
            gates.push(encode(0, 0));
            gates.push(cv(CvGateKind::Squeezing, &[0], vec![t("squeeze_r")]));
            gates.push(cv(CvGateKind::Rotation, &[0], vec![t("rot_theta")]));
            slots = strs(&["squeeze_r", "rot_theta"]);
        }
        other => {
            return Err(Error::config(format!(
                "build_cv_model takes cv1, cv2 or cv3, not {other}"
            )))
        }
    }
    tail(&mut gates, &mut slots, options.nonlinearity);
    CircuitSpec::new(kind, wires, Some(options.cutoff), n_features, gates, slots)
}

pub fn extend_cv_model(n_features: usize) -> Result<CircuitSpec> {
    extend_cv_model_with(n_features, CvOptions::default())
}

/// CV2 over `n_features` wires: feature k on wire k, one beamsplitter from wire
/// 0 to every other wire, then the usual wire-0 tail.
pub fn extend_cv_model_with(n_features: usize, options: CvOptions) -> Result<CircuitSpec> {
    if n_features < 3 {
        return Err(Error::config(format!(
            "extend_cv_model needs >= 3 features, got {n_features}; use build_cv_model"
        )));
    }
    let mut gates: Vec<GateDescriptor> = (0..n_features).map(|k| encode(k, k)).collect();
    let mut slots = Vec::new();
    for k in 1..n_features {
        let (theta, phi) = if options.per_splitter {
            (format!("bs_theta_{k}"), format!("bs_phi_{k}"))
        } else {
            ("bs_theta".to_string(), "bs_phi".to_string())
        };
        if !slots.contains(&theta) {
            slots.push(theta.clone());
            slots.push(phi.clone());
        }
        gates.push(cv(
            CvGateKind::Beamsplitter,
            &[0, k],
            vec![t(&theta), t(&phi)],
        ));
    }
    gates.push(cv(
        CvGateKind::Rotation,
        &[0],
        vec![ParamBinding::Fixed(FRAC_PI_2)],
    ));
    gates.push(cv(CvGateKind::Squeezing, &[0], vec![t("squeeze_r")]));
    gates.push(cv(CvGateKind::Rotation, &[0], vec![t("rot_theta")]));
    slots.extend(strs(&["squeeze_r", "rot_theta"]));
    tail(&mut gates, &mut slots, options.nonlinearity);
    CircuitSpec::new(
        ModelKind::Cv2,
        n_features,
        Some(options.cutoff),
        n_features,
        gates,
        slots,
    )
}

/// Nearest-neighbour beamsplitter chain followed by a rotation on wire 0.
fn interferometer(tag: &str, m: usize, gates: &mut Vec<GateDescriptor>, slots: &mut Vec<String>) {
    for i in 0..m.saturating_sub(1) {
        let theta = format!("{tag}_bs{i}_theta");
        let phi = format!("{tag}_bs{i}_phi");
        gates.push(cv(
            CvGateKind::Beamsplitter,
            &[i, i + 1],
            vec![t(&theta), t(&phi)],
        ));
        slots.push(theta);
        slots.push(phi);
    }
    let rot = format!("{tag}_rot");
    gates.push(cv(CvGateKind::Rotation, &[0], vec![t(&rot)]));
    slots.push(rot);
}

/// One full CV layer on `m` modes, with feature i displaced onto wire i.
pub fn build_generic_cv_layer(m: usize, cutoff: usize) -> Result<CircuitSpec> {
    if m < 1 {
        return Err(Error::config("a CV layer needs at least one mode"));
    }
    let mut gates: Vec<GateDescriptor> = (0..m).map(|i| encode(i, i)).collect();
    let mut slots = Vec::new();
    interferometer("u1", m, &mut gates, &mut slots);
    for i in 0..m {
        let r = format!("squeeze_r{i}");
        gates.push(cv(CvGateKind::Squeezing, &[i], vec![t(&r)]));
        slots.push(r);
    }
    interferometer("u2", m, &mut gates, &mut slots);
    for i in 0..m {
        let (a, p) = (format!("disp_r{i}"), format!("disp_phi{i}"));
        gates.push(cv(CvGateKind::Displacement, &[i], vec![t(&a), t(&p)]));
        slots.push(a);
        slots.push(p);
    }
    for i in 0..m {
        let k = format!("kerr_kappa{i}");
        gates.push(cv(CvGateKind::Kerr, &[i], vec![t(&k)]));
        slots.push(k);
    }
    CircuitSpec::new(ModelKind::CvGeneric(m), m, Some(cutoff), m, gates, slots)
}

/// Trainable rotations of one two-wire block on wires (w, w + 1).
fn dv_rotations(w: usize, gates: &mut Vec<GateDescriptor>, slots: &mut Vec<String>) {
    let names = [
        format!("rz{w}"),
        format!("ry{w}"),
        format!("rx{}", w + 1),
        format!("rz{}", w + 1),
    ];
    gates.push(qb(
        QubitGateKind::RY,
        &[w],
        vec![ParamBinding::Fixed(FRAC_PI_2)],
    ));
    gates.push(qb(QubitGateKind::RZ, &[w], vec![t(&names[0])]));
    gates.push(qb(QubitGateKind::RY, &[w], vec![t(&names[1])]));
    gates.push(qb(QubitGateKind::RX, &[w + 1], vec![t(&names[2])]));
    gates.push(qb(QubitGateKind::RZ, &[w + 1], vec![t(&names[3])]));
    slots.extend(names);
}

/// Single-feature DV circuits. Angle encoding loads RY(pi x) on wire 0 (and on
/// wire 2 for DV4 so each block sees the input); amplitude encoding prepares
/// the initial state instead and adds no gates.
pub fn build_dv_model(kind: ModelKind, n_features: usize) -> Result<CircuitSpec> {
    let (wires, encoding) = match kind {
        ModelKind::Dv2(e) => (2, e),
        ModelKind::Dv4(e) => (4, e),
        other => return Err(Error::config(format!("{other} is not a DV model"))),
    };
    let max_features = match encoding {
        Encoding::Angle => wires,
        Encoding::Amplitude => 1 << wires,
    };
    if n_features < 1 || n_features > max_features {
        return Err(Error::config(format!(
            "{kind} takes 1..={max_features} features, got {n_features}"
        )));
    }
    let mut gates = Vec::new();
    if encoding == Encoding::Angle {
        for i in 0..n_features {
            gates.push(qb(
                QubitGateKind::RY,
                &[i],
                vec![ParamBinding::Input {
                    index: i,
                    scale: PI,
                }],
            ));
        }
        if wires == 4 && n_features == 1 {
            gates.push(qb(
                QubitGateKind::RY,
                &[2],
                vec![ParamBinding::Input {
                    index: 0,
                    scale: PI,
                }],
            ));
        }
    }
    for w in 0..wires {
        gates.push(qb(QubitGateKind::H, &[w], vec![]));
    }
    let blocks: Vec<usize> = (0..wires).step_by(2).collect();
    for &w in &blocks {
        gates.push(qb(QubitGateKind::CNOT, &[w, w + 1], vec![]));
    }
    if wires == 4 {
        gates.push(qb(QubitGateKind::CNOT, &[1, 2], vec![]));
        gates.push(qb(QubitGateKind::CNOT, &[3, 0], vec![]));
    }
    let mut slots = Vec::new();
    for &w in &blocks {
        dv_rotations(w, &mut gates, &mut slots);
    }
    for &w in &blocks {
        gates.push(qb(QubitGateKind::CNOT, &[w, w + 1], vec![]));
    }
    CircuitSpec::new(kind, wires, None, n_features, gates, slots)
}
