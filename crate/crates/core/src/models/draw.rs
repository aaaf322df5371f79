use super::{CircuitSpec, GateDescriptor, GateKind, ParamBinding};
use crate::qubit::QubitGateKind;

fn binding_label(b: &ParamBinding) -> String {
    match b {
        ParamBinding::Fixed(v) => format!("{v:.3}"),
        ParamBinding::Trainable(s) => s.clone(),
        ParamBinding::Negated(s) => format!("-{s}"),
        ParamBinding::Input { index, scale } if *scale == 1.0 => format!("x{index}"),
        ParamBinding::Input { index, scale } if *scale == std::f64::consts::PI => {
            format!("pi*x{index}")
        }
        ParamBinding::Input { index, scale } => format!("{scale:.3}*x{index}"),
    }
}

fn cell(g: &GateDescriptor, wire: usize) -> String {
    if g.kind == GateKind::Qubit(QubitGateKind::CNOT) {
        return if wire == g.wires[0] {
            "CNOT.c"
        } else {
            "CNOT.t"
        }
        .to_string();
    }
    if g.params.is_empty() {
        return g.kind.label().to_string();
    }
    let args: Vec<String> = g.params.iter().map(binding_label).collect();
    format!("{}({})", g.kind.label(), args.join(","))
}

/// Fixed-width text diagram: one row per wire, one column per gate.
pub fn draw(spec: &CircuitSpec) -> String {
    let n = spec.wires();
    let label_width = format!("{}", n - 1).len();
    let mut rows: Vec<String> = (0..n).map(|w| format!("{w:>label_width$}: ")).collect();
    for g in spec.gates() {
        let lo = *g.wires.iter().min().expect("gate has wires");
        let hi = *g.wires.iter().max().expect("gate has wires");
        let cells: Vec<Option<String>> = (0..n)
            .map(|w| g.wires.contains(&w).then(|| cell(g, w)))
            .collect();
        let width = cells.iter().flatten().map(|c| c.len()).max().unwrap_or(1);
        for (w, row) in rows.iter_mut().enumerate() {
            row.push_str("--");
            match &cells[w] {
                Some(c) => row.push_str(&format!("{c:-<width$}")),
                None if w > lo && w < hi => row.push_str(&format!("{:-<width$}", "|")),
                None => row.push_str(&"-".repeat(width)),
            }
        }
    }
    let mut out = String::new();
    for row in rows {
        out.push_str(&row);
        out.push_str("--\n");
    }
    out
}
