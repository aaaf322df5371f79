use cvqnn::qubit::{amplitude_encode, apply_qubit_gate, z_expectation, QubitGate, QubitState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Full 2^n matrix of a gate built by Kronecker products, wire 0 leftmost.
fn full_matrix(gate: &QubitGate, n: usize) -> DMatrix<Complex64> {
    let (ch, sh) = ((gate.angle / 2.0).cos(), (gate.angle / 2.0).sin());
    let single = |u: [[Complex64; 2]; 2], wire: usize| {
        let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for w in 0..n {
            let f = if w == wire {
                DMatrix::from_row_slice(2, 2, &[u[0][0], u[0][1], u[1][0], u[1][1]])
            } else {
                DMatrix::identity(2, 2)
            };
            m = m.kronecker(&f);
        }
        m
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match gate.kind.label() {
        "H" => single(
            [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
            gate.wires[0],
        ),
        "RX" => single(
            [[c(ch, 0.0), c(0.0, -sh)], [c(0.0, -sh), c(ch, 0.0)]],
            gate.wires[0],
        ),
        "RY" => single(
            [[c(ch, 0.0), c(-sh, 0.0)], [c(sh, 0.0), c(ch, 0.0)]],
            gate.wires[0],
        ),
        "RZ" => single(
            [[c(ch, -sh), c(0.0, 0.0)], [c(0.0, 0.0), c(ch, sh)]],
            gate.wires[0],
        ),
        _ => {
            let dim = 1 << n;
            let bit = |i: usize, w: usize| (i >> (n - 1 - w)) & 1;
            DMatrix::from_fn(dim, dim, |r, col| {
                let mapped = if bit(col, gate.wires[0]) == 1 {
                    col ^ (1 << (n - 1 - gate.wires[1]))
                } else {
                    col
                };
                if r == mapped {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
        }
    }
}

fn gate_strategy(n: usize) -> impl Strategy<Value = QubitGate> {
    (0usize..5, 0..n, 1..n, -6.0f64..6.0).prop_map(move |(k, w, shift, a)| match k {
        0 => QubitGate::h(w),
        1 => QubitGate::rx(a, w),
        2 => QubitGate::ry(a, w),
        3 => QubitGate::rz(a, w),
        _ => QubitGate::cnot(w, (w + shift) % n),
    })
}

fn sequence() -> impl Strategy<Value = (usize, Vec<QubitGate>)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(gate_strategy(n), 1..100)))
}

proptest! {
    #[test]
    fn matches_kronecker_oracle((n, gates) in sequence()) {
        let mut s = QubitState::zero(n).unwrap();
        let mut v = nalgebra::DVector::from_vec(s.amplitudes().to_vec());
        for g in gates.iter().take(12) {
            s = apply_qubit_gate(&s, g).unwrap();
            v = full_matrix(g, n) * v;
        }
        for (a, b) in s.amplitudes().iter().zip(v.iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_drift_stays_tiny((n, gates) in sequence()) {
        let mut s = QubitState::zero(n).unwrap();
        for g in &gates {
            s = apply_qubit_gate(&s, g).unwrap();
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverses((n, gates) in sequence(), theta in -6.0f64..6.0, w in 0usize..2) {
        let mut s = QubitState::zero(n).unwrap();
        for g in gates.iter().take(10) {
            s = apply_qubit_gate(&s, g).unwrap();
        }
        let back = apply_qubit_gate(&apply_qubit_gate(&s, &QubitGate::ry(theta, w)).unwrap(), &QubitGate::ry(-theta, w)).unwrap();
        let twice = apply_qubit_gate(&apply_qubit_gate(&s, &QubitGate::cnot(w, 1 - w)).unwrap(), &QubitGate::cnot(w, 1 - w)).unwrap();
        for ((a, b), t) in back.amplitudes().iter().zip(s.amplitudes()).zip(twice.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
            prop_assert_eq!(t, b);
        }
    }

    #[test]
    fn z_in_range((n, gates) in sequence(), wire in 0usize..2) {
        let mut s = QubitState::zero(n).unwrap();
        for g in &gates {
            s = apply_qubit_gate(&s, g).unwrap();
        }
        let z = z_expectation(&s, wire).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
    }

    #[test]
    fn amplitude_encode_round_trip(raw in prop::collection::vec(-1.0f64..1.0, 4)) {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let unit: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let s = amplitude_encode(&unit, 2).unwrap();
        for (a, &x) in s.amplitudes().iter().zip(&unit) {
            prop_assert!((a.re - x).abs() <= 2.0 * f64::EPSILON && a.im == 0.0);
        }
    }
}

#[test]
fn basis_z_values() {
    let zero = QubitState::zero(2).unwrap();
    assert_eq!(z_expectation(&zero, 0).unwrap(), 1.0);
    let one = apply_qubit_gate(&zero, &QubitGate::ry(std::f64::consts::PI, 1)).unwrap();
    assert!((z_expectation(&one, 1).unwrap() + 1.0).abs() < 1e-15);
}
