//! Truncated Fock-basis simulation of qumodes.
//!
//! Conventions: hbar = 2, so `x = a + a^dag` and `p = -i(a - a^dag)`;
//! a coherent state |alpha> has `<x> = 2 Re alpha`. Rotation is
//! `R(phi) = exp(i phi n)`, so alpha picks up a phase `e^{i phi}`.
//! Squeezing `S(r) = exp((r/2)(a^2 - a^dag^2))` maps x to `e^{-r} x` and
//! p to `e^{r} p`.

mod cache;
mod gates;
mod state;

pub use cache::cached_gate;
pub use gates::{
    gaussian_gate_matrix, identity_gate, nongaussian_gate_matrix, CvGateKind, CvGateMatrix,
    LadderPair, CUBIC_PAD_FACTOR, DEFAULT_PADDING, SQUEEZE_PAD_FACTOR,
};
pub use state::{
    apply_gate, quadrature_expectation, quadrature_expectation_raw, FockState, TruncationWarning,
    TRUNCATION_WARN_DRIFT,
};
