//! Closed-form references that never touch the simulator's code paths.

use num_complex::Complex64;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Generalised Laguerre polynomial L_n^{(k)}(x) by its explicit sum.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    (0..=n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n + k, n - j) * x.powi(j as i32) / factorial(j)
        })
        .sum()
}

/// <m| exp(alpha a^dag - conj(alpha) a) |n>.
pub fn displacement_element(m: usize, n: usize, alpha: Complex64) -> Complex64 {
    let x = alpha.norm_sqr();
    let envelope = (-x / 2.0).exp();
    if m >= n {
        let pre = (factorial(n) / factorial(m)).sqrt();
        alpha.powu((m - n) as u32) * (pre * envelope * laguerre(n, m - n, x))
    } else {
        let pre = (factorial(m) / factorial(n)).sqrt();
        (-alpha.conj()).powu((n - m) as u32) * (pre * envelope * laguerre(m, n - m, x))
    }
}

/// <m| exp((r/2)(a^2 - a^dag^2)) |n> for real r, from the normal-ordered
/// factorisation exp(-t/2 a^dag^2) (cosh r)^{-(n + 1/2)} exp(t/2 a^2), t = tanh r.
pub fn squeeze_element(m: usize, n: usize, r: f64) -> Complex64 {
    if (m + n) % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let t = r.tanh();
    let c = r.cosh();
    let up = -t / 2.0;
    let down = t / 2.0;
    let mut acc = 0.0;
    for k in 0..=m.min(n) {
        if (m - k) % 2 == 1 || (n - k) % 2 == 1 {
            continue;
        }
        let i = (m - k) / 2;
        let j = (n - k) / 2;
        let left = up.powi(i as i32) / factorial(i) * (factorial(m) / factorial(k)).sqrt();
        let right = down.powi(j as i32) / factorial(j) * (factorial(n) / factorial(k)).sqrt();
        acc += left * c.powf(-(k as f64 + 0.5)) * right;
    }
    Complex64::new(acc, 0.0)
}

/// Coherent-state quadrature under hbar = 2.
pub fn coherent_x(alpha: Complex64) -> f64 {
    2.0 * alpha.re
}

/// Reference trained parameter sets, in slot order of the CV1/CV2/CV3 builders.
pub const REFERENCE_CV1: [f64; 8] = [
    0.56999711,
    0.11908,
    0.31154198,
    0.70493579,
    0.58592745,
    -0.30231739,
    0.29977448,
    -0.03426343,
];
pub const REFERENCE_CV2: [f64; 6] = [
    -0.15734424,
    0.10423003,
    0.51234233,
    0.18854571,
    0.20172705,
    -0.07449027,
];
pub const REFERENCE_CV3: [f64; 4] = [0.38387328, -0.25113897, -0.07175718, 0.4849161];

/// <x> of a displaced-squeezed-rotated coherent input with real amplitude x:
/// S(r) scales the x mean by e^{-r}, R(theta) rotates the mean, D(b) adds 2b.
pub fn gaussian_chain_x(x: f64, r: f64, theta: f64, b: f64) -> f64 {
    2.0 * x * (-r).exp() * theta.cos() + 2.0 * b
}
