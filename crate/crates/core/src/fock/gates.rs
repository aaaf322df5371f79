use std::fmt;
use std::sync::{Arc, LazyLock};

use dashmap::DashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extra Fock levels used when exponentiating non-diagonal generators.
pub const DEFAULT_PADDING: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvGateKind {
    Displacement,
    Rotation,
    Squeezing,
    Beamsplitter,
    Kerr,
    CrossKerr,
    CubicPhase,
}

impl CvGateKind {
    pub fn arity(self) -> usize {
        match self {
            CvGateKind::Beamsplitter | CvGateKind::CrossKerr => 2,
            _ => 1,
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            CvGateKind::Rotation | CvGateKind::Kerr | CvGateKind::CrossKerr
        )
    }

    pub fn is_gaussian(self) -> bool {
        matches!(
            self,
            CvGateKind::Displacement
                | CvGateKind::Rotation
                | CvGateKind::Squeezing
                | CvGateKind::Beamsplitter
        )
    }

    /// Accepted real parameter counts.
    fn param_counts(self) -> &'static [usize] {
        match self {
            // magnitude, optional phase
            CvGateKind::Displacement => &[1, 2],
            CvGateKind::Beamsplitter => &[2],
            _ => &[1],
        }
    }

    /// Short label used in circuit diagrams.
    pub fn label(self) -> &'static str {
        match self {
            CvGateKind::Displacement => "D",
            CvGateKind::Rotation => "R",
            CvGateKind::Squeezing => "S",
            CvGateKind::Beamsplitter => "BS",
            CvGateKind::Kerr => "K",
            CvGateKind::CrossKerr => "CK",
            CvGateKind::CubicPhase => "V",
        }
    }
}

impl fmt::Display for CvGateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Truncated matrix of a CV gate: `cutoff x cutoff` for one-mode gates,
/// `cutoff^2 x cutoff^2` for two-mode gates with row index `n1 * cutoff + n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvGateMatrix {
    kind: CvGateKind,
    cutoff: usize,
    entries: DMatrix<Complex64>,
}

impl CvGateMatrix {
    pub fn kind(&self) -> CvGateKind {
        self.kind
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Gate for an arbitrary kind, validating the parameter list.
    pub fn build(kind: CvGateKind, params: &[f64], cutoff: usize) -> Result<Self> {
        Self::build_with_padding(kind, params, cutoff, DEFAULT_PADDING)
    }

    /// As [`CvGateMatrix::build`], exponentiating non-diagonal generators at
    /// `cutoff + padding` levels (scaled by [`SQUEEZE_PAD_FACTOR`] and
    /// [`CUBIC_PAD_FACTOR`] for those two gates).
    pub fn build_with_padding(
        kind: CvGateKind,
        params: &[f64],
        cutoff: usize,
        padding: usize,
    ) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_params(kind, params)?;
        let p = params[0];
        let entries = match kind {
            CvGateKind::Displacement => {
                let phase = params.get(1).copied().unwrap_or(0.0);
                displacement(Complex64::from_polar(p, phase), cutoff, padding)
            }
            CvGateKind::Rotation => rotation(p, cutoff),
            CvGateKind::Squeezing => squeezing(p, cutoff, padding),
            CvGateKind::Beamsplitter => beamsplitter(p, params[1], cutoff),
            CvGateKind::Kerr => kerr(p, cutoff),
            CvGateKind::CrossKerr => cross_kerr(p, cutoff),
            CvGateKind::CubicPhase => cubic_phase(p, cutoff, padding),
        };
        Ok(CvGateMatrix {
            kind,
            cutoff,
            entries,
        })
    }
}

/// Annihilation and creation operators truncated at `dim` levels.
#[derive(Debug, Clone)]
pub struct LadderPair {
    pub annihilation: DMatrix<Complex64>,
    pub creation: DMatrix<Complex64>,
}

impl LadderPair {
    pub fn new(dim: usize) -> Self {
        let mut a = DMatrix::from_element(dim, dim, ZERO);
        for n in 1..dim {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        let creation = a.adjoint();
        LadderPair {
            annihilation: a,
            creation,
        }
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::config(format!("cutoff must be >= 2, got {cutoff}")));
    }
    Ok(())
}

fn check_params(kind: CvGateKind, params: &[f64]) -> Result<()> {
    if !kind.param_counts().contains(&params.len()) {
        return Err(Error::config(format!(
            "{kind} expects {:?} parameters, got {}",
            kind.param_counts(),
            params.len()
        )));
    }
    if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::config(format!(
            "{kind} parameter {bad} is not finite"
        )));
    }
    Ok(())
}

/// Gaussian gate in the truncated Fock basis.
///
/// Parameters: displacement `[r]` or `[r, phi]` with `alpha = r e^{i phi}`;
/// rotation `[phi]`; squeezing `[r]`; beamsplitter `[theta, phi]`.
pub fn gaussian_gate_matrix(
    kind: CvGateKind,
    params: &[f64],
    cutoff: usize,
) -> Result<CvGateMatrix> {
    if !kind.is_gaussian() {
        return Err(Error::config(format!("{kind} is not a Gaussian gate")));
    }
    CvGateMatrix::build(kind, params, cutoff)
}

/// Kerr, cross-Kerr or cubic-phase gate in the truncated Fock basis.
pub fn nongaussian_gate_matrix(
    kind: CvGateKind,
    param: f64,
    cutoff: usize,
) -> Result<CvGateMatrix> {
    if kind.is_gaussian() {
        return Err(Error::config(format!("{kind} is not a non-Gaussian gate")));
    }
    CvGateMatrix::build(kind, &[param], cutoff)
}

/// exp(alpha a^dag - conj(alpha) a) = R(arg alpha) exp(|alpha| (a^dag - a)) R(-arg alpha).
fn displacement(alpha: Complex64, cutoff: usize, padding: usize) -> DMatrix<Complex64> {
    if alpha == ZERO {
        return DMatrix::identity(cutoff, cutoff);
    }
    let dim = cutoff + padding;
    let spectrum = spectrum(Ladder::Displacement, dim, || {
        (1..dim).map(|n| -(n as f64).sqrt()).collect()
    });
    let (r, phi) = alpha.to_polar();
    let block = spectrum.exp_block(r, 0..cutoff);
    DMatrix::from_fn(cutoff, cutoff, |m, n| {
        block[m * cutoff + n] * Complex64::from_polar(1.0, phi * (m as f64 - n as f64))
    })
}

/// Real antisymmetric tridiagonal generator K with K[j-1][j] = c_j = -K[j][j-1].
/// Conjugating by diag(i^j) turns K into i T with T real symmetric, so
/// exp(tK)[m][n] = i^(m-n) sum_k V[m][k] V[n][k] e^{i t l_k}. The spectrum of T
/// does not depend on t and is cached.
struct TridiagonalSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl TridiagonalSpectrum {
    fn new(couplings: &[f64]) -> Self {
        let size = couplings.len() + 1;
        let mut t = DMatrix::<f64>::zeros(size, size);
        for (j, &c) in couplings.iter().enumerate() {
            t[(j, j + 1)] = c;
            t[(j + 1, j)] = c;
        }
        let eig = SymmetricEigen::new(t);
        TridiagonalSpectrum {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// exp(tK) restricted to rows and columns in `keep`, row-major.
    fn exp_block(&self, t: f64, keep: std::ops::Range<usize>) -> Vec<Complex64> {
        const I_POW: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let w = keep.len();
        let mut acc = vec![ZERO; w * w];
        let mut col = vec![0.0; w];
        for (k, &l) in self.values.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, t * l);
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.vectors[(keep.start + i, k)];
            }
            for m in 0..w {
                let s = phase * col[m];
                for n in 0..w {
                    acc[m * w + n] += s * col[n];
                }
            }
        }
        for m in 0..w {
            for n in 0..w {
                acc[m * w + n] *= I_POW[(m + 4 * w - n) % 4];
            }
        }
        acc
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Ladder {
    Displacement,
    SqueezeEven,
    SqueezeOdd,
    Beamsplitter,
}

static SPECTRA: LazyLock<DashMap<(Ladder, usize), Arc<TridiagonalSpectrum>>> =
    LazyLock::new(DashMap::new);

fn spectrum(
    ladder: Ladder,
    size: usize,
    couplings: impl FnOnce() -> Vec<f64>,
) -> Arc<TridiagonalSpectrum> {
    if let Some(hit) = SPECTRA.get(&(ladder, size)) {
        return Arc::clone(hit.value());
    }
    let built = Arc::new(TridiagonalSpectrum::new(&couplings()));
    SPECTRA.insert((ladder, size), Arc::clone(&built));
    built
}

fn rotation(phi: f64, cutoff: usize) -> DMatrix<Complex64> {
    diagonal(cutoff, |n| phi * n as f64)
}

fn kerr(kappa: f64, cutoff: usize) -> DMatrix<Complex64> {
    diagonal(cutoff, |n| {
        let n = n as f64;
        kappa * n * n
    })
}

fn cross_kerr(kappa: f64, cutoff: usize) -> DMatrix<Complex64> {
    diagonal(cutoff * cutoff, |idx| {
        let n1 = (idx / cutoff) as f64;
        let n2 = (idx % cutoff) as f64;
        kappa * n1 * n2
    })
}

fn diagonal(dim: usize, phase: impl Fn(usize) -> f64) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for i in 0..dim {
        out[(i, i)] = Complex64::from_polar(1.0, phase(i));
    }
    out
}

/// exp((r/2)(a^2 - a^dag^2)).
///
/// The generator only couples levels of equal parity, so the even and odd
/// ladders are exponentiated separately.
fn squeezing(r: f64, cutoff: usize, padding: usize) -> DMatrix<Complex64> {
    if r == 0.0 {
        return DMatrix::identity(cutoff, cutoff);
    }
    let dim = cutoff + SQUEEZE_PAD_FACTOR * padding;
    let mut out = DMatrix::from_element(cutoff, cutoff, ZERO);
    for (parity, ladder) in [(0, Ladder::SqueezeEven), (1, Ladder::SqueezeOdd)] {
        let levels: Vec<usize> = (parity..dim).step_by(2).collect();
        // <m| a^2 |m+2> = sqrt((m+1)(m+2))
        let spectrum = spectrum(ladder, dim, || {
            levels[..levels.len() - 1]
                .iter()
                .map(|&m| 0.5 * (((m + 1) * (m + 2)) as f64).sqrt())
                .collect()
        });
        let kept = levels.iter().take_while(|&&m| m < cutoff).count();
        let block = spectrum.exp_block(r, 0..kept);
        for i in 0..kept {
            for j in 0..kept {
                out[(levels[i], levels[j])] = block[i * kept + j];
            }
        }
    }
    out
}

/// Squeezing couples levels two apart with weights ~n, so its tail decays
/// slowly; it is exponentiated this many times deeper than `padding`.
pub const SQUEEZE_PAD_FACTOR: usize = 6;

/// The cubic generator couples levels three apart with weights ~n^{3/2}; its
/// low block only settles once the eigenbasis of x reaches a few hundred levels.
pub const CUBIC_PAD_FACTOR: usize = 40;

struct QuadratureBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

static QUADRATURE_BASES: LazyLock<DashMap<usize, Arc<QuadratureBasis>>> =
    LazyLock::new(DashMap::new);

/// Eigen-decomposition of x = a + a^dag truncated at `dim`; gamma-independent,
/// so it is computed once per dimension.
fn quadrature_basis(dim: usize) -> Arc<QuadratureBasis> {
    if let Some(hit) = QUADRATURE_BASES.get(&dim) {
        return Arc::clone(hit.value());
    }
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        x[(n - 1, n)] = s;
        x[(n, n - 1)] = s;
    }
    let eig = SymmetricEigen::new(x);
    let basis = Arc::new(QuadratureBasis {
        eigenvalues: eig.eigenvalues.iter().copied().collect(),
        eigenvectors: eig.eigenvectors,
    });
    QUADRATURE_BASES.insert(dim, Arc::clone(&basis));
    basis
}

/// exp(i (gamma/3) x^3) with x = a + a^dag, from the eigenbasis of the padded x.
fn cubic_phase(gamma: f64, cutoff: usize, padding: usize) -> DMatrix<Complex64> {
    if gamma == 0.0 {
        return DMatrix::identity(cutoff, cutoff);
    }
    let basis = quadrature_basis(cutoff + CUBIC_PAD_FACTOR * padding);
    let q = &basis.eigenvectors;
    let mut acc = vec![ZERO; cutoff * cutoff];
    let mut top = vec![0.0; cutoff];
    for (k, &l) in basis.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, gamma / 3.0 * l * l * l);
        for (m, t) in top.iter_mut().enumerate() {
            *t = q[(m, k)];
        }
        for m in 0..cutoff {
            let w = phase * top[m];
            for n in 0..cutoff {
                acc[m * cutoff + n] += w * top[n];
            }
        }
    }
    DMatrix::from_row_slice(cutoff, cutoff, &acc)
}

/// exp(theta (e^{i phi} a^dag b - e^{-i phi} a b^dag)).
///
/// The generator conserves total photon number, so it is exponentiated block by
/// block over each fixed-N subspace. Every block touching the truncated space
/// is complete, so the retained entries carry no truncation error.
fn beamsplitter(theta: f64, phi: f64, cutoff: usize) -> DMatrix<Complex64> {
    let dim = cutoff * cutoff;
    if theta == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for total in 0..=2 * (cutoff - 1) {
        // basis |k, total - k>; a^dag b |k-1, rest+1> = sqrt(k (rest+1)) |k, rest>
        let spectrum = spectrum(Ladder::Beamsplitter, total, || {
            (1..=total)
                .map(|k| -((k * (total - k + 1)) as f64).sqrt())
                .collect()
        });
        let lo = total.saturating_sub(cutoff - 1);
        let hi = total.min(cutoff - 1) + 1;
        let w = hi - lo;
        let block = spectrum.exp_block(theta, lo..hi);
        for i in 0..w {
            let (r1, r2) = (lo + i, total - lo - i);
            for j in 0..w {
                let (c1, c2) = (lo + j, total - lo - j);
                let phase = Complex64::from_polar(1.0, phi * (r1 as f64 - c1 as f64));
                out[(r1 * cutoff + r2, c1 * cutoff + c2)] = block[i * w + j] * phase;
            }
        }
    }
    out
}

/// Identity gate of a given kind's arity, handy for tests and placeholders.
pub fn identity_gate(kind: CvGateKind, cutoff: usize) -> CvGateMatrix {
    let dim = cutoff.pow(kind.arity() as u32);
    CvGateMatrix {
        kind,
        cutoff,
        entries: DMatrix::from_diagonal_element(dim, dim, ONE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn ladder_commutator_is_identity_below_boundary() {
        let d = 8;
        let l = LadderPair::new(d);
        let comm = &l.annihilation * &l.creation - &l.creation * &l.annihilation;
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let expect = if i == j { ONE } else { ZERO };
                assert!(close(comm[(i, j)], expect, 1e-12));
            }
        }
    }

    #[test]
    fn zero_displacement_is_identity() {
        let g = gaussian_gate_matrix(CvGateKind::Displacement, &[0.0], 4).unwrap();
        assert_eq!(g.entries(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn displacement_vacuum_overlap() {
        let g = gaussian_gate_matrix(CvGateKind::Displacement, &[0.3], 12).unwrap();
        assert!((g.entries()[(0, 0)].re - (-0.045f64).exp()).abs() < 1e-10);
        assert!((g.entries()[(0, 0)].re - 0.955997).abs() < 1e-6);
    }

    #[test]
    fn squeezing_vacuum_overlap() {
        let g = gaussian_gate_matrix(CvGateKind::Squeezing, &[0.5], 12).unwrap();
        let expect = 0.5f64.cosh().powf(-0.5);
        assert!((g.entries()[(0, 0)].re - expect).abs() < 1e-10);
        assert!((g.entries()[(0, 0)].re - 0.94171).abs() < 1e-5);
    }

    #[test]
    fn rotation_by_pi_alternates_sign() {
        let g = gaussian_gate_matrix(CvGateKind::Rotation, &[PI], 3).unwrap();
        let e = g.entries();
        assert!(close(e[(0, 0)], ONE, 1e-12));
        assert!(close(e[(1, 1)], -ONE, 1e-12));
        assert!(close(e[(2, 2)], ONE, 1e-12));
        assert_eq!(e[(0, 1)], ZERO);
    }

    #[test]
    fn zero_beamsplitter_is_identity() {
        let g = gaussian_gate_matrix(CvGateKind::Beamsplitter, &[0.0, 0.0], 3).unwrap();
        assert_eq!(g.entries(), &DMatrix::identity(9, 9));
    }

    #[test]
    fn balanced_beamsplitter_hom_null() {
        for d in 3..8 {
            let g = gaussian_gate_matrix(CvGateKind::Beamsplitter, &[FRAC_PI_4, 0.0], d).unwrap();
            let idx = d + 1; // |1,1>
            assert!(g.entries()[(idx, idx)].norm() < 1e-10, "cutoff {d}");
        }
    }

    #[test]
    fn kerr_family_diagonals() {
        let k = nongaussian_gate_matrix(CvGateKind::Kerr, 0.1, 5).unwrap();
        assert!(close(
            k.entries()[(3, 3)],
            Complex64::from_polar(1.0, 0.9),
            1e-12
        ));
        let ck = nongaussian_gate_matrix(CvGateKind::CrossKerr, 0.2, 3).unwrap();
        let idx = 2 * 3 + 2;
        assert!(close(
            ck.entries()[(idx, idx)],
            Complex64::from_polar(1.0, 0.8),
            1e-12
        ));
        let k0 = nongaussian_gate_matrix(CvGateKind::Kerr, 0.0, 6).unwrap();
        assert_eq!(k0.entries(), &DMatrix::identity(6, 6));
        let v0 = nongaussian_gate_matrix(CvGateKind::CubicPhase, 0.0, 6).unwrap();
        assert_eq!(v0.entries(), &DMatrix::identity(6, 6));
    }

    #[test]
    fn wrong_parameter_shapes_are_rejected() {
        assert!(matches!(
            gaussian_gate_matrix(CvGateKind::Beamsplitter, &[0.1], 4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            gaussian_gate_matrix(CvGateKind::Rotation, &[0.1, 0.2], 4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            gaussian_gate_matrix(CvGateKind::Kerr, &[0.1], 4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            nongaussian_gate_matrix(CvGateKind::Kerr, f64::NAN, 4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            gaussian_gate_matrix(CvGateKind::Squeezing, &[0.1], 1),
            Err(Error::Config(_))
        ));
    }
}
