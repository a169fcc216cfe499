//! Truncated Fock space, generalized pseudospin operators and qubit algebra.
//!
//! Hybrid states are stored as two field vectors, one attached to each qubit
//! level: `|ψ⟩ = |ψ_g⟩|g⟩ + |ψ_e⟩|e⟩`. Qubit operators are 2×2 arrays indexed
//! `[row][col]` with level 0 = `|g⟩` and level 1 = `|e⟩`, so that
//! `σ_z = |e⟩⟨e| − |g⟩⟨g|` and `σ_+ = |e⟩⟨g|`.

use alloc::vec::Vec;

use crate::math::{log2, sqrt};
use crate::{Error, Result, C64};

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Field amplitudes `C_n`, `n < cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<C64>,
}

impl FockVector {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("cutoff must be at least 1"));
        }
        let v = Self { coeffs };
        if v.norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter("Fock vector norm exceeds 1"));
        }
        Ok(v)
    }

    pub(crate) fn from_vec(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self {
            coeffs: alloc::vec![ZERO; cutoff],
        }
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Amplitude at level `n`; zero above the cutoff.
    #[inline]
    pub fn get(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn renormalize(&mut self) {
        let n = sqrt(self.norm_sqr());
        if n > 0.0 {
            for c in &mut self.coeffs {
                *c /= n;
            }
        }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Copy padded with zeros or truncated to `cutoff` levels.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(cutoff, ZERO);
        Self { coeffs }
    }
}

/// A field vector together with the probability discarded by the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated {
    pub vector: FockVector,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitVector {
    pub g: C64,
    pub e: C64,
}

impl QubitVector {
    pub fn new(g: C64, e: C64) -> Self {
        Self { g, e }
    }

    pub fn ground() -> Self {
        Self { g: ONE, e: ZERO }
    }

    pub fn excited() -> Self {
        Self { g: ZERO, e: ONE }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.g.norm_sqr() + self.e.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-10
    }
}

/// 2×2 operator on the qubit, `[row][col]` in the `(g, e)` basis.
pub type QubitOperator = [[C64; 2]; 2];

pub mod pauli {
    use super::{QubitOperator, I, ONE, ZERO};

    pub fn identity() -> QubitOperator {
        [[ONE, ZERO], [ZERO, ONE]]
    }

    pub fn sigma_x() -> QubitOperator {
        [[ZERO, ONE], [ONE, ZERO]]
    }

    /// `σ_y = −i(σ_+ − σ_−)`.
    pub fn sigma_y() -> QubitOperator {
        [[ZERO, I], [-I, ZERO]]
    }

    pub fn sigma_z() -> QubitOperator {
        [[-ONE, ZERO], [ZERO, ONE]]
    }

    /// `σ_+ = |e⟩⟨g|`.
    pub fn sigma_plus() -> QubitOperator {
        [[ZERO, ZERO], [ONE, ZERO]]
    }

    pub fn sigma_minus() -> QubitOperator {
        [[ZERO, ONE], [ZERO, ZERO]]
    }

    /// `n·σ` for a real 3-vector `(x, y, z)`.
    pub fn along(n: [f64; 3]) -> QubitOperator {
        let [x, y, z] = n;
        [
            [ONE * -z, super::C64::new(x, y)],
            [super::C64::new(x, -y), ONE * z],
        ]
    }
}

/// Pure state on the truncated field ⊗ qubit space.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    g: FockVector,
    e: FockVector,
}

impl HybridState {
    /// Checked constructor: shared cutoff and unit norm within `1e-10`.
    pub fn new(psi_g: FockVector, psi_e: FockVector) -> Result<Self> {
        if psi_g.cutoff() != psi_e.cutoff() {
            return Err(Error::ShapeError {
                expected: psi_g.cutoff(),
                found: psi_e.cutoff(),
            });
        }
        let s = Self { g: psi_g, e: psi_e };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter("hybrid state is not normalized"));
        }
        Ok(s)
    }

    /// Constructor for evolution outputs whose norm is only preserved up to
    /// the truncation tail.
    pub(crate) fn from_parts(psi_g: FockVector, psi_e: FockVector) -> Self {
        debug_assert_eq!(psi_g.cutoff(), psi_e.cutoff());
        Self { g: psi_g, e: psi_e }
    }

    /// Mutable coefficient buffers `(ψ_g, ψ_e)` for in-place evolution.
    pub(crate) fn buffers_mut(&mut self) -> (&mut Vec<C64>, &mut Vec<C64>) {
        (&mut self.g.coeffs, &mut self.e.coeffs)
    }

    /// `field ⊗ atom`.
    pub fn product(field: &FockVector, atom: QubitVector) -> Self {
        Self {
            g: field.scaled(atom.g),
            e: field.scaled(atom.e),
        }
    }

    pub fn psi_g(&self) -> &FockVector {
        &self.g
    }

    pub fn psi_e(&self) -> &FockVector {
        &self.e
    }

    /// Field component attached to qubit level `0 = g` or `1 = e`.
    pub fn component(&self, level: usize) -> &FockVector {
        if level == 0 {
            &self.g
        } else {
            &self.e
        }
    }

    pub fn cutoff(&self) -> usize {
        self.g.cutoff()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.g.norm_sqr() + self.e.norm_sqr()
    }

    pub fn renormalize(&mut self) {
        let n = sqrt(self.norm_sqr());
        if n > 0.0 {
            let inv = C64::new(1.0 / n, 0.0);
            self.g = self.g.scaled(inv);
            self.e = self.e.scaled(inv);
        }
    }

    /// Flat amplitudes in block order: `(ψ_g[0..N], ψ_e[0..N])`.
    pub fn to_flat(&self) -> Vec<C64> {
        let mut v = self.g.coeffs.clone();
        v.extend_from_slice(&self.e.coeffs);
        v
    }

    /// Inverse of [`HybridState::to_flat`]; the length must be even.
    pub fn from_flat(flat: &[C64]) -> Result<Self> {
        if flat.len() % 2 != 0 || flat.is_empty() {
            return Err(Error::ShapeError {
                expected: flat.len() + flat.len() % 2,
                found: flat.len(),
            });
        }
        let n = flat.len() / 2;
        Ok(Self {
            g: FockVector::from_vec(flat[..n].to_vec()),
            e: FockVector::from_vec(flat[n..].to_vec()),
        })
    }

    /// `(I ⊗ u)|ψ⟩`.
    pub fn apply_qubit(&self, u: &QubitOperator) -> Self {
        let n = self.cutoff();
        let mut g = Vec::with_capacity(n);
        let mut e = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (self.g.coeffs[k], self.e.coeffs[k]);
            g.push(u[0][0] * a + u[0][1] * b);
            e.push(u[1][0] * a + u[1][1] * b);
        }
        Self {
            g: FockVector::from_vec(g),
            e: FockVector::from_vec(e),
        }
    }

    /// `(u ⊗ I)|ψ⟩` for a dense field operator.
    pub fn apply_field(&self, u: &CMatrix) -> Result<Self> {
        Ok(Self {
            g: u.apply(&self.g)?,
            e: u.apply(&self.e)?,
        })
    }
}

/// Convex mixture `Σ p_i |ψ_i⟩⟨ψ_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridMixedState {
    components: Vec<(f64, HybridState)>,
}

impl HybridMixedState {
    pub fn new(components: Vec<(f64, HybridState)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture has no components"));
        }
        if components.iter().any(|(p, _)| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("mixture weights must be non-negative"));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter("mixture weights must sum to 1"));
        }
        let cutoff = components[0].1.cutoff();
        if let Some((_, s)) = components.iter().find(|(_, s)| s.cutoff() != cutoff) {
            return Err(Error::ShapeError {
                expected: cutoff,
                found: s.cutoff(),
            });
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, HybridState)] {
        &self.components
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: alloc::vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.cutoff() != self.dim {
            return Err(Error::ShapeError {
                expected: self.dim,
                found: v.cutoff(),
            });
        }
        let out = (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v.coeffs[c]).sum())
            .collect();
        Ok(FockVector::from_vec(out))
    }
}

/// A field operator that can be sandwiched between two Fock vectors.
pub trait CvOperator {
    fn dim(&self) -> usize;

    /// `⟨bra|O|ket⟩`; both vectors have length [`CvOperator::dim`].
    fn sandwich(&self, bra: &FockVector, ket: &FockVector) -> C64;
}

impl CvOperator for CMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sandwich(&self, bra: &FockVector, ket: &FockVector) -> C64 {
        let mut acc = ZERO;
        for r in 0..self.dim {
            let b = bra.coeffs[r].conj();
            if b == ZERO {
                continue;
            }
            let mut row = ZERO;
            for c in 0..self.dim {
                row += self.get(r, c) * ket.coeffs[c];
            }
            acc += b * row;
        }
        acc
    }
}

/// Generalized pseudospin operators with shift `q`, truncated to `cutoff`.
///
/// Levels pair as `(2n+q, 2n+q+1)` with `S_z = −1` on the lower and `+1` on
/// the upper member. A pair cut by the cutoff keeps its lower `S_z` entry and
/// loses its ladder coupling. Levels below `q` carry `S_z = 0` and no
/// coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseudospinTriple {
    q: usize,
    cutoff: usize,
}

/// Build the pseudospin operators; requires `cutoff > q + 1`.
pub fn make_pseudospin(q: usize, cutoff: usize) -> Result<PseudospinTriple> {
    if cutoff <= q + 1 {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: q + 2,
            tail_mass: f64::NAN,
        });
    }
    Ok(PseudospinTriple { q, cutoff })
}

impl PseudospinTriple {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Diagonal entry of `S_z` at level `n`.
    #[inline]
    pub fn sz_entry(&self, n: usize) -> f64 {
        if n < self.q || n >= self.cutoff {
            0.0
        } else if (n - self.q) % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Lower members `l` of the pairs whose coupling `|l⟩⟨l+1|` survives.
    pub fn coupled_pairs(&self) -> impl Iterator<Item = usize> + '_ {
        (self.q..self.cutoff.saturating_sub(1)).step_by(2)
    }

    /// `n·S` for a real direction `n = (x, y, z)`.
    pub fn along(&self, n: [f64; 3]) -> PseudospinOp {
        let [x, y, z] = n;
        PseudospinOp {
            spin: *self,
            z: C64::new(z, 0.0),
            plus: C64::new(x, -y),
            minus: C64::new(x, y),
        }
    }

    pub fn sx(&self) -> PseudospinOp {
        self.along([1.0, 0.0, 0.0])
    }

    pub fn sy(&self) -> PseudospinOp {
        self.along([0.0, 1.0, 0.0])
    }

    pub fn sz(&self) -> PseudospinOp {
        self.along([0.0, 0.0, 1.0])
    }

    /// `S_−` as a structured operator.
    pub fn lowering(&self) -> PseudospinOp {
        PseudospinOp {
            spin: *self,
            z: ZERO,
            plus: ZERO,
            minus: ONE,
        }
    }

    pub fn raising(&self) -> PseudospinOp {
        PseudospinOp {
            spin: *self,
            z: ZERO,
            plus: ONE,
            minus: ZERO,
        }
    }
}

/// `z·S_z + plus·S_+ + minus·S_−` for one pseudospin family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudospinOp {
    spin: PseudospinTriple,
    z: C64,
    plus: C64,
    minus: C64,
}

impl PseudospinOp {
    pub fn to_dense(&self) -> CMatrix {
        let n = self.spin.cutoff;
        let mut m = CMatrix::zeros(n);
        for k in 0..n {
            m.set(k, k, self.z * self.spin.sz_entry(k));
        }
        for l in self.spin.coupled_pairs() {
            m.set(l + 1, l, self.plus);
            m.set(l, l + 1, self.minus);
        }
        m
    }
}

impl CvOperator for PseudospinOp {
    fn dim(&self) -> usize {
        self.spin.cutoff
    }

    #[inline]
    fn sandwich(&self, bra: &FockVector, ket: &FockVector) -> C64 {
        let (b, k) = (&bra.coeffs, &ket.coeffs);
        let q = self.spin.q;
        let n = self.spin.cutoff.min(b.len()).min(k.len());
        let mut diag = ZERO;
        let mut up = ZERO;
        let mut down = ZERO;
        let mut l = q;
        while l < n {
            let lo = b[l].conj() * k[l];
            if l + 1 < n {
                let hi = b[l + 1].conj() * k[l + 1];
                diag += hi - lo;
                up += b[l + 1].conj() * k[l];
                down += b[l].conj() * k[l + 1];
            } else {
                diag -= lo;
            }
            l += 2;
        }
        self.z * diag + self.plus * up + self.minus * down
    }
}

/// `⟨ψ| cvop ⊗ qop |ψ⟩` through the four-block expansion over qubit levels.
///
/// The imaginary part is returned as computed; for Hermitian inputs it is a
/// round-off residue.
pub fn expectation<O: CvOperator + ?Sized>(
    state: &HybridState,
    cvop: &O,
    qop: &QubitOperator,
) -> Result<C64> {
    if cvop.dim() != state.cutoff() {
        return Err(Error::ShapeError {
            expected: cvop.dim(),
            found: state.cutoff(),
        });
    }
    Ok(sandwich_blocks(state, cvop, qop))
}

#[inline]
pub(crate) fn sandwich_blocks<O: CvOperator + ?Sized>(
    state: &HybridState,
    cvop: &O,
    qop: &QubitOperator,
) -> C64 {
    let mut acc = ZERO;
    for a in 0..2 {
        for b in 0..2 {
            if qop[a][b] == ZERO {
                continue;
            }
            acc += cvop.sandwich(state.component(a), state.component(b)) * qop[a][b];
        }
    }
    acc
}

/// Reduced qubit density matrix, `ρ[a][b] = ⟨ψ_b|ψ_a⟩`.
pub fn reduced_qubit_density(state: &HybridState) -> QubitOperator {
    let gg = state.g.norm_sqr();
    let ee = state.e.norm_sqr();
    let eg = state.g.inner(&state.e); // ⟨ψ_g|ψ_e⟩ = ρ[e][g]
    [[C64::new(gg, 0.0), eg.conj()], [eg, C64::new(ee, 0.0)]]
}

/// Eigenvalues of a 2×2 Hermitian matrix, descending.
pub fn hermitian2_eigenvalues(m: &QubitOperator) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let half_tr = 0.5 * (a + d);
    let disc = sqrt(0.25 * (a - d) * (a - d) + m[0][1].norm_sqr());
    [half_tr + disc, half_tr - disc]
}

/// Von Neumann entropy (bits) of the reduced qubit state.
pub fn entanglement_entropy(state: &HybridState) -> f64 {
    let rho = reduced_qubit_density(state);
    let norm = rho[0][0].re + rho[1][1].re;
    hermitian2_eigenvalues(&rho)
        .iter()
        .map(|&mu| {
            let mu = (mu / norm).clamp(0.0, 1.0);
            if mu <= 0.0 {
                0.0
            } else {
                -mu * log2(mu)
            }
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `|k⟩` under cutoff `N`.
pub fn make_fock(k: usize, cutoff: usize) -> Result<FockVector> {
    if k >= cutoff {
        return Err(Error::CutoffExceeded { level: k, cutoff });
    }
    let mut v = FockVector::zeros(cutoff);
    v.coeffs[k] = ONE;
    Ok(v)
}

/// Glauber coherent state `e^{−|α|²/2} Σ αⁿ/√(n!) |n⟩`.
///
/// Coefficients are exact (not renormalized); the probability above the
/// cutoff is reported and must stay below `tail_tol`.
pub fn make_coherent(alpha: C64, cutoff: usize, tail_tol: f64) -> Result<Truncated> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be at least 1"));
    }
    let mut c = C64::new(crate::math::exp(-0.5 * alpha.norm_sqr()), 0.0);
    let mut coeffs = Vec::with_capacity(cutoff);
    let mut probs = Vec::new();
    let mean = alpha.norm_sqr();
    let mut n = 0usize;
    loop {
        let p = c.norm_sqr();
        if n < cutoff {
            coeffs.push(c);
        }
        probs.push(p);
        n += 1;
        if n >= cutoff && (n as f64) > mean && p < 1e-40 {
            break;
        }
        c = c * alpha / sqrt(n as f64);
    }
    finish_truncation(coeffs, &probs, cutoff, tail_tol)
}

/// Single-mode squeezed vacuum `S(ξ)|0⟩`, `ξ = r e^{iθ}`: only even levels,
/// `C_{2m} = (−1)^m √((2m)!)/(2^m m!) (e^{iθ} tanh r)^m / √(cosh r)`.
pub fn make_smsv(r: f64, theta: f64, cutoff: usize, tail_tol: f64) -> Result<Truncated> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter("squeezing magnitude must be non-negative"));
    }
    if cutoff < 2 {
        return Err(Error::InvalidParameter("SMSV needs a cutoff of at least 2"));
    }
    let t = libm::tanh(r);
    let step = -C64::from_polar(t, theta);
    let mut c = C64::new(1.0 / sqrt(libm::cosh(r)), 0.0);
    let mut coeffs = Vec::with_capacity(cutoff);
    let mut probs = Vec::new();
    let mut n = 0usize;
    loop {
        let p = c.norm_sqr();
        for (level, amp, prob) in [(n, c, p), (n + 1, ZERO, 0.0)] {
            if level < cutoff {
                coeffs.push(amp);
            }
            probs.push(prob);
        }
        n += 2;
        if n >= cutoff && (p < 1e-40 || t == 0.0) {
            break;
        }
        let m = (n / 2) as f64;
        // C_{2m}/C_{2m-2} = −e^{iθ} tanh r √((2m−1)/(2m))
        c = c * step * sqrt((2.0 * m - 1.0) / (2.0 * m));
    }
    coeffs.truncate(cutoff);
    finish_truncation(coeffs, &probs, cutoff, tail_tol)
}

fn finish_truncation(coeffs: Vec<C64>, probs: &[f64], cutoff: usize, tail_tol: f64) -> Result<Truncated> {
    // Suffix sums from the far end keep the tail accurate below 1e-16.
    let mut suffix = alloc::vec![0.0; probs.len() + 1];
    for k in (0..probs.len()).rev() {
        suffix[k] = suffix[k + 1] + probs[k];
    }
    let tail_mass = suffix[cutoff.min(probs.len())];
    if tail_mass >= tail_tol {
        let required = (0..=probs.len())
            .find(|&k| suffix[k] < tail_tol)
            .unwrap_or(probs.len());
        return Err(Error::CutoffTooSmall {
            cutoff,
            required,
            tail_mass,
        });
    }
    Ok(Truncated {
        vector: FockVector::from_vec(coeffs),
        tail_mass,
    })
}

/// Default cutoff for coherent and cat inputs: `max(16, ⌈|α|² + 6|α| + 10⌉)`.
pub fn default_coherent_cutoff(alpha_abs: f64) -> usize {
    let n = libm::ceil(alpha_abs * alpha_abs + 6.0 * alpha_abs + 10.0) as usize;
    n.max(16)
}

/// Smallest even cutoff (at least 32) that keeps the SMSV tail below
/// `tail_tol`. Even `N` leaves the top level empty, so nothing leaks through
/// the cutoff when the atom starts excited.
pub fn default_smsv_cutoff(r: f64, tail_tol: f64) -> usize {
    match make_smsv(r, 0.0, 32, tail_tol) {
        Err(Error::CutoffTooSmall { required, .. }) => (required + required % 2).max(32),
        _ => 32,
    }
}
