//! Hybrid correlation matrices and CHSH maximization.
//!
//! For a fixed pseudospin shift `q` the Bell operator is bilinear in the two
//! measurement directions, `E(a, b) = aᵀ T b` with `T_kl = ⟨S_k^q ⊗ σ_l⟩`, and
//! the maximum over all four directions is `2√(Λ₁+Λ₂)` where `Λ₁ ≥ Λ₂` are
//! the top eigenvalues of `TᵀT`.
//!
//! Directions use the Bloch parameterization `n(θ, φ) = (sinθ cosφ,
//! sinθ sinφ, cosθ)`, i.e. `n·σ = cosθ σ_z + sinθ(e^{−iφ}σ_+ + e^{iφ}σ_−)`.
//! Party `a` is the field (pseudospin) side, party `b` the qubit.

use core::f64::consts::{FRAC_PI_2, PI};
use core::ops::RangeInclusive;

use crate::fockspace::{make_pseudospin, pauli, FockVector, HybridMixedState, HybridState, PseudospinTriple};
use crate::jcdynamics::Evolved;
use crate::math::{acos, atan2, cos, fabs, sin, sqrt};
use crate::{Error, Result, C64};

pub const DEFAULT_Q_RANGE: RangeInclusive<usize> = 0..=5;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// `T_kl = ⟨S_k^q ⊗ σ_l⟩`, rows `(S_x, S_y, S_z)`, columns `(σ_x, σ_y, σ_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix {
    pub t: Mat3,
    pub q: usize,
    /// Largest discarded imaginary part among the nine entries.
    pub imag_residue: f64,
}

impl CorrelationMatrix {
    pub fn new(t: Mat3, q: usize) -> Self {
        Self {
            t,
            q,
            imag_residue: 0.0,
        }
    }

    /// `aᵀ T b`.
    pub fn correlator(&self, a: Vec3, b: Vec3) -> f64 {
        dot(a, mat_vec(&self.t, b))
    }

    /// `TᵀT`.
    pub fn gram(&self) -> Mat3 {
        let t = &self.t;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| t[k][i] * t[k][j]).sum();
            }
        }
        m
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.t.iter().flatten().map(|x| x * x).sum()
    }

    /// `Λ₁ + Λ₂ = ‖T‖²_F − Λ₃`.
    pub fn top_two_sum(&self) -> f64 {
        let ev = symmetric_eigenvalues3(&self.gram());
        (self.frobenius_sqr() - ev[2]).max(0.0)
    }
}

/// The nine CHSH parameters; angle order `(a, a′, b, b′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSettings {
    pub theta: [f64; 4],
    pub phi: [f64; 4],
    pub q: usize,
}

impl MeasurementSettings {
    pub fn from_directions(dirs: [Vec3; 4], q: usize) -> Self {
        let mut theta = [0.0; 4];
        let mut phi = [0.0; 4];
        for (i, d) in dirs.iter().enumerate() {
            (theta[i], phi[i]) = direction_angles(*d);
        }
        Self { theta, phi, q }
    }

    pub fn directions(&self) -> [Vec3; 4] {
        core::array::from_fn(|i| bloch(self.theta[i], self.phi[i]))
    }

    /// Maps negative polar angles to `θ → −θ`, `φ → φ+π` and folds `φ`
    /// into `[0, 2π)`; the directions are unchanged.
    pub fn canonical(&self) -> Self {
        let dirs = self.directions();
        let mut out = Self::from_directions(dirs, self.q);
        // Keep the azimuth of polar directions, which carries no information
        // but is what a caller passed in.
        for i in 0..4 {
            let th = self.theta[i];
            if fabs(sin(th)) < 1e-15 {
                out.phi[i] = wrap_angle(self.phi[i]);
            }
        }
        out
    }

    /// Bell value from a correlation matrix at the settings' `q`.
    pub fn value_from_matrix(&self, t: &CorrelationMatrix) -> f64 {
        let [a, a2, b, b2] = self.directions();
        fabs(t.correlator(a, b) + t.correlator(a2, b) + t.correlator(a, b2) - t.correlator(a2, b2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellResult {
    pub value: f64,
    pub settings: MeasurementSettings,
    /// `(Λ₁, Λ₂)` of `TᵀT`.
    pub eigen: [f64; 2],
    pub lambda3: f64,
    pub q: usize,
    pub q_scanned: (usize, usize),
    /// `Λ₂ ≈ Λ₃` within `1e-10`; the recovered settings are then one choice
    /// out of a continuum.
    pub degenerate: bool,
    /// The optimum sits at the upper end of the scanned `q` range.
    pub boundary_hit: bool,
}

/// States whose hybrid correlators can be evaluated.
pub trait BellState {
    fn cutoff(&self) -> usize;
    fn correlation_matrix(&self, q: usize) -> Result<CorrelationMatrix>;
    /// `⟨(a·S^q) ⊗ (b·σ)⟩` evaluated through the operators themselves.
    fn correlator(&self, q: usize, a: Vec3, b: Vec3) -> Result<f64>;
}

impl BellState for HybridState {
    fn cutoff(&self) -> usize {
        HybridState::cutoff(self)
    }

    fn correlation_matrix(&self, q: usize) -> Result<CorrelationMatrix> {
        let spin = make_pseudospin(q, self.cutoff())?;
        Ok(pure_correlation(self, &spin))
    }

    fn correlator(&self, q: usize, a: Vec3, b: Vec3) -> Result<f64> {
        let spin = make_pseudospin(q, self.cutoff())?;
        Ok(crate::fockspace::expectation(self, &spin.along(a), &pauli::along(b))?.re)
    }
}

impl BellState for HybridMixedState {
    fn cutoff(&self) -> usize {
        self.components()[0].1.cutoff()
    }

    fn correlation_matrix(&self, q: usize) -> Result<CorrelationMatrix> {
        let spin = make_pseudospin(q, self.cutoff())?;
        let mut out = CorrelationMatrix::new([[0.0; 3]; 3], q);
        for (p, s) in self.components() {
            let c = pure_correlation(s, &spin);
            for k in 0..3 {
                for l in 0..3 {
                    out.t[k][l] += p * c.t[k][l];
                }
            }
            out.imag_residue = out.imag_residue.max(c.imag_residue);
        }
        Ok(out)
    }

    fn correlator(&self, q: usize, a: Vec3, b: Vec3) -> Result<f64> {
        let mut acc = 0.0;
        for (p, s) in self.components() {
            acc += p * s.correlator(q, a, b)?;
        }
        Ok(acc)
    }
}

impl BellState for Evolved {
    fn cutoff(&self) -> usize {
        match self {
            Evolved::Pure(s) => BellState::cutoff(s),
            Evolved::Mixed(m) => m.cutoff(),
        }
    }

    fn correlation_matrix(&self, q: usize) -> Result<CorrelationMatrix> {
        match self {
            Evolved::Pure(s) => s.correlation_matrix(q),
            Evolved::Mixed(m) => m.correlation_matrix(q),
        }
    }

    fn correlator(&self, q: usize, a: Vec3, b: Vec3) -> Result<f64> {
        match self {
            Evolved::Pure(s) => s.correlator(q, a, b),
            Evolved::Mixed(m) => m.correlator(q, a, b),
        }
    }
}

/// `(⟨bra|S_z|ket⟩, ⟨bra|S_+|ket⟩, ⟨bra|S_−|ket⟩)`.
#[inline]
fn ladder_sums(spin: &PseudospinTriple, bra: &FockVector, ket: &FockVector) -> [C64; 3] {
    let (b, k) = (bra.coeffs(), ket.coeffs());
    let n = spin.cutoff();
    let mut diag = C64::new(0.0, 0.0);
    let mut up = diag;
    let mut down = diag;
    let mut l = spin.q();
    while l < n {
        let lo = b[l].conj() * k[l];
        if l + 1 < n {
            diag += b[l + 1].conj() * k[l + 1] - lo;
            up += b[l + 1].conj() * k[l];
            down += b[l].conj() * k[l + 1];
        } else {
            diag -= lo;
        }
        l += 2;
    }
    [diag, up, down]
}

fn pure_correlation(state: &HybridState, spin: &PseudospinTriple) -> CorrelationMatrix {
    let (g, e) = (state.psi_g(), state.psi_e());
    let i = C64::new(0.0, 1.0);
    // Rows of S_k between qubit blocks: (gg, ge, eg, ee).
    let blocks = [
        ladder_sums(spin, g, g),
        ladder_sums(spin, g, e),
        ladder_sums(spin, e, g),
        ladder_sums(spin, e, e),
    ];
    let op = |k: usize, s: &[C64; 3]| match k {
        0 => s[1] + s[2],
        1 => -i * s[1] + i * s[2],
        _ => s[0],
    };
    let mut t = [[0.0; 3]; 3];
    let mut imag: f64 = 0.0;
    for (k, row) in t.iter_mut().enumerate() {
        let [gg, ge, eg, ee] = blocks.each_ref().map(|s| op(k, s));
        // σ_x: ge + eg, σ_y: i·ge − i·eg, σ_z: ee − gg.
        let vals = [ge + eg, i * ge - i * eg, ee - gg];
        for (l, v) in vals.iter().enumerate() {
            row[l] = v.re;
            imag = imag.max(fabs(v.im));
        }
    }
    CorrelationMatrix {
        t,
        q: spin.q(),
        imag_residue: imag,
    }
}

/// Correlation matrix of a pure or mixed state at shift `q`.
pub fn correlation_matrix<S: BellState + ?Sized>(state: &S, q: usize) -> Result<CorrelationMatrix> {
    state.correlation_matrix(q)
}

/// Eigenvalues of a symmetric 3×3 matrix, descending.
///
/// Closed-form trigonometric solution of the characteristic cubic; when the
/// cubic is close to a double root the roots are ill-conditioned there, so
/// cyclic Jacobi takes over.
pub fn symmetric_eigenvalues3(m: &Mat3) -> [f64; 3] {
    match trig_eigenvalues(m) {
        Some(ev) => ev,
        None => jacobi3(m).0,
    }
}

/// Normalized discriminant threshold below which Jacobi is used.
const NEAR_DOUBLE_ROOT: f64 = 1e-8;

fn trig_eigenvalues(m: &Mat3) -> Option<[f64; 3]> {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let d = [m[0][0] - q, m[1][1] - q, m[2][2] - q];
    let p2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * p1;
    let p = sqrt(p2 / 6.0);
    if p == 0.0 {
        return None;
    }
    let b = |i: usize, j: usize| if i == j { d[i] / p } else { m[i][j] / p };
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det / 2.0).clamp(-1.0, 1.0);
    if 1.0 - r * r < NEAR_DOUBLE_ROOT {
        return None;
    }
    let phi = acos(r) / 3.0;
    let e1 = q + 2.0 * p * cos(phi);
    let e3 = q + 2.0 * p * cos(phi + 2.0 * PI / 3.0);
    let e2 = 3.0 * q - e1 - e3;
    Some([e1, e2, e3])
}

/// Cyclic Jacobi; returns descending eigenvalues and matching unit
/// eigenvectors.
fn jacobi3(m: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let mut a = *m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let scale: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-34 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (fabs(theta) + sqrt(theta * theta + 1.0));
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / sqrt(t * t + 1.0);
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = idx.map(|i| a[i][i]);
    let vecs = idx.map(|i| canonical_sign([v[0][i], v[1][i], v[2][i]]));
    (vals, vecs)
}

/// Eigen-decomposition of a symmetric 3×3 matrix: descending eigenvalues and
/// unit eigenvectors whose first non-negligible component is positive.
pub fn symmetric_eigen3(m: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let Some(ev) = trig_eigenvalues(m) else {
        return jacobi3(m);
    };
    let v1 = null_vector(m, ev[0]);
    let mut v2 = null_vector(m, ev[1]);
    // Re-orthogonalize against v1 and complete the frame.
    let d = dot(v1, v2);
    v2 = normalize([v2[0] - d * v1[0], v2[1] - d * v1[1], v2[2] - d * v1[2]]);
    let v3 = cross(v1, v2);
    (ev, [canonical_sign(v1), canonical_sign(v2), canonical_sign(v3)])
}

fn null_vector(m: &Mat3, lambda: f64) -> Vec3 {
    let r = |i: usize| -> Vec3 { core::array::from_fn(|j| if i == j { m[i][j] - lambda } else { m[i][j] }) };
    let (r0, r1, r2) = (r(0), r(1), r(2));
    let cands = [cross(r0, r1), cross(r0, r2), cross(r1, r2)];
    let best = cands
        .iter()
        .copied()
        .max_by(|a, b| dot(*a, *a).total_cmp(&dot(*b, *b)))
        .unwrap_or([1.0, 0.0, 0.0]);
    if dot(best, best) == 0.0 {
        return [1.0, 0.0, 0.0];
    }
    normalize(best)
}

fn canonical_sign(v: Vec3) -> Vec3 {
    match v.iter().find(|x| fabs(**x) > 1e-12) {
        Some(&x) if x < 0.0 => [-v[0], -v[1], -v[2]],
        _ => v,
    }
}

/// Value `2√(Λ₁+Λ₂)` and optimal settings for a single correlation matrix.
pub fn horodecki_value(t: &CorrelationMatrix) -> BellResult {
    let (ev, vecs) = symmetric_eigen3(&t.gram());
    let l1 = ev[0].max(0.0);
    let l2 = ev[1].max(0.0);
    let sum = (t.frobenius_sqr() - ev[2]).max(0.0);
    BellResult {
        value: 2.0 * sqrt(sum),
        settings: recover_settings(t, [l1, l2], [vecs[0], vecs[1]]),
        eigen: [l1, l2],
        lambda3: ev[2],
        q: t.q,
        q_scanned: (t.q, t.q),
        degenerate: fabs(ev[1] - ev[2]) <= 1e-10,
        boundary_hit: false,
    }
}

/// Horodecki construction: `b, b′ = cosϑ c₁ ± sinϑ c₂` with
/// `tanϑ = √(Λ₂/Λ₁)`, `a ∝ T c₁`, `a′ ∝ T c₂`.
pub fn recover_settings(t: &CorrelationMatrix, eigen: [f64; 2], vecs: [Vec3; 2]) -> MeasurementSettings {
    let [c1, c2] = vecs;
    let vartheta = atan2(sqrt(eigen[1].max(0.0)), sqrt(eigen[0].max(0.0)));
    let (s, c) = (sin(vartheta), cos(vartheta));
    let b = core::array::from_fn(|i| c * c1[i] + s * c2[i]);
    let b2 = core::array::from_fn(|i| c * c1[i] - s * c2[i]);
    let tc1 = mat_vec(&t.t, c1);
    let tc2 = mat_vec(&t.t, c2);
    let a = unit_or(tc1, [0.0, 0.0, 1.0]);
    let fallback = orthogonal_to(a);
    let a2 = unit_or(tc2, fallback);
    MeasurementSettings::from_directions([a, a2, b, b2], t.q)
}

/// Scan `q` and return the best Horodecki value with recovered settings.
/// Shifts that do not fit under the cutoff are skipped.
pub fn maximize_bell<S: BellState + ?Sized>(state: &S, q_range: RangeInclusive<usize>) -> Result<BellResult> {
    let (lo, hi) = (*q_range.start(), *q_range.end());
    let mut best: Option<BellResult> = None;
    for q in q_range.clone() {
        if q + 1 >= state.cutoff() {
            break;
        }
        let r = horodecki_value(&state.correlation_matrix(q)?);
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut best = best.ok_or(Error::CutoffTooSmall {
        cutoff: state.cutoff(),
        required: lo + 2,
        tail_mass: f64::NAN,
    })?;
    best.q_scanned = (lo, hi);
    best.boundary_hit = hi > lo && best.q == hi;
    Ok(best)
}

/// `max_q 2√(Λ₁+Λ₂)` without eigenvectors or settings.
pub fn max_bell_value<S: BellState + ?Sized>(state: &S, q_range: RangeInclusive<usize>) -> Result<f64> {
    let mut best: Option<f64> = None;
    for q in q_range.clone() {
        if q + 1 >= state.cutoff() {
            break;
        }
        let v = 2.0 * sqrt(state.correlation_matrix(q)?.top_two_sum());
        best = Some(best.map_or(v, |b| b.max(v)));
    }
    best.ok_or(Error::CutoffTooSmall {
        cutoff: state.cutoff(),
        required: q_range.start() + 2,
        tail_mass: f64::NAN,
    })
}

/// `|E(a,b) + E(a′,b) + E(a,b′) − E(a′,b′)|` with every correlator taken as
/// an operator expectation value.
pub fn bell_value_at<S: BellState + ?Sized>(state: &S, settings: &MeasurementSettings) -> Result<f64> {
    let [a, a2, b, b2] = settings.directions();
    let q = settings.q;
    let e = |x: Vec3, y: Vec3| state.correlator(q, x, y);
    Ok(fabs(e(a, b)? + e(a2, b)? + e(a, b2)? - e(a2, b2)?))
}

/// Closed-form optimum for SMSV-evolved states from the `q = 0` matrix
/// `(0 ε 0; −ε 0 0; 0 0 −1)` and the `q = 1` matrix
/// `(κ₁ κ₂ 0; κ₂ −κ₁ 0; 0 0 κ₃)`.
pub fn smsv_closed_form<S: BellState + ?Sized>(state: &S) -> Result<BellResult> {
    const TOL: f64 = 1e-8;
    let t0 = state.correlation_matrix(0)?;
    let m = &t0.t;
    let dev0 = [m[0][0], m[1][1], m[0][1] + m[1][0], m[0][2], m[1][2], m[2][0], m[2][1], m[2][2] + 1.0]
        .iter()
        .fold(0.0f64, |acc, x| acc.max(fabs(*x)));
    if dev0 > TOL {
        return Err(Error::MatrixStructureMismatch { q: 0, deviation: dev0 });
    }
    let eps = m[0][1];
    let v0 = 2.0 * sqrt(1.0 + eps * eps);
    let s0 = smsv_q0_settings(eps);

    let t1 = state.correlation_matrix(1)?;
    let m = &t1.t;
    let dev1 = [m[0][0] + m[1][1], m[0][1] - m[1][0], m[0][2], m[1][2], m[2][0], m[2][1]]
        .iter()
        .fold(0.0f64, |acc, x| acc.max(fabs(*x)));
    if dev1 > TOL {
        return Err(Error::MatrixStructureMismatch { q: 1, deviation: dev1 });
    }
    let (k1, k2, k3) = (m[0][0], m[0][1], m[2][2]);
    let kk = k1 * k1 + k2 * k2;
    let (v1, s1) = if k3 * k3 > kk {
        (2.0 * sqrt(k3 * k3 + kk), smsv_q1_settings_axial(k1, k2, k3))
    } else {
        (2.0 * sqrt(2.0 * kk), smsv_q1_settings_planar(k1, k2))
    };

    // TᵀT is diag(x, x, z) in both branches; sort its spectrum.
    let spectrum = |x: f64, z: f64| if z > x { ([z, x], x) } else { ([x, x], z) };
    let (value, settings, (eigen, lambda3), q) = if v1 > v0 {
        (v1, s1, spectrum(kk, k3 * k3), 1)
    } else {
        (v0, s0, spectrum(eps * eps, 1.0), 0)
    };
    Ok(BellResult {
        value,
        settings,
        eigen,
        lambda3,
        q,
        q_scanned: (0, 1),
        degenerate: fabs(eigen[1] - lambda3) <= 1e-10,
        boundary_hit: false,
    })
}

/// `θ = (π, π/2, tan⁻¹ε, −tan⁻¹ε)`, `Φ = (0, 0, π/2, π/2)`.
pub fn smsv_q0_settings(eps: f64) -> MeasurementSettings {
    let th = crate::math::atan(eps);
    MeasurementSettings {
        theta: [PI, FRAC_PI_2, th, -th],
        phi: [0.0, 0.0, FRAC_PI_2, FRAC_PI_2],
        q: 0,
    }
    .canonical()
}

fn smsv_q1_settings_axial(k1: f64, k2: f64, k3: f64) -> MeasurementSettings {
    let kk = sqrt(k1 * k1 + k2 * k2);
    // Polar half-opening atan(K/κ₃), with a/b along ±z matched to sign κ₃.
    let th = atan2(kk, fabs(k3));
    let theta_a = if k3 >= 0.0 { 0.0 } else { PI };
    MeasurementSettings {
        theta: [theta_a, FRAC_PI_2, th, -th],
        phi: [0.0, atan2(-k1, k2), FRAC_PI_2, FRAC_PI_2],
        q: 1,
    }
    .canonical()
}

fn smsv_q1_settings_planar(k1: f64, k2: f64) -> MeasurementSettings {
    MeasurementSettings {
        theta: [FRAC_PI_2; 4],
        phi: [atan2(k2, k1), atan2(-k1, k2), PI / 4.0, 7.0 * PI / 4.0],
        q: 1,
    }
    .canonical()
}

/// Unit vector `n(θ, φ)`.
pub fn bloch(theta: f64, phi: f64) -> Vec3 {
    let s = sin(theta);
    [s * cos(phi), s * sin(phi), cos(theta)]
}

fn direction_angles(d: Vec3) -> (f64, f64) {
    let theta = acos(d[2].clamp(-1.0, 1.0));
    let phi = if d[0] == 0.0 && d[1] == 0.0 { 0.0 } else { wrap_angle(atan2(d[1], d[0])) };
    (theta, phi)
}

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = x - two_pi * libm::floor(x / two_pi);
    if r >= two_pi {
        0.0
    } else {
        r
    }
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(v: Vec3) -> Vec3 {
    let n = sqrt(dot(v, v));
    [v[0] / n, v[1] / n, v[2] / n]
}

fn unit_or(v: Vec3, fallback: Vec3) -> Vec3 {
    let n = sqrt(dot(v, v));
    if n > 1e-14 {
        [v[0] / n, v[1] / n, v[2] / n]
    } else {
        fallback
    }
}

fn orthogonal_to(a: Vec3) -> Vec3 {
    let axis = if fabs(a[0]) < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    normalize(cross(a, axis))
}

fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    core::array::from_fn(|i| dot(m[i], v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{make_coherent, make_fock, make_smsv, QubitVector, DEFAULT_TAIL_TOL};
    use crate::jcdynamics::{evolve_product, JcParams, ProductInput};
    use alloc::vec::Vec;
    use core::f64::consts::SQRT_2;

    fn diag(a: f64, b: f64, c: f64) -> CorrelationMatrix {
        CorrelationMatrix::new([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]], 0)
    }

    fn fock_state(k: usize, t: f64) -> HybridState {
        let input = ProductInput::new(make_fock(k, k + 4).unwrap(), QubitVector::excited(), DEFAULT_TAIL_TOL).unwrap();
        evolve_product(&input, &JcParams::interaction(1.0), t).unwrap()
    }

    fn smsv_state(r: f64, t: f64) -> HybridState {
        let n = crate::fockspace::default_smsv_cutoff(r, DEFAULT_TAIL_TOL);
        let f = make_smsv(r, 0.0, n, DEFAULT_TAIL_TOL).unwrap().vector;
        let input = ProductInput::new(f, QubitVector::excited(), DEFAULT_TAIL_TOL).unwrap();
        evolve_product(&input, &JcParams::interaction(1.0), t).unwrap()
    }

    // Deterministic pseudo-random numbers for oracle sampling.
    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        fn sym(&mut self) -> f64 {
            2.0 * self.next() - 1.0
        }
    }

    #[test]
    fn horodecki_examples() {
        assert!((horodecki_value(&diag(1.0, -1.0, 1.0)).value - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((horodecki_value(&diag(0.0, 0.0, 1.0)).value - 2.0).abs() < 1e-12);
        let e = 0.6;
        let t = CorrelationMatrix::new([[0.0, e, 0.0], [-e, 0.0, 0.0], [0.0, 0.0, -1.0]], 0);
        assert!((horodecki_value(&t).value - 2.0 * sqrt(1.36)).abs() < 1e-12);
    }

    #[test]
    fn eigen_solver_against_jacobi_and_residuals() {
        let mut rng = Lcg(7);
        for _ in 0..500 {
            let a: Mat3 = core::array::from_fn(|_| core::array::from_fn(|_| rng.sym()));
            let t = CorrelationMatrix::new(a, 0);
            let m = t.gram();
            let (ev, vecs) = symmetric_eigen3(&m);
            let (jv, _) = jacobi3(&m);
            for i in 0..3 {
                assert!((ev[i] - jv[i]).abs() < 1e-12, "{ev:?} vs {jv:?}");
                let mv = mat_vec(&m, vecs[i]);
                for k in 0..3 {
                    assert!((mv[k] - ev[i] * vecs[i][k]).abs() < 1e-10);
                }
            }
            assert!((dot(vecs[0], vecs[1])).abs() < 1e-10);
        }
        // Exactly degenerate input goes through Jacobi.
        let (ev, vecs) = symmetric_eigen3(&[[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(ev, [1.0, 0.5, 0.5]);
        assert_eq!(vecs[0], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn ground_vacuum_correlations() {
        let s = HybridState::product(&make_fock(0, 4).unwrap(), QubitVector::ground());
        let t = correlation_matrix(&s, 0).unwrap();
        assert_eq!(t.t, [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn structured_matches_operator_expectations() {
        let mut rng = Lcg(11);
        for _ in 0..20 {
            let n = 7;
            let mut g: Vec<C64> = (0..n).map(|_| C64::new(rng.sym(), rng.sym())).collect();
            let mut e: Vec<C64> = (0..n).map(|_| C64::new(rng.sym(), rng.sym())).collect();
            let norm = sqrt(g.iter().chain(&e).map(|z| z.norm_sqr()).sum::<f64>());
            g.iter_mut().chain(e.iter_mut()).for_each(|z| *z /= norm);
            let s = HybridState::new(FockVector::new(g).unwrap(), FockVector::new(e).unwrap()).unwrap();
            for q in 0..=4 {
                let t = correlation_matrix(&s, q).unwrap();
                let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                for k in 0..3 {
                    for l in 0..3 {
                        let direct = s.correlator(q, axes[k], axes[l]).unwrap();
                        assert!((t.t[k][l] - direct).abs() < 1e-13);
                    }
                }
                assert!(t.imag_residue < 1e-12);
            }
        }
    }

    #[test]
    fn fock_family_closed_form() {
        for k in [0usize, 4, 8] {
            for i in 0..40 {
                let t = 0.13 * i as f64;
                let r = maximize_bell(&fock_state(k, t), DEFAULT_Q_RANGE).unwrap();
                let s = sin(2.0 * t * sqrt((k + 1) as f64));
                assert!((r.value - 2.0 * sqrt(1.0 + s * s)).abs() < 1e-12, "k={k} t={t}");
            }
        }
        let r = maximize_bell(&fock_state(0, PI / 4.0), DEFAULT_Q_RANGE).unwrap();
        assert!((r.value - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn recovered_settings_reproduce_value() {
        let mut rng = Lcg(3);
        for _ in 0..100 {
            let a: Mat3 = core::array::from_fn(|_| core::array::from_fn(|_| rng.sym()));
            let t = CorrelationMatrix::new(a, 0);
            let r = horodecki_value(&t);
            assert!((r.settings.value_from_matrix(&t) - r.value).abs() < 1e-9);
        }
        let t = diag(1.0, -1.0, 1.0);
        let r = horodecki_value(&t);
        assert!((r.settings.value_from_matrix(&t) - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(r.degenerate);
    }

    #[test]
    fn rank_one_matrix_settings() {
        let t = diag(0.0, 0.0, 0.7);
        let r = horodecki_value(&t);
        assert!((r.value - 1.4).abs() < 1e-15);
        assert!((r.settings.value_from_matrix(&t) - 1.4).abs() < 1e-12);
        let z = CorrelationMatrix::new([[0.0; 3]; 3], 0);
        assert_eq!(horodecki_value(&z).value, 0.0);
    }

    #[test]
    fn operator_settings_agree_with_matrix_settings() {
        for &t in &[0.4, 1.1, 2.9] {
            let s = smsv_state(0.5, t);
            let r = maximize_bell(&s, DEFAULT_Q_RANGE).unwrap();
            let direct = bell_value_at(&s, &r.settings).unwrap();
            assert!((direct - r.value).abs() < 1e-9);
            // A small perturbation cannot do better.
            let mut p = r.settings;
            p.theta[0] += 0.01;
            p.phi[2] -= 0.01;
            assert!(bell_value_at(&s, &p).unwrap() <= r.value + 1e-12);
        }
    }

    #[test]
    fn all_polar_zero_settings() {
        let s = smsv_state(0.3, 0.8);
        let set = MeasurementSettings {
            theta: [0.0; 4],
            phi: [0.0; 4],
            q: 0,
        };
        let tzz = correlation_matrix(&s, 0).unwrap().t[2][2];
        assert!((bell_value_at(&s, &set).unwrap() - 2.0 * tzz.abs()).abs() < 1e-12);
    }

    #[test]
    fn smsv_closed_form_agrees_with_scan() {
        for &r in &[0.0, 0.2, 0.6, 1.0] {
            for i in 0..15 {
                let t = 0.7 * i as f64;
                let s = smsv_state(r, t);
                let c = smsv_closed_form(&s).unwrap();
                let g = maximize_bell(&s, DEFAULT_Q_RANGE).unwrap();
                assert!((c.value - g.value).abs() < 1e-9, "r={r} t={t}: {} vs {}", c.value, g.value);
                assert!((bell_value_at(&s, &c.settings).unwrap() - c.value).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn smsv_q0_structure() {
        let s = smsv_state(0.8, 1.3);
        let t = correlation_matrix(&s, 0).unwrap();
        let e = t.t[0][1];
        assert!((t.t[1][0] + e).abs() < 1e-14 && (t.t[2][2] + 1.0).abs() < 1e-9);
        let v = horodecki_value(&t).value;
        assert!((v - 2.0 * sqrt(t.t[2][2] * t.t[2][2] + e * e)).abs() < 1e-12);
        assert!((v - 2.0 * sqrt(1.0 + e * e)).abs() < 1e-9);
        assert!((smsv_q0_settings(e).value_from_matrix(&t) - v).abs() < 1e-9);
    }

    #[test]
    fn closed_form_rejects_other_families() {
        let f = make_coherent(C64::new(0.7, 0.0), 20, DEFAULT_TAIL_TOL).unwrap().vector;
        let input = ProductInput::new(f, QubitVector::excited(), DEFAULT_TAIL_TOL).unwrap();
        let s = evolve_product(&input, &JcParams::interaction(1.0), 1.0).unwrap();
        assert!(matches!(smsv_closed_form(&s), Err(Error::MatrixStructureMismatch { .. })));
    }

    #[test]
    fn kappa_branch_formula() {
        let (k1, k2, k3) = (0.3, 0.4, 0.9);
        let t = CorrelationMatrix::new([[k1, k2, 0.0], [k2, -k1, 0.0], [0.0, 0.0, k3]], 1);
        let v = horodecki_value(&t).value;
        assert!((v - 2.0 * sqrt(0.81 + 0.25)).abs() < 1e-12);
        assert!((smsv_q1_settings_axial(k1, k2, k3).value_from_matrix(&t) - v).abs() < 1e-12);
        let t = CorrelationMatrix::new([[0.6, -0.5, 0.0], [-0.5, -0.6, 0.0], [0.0, 0.0, 0.2]], 1);
        let v = horodecki_value(&t).value;
        assert!((v - 2.0 * SQRT_2 * sqrt(0.61)).abs() < 1e-12);
        assert!((smsv_q1_settings_planar(0.6, -0.5).value_from_matrix(&t) - v).abs() < 1e-12);
    }

    #[test]
    fn product_states_do_not_violate() {
        for k in 0..5 {
            let s = HybridState::product(&make_fock(k, 10).unwrap(), QubitVector::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)));
            let r = maximize_bell(&s, DEFAULT_Q_RANGE).unwrap();
            assert!((r.value - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_range_monotone_and_boundary_flag() {
        let s = fock_state(3, 0.9);
        let narrow = maximize_bell(&s, 0..=1).unwrap();
        let wide = maximize_bell(&s, 0..=5).unwrap();
        assert!(wide.value >= narrow.value);
        assert_eq!(wide.q_scanned, (0, 5));
        let tiny = HybridState::product(&make_fock(0, 2).unwrap(), QubitVector::excited());
        assert!(maximize_bell(&tiny, 0..=5).is_ok());
        assert!(maximize_bell(&tiny, 1..=5).is_err());
    }

    #[test]
    fn value_only_path_matches() {
        for &t in &[0.0, 0.5, 2.0, 7.0] {
            let s = smsv_state(0.7, t);
            let a = maximize_bell(&s, DEFAULT_Q_RANGE).unwrap().value;
            let b = max_bell_value(&s, DEFAULT_Q_RANGE).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn settings_canonicalization() {
        let s = MeasurementSettings {
            theta: [-0.3, 0.0, 1.0, 2.0],
            phi: [0.2, 5.0, -1.0, 7.0],
            q: 0,
        }
        .canonical();
        assert!((s.theta[0] - 0.3).abs() < 1e-15);
        assert!((s.phi[0] - (0.2 + PI)).abs() < 1e-14);
        assert_eq!(s.phi[1], 5.0);
        assert!((s.phi[2] - (2.0 * PI - 1.0)).abs() < 1e-14);
        assert!((s.phi[3] - (7.0 - 2.0 * PI)).abs() < 1e-14);
    }
}
