//! Hybrid Wigner function on (qubit sphere) × (phase plane).
//!
//! `W(θ, φ, β) = Tr[ρ Δ_c(β) ⊗ Δ_d(θ, φ)]` with the displaced-parity kernel
//! `Δ_c(β) = (2/π) D(β) Π D†(β)` and the qubit kernel
//! `Δ_d = ½ U (I − √3 σ_z) U†`. The measure is
//! `dΩ = (1/π) sin2θ dθ dφ d²β` over `θ ∈ [0, π/2]`, `φ ∈ [0, 2π)`.
//!
//! Since `D(β) Π D†(β) = D(2β) Π`, the field kernel reduces to
//! `⟨n|Δ_c|m⟩ = (2/π)(−1)^m ⟨n|D(2β)|m⟩`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

use crate::fockspace::{CMatrix, HybridState, QubitOperator};
use crate::math::{cos, exp, fabs, laguerre_table, ln_factorial, log, pairwise_sum, sin, sqrt};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result, C64};

pub const DEFAULT_QUAD_TOL: f64 = 1e-6;
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `⟨k|D(γ)|l⟩` from the associated-Laguerre closed form, in the log domain.
pub fn displaced_number_element(k: usize, l: usize, gamma: C64) -> C64 {
    let (lo, d) = if k >= l { (l, k - l) } else { (k, l - k) };
    let x = gamma.norm_sqr();
    if d > 0 && x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let lag = crate::math::laguerre(lo, d as f64, x);
    scaled_element(k, l, lo, d, gamma, x, lag)
}

#[inline]
fn scaled_element(k: usize, l: usize, lo: usize, d: usize, gamma: C64, x: f64, lag: f64) -> C64 {
    if d == 0 {
        return C64::new(exp(-0.5 * x) * lag, 0.0);
    }
    let r = sqrt(x);
    let mag = exp(-0.5 * x + 0.5 * (ln_factorial(lo) - ln_factorial(lo + d)) + d as f64 * log(r));
    // γ^d for k > l, (−γ*)^d for l > k.
    let unit = if k > l { gamma / r } else { -gamma.conj() / r };
    unit.powi(d as i32) * (mag * lag)
}

/// `F(n, m, β) = (−1)^m ⟨n|D(2β)|m⟩`, so that `⟨n|Δ_c(β)|m⟩ = (2/π) F`.
pub fn parity_kernel_element(n: usize, m: usize, beta: C64) -> C64 {
    let v = displaced_number_element(n, m, beta * 2.0);
    if m % 2 == 0 {
        v
    } else {
        -v
    }
}

/// `⟨n|Δ_c(β)|m⟩`.
pub fn displaced_parity_element(n: usize, m: usize, beta: C64) -> C64 {
    parity_kernel_element(n, m, beta) * FRAC_2_PI
}

/// Dense `Δ_c(β)` on the first `cutoff` levels.
pub fn continuous_kernel(beta: C64, cutoff: usize) -> CMatrix {
    let mut m = CMatrix::zeros(cutoff);
    fill_parity_block(beta, cutoff, |r, c, v| m.set(r, c, v * FRAC_2_PI));
    m
}

/// Calls `put(n, m, F(n, m, β))` for every pair below the cutoff, one
/// Laguerre table per diagonal.
fn fill_parity_block(beta: C64, cutoff: usize, mut put: impl FnMut(usize, usize, C64)) {
    let gamma = beta * 2.0;
    let x = gamma.norm_sqr();
    for d in 0..cutoff {
        if d > 0 && x == 0.0 {
            for j in 0..cutoff - d {
                put(j + d, j, C64::new(0.0, 0.0));
                put(j, j + d, C64::new(0.0, 0.0));
            }
            continue;
        }
        let table = laguerre_table(cutoff - d, d as f64, x);
        for (j, &lag) in table.iter().enumerate() {
            let lower = scaled_element(j + d, j, j, d, gamma, x, lag);
            put(j + d, j, if j % 2 == 0 { lower } else { -lower });
            if d > 0 {
                let upper = scaled_element(j, j + d, j, d, gamma, x, lag);
                put(j, j + d, if (j + d) % 2 == 0 { upper } else { -upper });
            }
        }
    }
}

/// `Δ_d(θ, φ)` in the `(g, e)` basis:
/// `½(1 ± √3 cos2θ)` on the diagonal and `⟨e|Δ_d|g⟩ = (√3/2) sin2θ e^{2iφ}`.
pub fn qubit_kernel(theta: f64, phi: f64) -> QubitOperator {
    let c = cos(2.0 * theta);
    let off = C64::from_polar(0.5 * SQRT3 * sin(2.0 * theta), 2.0 * phi);
    [
        [C64::new(0.5 * (1.0 + SQRT3 * c), 0.0), off.conj()],
        [off, C64::new(0.5 * (1.0 - SQRT3 * c), 0.0)],
    ]
}

/// Field-kernel expectations `X_ab = ⟨ψ_a|Δ_c(β)|ψ_b⟩` for `(gg, ee, ge)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBlock {
    pub gg: f64,
    pub ee: f64,
    pub ge: C64,
}

impl FieldBlock {
    pub fn new(state: &HybridState, beta: C64) -> Self {
        let n = state.cutoff();
        let g = state.psi_g().coeffs();
        let e = state.psi_e().coeffs();
        let mut gg = C64::new(0.0, 0.0);
        let mut ee = gg;
        let mut ge = gg;
        fill_parity_block(beta, n, |r, c, f| {
            gg += g[r].conj() * f * g[c];
            ee += e[r].conj() * f * e[c];
            ge += g[r].conj() * f * e[c];
        });
        Self {
            gg: gg.re * FRAC_2_PI,
            ee: ee.re * FRAC_2_PI,
            ge: ge * FRAC_2_PI,
        }
    }

    /// `W = Σ_ab X_ab ⟨a|Δ_d|b⟩`.
    #[inline]
    pub fn contract(&self, kernel: &QubitOperator) -> f64 {
        self.gg * kernel[0][0].re + self.ee * kernel[1][1].re + 2.0 * (self.ge * kernel[0][1]).re
    }
}

/// Single-node value of the hybrid Wigner function.
pub fn hybrid_wigner(state: &HybridState, theta: f64, phi: f64, beta: C64) -> f64 {
    FieldBlock::new(state, beta).contract(&qubit_kernel(theta, phi))
}

/// Resolution of the product quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Phase-plane radius `R`.
    pub radius: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub quad_tol: f64,
}

impl GridSpec {
    /// `R = |α| + 5`, 96×96 phase-plane nodes, 32×32 qubit nodes.
    pub fn for_displacement(alpha_abs: f64) -> Self {
        Self {
            radius: alpha_abs + 5.0,
            n_radial: 96,
            n_angular: 96,
            n_theta: 32,
            n_phi: 32,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    /// Same domain, every node count doubled.
    pub fn refined(&self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_angular: 2 * self.n_angular,
            n_theta: 2 * self.n_theta,
            n_phi: 2 * self.n_phi,
            ..*self
        }
    }

    pub fn build(&self) -> Result<WignerGrid> {
        if !(self.radius > 0.0) || self.n_radial == 0 || self.n_angular == 0 || self.n_theta == 0 || self.n_phi == 0 {
            return Err(Error::InvalidParameter("Wigner grid needs positive radius and node counts"));
        }
        let radial = gauss_legendre(self.n_radial, 0.0, self.radius);
        let dphi_b = 2.0 * PI / self.n_angular as f64;
        let mut beta = Vec::with_capacity(self.n_radial * self.n_angular);
        for (r, w) in radial.nodes.iter().zip(&radial.weights) {
            for j in 0..self.n_angular {
                let ang = dphi_b * j as f64;
                beta.push((C64::from_polar(*r, ang), w * r * dphi_b));
            }
        }
        let polar = gauss_legendre(self.n_theta, 0.0, PI / 2.0);
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut qubit = Vec::with_capacity(self.n_theta * self.n_phi);
        for (th, w) in polar.nodes.iter().zip(&polar.weights) {
            for j in 0..self.n_phi {
                let ph = dphi * j as f64;
                qubit.push(QubitNode {
                    theta: *th,
                    phi: ph,
                    weight: w * sin(2.0 * th) * dphi / PI,
                    kernel: qubit_kernel(*th, ph),
                });
            }
        }
        Ok(WignerGrid {
            beta,
            qubit,
            quad_tol: self.quad_tol,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
    pub kernel: QubitOperator,
}

/// Product quadrature: phase-plane nodes with `d²β` weights and qubit nodes
/// with `(1/π) sin2θ dθ dφ` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub beta: Vec<(C64, f64)>,
    pub qubit: Vec<QubitNode>,
    pub quad_tol: f64,
}

/// One quadrature node, as handed to [`WignerGrid::for_each_sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSample {
    pub theta: f64,
    pub phi: f64,
    pub beta: C64,
    pub weight: f64,
    pub w: f64,
}

/// `∫W dΩ` and `∫|W| dΩ` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerIntegrals {
    pub integral: f64,
    pub abs_integral: f64,
}

impl WignerIntegrals {
    /// `½(∫|W| − ∫W)`; equals `½(∫|W| − 1)` on a normalized grid.
    pub fn negativity_volume(&self) -> f64 {
        0.5 * (self.abs_integral - self.integral)
    }
}

impl WignerGrid {
    pub fn len(&self) -> usize {
        self.beta.len() * self.qubit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn beta_partial(&self, state: &HybridState, idx: usize) -> (f64, f64) {
        let (beta, wb) = self.beta[idx];
        let block = FieldBlock::new(state, beta);
        let mut s = 0.0;
        let mut a = 0.0;
        for node in &self.qubit {
            let w = block.contract(&node.kernel);
            s += node.weight * w;
            a += node.weight * fabs(w);
        }
        (wb * s, wb * a)
    }

    /// Integrates `W` and `|W|`; per-β partial sums are reduced pairwise in
    /// node order, so the result does not depend on threading.
    pub fn integrate(&self, state: &HybridState) -> WignerIntegrals {
        #[cfg(feature = "parallel")]
        let parts: Vec<(f64, f64)> = {
            use rayon::prelude::*;
            (0..self.beta.len())
                .into_par_iter()
                .map(|i| self.beta_partial(state, i))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<(f64, f64)> = (0..self.beta.len()).map(|i| self.beta_partial(state, i)).collect();
        let s: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let a: Vec<f64> = parts.iter().map(|p| p.1).collect();
        WignerIntegrals {
            integral: pairwise_sum(&s),
            abs_integral: pairwise_sum(&a),
        }
    }

    /// Visits every node in (β, qubit) order with its weight and `W` value.
    pub fn for_each_sample(&self, state: &HybridState, mut f: impl FnMut(WignerSample)) {
        for &(beta, wb) in &self.beta {
            let block = FieldBlock::new(state, beta);
            for node in &self.qubit {
                f(WignerSample {
                    theta: node.theta,
                    phi: node.phi,
                    beta,
                    weight: wb * node.weight,
                    w: block.contract(&node.kernel),
                });
            }
        }
    }
}

/// Negativity volume together with the grid integrals it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negativity {
    pub volume: f64,
    pub integrals: WignerIntegrals,
}

/// `V_n = ½(∫|W| dΩ − ∫W dΩ)`; fails with `NormalizationDrift` when the grid
/// misses unit normalization by more than `10·quad_tol`.
pub fn negativity_volume(state: &HybridState, grid: &WignerGrid) -> Result<Negativity> {
    let integrals = grid.integrate(state);
    let tolerance = 10.0 * grid.quad_tol;
    if !(fabs(integrals.integral - 1.0) <= tolerance) {
        return Err(Error::NormalizationDrift {
            integral: integrals.integral,
            tolerance,
        });
    }
    Ok(Negativity {
        volume: integrals.negativity_volume(),
        integrals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{make_coherent, make_fock, FockVector, QubitVector, DEFAULT_TAIL_TOL};
    use crate::jcdynamics::{evolve_cat, CatInput, JcParams};
    use core::f64::consts::FRAC_1_SQRT_2;

    // D(γ) = exp(γa† − γ*a) on a large truncated space by scaling and squaring.
    fn displacement_dense(gamma: C64, n: usize) -> CMatrix {
        let mut g = CMatrix::zeros(n);
        for k in 1..n {
            let s = sqrt(k as f64);
            g.set(k, k - 1, gamma * s);
            g.set(k - 1, k, -gamma.conj() * s);
        }
        let s = 12;
        let scale = 1.0 / (1u64 << s) as f64;
        let a = CMatrix::from_fn(n, |r, c| g.get(r, c) * scale);
        let mut out = CMatrix::identity(n);
        let mut term = CMatrix::identity(n);
        for k in 1..20 {
            term = term.matmul(&a);
            let inv = 1.0 / k as f64;
            term = CMatrix::from_fn(n, |r, c| term.get(r, c) * inv);
            out = CMatrix::from_fn(n, |r, c| out.get(r, c) + term.get(r, c));
        }
        for _ in 0..s {
            out = out.matmul(&out);
        }
        out
    }

    fn cat(alpha: f64, t: f64) -> HybridState {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let n = crate::fockspace::default_coherent_cutoff(alpha);
        let c = CatInput::new(C64::new(alpha, 0.0), s, s, n, DEFAULT_TAIL_TOL).unwrap();
        evolve_cat(&c, &JcParams::schroedinger(1.0, 1.0), t).unwrap()
    }

    #[test]
    fn displaced_number_matches_matrix_exponential() {
        let big = 80;
        for &gamma in &[C64::new(0.3, -0.2), C64::new(-1.1, 0.7), C64::new(0.0, 1.6)] {
            let d = displacement_dense(gamma, big);
            for k in 0..20 {
                for l in 0..20 {
                    let got = displaced_number_element(k, l, gamma);
                    assert!((got - d.get(k, l)).norm() < 1e-9, "k={k} l={l} γ={gamma}");
                }
            }
        }
    }

    #[test]
    fn parity_kernel_against_explicit_parity_sum() {
        // F(n, m, β) = Σ_j (−1)^j ⟨n|D(β)|j⟩⟨j|D†(β)|m⟩.
        let beta = C64::new(0.4, 0.25);
        for n in 0..6 {
            for m in 0..6 {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..80 {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let dmj = displaced_number_element(m, j, beta).conj();
                    acc += displaced_number_element(n, j, beta) * dmj * sign;
                }
                assert!((parity_kernel_element(n, m, beta) - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parity_examples() {
        let b = C64::new(0.3, -0.4);
        let want = FRAC_2_PI * exp(-2.0 * b.norm_sqr());
        assert!((displaced_parity_element(0, 0, b) - want).norm() < 1e-15);
        assert!((displaced_parity_element(0, 0, C64::new(0.0, 0.0)).re - FRAC_2_PI).abs() < 1e-15);
        assert!((displaced_parity_element(1, 1, C64::new(0.0, 0.0)).re + FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn block_fill_matches_single_elements() {
        let beta = C64::new(-0.6, 0.9);
        let k = continuous_kernel(beta, 12);
        for n in 0..12 {
            for m in 0..12 {
                assert!((k.get(n, m) - displaced_parity_element(n, m, beta)).norm() < 1e-13);
            }
        }
        assert!(k.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn qubit_kernel_properties() {
        let z = qubit_kernel(0.0, 1.3);
        assert!((z[0][0].re - 0.5 * (1.0 + SQRT3)).abs() < 1e-15);
        assert!((z[1][1].re - 0.5 * (1.0 - SQRT3)).abs() < 1e-15);
        assert!(z[0][1].norm() < 1e-15);
        for i in 0..100 {
            let th = 0.0157 * i as f64;
            let ph = 0.0628 * i as f64;
            let k = qubit_kernel(th, ph);
            assert!((k[0][0].re + k[1][1].re - 1.0).abs() < 1e-14);
            assert!((k[0][1] - k[1][0].conj()).norm() < 1e-15);
            let ev = crate::fockspace::hermitian2_eigenvalues(&k);
            assert!((ev[0] - 0.5 * (1.0 + SQRT3)).abs() < 1e-14);
            assert!((ev[1] - 0.5 * (1.0 - SQRT3)).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_ground_at_origin() {
        let s = HybridState::product(&make_fock(0, 2).unwrap(), QubitVector::ground());
        let w = hybrid_wigner(&s, 0.0, 0.0, C64::new(0.0, 0.0));
        assert!((w - FRAC_2_PI * 0.5 * (1.0 + SQRT3)).abs() < 1e-15);
    }

    #[test]
    fn four_term_form_matches_dense_trace() {
        let g: Vec<C64> = (0..5).map(|k| C64::new(0.1 * k as f64, 0.2 - 0.05 * k as f64)).collect();
        let e: Vec<C64> = (0..5).map(|k| C64::new(0.3 - 0.04 * k as f64, 0.07 * k as f64)).collect();
        let norm = sqrt(g.iter().chain(&e).map(|z| z.norm_sqr()).sum::<f64>());
        let s = HybridState::new(
            FockVector::new(g.iter().map(|z| z / norm).collect()).unwrap(),
            FockVector::new(e.iter().map(|z| z / norm).collect()).unwrap(),
        )
        .unwrap();
        let beta = C64::new(0.2, -0.5);
        let (th, ph) = (0.4, 2.2);
        let dc = continuous_kernel(beta, 5);
        let dd = qubit_kernel(th, ph);
        let flat = s.to_flat();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                for n in 0..5 {
                    for m in 0..5 {
                        acc += flat[a * 5 + n].conj() * dc.get(n, m) * dd[a][b] * flat[b * 5 + m];
                    }
                }
            }
        }
        assert!(acc.im.abs() < 1e-14);
        assert!((hybrid_wigner(&s, th, ph, beta) - acc.re).abs() < 1e-14);
    }

    #[test]
    fn cat_normalization_and_negativity() {
        let s = cat(1.0, 0.0);
        let grid = GridSpec::for_displacement(1.0).build().unwrap();
        let neg = negativity_volume(&s, &grid).unwrap();
        assert!((neg.integrals.integral - 1.0).abs() < 1e-6);
        assert!(neg.volume > 0.0);
    }

    #[test]
    fn coarse_grid_reports_drift() {
        let s = cat(2.0, 0.0);
        let spec = GridSpec {
            radius: 1.0,
            n_radial: 4,
            n_angular: 4,
            n_theta: 2,
            n_phi: 2,
            quad_tol: DEFAULT_QUAD_TOL,
        };
        let r = negativity_volume(&s, &spec.build().unwrap());
        assert!(matches!(r, Err(Error::NormalizationDrift { .. })));
    }

    #[test]
    fn coherent_product_has_no_field_negativity_beyond_qubit_part() {
        // Product of a coherent state with |g⟩: field Wigner is a positive
        // Gaussian, so V_n is the qubit kernel's own negativity.
        let f = make_coherent(C64::new(0.5, 0.0), 16, DEFAULT_TAIL_TOL).unwrap().vector;
        let s = HybridState::product(&f, QubitVector::ground());
        let grid = GridSpec::for_displacement(0.5).build().unwrap();
        let neg = negativity_volume(&s, &grid).unwrap();
        // ∫ |½(1+√3 cos2θ)| (1/π) sin2θ dθ dφ, computed in closed form:
        // the kernel is negative for cos2θ < −1/√3.
        let u0 = -1.0 / SQRT3;
        let neg_part = 0.5 * ((u0 + SQRT3 * u0 * u0 / 2.0) - (-1.0 + SQRT3 / 2.0));
        let want = -neg_part; // ½(∫|W| − ∫W) = −∫_{W<0} W
        // |W| has a kink on the nodal circle, so fixed nodes converge slowly.
        let err = (neg.volume - want).abs();
        assert!(err < 1e-3, "{} vs {want}", neg.volume);
        let finer = GridSpec {
            n_theta: 128,
            ..GridSpec::for_displacement(0.5)
        };
        let fine = negativity_volume(&s, &finer.build().unwrap()).unwrap();
        assert!((fine.volume - want).abs() < err);
    }
}
