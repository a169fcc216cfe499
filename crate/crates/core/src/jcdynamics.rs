//! Resonant Jaynes-Cummings evolution in closed form.
//!
//! With `H = ω(a†a + σ_z/2) + λ(aσ_+ + a†σ_−)` the interaction part only mixes
//! `|n, e⟩` with `|n+1, g⟩`, so every amplitude is a cosine or sine of
//! `λt√(n+1)`. The Schrödinger picture adds the diagonal phases of the free
//! part, `e^{−iω(n+1/2)t}` on `|n, e⟩` and `e^{−iω(n−1/2)t}` on `|n, g⟩`.

use alloc::vec::Vec;

use crate::fockspace::{
    default_coherent_cutoff, default_smsv_cutoff, make_coherent, make_fock, make_smsv, CMatrix, FockVector,
    HybridMixedState, HybridState, QubitVector, DEFAULT_TAIL_TOL,
};
use crate::math::{cos, sin, sqrt};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Interaction,
    Schroedinger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    pub lambda: f64,
    pub omega0: f64,
    pub picture: Picture,
}

impl JcParams {
    pub fn interaction(lambda: f64) -> Self {
        Self {
            lambda,
            omega0: 0.0,
            picture: Picture::Interaction,
        }
    }

    pub fn schroedinger(lambda: f64, omega0: f64) -> Self {
        Self {
            lambda,
            omega0,
            picture: Picture::Schroedinger,
        }
    }

    /// Frequency entering the free phases; zero in the interaction picture.
    fn free_omega(&self) -> f64 {
        match self.picture {
            Picture::Interaction => 0.0,
            Picture::Schroedinger => self.omega0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("coupling must be finite"));
        }
        if !(self.omega0 >= 0.0) || !self.omega0.is_finite() {
            return Err(Error::InvalidParameter("omega0 must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Initial field of a product input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Fock(usize),
    Coherent(C64),
    Smsv { r: f64, theta: f64 },
}

impl FieldSpec {
    /// Cutoff rule: coherent `max(16, ⌈|α|²+6|α|+10⌉)`, SMSV the smallest
    /// `N ≥ 32` meeting `tail_tol`, Fock `max(16, k+2)`.
    pub fn default_cutoff(&self, tail_tol: f64) -> usize {
        match *self {
            FieldSpec::Fock(k) => (k + 2).max(16),
            FieldSpec::Coherent(a) => default_coherent_cutoff(a.norm()),
            FieldSpec::Smsv { r, .. } => default_smsv_cutoff(r, tail_tol),
        }
    }

    pub fn build(&self, cutoff: usize, tail_tol: f64) -> Result<FockVector> {
        match *self {
            FieldSpec::Fock(k) => make_fock(k, cutoff),
            FieldSpec::Coherent(a) => make_coherent(a, cutoff, tail_tol).map(|t| t.vector),
            FieldSpec::Smsv { r, theta } => make_smsv(r, theta, cutoff, tail_tol).map(|t| t.vector),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStateSpec {
    Product { field: FieldSpec, atom: QubitVector },
    /// `a₁|α⟩|e⟩ + a₂|−α⟩|g⟩`, renormalized after assembly.
    Cat { alpha: C64, a1: C64, a2: C64 },
    /// `p|α, e⟩⟨α, e| + (1−p)|−α, g⟩⟨−α, g|`.
    ClassicalMixture { alpha: C64, p: f64 },
}

impl InitialStateSpec {
    pub fn default_cutoff(&self, tail_tol: f64) -> usize {
        match *self {
            InitialStateSpec::Product { field, .. } => field.default_cutoff(tail_tol),
            InitialStateSpec::Cat { alpha, .. } | InitialStateSpec::ClassicalMixture { alpha, .. } => {
                default_coherent_cutoff(alpha.norm())
            }
        }
    }

    /// Build the field vectors once so that many times can be evolved cheaply.
    pub fn prepare(&self, cutoff: Option<usize>, tail_tol: f64) -> Result<Prepared> {
        let n = cutoff.unwrap_or_else(|| self.default_cutoff(tail_tol));
        match *self {
            InitialStateSpec::Product { field, atom } => Ok(Prepared::Product(ProductInput::new(
                field.build(n, tail_tol)?,
                atom,
                tail_tol,
            )?)),
            InitialStateSpec::Cat { alpha, a1, a2 } => Ok(Prepared::Cat(CatInput::new(alpha, a1, a2, n, tail_tol)?)),
            InitialStateSpec::ClassicalMixture { alpha, p } => {
                Ok(Prepared::Mixture(MixtureInput::new(alpha, p, n, tail_tol)?))
            }
        }
    }
}

/// A product input with its field vector materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductInput {
    field: FockVector,
    atom: QubitVector,
    initial: HybridState,
}

impl ProductInput {
    /// Fails when the top level of the excited branch would leak more than
    /// `tail_tol` through the cutoff.
    pub fn new(field: FockVector, atom: QubitVector, tail_tol: f64) -> Result<Self> {
        if !atom.is_normalized() {
            return Err(Error::InvalidParameter("atom state is not normalized"));
        }
        let n = field.cutoff();
        let leak = atom.e.norm_sqr() * field.get(n - 1).norm_sqr();
        if leak >= tail_tol {
            return Err(Error::CutoffTooSmall {
                cutoff: n,
                required: n + 1,
                tail_mass: leak,
            });
        }
        let initial = HybridState::product(&field, atom);
        Ok(Self { field, atom, initial })
    }

    pub fn field(&self) -> &FockVector {
        &self.field
    }

    pub fn atom(&self) -> QubitVector {
        self.atom
    }

    pub fn cutoff(&self) -> usize {
        self.field.cutoff()
    }

    pub fn initial_state(&self) -> HybridState {
        self.initial.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatInput {
    plus: FockVector,
    minus: FockVector,
    a1: C64,
    a2: C64,
}

impl CatInput {
    pub fn new(alpha: C64, a1: C64, a2: C64, cutoff: usize, tail_tol: f64) -> Result<Self> {
        let plus = make_coherent(alpha, cutoff, tail_tol)?.vector;
        let minus = make_coherent(-alpha, cutoff, tail_tol)?.vector;
        // The branches sit on orthogonal qubit levels, so ⟨α|−α⟩ never enters
        // the norm; the division only absorbs the truncation tail and any
        // unnormalized (a₁, a₂).
        let norm = sqrt(a1.norm_sqr() * plus.norm_sqr() + a2.norm_sqr() * minus.norm_sqr());
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("cat amplitudes are both zero"));
        }
        Ok(Self {
            plus,
            minus,
            a1: a1 / norm,
            a2: a2 / norm,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.plus.cutoff()
    }

    pub fn initial_state(&self) -> HybridState {
        HybridState::from_parts(self.minus.scaled(self.a2), self.plus.scaled(self.a1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureInput {
    p: f64,
    excited: ProductInput,
    ground: ProductInput,
}

impl MixtureInput {
    pub fn new(alpha: C64, p: f64, cutoff: usize, tail_tol: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter("mixture weight p must lie in [0, 1]"));
        }
        let excited = ProductInput::new(
            make_coherent(alpha, cutoff, tail_tol)?.vector,
            QubitVector::excited(),
            tail_tol,
        )?;
        let ground = ProductInput::new(
            make_coherent(-alpha, cutoff, tail_tol)?.vector,
            QubitVector::ground(),
            tail_tol,
        )?;
        Ok(Self { p, excited, ground })
    }

    pub fn cutoff(&self) -> usize {
        self.excited.cutoff()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prepared {
    Product(ProductInput),
    Cat(CatInput),
    Mixture(MixtureInput),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evolved {
    Pure(HybridState),
    Mixed(HybridMixedState),
}

impl Prepared {
    pub fn cutoff(&self) -> usize {
        match self {
            Prepared::Product(p) => p.cutoff(),
            Prepared::Cat(c) => c.cutoff(),
            Prepared::Mixture(m) => m.cutoff(),
        }
    }

    pub fn evolve(&self, params: &JcParams, t: f64) -> Result<Evolved> {
        Ok(match self {
            Prepared::Product(p) => Evolved::Pure(evolve_product(p, params, t)?),
            Prepared::Cat(c) => Evolved::Pure(evolve_cat(c, params, t)?),
            Prepared::Mixture(m) => Evolved::Mixed(evolve_mixture(m, params, t)?),
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter("time must be finite and non-negative"));
    }
    Ok(())
}

/// Writes `U(t)` applied to `(g_in, e_in)` into the output buffers.
///
/// `ψ_e[n] = e_n cos(λt√(n+1)) − i g_{n+1} sin(λt√(n+1))`,
/// `ψ_g[n] = g_n cos(λt√n) − i e_{n−1} sin(λt√n)`.
fn evolve_components(g_in: &[C64], e_in: &[C64], params: &JcParams, t: f64, g_out: &mut Vec<C64>, e_out: &mut Vec<C64>) {
    let n = g_in.len();
    let lt = params.lambda * t;
    let wt = params.free_omega() * t;
    g_out.clear();
    e_out.clear();
    g_out.push(g_in[0]);
    for k in 0..n {
        let phase = lt * sqrt((k + 1) as f64);
        let (s, c) = (sin(phase), cos(phase));
        let g_next = if k + 1 < n { g_in[k + 1] } else { ZERO };
        e_out.push(e_in[k] * c - C64::new(0.0, s) * g_next);
        if k + 1 < n {
            g_out.push(g_next * c - C64::new(0.0, s) * e_in[k]);
        }
    }
    if wt != 0.0 {
        for k in 0..n {
            let kf = k as f64;
            e_out[k] *= C64::from_polar(1.0, -wt * (kf + 0.5));
            g_out[k] *= C64::from_polar(1.0, -wt * (kf - 0.5));
        }
    }
}

/// Evolve a product input `(Σ C_n|n⟩)(C_g|g⟩ + C_e|e⟩)`.
pub fn evolve_product(input: &ProductInput, params: &JcParams, t: f64) -> Result<HybridState> {
    let mut out = input.initial.clone();
    evolve_product_into(input, params, t, &mut out)?;
    Ok(out)
}

/// [`evolve_product`] writing into an existing state, reusing its buffers.
pub fn evolve_product_into(input: &ProductInput, params: &JcParams, t: f64, out: &mut HybridState) -> Result<()> {
    params.validate()?;
    check_time(t)?;
    let (g, e) = out.buffers_mut();
    evolve_components(
        input.initial.psi_g().coeffs(),
        input.initial.psi_e().coeffs(),
        params,
        t,
        g,
        e,
    );
    Ok(())
}

/// Evolve `a₁|α⟩|e⟩ + a₂|−α⟩|g⟩`.
pub fn evolve_cat(input: &CatInput, params: &JcParams, t: f64) -> Result<HybridState> {
    params.validate()?;
    check_time(t)?;
    let g_in: Vec<C64> = input.minus.coeffs().iter().map(|c| c * input.a2).collect();
    let e_in: Vec<C64> = input.plus.coeffs().iter().map(|c| c * input.a1).collect();
    let n = g_in.len();
    let (mut g, mut e) = (Vec::with_capacity(n), Vec::with_capacity(n));
    evolve_components(&g_in, &e_in, params, t, &mut g, &mut e);
    Ok(HybridState::from_parts(FockVector::from_vec(g), FockVector::from_vec(e)))
}

/// Evolve each branch of the classically correlated input; zero-weight
/// branches are dropped.
pub fn evolve_mixture(input: &MixtureInput, params: &JcParams, t: f64) -> Result<HybridMixedState> {
    let mut parts = Vec::with_capacity(2);
    if input.p > 0.0 {
        parts.push((input.p, evolve_product(&input.excited, params, t)?));
    }
    if input.p < 1.0 {
        parts.push((1.0 - input.p, evolve_product(&input.ground, params, t)?));
    }
    HybridMixedState::new(parts)
}

/// Dense `U(t)` in the block layout `idx(n, g) = n`, `idx(n, e) = N + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    pub matrix: CMatrix,
    /// Column of `|N−1, e⟩`, whose partner `|N, g⟩` lies beyond the cutoff;
    /// that column has norm `|cos(λt√N)|` rather than 1.
    pub boundary_column: usize,
}

pub fn unitary_matrix(params: &JcParams, cutoff: usize, t: f64) -> Result<UnitaryMatrix> {
    params.validate()?;
    check_time(t)?;
    if cutoff < 2 {
        return Err(Error::InvalidParameter("unitary needs a cutoff of at least 2"));
    }
    let n = cutoff;
    let mut m = CMatrix::zeros(2 * n);
    let mut g_out = Vec::with_capacity(n);
    let mut e_out = Vec::with_capacity(n);
    let mut g_in = alloc::vec![ZERO; n];
    let mut e_in = alloc::vec![ZERO; n];
    for col in 0..2 * n {
        g_in.iter_mut().chain(e_in.iter_mut()).for_each(|z| *z = ZERO);
        if col < n {
            g_in[col] = C64::new(1.0, 0.0);
        } else {
            e_in[col - n] = C64::new(1.0, 0.0);
        }
        evolve_components(&g_in, &e_in, params, t, &mut g_out, &mut e_out);
        for k in 0..n {
            m.set(k, col, g_out[k]);
            m.set(n + k, col, e_out[k]);
        }
    }
    Ok(UnitaryMatrix {
        matrix: m,
        boundary_column: 2 * n - 1,
    })
}

/// `⟨a†a + σ_z/2⟩`, conserved by the resonant dynamics.
pub fn excitation_number(state: &HybridState) -> f64 {
    let mut acc = 0.0;
    for (k, (g, e)) in state.psi_g().coeffs().iter().zip(state.psi_e().coeffs()).enumerate() {
        acc += k as f64 * (g.norm_sqr() + e.norm_sqr()) + 0.5 * (e.norm_sqr() - g.norm_sqr());
    }
    acc
}

/// `n` equally spaced points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Product input with default cutoff and tolerance.
pub fn product_input(field: FieldSpec, atom: QubitVector) -> Result<ProductInput> {
    let n = field.default_cutoff(DEFAULT_TAIL_TOL);
    ProductInput::new(field.build(n, DEFAULT_TAIL_TOL)?, atom, DEFAULT_TAIL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::entanglement_entropy;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    // exp(−iHt) by scaling and squaring with a Taylor core.
    fn expm_i(h: &CMatrix, t: f64) -> CMatrix {
        let n = h.dim();
        let norm: f64 = (0..n)
            .map(|r| (0..n).map(|c| h.get(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
            * t.abs();
        let mut s = 0;
        while norm / (1u64 << s) as f64 > 0.25 {
            s += 1;
        }
        let scale = C64::new(0.0, -t / (1u64 << s) as f64);
        let a = CMatrix::from_fn(n, |r, c| h.get(r, c) * scale);
        let mut out = CMatrix::identity(n);
        let mut term = CMatrix::identity(n);
        for k in 1..30 {
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

    fn jc_hamiltonian(n: usize, lambda: f64) -> CMatrix {
        // λ(aσ_+ + a†σ_−): |k, g⟩ ↔ |k−1, e⟩ with amplitude λ√k.
        let mut h = CMatrix::zeros(2 * n);
        for k in 1..n {
            let v = c(lambda * sqrt(k as f64));
            h.set(n + k - 1, k, v);
            h.set(k, n + k - 1, v);
        }
        h
    }

    #[test]
    fn fock_excited_matches_closed_form() {
        let p = JcParams::interaction(1.0);
        let input = ProductInput::new(make_fock(3, 8).unwrap(), QubitVector::excited(), DEFAULT_TAIL_TOL).unwrap();
        let t = 0.37;
        let s = evolve_product(&input, &p, t).unwrap();
        let w = t * 2.0;
        assert!((s.psi_e().get(3) - c(cos(w))).norm() < 1e-15);
        assert!((s.psi_g().get(4) - C64::new(0.0, -sin(w))).norm() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vacuum_excited_at_quarter_period() {
        let p = JcParams::interaction(1.0);
        let input = ProductInput::new(make_fock(0, 4).unwrap(), QubitVector::excited(), DEFAULT_TAIL_TOL).unwrap();
        let s = evolve_product(&input, &p, PI / 2.0).unwrap();
        assert!((s.psi_g().get(1) - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(s.psi_e().norm_sqr() < 1e-30);
    }

    #[test]
    fn zero_time_is_identity() {
        let p = JcParams::schroedinger(0.8, 2.0);
        let input = product_input(
            FieldSpec::Coherent(C64::new(0.6, 0.2)),
            QubitVector::new(c(0.6), C64::new(0.0, 0.8)),
        )
        .unwrap();
        let s = evolve_product(&input, &p, 0.0).unwrap();
        assert_eq!(s, input.initial_state());
        let u = unitary_matrix(&p, 6, 0.0).unwrap();
        assert_eq!(u.matrix, CMatrix::identity(12));
    }

    #[test]
    fn unitary_matches_matrix_exponential() {
        let n = 8;
        let p = JcParams::interaction(0.9);
        for &t in &[0.3, 1.7, 4.2] {
            let u = unitary_matrix(&p, n, t).unwrap();
            let oracle = expm_i(&jc_hamiltonian(n, 0.9), t);
            for col in 0..2 * n {
                if col == u.boundary_column {
                    continue;
                }
                for row in 0..2 * n {
                    assert!((u.matrix.get(row, col) - oracle.get(row, col)).norm() < 1e-10);
                }
            }
            // Unitarity off the boundary column.
            let uu = u.matrix.adjoint().matmul(&u.matrix);
            for r in 0..2 * n - 1 {
                for cc in 0..2 * n - 1 {
                    let want = if r == cc { 1.0 } else { 0.0 };
                    assert!((uu.get(r, cc) - c(want)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn schroedinger_unitary_includes_free_phases() {
        let n = 6;
        let (lambda, omega) = (0.7, 1.3);
        let mut h = jc_hamiltonian(n, lambda);
        for k in 0..n {
            let kf = k as f64;
            h.set(k, k, c(omega * (kf - 0.5)));
            h.set(n + k, n + k, c(omega * (kf + 0.5)));
        }
        let t = 2.1;
        let u = unitary_matrix(&JcParams::schroedinger(lambda, omega), n, t).unwrap();
        let oracle = expm_i(&h, t);
        for col in 0..2 * n - 1 {
            for row in 0..2 * n {
                assert!((u.matrix.get(row, col) - oracle.get(row, col)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn cat_at_zero_time_is_nearly_maximally_entangled() {
        let s = FRAC_1_SQRT_2;
        let cat = CatInput::new(c(2.0), c(s), c(s), 26, DEFAULT_TAIL_TOL).unwrap();
        let st = evolve_cat(&cat, &JcParams::schroedinger(1.0, 1.0), 0.0).unwrap();
        assert!((entanglement_entropy(&st) - 1.0).abs() < 1e-3);
        assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_with_single_branch_is_product_evolution() {
        let alpha = C64::new(0.8, 0.3);
        let cat = CatInput::new(alpha, c(1.0), c(0.0), 20, DEFAULT_TAIL_TOL).unwrap();
        let prod = ProductInput::new(
            make_coherent(alpha, 20, DEFAULT_TAIL_TOL).unwrap().vector,
            QubitVector::excited(),
            DEFAULT_TAIL_TOL,
        )
        .unwrap();
        let p = JcParams::schroedinger(1.0, 0.0);
        for &t in &[0.0, 0.9, 3.3] {
            let a = evolve_cat(&cat, &p, t).unwrap();
            let b = evolve_product(&prod, &p, t).unwrap();
            let scale = sqrt(prod.field().norm_sqr());
            for (x, y) in a.to_flat().iter().zip(b.to_flat()) {
                assert!((x * scale - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn mixture_branches() {
        let m = MixtureInput::new(c(0.0), 0.5, 8, DEFAULT_TAIL_TOL).unwrap();
        let r = evolve_mixture(&m, &JcParams::interaction(1.0), 1.234).unwrap();
        assert_eq!(r.components().len(), 2);
        let ground = &r.components()[1].1;
        assert_eq!(ground.psi_g().get(0), c(1.0));
        assert!(ground.psi_e().norm_sqr() == 0.0);

        let m = MixtureInput::new(c(0.5), 1.0, 16, DEFAULT_TAIL_TOL).unwrap();
        let r = evolve_mixture(&m, &JcParams::interaction(1.0), 0.4).unwrap();
        assert_eq!(r.components().len(), 1);
        assert!(MixtureInput::new(c(0.5), 1.5, 16, DEFAULT_TAIL_TOL).is_err());
    }

    #[test]
    fn excited_top_level_leak_is_rejected() {
        let r = ProductInput::new(make_fock(7, 8).unwrap(), QubitVector::excited(), DEFAULT_TAIL_TOL);
        assert!(matches!(r, Err(Error::CutoffTooSmall { cutoff: 8, .. })));
        assert!(ProductInput::new(make_fock(7, 8).unwrap(), QubitVector::ground(), DEFAULT_TAIL_TOL).is_ok());
    }

    #[test]
    fn grid() {
        assert_eq!(uniform_grid(2.0, 3), alloc::vec![0.0, 1.0, 2.0]);
        assert_eq!(uniform_grid(2.0, 1), alloc::vec![0.0]);
    }
}
