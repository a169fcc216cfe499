//! Gaussian quenched disorder in the coupling `λ`.
//!
//! Each realization draws `λ ~ N(λ̄, σ²)` once and evolves the same initial
//! state with it. Two strategies are averaged:
//!
//! - oracle: settings re-optimized per realization, `Q^O(λ) = 2√(Λ₁+Λ₂)`;
//! - realistic: the complete CHSH settings optimal at `λ̄` (shift `q*` and
//!   all four directions) are frozen and evaluated against `T_λ`.
//!
//! Frozen settings can never beat the optimum, so `Q^P(λ) ≤ Q^O(λ)` for every
//! realization and the sample means obey the same ordering exactly.
//!
//! A looser variant keeps only the qubit-side directions `c₁, c₂` frozen and
//! realigns the field side, `2√(‖T_λc₁‖² + ‖T_λc₂‖²)`; it sits between the
//! two strategies and is exposed as [`semi_frozen_value`].
//!
//! The module also holds the post-processing: saturation and violation-loss
//! detection on averaged series, and least-squares fits of the even quartic
//! `a + bx² + cx⁴` and the shifted exponential `b + c·exp(−d(x − 0.01))`.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bellchsh::{
    max_bell_value, maximize_bell, symmetric_eigen3, BellState, CorrelationMatrix, MeasurementSettings, Vec3,
    DEFAULT_Q_RANGE,
};
use crate::fockspace::HybridState;
use crate::jcdynamics::{evolve_product_into, Evolved, JcParams, Picture, Prepared};
use crate::math::{exp, fabs, log, pairwise_sum, sin, sqrt};
use crate::quadrature::{gauss_hermite, gaussian_expectation};
use crate::{Error, Result};

pub const DEFAULT_REALIZATIONS: usize = 7000;
pub const DEFAULT_SAT_WINDOW: usize = 50;
pub const DEFAULT_SAT_TOL: f64 = 0.02;
pub const DEFAULT_GH_NODES: usize = 64;
/// Offset inside the exponential law `b + c·exp(−d(x − x₀))`.
pub const EXP_SHIFT: f64 = 0.01;

/// Gaussian coupling ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec {
    pub lambda_bar: f64,
    pub sigma_lambda: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn new(lambda_bar: f64, sigma_lambda: f64, n_realizations: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            lambda_bar,
            sigma_lambda,
            n_realizations,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `σ = 0` with a single realization.
    pub fn ordered(lambda_bar: f64) -> Self {
        Self {
            lambda_bar,
            sigma_lambda: 0.0,
            n_realizations: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda_bar.is_finite() {
            return Err(Error::InvalidParameter("lambda_bar must be finite"));
        }
        if !(self.sigma_lambda >= 0.0) || !self.sigma_lambda.is_finite() {
            return Err(Error::InvalidParameter("sigma_lambda must be finite and non-negative"));
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter("n_realizations must be positive"));
        }
        Ok(())
    }
}

/// Draws `λ_i = λ̄ + σ z_i` with `z_i` standard normal from a ChaCha8 stream.
/// The `z_i` depend only on the seed, so ensembles with different `σ` share
/// their noise.
pub fn sample_lambdas(spec: &DisorderSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.sigma_lambda == 0.0 {
        return Ok(alloc::vec![spec.lambda_bar; spec.n_realizations]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.n_realizations)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.lambda_bar + spec.sigma_lambda * z
        })
        .collect())
}

/// An initial state together with the dynamics template every realization
/// shares; only `λ` changes between realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    prepared: Prepared,
    omega0: f64,
    picture: Picture,
    q_range: RangeInclusive<usize>,
}

impl Family {
    pub fn new(prepared: Prepared) -> Self {
        Self {
            prepared,
            omega0: 0.0,
            picture: Picture::Interaction,
            q_range: DEFAULT_Q_RANGE,
        }
    }

    pub fn with_frame(mut self, omega0: f64, picture: Picture) -> Self {
        self.omega0 = omega0;
        self.picture = picture;
        self
    }

    pub fn with_q_range(mut self, q_range: RangeInclusive<usize>) -> Self {
        self.q_range = q_range;
        self
    }

    pub fn prepared(&self) -> &Prepared {
        &self.prepared
    }

    pub fn q_range(&self) -> RangeInclusive<usize> {
        self.q_range.clone()
    }

    pub fn params(&self, lambda: f64) -> JcParams {
        JcParams {
            lambda,
            omega0: self.omega0,
            picture: self.picture,
        }
    }

    pub fn evolve(&self, lambda: f64, t: f64) -> Result<Evolved> {
        self.prepared.evolve(&self.params(lambda), t)
    }
}

/// `Q^O(λ)` at time `t`: the maximal Bell value of the realization.
pub fn oracle_value(family: &Family, lambda: f64, t: f64) -> Result<f64> {
    max_bell_value(&family.evolve(lambda, t)?, family.q_range())
}

/// Measurement choice optimal for the mean coupling at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenSettings {
    pub t: f64,
    pub q: usize,
    /// Unit eigenvectors of `TᵀT` for `Λ₁ ≥ Λ₂` at `λ̄`.
    pub c: [Vec3; 2],
    /// The full CHSH settings recovered at `λ̄`.
    pub settings: MeasurementSettings,
    pub value_at_mean: f64,
}

pub fn frozen_settings(family: &Family, lambda_bar: f64, t: f64) -> Result<FrozenSettings> {
    let state = family.evolve(lambda_bar, t)?;
    let best = maximize_bell(&state, family.q_range())?;
    let corr = state.correlation_matrix(best.q)?;
    Ok(freeze(&corr, t, best.value, best.settings))
}

fn freeze(corr: &CorrelationMatrix, t: f64, value: f64, settings: MeasurementSettings) -> FrozenSettings {
    let (_, vecs) = symmetric_eigen3(&corr.gram());
    FrozenSettings {
        t,
        q: corr.q,
        c: [vecs[0], vecs[1]],
        settings,
        value_at_mean: value,
    }
}

/// `2√(‖T c₁‖² + ‖T c₂‖²)` for a correlation matrix at the frozen shift.
pub fn semi_frozen_from_matrix(corr: &CorrelationMatrix, frozen: &FrozenSettings) -> f64 {
    let norm_sqr = |c: Vec3| -> f64 {
        (0..3)
            .map(|k| {
                let v: f64 = (0..3).map(|l| corr.t[k][l] * c[l]).sum();
                v * v
            })
            .sum()
    };
    2.0 * sqrt(norm_sqr(frozen.c[0]) + norm_sqr(frozen.c[1]))
}

/// Qubit-side directions frozen at `λ̄`, field side aligned with `T_λc₁` and
/// `T_λc₂`. Bounded by `Q^P(λ) ≤ semi_frozen_value ≤ Q^O(λ)`.
pub fn semi_frozen_value(family: &Family, lambda: f64, frozen: &FrozenSettings) -> Result<f64> {
    let state = family.evolve(lambda, frozen.t)?;
    Ok(semi_frozen_from_matrix(&state.correlation_matrix(frozen.q)?, frozen))
}

/// `Q^P(λ)`: the CHSH value of the settings frozen at `λ̄`, contracted
/// against `T_λ`.
pub fn realistic_value(family: &Family, lambda: f64, frozen: &FrozenSettings) -> Result<f64> {
    let state = family.evolve(lambda, frozen.t)?;
    Ok(frozen.settings.value_from_matrix(&state.correlation_matrix(frozen.q)?))
}

/// Quench-averaged series on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchSeries {
    pub times: Vec<f64>,
    pub q_oracle: Vec<f64>,
    pub q_realistic: Vec<f64>,
    pub stderr_oracle: Vec<f64>,
    pub stderr_realistic: Vec<f64>,
}

impl QuenchSeries {
    /// Pointwise `⟨Q⟩^P ≤ ⟨Q⟩^O + k·stderr`, with the larger of the two errors.
    pub fn ordering_holds(&self, k: f64) -> bool {
        (0..self.times.len()).all(|j| {
            let err = self.stderr_oracle[j].max(self.stderr_realistic[j]);
            self.q_realistic[j] <= self.q_oracle[j] + k * err
        })
    }
}

/// Mean and standard error of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Averaged {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Strategies {
    oracle: bool,
    realistic: bool,
}

/// Per-realization evaluator reusing one state buffer for product inputs.
struct Evaluator<'a> {
    family: &'a Family,
    frozen: &'a [FrozenSettings],
    buffer: Option<HybridState>,
}

impl<'a> Evaluator<'a> {
    fn new(family: &'a Family, frozen: &'a [FrozenSettings]) -> Self {
        let buffer = match family.prepared() {
            Prepared::Product(p) => Some(p.initial_state()),
            _ => None,
        };
        Self { family, frozen, buffer }
    }

    /// Writes `(Q^O, Q^P)` for every time into the two slices.
    fn run(&mut self, lambda: f64, times: &[f64], which: Strategies, oracle: &mut [f64], realistic: &mut [f64]) -> Result<()> {
        let params = self.family.params(lambda);
        for (j, &t) in times.iter().enumerate() {
            let owned;
            let state: &dyn BellState = match (&mut self.buffer, self.family.prepared()) {
                (Some(buf), Prepared::Product(p)) => {
                    evolve_product_into(p, &params, t, buf)?;
                    buf
                }
                _ => {
                    owned = self.family.prepared().evolve(&params, t)?;
                    &owned
                }
            };
            let frozen_q = which.realistic.then(|| self.frozen[j].q);
            if which.oracle {
                let mut best = f64::NEG_INFINITY;
                for q in self.family.q_range() {
                    if q + 1 >= state.cutoff() {
                        break;
                    }
                    let corr = state.correlation_matrix(q)?;
                    best = best.max(2.0 * sqrt(corr.top_two_sum()));
                    if frozen_q == Some(q) {
                        realistic[j] = self.frozen[j].settings.value_from_matrix(&corr);
                    }
                }
                if best == f64::NEG_INFINITY {
                    return Err(Error::CutoffTooSmall {
                        cutoff: state.cutoff(),
                        required: self.family.q_range().start() + 2,
                        tail_mass: f64::NAN,
                    });
                }
                oracle[j] = best;
            } else if let Some(q) = frozen_q {
                realistic[j] = self.frozen[j].settings.value_from_matrix(&state.correlation_matrix(q)?);
            }
        }
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InsufficientData { needed: 1, found: 0 });
    }
    Ok(())
}

/// Both strategies in a single pass over the realizations.
pub fn quench(family: &Family, spec: &DisorderSpec, times: &[f64]) -> Result<QuenchSeries> {
    let (o, p) = run_quench(
        family,
        spec,
        times,
        Strategies {
            oracle: true,
            realistic: true,
        },
    )?;
    Ok(QuenchSeries {
        times: times.to_vec(),
        q_oracle: o.mean,
        q_realistic: p.mean,
        stderr_oracle: o.stderr,
        stderr_realistic: p.stderr,
    })
}

/// `⟨Q⟩^O` with its Monte-Carlo standard error.
pub fn quenched_oracle(family: &Family, spec: &DisorderSpec, times: &[f64]) -> Result<Averaged> {
    let which = Strategies {
        oracle: true,
        realistic: false,
    };
    Ok(run_quench(family, spec, times, which)?.0)
}

/// `⟨Q⟩^P` with its Monte-Carlo standard error.
pub fn quenched_realistic(family: &Family, spec: &DisorderSpec, times: &[f64]) -> Result<Averaged> {
    let which = Strategies {
        oracle: false,
        realistic: true,
    };
    Ok(run_quench(family, spec, times, which)?.1)
}

fn run_quench(family: &Family, spec: &DisorderSpec, times: &[f64], which: Strategies) -> Result<(Averaged, Averaged)> {
    check_times(times)?;
    let lambdas = sample_lambdas(spec)?;
    let frozen: Vec<FrozenSettings> = if which.realistic {
        times
            .iter()
            .map(|&t| frozen_settings(family, spec.lambda_bar, t))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let nt = times.len();
    let per_realization = |lambda: f64, ev: &mut Evaluator| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut o = alloc::vec![0.0; if which.oracle { nt } else { 0 }];
        let mut p = alloc::vec![0.0; if which.realistic { nt } else { 0 }];
        let (os, ps): (&mut [f64], &mut [f64]) = (&mut o, &mut p);
        ev.run(lambda, times, which, os, ps)?;
        Ok((o, p))
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<(Vec<f64>, Vec<f64>)> = {
        use rayon::prelude::*;
        lambdas
            .par_iter()
            .map_init(|| Evaluator::new(family, &frozen), |ev, &l| per_realization(l, ev))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(Vec<f64>, Vec<f64>)> = {
        let mut ev = Evaluator::new(family, &frozen);
        lambdas
            .iter()
            .map(|&l| per_realization(l, &mut ev))
            .collect::<Result<_>>()?
    };

    let reduce = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>, active: bool| -> Averaged {
        let mut mean = Vec::new();
        let mut stderr = Vec::new();
        if active {
            let mut column = alloc::vec![0.0; rows.len()];
            for j in 0..nt {
                for (slot, row) in column.iter_mut().zip(&rows) {
                    *slot = pick(row)[j];
                }
                let (m, se) = mean_stderr(&column);
                mean.push(m);
                stderr.push(se);
            }
        }
        Averaged {
            times: times.to_vec(),
            mean,
            stderr,
        }
    };
    Ok((reduce(|r| &r.0, which.oracle), reduce(|r| &r.1, which.realistic)))
}

/// Sample mean and `s/√n` with pairwise sums in index order.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

/// `2√(1 + sin²(2λ√(k+1) t))`, the ordered Bell value of `|k⟩|e⟩`.
pub fn fock_oracle_value(k: usize, lambda: f64, t: f64) -> f64 {
    let s = sin(2.0 * lambda * sqrt((k + 1) as f64) * t);
    2.0 * sqrt(1.0 + s * s)
}

/// `⟨Q⟩^O` of the Fock family by Gauss-Hermite quadrature over `λ`.
pub fn fock_oracle_quadrature(k: usize, lambda_bar: f64, sigma: f64, times: &[f64], nodes: usize) -> Vec<f64> {
    if sigma == 0.0 {
        return times.iter().map(|&t| fock_oracle_value(k, lambda_bar, t)).collect();
    }
    let rule = gauss_hermite(nodes);
    times
        .iter()
        .map(|&t| gaussian_expectation(&rule, lambda_bar, sigma, |l| fock_oracle_value(k, l, t)))
        .collect()
}

/// Onset of a flat tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub t_cr: f64,
    pub index: usize,
    /// Mean over the first qualifying window.
    pub value: f64,
}

fn check_series(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::ShapeError { expected: times.len(), found: values.len() });
    }
    Ok(())
}

/// First index `i` whose trailing window `values[i..i + window]` has
/// peak-to-peak spread below `tol`.
pub fn detect_saturation(times: &[f64], values: &[f64], window: usize, tol: f64) -> Result<Saturation> {
    check_series(times, values)?;
    if window == 0 || values.len() < window {
        return Err(Error::InsufficientData {
            needed: window.max(1),
            found: values.len(),
        });
    }
    let spread = |s: usize| {
        let w = &values[s..s + window];
        let (lo, hi) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    };
    let start = (0..=values.len() - window)
        .find(|&s| spread(s) < tol)
        .ok_or(Error::NotSaturated)?;
    Ok(Saturation {
        t_cr: times[start],
        index: start,
        value: pairwise_sum(&values[start..start + window]) / window as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationLoss {
    /// Last down-crossing of the local bound, linearly interpolated.
    Lost { t_cr: f64 },
    /// Above the bound at the end of the grid.
    AlwaysViolating,
    /// Never above the bound on the grid.
    NeverViolating,
}

impl ViolationLoss {
    pub fn t_cr(&self) -> Option<f64> {
        match self {
            ViolationLoss::Lost { t_cr } => Some(*t_cr),
            _ => None,
        }
    }
}

/// Time after which the series stays at or below 2.
pub fn detect_violation_loss(times: &[f64], values: &[f64]) -> Result<ViolationLoss> {
    check_series(times, values)?;
    let Some(last) = values.iter().rposition(|&v| v > 2.0) else {
        return Ok(ViolationLoss::NeverViolating);
    };
    if last + 1 == values.len() {
        return Ok(ViolationLoss::AlwaysViolating);
    }
    let (t0, t1) = (times[last], times[last + 1]);
    let (v0, v1) = (values[last], values[last + 1]);
    let t_cr = t0 + (v0 - 2.0) / (v0 - v1) * (t1 - t0);
    Ok(ViolationLoss::Lost { t_cr })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `a + b x² + c x⁴`.
    QuarticEven,
    /// `b + c exp(−d (x − 0.01))`.
    ShiftedExponential,
}

impl FitModel {
    pub fn param_names(&self) -> [&'static str; 3] {
        match self {
            FitModel::QuarticEven => ["a", "b", "c"],
            FitModel::ShiftedExponential => ["b", "c", "d"],
        }
    }

    pub fn eval(&self, p: &[f64; 3], x: f64) -> f64 {
        match self {
            FitModel::QuarticEven => {
                let u = x * x;
                p[0] + p[1] * u + p[2] * u * u
            }
            FitModel::ShiftedExponential => p[0] + p[1] * exp(-p[2] * (x - EXP_SHIFT)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: [f64; 3],
    /// Sum of squared residuals.
    pub residual: f64,
    /// `√(s²(JᵀJ)⁻¹_ii) / |p_i|` with `s² = SSE/(n−3)`; zero when `n = 3`.
    pub param_rel_err: [f64; 3],
    pub iterations: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        let names = self.model.param_names();
        names.iter().position(|n| *n == name).map(|i| self.params[i])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.param_rel_err.iter().fold(0.0, |m, e| m.max(*e))
    }
}

const MIN_FIT_POINTS: usize = 5;

/// Least-squares fit of one of the two empirical laws.
///
/// The quartic is linear in its parameters and solved directly; the
/// exponential starts from a log-linear fit and is refined with
/// Levenberg-Marquardt.
pub fn fit_curve(model: FitModel, xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeError { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            found: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("fit data must be finite"));
    }
    match model {
        FitModel::QuarticEven => fit_quartic(xs, ys),
        FitModel::ShiftedExponential => fit_exponential(xs, ys),
    }
}

fn jacobian_row(model: FitModel, p: &[f64; 3], x: f64) -> [f64; 3] {
    match model {
        FitModel::QuarticEven => {
            let u = x * x;
            [1.0, u, u * u]
        }
        FitModel::ShiftedExponential => {
            let e = exp(-p[2] * (x - EXP_SHIFT));
            [1.0, e, -p[1] * (x - EXP_SHIFT) * e]
        }
    }
}

/// `(JᵀJ, Jᵀr, Σr²)` at `p`.
fn normal_equations(model: FitModel, p: &[f64; 3], xs: &[f64], ys: &[f64]) -> ([[f64; 3]; 3], [f64; 3], f64) {
    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    let mut sse = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let j = jacobian_row(model, p, x);
        let r = y - model.eval(p, x);
        sse += r * r;
        for a in 0..3 {
            jtr[a] += j[a] * r;
            for b in 0..3 {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    (jtj, jtr, sse)
}

fn finish(model: FitModel, p: [f64; 3], xs: &[f64], ys: &[f64], iterations: usize) -> Result<FitResult> {
    let (jtj, _, sse) = normal_equations(model, &p, xs, ys);
    let cov = invert3(&jtj).ok_or(Error::SingularJacobian)?;
    let dof = xs.len().saturating_sub(3);
    let s2 = if dof == 0 { 0.0 } else { sse / dof as f64 };
    let param_rel_err = core::array::from_fn(|i| {
        let sd = sqrt((s2 * cov[i][i]).max(0.0));
        if p[i] == 0.0 {
            f64::INFINITY
        } else {
            sd / fabs(p[i])
        }
    });
    Ok(FitResult {
        model,
        params: p,
        residual: sse,
        param_rel_err,
        iterations,
    })
}

fn fit_quartic(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let model = FitModel::QuarticEven;
    let (jtj, jtr, _) = normal_equations(model, &[0.0; 3], xs, ys);
    let p = solve3(&jtj, &jtr).ok_or(Error::SingularJacobian)?;
    finish(model, p, xs, ys, 0)
}

fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let model = FitModel::ShiftedExponential;
    let mut p = exponential_seed(xs, ys)?;
    let (_, _, mut sse) = normal_equations(model, &p, xs, ys);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let (jtj, jtr, _) = normal_equations(model, &p, xs, ys);
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += mu * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve3(&a, &jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let trial_sse: f64 = xs
                .iter()
                .zip(ys)
                .map(|(&x, &y)| {
                    let r = y - model.eval(&trial, x);
                    r * r
                })
                .sum();
            if trial_sse.is_finite() && trial_sse <= sse {
                let rel_step = (0..3).map(|i| fabs(step[i]) / (fabs(p[i]) + 1e-12)).fold(0.0, f64::max);
                let gain = sse - trial_sse;
                p = trial;
                sse = trial_sse;
                mu = (mu / 10.0).max(1e-15);
                improved = true;
                if rel_step < 1e-12 || gain <= 1e-15 * (1.0 + sse) {
                    return finish(model, p, xs, ys, iterations);
                }
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(model, p, xs, ys, iterations)
}

/// Log-linear seed: `b₀` just below the smallest ordinate, then a straight
/// line through `ln(y − b₀)` against `x − 0.01`.
fn exponential_seed(xs: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return Err(Error::SingularJacobian);
    }
    let b0 = lo - 0.05 * span;
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let u = x - EXP_SHIFT;
        let v = log(y - b0);
        sx += u;
        sy += v;
        sxx += u * u;
        sxy += u * v;
    }
    let det = n * sxx - sx * sx;
    if fabs(det) <= 1e-300 {
        return Err(Error::SingularJacobian);
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    Ok([b0, exp(intercept), -slope])
}

/// Smallest `x > 0` with `a + b x² + c x⁴ = level`, if any.
pub fn quartic_crossing(fit: &FitResult, level: f64) -> Option<f64> {
    if fit.model != FitModel::QuarticEven {
        return None;
    }
    let [a, b, c] = fit.params;
    let a = a - level;
    let roots: Vec<f64> = if fabs(c) < 1e-14 {
        if b == 0.0 {
            Vec::new()
        } else {
            alloc::vec![-a / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            Vec::new()
        } else {
            let sq = sqrt(disc);
            // Stable pair of roots.
            let qq = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
            let mut r = alloc::vec![qq / c];
            if qq != 0.0 {
                r.push(a / qq);
            }
            r
        }
    };
    roots
        .into_iter()
        .filter(|u| *u > 0.0)
        .fold(None, |m: Option<f64>, u| Some(m.map_or(u, |m| m.min(u))))
        .map(sqrt)
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let inv = invert3(a)?;
    Some(core::array::from_fn(|i| (0..3).map(|j| inv[i][j] * b[j]).sum()))
}

/// Gauss-Jordan inverse with partial pivoting; `None` when a pivot falls
/// below `1e-14` of the largest entry.
fn invert3(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(fabs(*x)));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let mut m = *a;
    let mut inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| fabs(m[i][col]).total_cmp(&fabs(m[j][col])))?;
        if fabs(m[piv][col]) <= 1e-14 * scale {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for k in 0..3 {
            m[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..3 {
            if r != col {
                let f = m[r][col];
                for k in 0..3 {
                    m[r][k] -= f * m[col][k];
                    inv[r][k] -= f * inv[col][k];
                }
            }
        }
    }
    Some(inv)
}
