//! Experiment drivers. Each one evaluates its sweep in parallel and emits rows
//! in sweep-index order.

use crate::catalog::ExperimentKind;
use crate::config::{ExperimentConfig, FieldKind};
use crate::table::{Cell, ColumnKind, ColumnSpec, Metadata, ResultTable};
use crate::RunError;
use jcbell_core::bellchsh::{maximize_bell, BellResult};
use jcbell_core::disorder::{
    detect_saturation, detect_violation_loss, fit_curve, quartic_crossing, quench, quenched_oracle, DisorderSpec,
    Family, FitModel, FitResult, ViolationLoss,
};
use jcbell_core::fockspace::{entanglement_entropy, QubitVector};
use jcbell_core::jcdynamics::{Evolved, FieldSpec, InitialStateSpec, JcParams, Prepared};
use jcbell_core::wigner::{hybrid_wigner, negativity_volume, GridSpec};
use jcbell_core::{Error, C64};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::ops::RangeInclusive;

/// Table plus the derived quantities stored in the metadata.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub results: Value,
    pub warnings: Vec<String>,
    /// Optional long-format phase-plane slice of `W`.
    pub slice: Option<ResultTable>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let mut out = match cfg.experiment {
        ExperimentKind::FockDynamics
        | ExperimentKind::Smsv
        | ExperimentKind::CoherentHeatmap
        | ExperimentKind::Mixture
        | ExperimentKind::Cat
        | ExperimentKind::CatHeatmap => bell_sweep(cfg)?,
        ExperimentKind::DisorderOracle => disorder_oracle(cfg)?,
        ExperimentKind::DisorderRealistic => disorder_realistic(cfg)?,
        ExperimentKind::WignerComparison => wigner_comparison(cfg)?,
    };
    if let Some(slice) = &cfg.output.wigner_slice {
        out.slice = Some(wigner_slice(cfg, slice)?);
    }
    out.table.check_finite()?;
    Ok(out)
}

pub fn metadata(cfg: &ExperimentConfig, out: &RunOutput) -> Metadata {
    let entry = cfg.experiment.entry();
    let seed = matches!(
        cfg.experiment,
        ExperimentKind::DisorderOracle | ExperimentKind::DisorderRealistic
    )
    .then_some(cfg.disorder.seed);
    Metadata {
        experiment: cfg.experiment.name().to_string(),
        figure: entry.figure.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: serde_json::to_value(cfg).expect("config serializes"),
        axes: entry.axes.iter().map(|s| s.to_string()).collect(),
        rows: out.table.len(),
        columns: out.table.specs(),
        results: out.results.clone(),
        warnings: out.warnings.clone(),
    }
}

fn q_range(cfg: &ExperimentConfig) -> RangeInclusive<usize> {
    0..=cfg.numerics.q_max
}

fn params(cfg: &ExperimentConfig, lambda: f64) -> JcParams {
    JcParams {
        lambda,
        omega0: cfg.dynamics.omega0,
        picture: cfg.dynamics.picture.into(),
    }
}

fn atom(cfg: &ExperimentConfig) -> QubitVector {
    let [gr, gi, er, ei] = cfg.state.atom;
    let n = (gr * gr + gi * gi + er * er + ei * ei).sqrt();
    QubitVector::new(C64::new(gr / n, gi / n), C64::new(er / n, ei / n))
}

fn alpha_c(cfg: &ExperimentConfig, a: f64) -> C64 {
    C64::from_polar(a, cfg.state.alpha_phase)
}

fn cat_spec(cfg: &ExperimentConfig, a: f64) -> InitialStateSpec {
    let [r1, i1] = cfg.state.a1;
    let [r2, i2] = cfg.state.a2;
    InitialStateSpec::Cat {
        alpha: alpha_c(cfg, a),
        a1: C64::new(r1, i1),
        a2: C64::new(r2, i2),
    }
}

fn prepare(cfg: &ExperimentConfig, spec: InitialStateSpec) -> Result<Prepared, RunError> {
    Ok(spec.prepare(cfg.numerics.cutoff, cfg.numerics.tail_tol)?)
}

struct Point {
    bell: BellResult,
    entropy: Option<f64>,
}

fn evaluate(prepared: &Prepared, params: &JcParams, q: RangeInclusive<usize>, t: f64) -> Result<Point, Error> {
    let ev = prepared.evolve(params, t)?;
    let bell = maximize_bell(&ev, q)?;
    let entropy = match &ev {
        Evolved::Pure(s) => Some(entanglement_entropy(s)),
        Evolved::Mixed(_) => None,
    };
    Ok(Point { bell, entropy })
}

/// One curve per state, evaluated over the time axis.
struct Curve {
    labels: Vec<Cell>,
    prepared: Prepared,
}

fn curves(cfg: &ExperimentConfig) -> Result<Vec<Curve>, RunError> {
    let s = &cfg.state;
    let product = |field: FieldSpec| InitialStateSpec::Product { field, atom: atom(cfg) };
    let mut out = Vec::new();
    match cfg.experiment {
        ExperimentKind::FockDynamics => {
            for &k in &s.k {
                out.push(Curve {
                    labels: vec![k.into()],
                    prepared: prepare(cfg, product(FieldSpec::Fock(k)))?,
                });
            }
        }
        ExperimentKind::Smsv => {
            for r in s.r.values() {
                let field = FieldSpec::Smsv { r, theta: s.squeeze_phase };
                out.push(Curve {
                    labels: vec![r.into()],
                    prepared: prepare(cfg, product(field))?,
                });
            }
        }
        ExperimentKind::CoherentHeatmap => {
            for a in s.alpha.values() {
                out.push(Curve {
                    labels: vec![a.into()],
                    prepared: prepare(cfg, product(FieldSpec::Coherent(alpha_c(cfg, a))))?,
                });
            }
        }
        ExperimentKind::Mixture => {
            for a in s.alpha.values() {
                for p in s.p.values() {
                    let spec = InitialStateSpec::ClassicalMixture { alpha: alpha_c(cfg, a), p };
                    out.push(Curve {
                        labels: vec![a.into(), p.into()],
                        prepared: prepare(cfg, spec)?,
                    });
                }
            }
        }
        ExperimentKind::Cat | ExperimentKind::CatHeatmap | ExperimentKind::WignerComparison => {
            for a in s.alpha.values() {
                out.push(Curve {
                    labels: vec![a.into()],
                    prepared: prepare(cfg, cat_spec(cfg, a))?,
                });
            }
        }
        _ => unreachable!("not a Bell sweep"),
    }
    Ok(out)
}

fn boundary_warning(cfg: &ExperimentConfig, hits: usize, warnings: &mut Vec<String>) {
    if hits > 0 {
        warnings.push(format!(
            "{hits} points attain their optimum at q = q_max = {}; consider raising numerics.q_max",
            cfg.numerics.q_max
        ));
    }
}

fn bell_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let times = cfg.sweep.t.values();
    let curves = curves(cfg)?;
    let params = params(cfg, cfg.dynamics.lambda);
    let q = q_range(cfg);
    let with_entropy = cfg.experiment.columns().iter().any(|c| c.name == "entropy");
    let jobs: Vec<(usize, f64)> = (0..curves.len()).flat_map(|c| times.iter().map(move |&t| (c, t))).collect();
    let points: Vec<Point> = jobs
        .par_iter()
        .map(|&(c, t)| evaluate(&curves[c].prepared, &params, q.clone(), t))
        .collect::<Result<_, _>>()?;

    let mut table = ResultTable::new(cfg.experiment.columns());
    let mut hits = 0;
    let mut summary = Vec::new();
    for (ci, curve) in curves.iter().enumerate() {
        let pts = &points[ci * times.len()..(ci + 1) * times.len()];
        for (&t, p) in times.iter().zip(pts) {
            hits += p.bell.boundary_hit as usize;
            let mut row = curve.labels.clone();
            row.extend([t.into(), p.bell.value.into(), p.bell.q.into()]);
            if with_entropy {
                row.push(p.entropy.into());
            }
            table.push_row(row);
        }
        let values: Vec<f64> = pts.iter().map(|p| p.bell.value).collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        summary.push(json!({
            "labels": curve.labels.iter().map(cell_json).collect::<Vec<_>>(),
            "bell_max": max,
            "bell_min": min,
            "violating_fraction": values.iter().filter(|&&v| v > 2.0).count() as f64 / values.len() as f64,
        }));
    }
    let mut warnings = Vec::new();
    boundary_warning(cfg, hits, &mut warnings);
    Ok(RunOutput {
        table,
        results: json!({ "curves": summary }),
        warnings,
        slice: None,
    })
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Int(i) => json!(i),
        Cell::Float(x) => json!(x),
        Cell::Text(s) => json!(s),
        Cell::Missing => Value::Null,
    }
}

/// Product family for the disorder experiments: `(k, alpha)` label plus spec.
fn disorder_families(cfg: &ExperimentConfig) -> Result<Vec<(Cell, Cell, Family)>, RunError> {
    let q = q_range(cfg);
    let mk = |field: FieldSpec| -> Result<Family, RunError> {
        let prepared = prepare(cfg, InitialStateSpec::Product { field, atom: atom(cfg) })?;
        Ok(Family::new(prepared)
            .with_frame(cfg.dynamics.omega0, cfg.dynamics.picture.into())
            .with_q_range(q.clone()))
    };
    match cfg.state.field {
        FieldKind::Fock => cfg
            .state
            .k
            .iter()
            .map(|&k| Ok((Cell::from(k), Cell::Missing, mk(FieldSpec::Fock(k))?)))
            .collect(),
        FieldKind::Coherent => cfg
            .state
            .alpha
            .values()
            .into_iter()
            .map(|a| Ok((Cell::Missing, Cell::from(a), mk(FieldSpec::Coherent(alpha_c(cfg, a)))?)))
            .collect(),
    }
}

fn disorder_spec(cfg: &ExperimentConfig, sigma: f64) -> Result<DisorderSpec, RunError> {
    let d = &cfg.disorder;
    DisorderSpec::new(d.lambda_bar, sigma, d.n_realizations, d.seed).map_err(|e| RunError::Config(e.to_string()))
}

fn fit_json(fit: &Result<FitResult, Error>) -> Value {
    match fit {
        Ok(f) => {
            let names = f.model.param_names();
            json!({
                "status": "ok",
                "params": names.iter().zip(f.params).map(|(n, p)| (n.to_string(), json!(p))).collect::<serde_json::Map<_, _>>(),
                "rel_err": names.iter().zip(f.param_rel_err).map(|(n, p)| (n.to_string(), json!(finite_or_null(p)))).collect::<serde_json::Map<_, _>>(),
                "residual": f.residual,
                "iterations": f.iterations,
            })
        }
        Err(e) => json!({ "status": "failed", "reason": e.to_string() }),
    }
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Exponential fit of `t_cr` against `sigma`, needing five or more points.
fn exp_fit(points: &[(f64, f64)]) -> Value {
    if points.len() < 5 {
        return json!({ "status": "skipped", "reason": format!("{} points, at least 5 needed", points.len()) });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    fit_json(&fit_curve(FitModel::ShiftedExponential, &xs, &ys))
}

fn disorder_oracle(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let times = cfg.sweep.t.values();
    let sigmas = cfg.disorder.sigma.values();
    let families = disorder_families(cfg)?;
    let mut table = ResultTable::new(cfg.experiment.columns());
    let mut curves = Vec::new();
    // (sigma index) -> saturated (alpha, value) pairs, for the quartic scan.
    let mut by_sigma: Vec<Vec<(f64, f64)>> = vec![Vec::new(); sigmas.len()];
    let mut by_family: Vec<Vec<(f64, f64)>> = vec![Vec::new(); families.len()];
    for (fi, (k, a, family)) in families.iter().enumerate() {
        for (si, &sigma) in sigmas.iter().enumerate() {
            let avg = quenched_oracle(family, &disorder_spec(cfg, sigma)?, &times)?;
            let sat = detect_saturation(&times, &avg.mean, cfg.disorder.sat_window, cfg.disorder.sat_tol);
            let (t_cr, value, status) = match sat {
                Ok(s) => (Some(s.t_cr), Some(s.value), "saturated"),
                Err(Error::NotSaturated) | Err(Error::InsufficientData { .. }) => (None, None, "not_saturated"),
                Err(e) => return Err(e.into()),
            };
            if let (Some(tc), Some(v)) = (t_cr, value) {
                by_family[fi].push((sigma, tc));
                if let Some(alpha) = a.as_f64() {
                    by_sigma[si].push((alpha, v));
                }
            }
            let tail = &avg.mean[avg.mean.len().saturating_sub(cfg.disorder.sat_window)..];
            curves.push(json!({
                "k": cell_json(k), "alpha": cell_json(a), "sigma": sigma, "status": status,
                "t_cr": t_cr, "sat_value": value,
                "tail_mean": tail.iter().sum::<f64>() / tail.len() as f64,
            }));
            for (j, &t) in times.iter().enumerate() {
                table.push_row(vec![
                    k.clone(),
                    a.clone(),
                    sigma.into(),
                    t.into(),
                    avg.mean[j].into(),
                    avg.stderr[j].into(),
                    t_cr.into(),
                    value.into(),
                    status.into(),
                ]);
            }
        }
    }
    let t_cr_fits: Vec<Value> = families
        .iter()
        .zip(&by_family)
        .map(|((k, a, _), pts)| json!({ "k": cell_json(k), "alpha": cell_json(a), "fit": exp_fit(pts) }))
        .collect();
    let sat_fits: Vec<Value> = if cfg.state.field == FieldKind::Coherent {
        sigmas
            .iter()
            .zip(&by_sigma)
            .map(|(&sigma, pts)| {
                if pts.len() < 5 {
                    return json!({ "sigma": sigma, "status": "skipped", "reason": format!("{} saturated points, at least 5 needed", pts.len()) });
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
                let fit = fit_curve(FitModel::QuarticEven, &xs, &ys);
                let crossing = fit.as_ref().ok().and_then(|f| quartic_crossing(f, 2.0));
                json!({ "sigma": sigma, "fit": fit_json(&fit), "alpha_cr": crossing })
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(RunOutput {
        table,
        results: json!({ "curves": curves, "t_cr_vs_sigma": t_cr_fits, "sat_value_vs_alpha": sat_fits }),
        warnings: Vec::new(),
        slice: None,
    })
}

fn disorder_realistic(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let times = cfg.sweep.t.values();
    let sigmas = cfg.disorder.sigma.values();
    let families = disorder_families(cfg)?;
    let mut table = ResultTable::new(cfg.experiment.columns());
    let mut curves = Vec::new();
    let mut by_family: Vec<Vec<(f64, f64)>> = vec![Vec::new(); families.len()];
    let mut ordering_ok = true;
    for (fi, (k, a, family)) in families.iter().enumerate() {
        for &sigma in &sigmas {
            let series = quench(family, &disorder_spec(cfg, sigma)?, &times)?;
            let ordered = series.ordering_holds(3.0);
            ordering_ok &= ordered;
            let loss = detect_violation_loss(&times, &series.q_realistic)?;
            let status = match loss {
                ViolationLoss::Lost { .. } => "lost",
                ViolationLoss::AlwaysViolating => "always_violating",
                ViolationLoss::NeverViolating => "never_violating",
            };
            if let Some(tc) = loss.t_cr() {
                by_family[fi].push((sigma, tc));
            }
            curves.push(json!({
                "k": cell_json(k), "alpha": cell_json(a), "sigma": sigma,
                "status": status, "t_cr": loss.t_cr(), "ordering_holds": ordered,
            }));
            for (j, &t) in times.iter().enumerate() {
                table.push_row(vec![
                    k.clone(),
                    a.clone(),
                    sigma.into(),
                    t.into(),
                    series.q_realistic[j].into(),
                    series.stderr_realistic[j].into(),
                    series.q_oracle[j].into(),
                    series.stderr_oracle[j].into(),
                    loss.t_cr().into(),
                    status.into(),
                ]);
            }
        }
    }
    let fits: Vec<Value> = families
        .iter()
        .zip(&by_family)
        .map(|((k, a, _), pts)| json!({ "k": cell_json(k), "alpha": cell_json(a), "fit": exp_fit(pts) }))
        .collect();
    let mut warnings = Vec::new();
    if !ordering_ok {
        warnings.push("realistic mean exceeds oracle mean by more than 3 stderr somewhere".to_string());
    }
    Ok(RunOutput {
        table,
        results: json!({ "curves": curves, "t_cr_vs_sigma": fits, "ordering_holds": ordering_ok }),
        warnings,
        slice: None,
    })
}

fn grid_spec(cfg: &ExperimentConfig) -> GridSpec {
    let w = &cfg.numerics.wigner;
    let amax = cfg.state.alpha.values().into_iter().fold(0.0, f64::max);
    GridSpec {
        radius: w.radius.unwrap_or(amax + 5.0),
        n_radial: w.n_radial,
        n_angular: w.n_angular,
        n_theta: w.n_theta,
        n_phi: w.n_phi,
        quad_tol: cfg.numerics.quad_tol,
    }
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Indices of strict interior local maxima.
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1)).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).collect()
}

fn wigner_comparison(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let times = cfg.sweep.t.values();
    let curves = curves(cfg)?;
    let params = params(cfg, cfg.dynamics.lambda);
    let q = q_range(cfg);
    let grid = grid_spec(cfg).build()?;
    let mut table = ResultTable::new(cfg.experiment.columns());
    let mut summary = Vec::new();
    let mut hits = 0;
    let mut drift = 0;
    for curve in &curves {
        let alpha = curve.labels[0].clone();
        let mut excess = Vec::new();
        let mut vols = Vec::new();
        for &t in &times {
            let Evolved::Pure(state) = curve.prepared.evolve(&params, t)? else {
                unreachable!("cat inputs stay pure")
            };
            let bell = maximize_bell(&state, q.clone())?;
            hits += bell.boundary_hit as usize;
            let ex = (bell.value - 2.0).max(0.0);
            let (v_n, integral, status) = match negativity_volume(&state, &grid) {
                Ok(n) => (Some(n.volume), n.integrals.integral, "ok"),
                Err(Error::NormalizationDrift { integral, .. }) => {
                    drift += 1;
                    (None, integral, "normalization_drift")
                }
                Err(e) => return Err(e.into()),
            };
            if let Some(v) = v_n {
                excess.push(ex);
                vols.push(v);
            }
            table.push_row(vec![
                alpha.clone(),
                t.into(),
                bell.value.into(),
                ex.into(),
                v_n.into(),
                integral.into(),
                status.into(),
            ]);
        }
        let (mv, mb) = (local_maxima(&vols), local_maxima(&excess));
        summary.push(json!({
            "alpha": cell_json(&alpha),
            "spearman": spearman(&vols, &excess),
            "v_n_maxima": mv.len(),
            "bell_excess_maxima": mb.len(),
            "extrema_coincide": mv == mb,
        }));
    }
    let mut warnings = Vec::new();
    boundary_warning(cfg, hits, &mut warnings);
    if drift > 0 {
        warnings.push(format!("{drift} points missed unit normalization; refine numerics.wigner"));
    }
    Ok(RunOutput {
        table,
        results: json!({ "curves": summary }),
        warnings,
        slice: None,
    })
}

fn wigner_slice(cfg: &ExperimentConfig, slice: &crate::config::WignerSlice) -> Result<ResultTable, RunError> {
    use ColumnKind::Float;
    let kind = cfg.experiment;
    if !matches!(kind, ExperimentKind::Cat | ExperimentKind::CatHeatmap | ExperimentKind::WignerComparison) {
        return Err(RunError::Config("output.wigner_slice applies to cat experiments only".into()));
    }
    let params = params(cfg, cfg.dynamics.lambda);
    let axis: Vec<f64> = (0..slice.points)
        .map(|i| -slice.half_width + 2.0 * slice.half_width * i as f64 / (slice.points - 1) as f64)
        .collect();
    let mut table = ResultTable::new(vec![
        ColumnSpec::new("alpha", Float, "displacement magnitude |alpha|"),
        ColumnSpec::new("t", Float, "time"),
        ColumnSpec::new("beta_re", Float, "Re beta"),
        ColumnSpec::new("beta_im", Float, "Im beta"),
        ColumnSpec::new("w", Float, "hybrid Wigner function at the configured qubit angles"),
    ]);
    for curve in curves(cfg)? {
        for &t in &slice.times {
            let Evolved::Pure(state) = curve.prepared.evolve(&params, t)? else {
                unreachable!("cat inputs stay pure")
            };
            let cells: Vec<(f64, f64, f64)> = axis
                .par_iter()
                .flat_map_iter(|&re| axis.iter().map(move |&im| (re, im)))
                .map(|(re, im)| (re, im, hybrid_wigner(&state, slice.theta, slice.phi, C64::new(re, im))))
                .collect();
            for (re, im, w) in cells {
                table.push_row(vec![curve.labels[0].clone(), t.into(), re.into(), im.into(), w.into()]);
            }
        }
    }
    Ok(table)
}
