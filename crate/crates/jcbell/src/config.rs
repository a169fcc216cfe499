//! Experiment configuration: TOML sections per module plus dotted-key overrides.

use crate::catalog::ExperimentKind;
use crate::RunError;
use jcbell_core::jcdynamics::Picture;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

/// A sweep axis: an explicit list or an inclusive uniform range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Axis {
    pub fn range(start: f64, stop: f64, points: usize) -> Self {
        Axis::Range { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => {
                    let h = (stop - start) / (*n - 1) as f64;
                    (0..*n).map(|i| if i + 1 == *n { *stop } else { start + h * i as f64 }).collect()
                }
            },
        }
    }

    fn check(&self, name: &str) -> Result<(), RunError> {
        let v = self.values();
        if v.is_empty() {
            return Err(RunError::Config(format!("axis `{name}` is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(RunError::Config(format!("axis `{name}` has non-finite values")));
        }
        Ok(())
    }

    fn check_nonneg(&self, name: &str) -> Result<(), RunError> {
        self.check(name)?;
        if self.values().iter().any(|&x| x < 0.0) {
            return Err(RunError::Config(format!("axis `{name}` must be non-negative")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Fock,
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    /// Field family for the disorder experiments.
    pub field: FieldKind,
    /// Fock levels.
    pub k: Vec<usize>,
    /// Squeezing strengths.
    pub r: Axis,
    pub squeeze_phase: f64,
    /// Displacement magnitudes.
    pub alpha: Axis,
    pub alpha_phase: f64,
    /// Mixture weight of the `|α, e⟩` branch.
    pub p: Axis,
    /// Cat amplitudes as `[re, im]`.
    pub a1: [f64; 2],
    pub a2: [f64; 2],
    /// Product-state atom as `[g_re, g_im, e_re, e_im]`.
    pub atom: [f64; 4],
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            field: FieldKind::Coherent,
            k: vec![0, 4, 8],
            r: Axis::List(vec![0.2, 1.0]),
            squeeze_phase: 0.0,
            alpha: Axis::List(vec![0.2]),
            alpha_phase: 0.0,
            p: Axis::List(vec![0.8]),
            a1: [FRAC_1_SQRT_2, 0.0],
            a2: [FRAC_1_SQRT_2, 0.0],
            atom: [0.0, 0.0, 1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PictureName {
    Interaction,
    Schroedinger,
}

impl From<PictureName> for Picture {
    fn from(p: PictureName) -> Self {
        match p {
            PictureName::Interaction => Picture::Interaction,
            PictureName::Schroedinger => Picture::Schroedinger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub lambda: f64,
    pub omega0: f64,
    pub picture: PictureName,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            omega0: 0.0,
            picture: PictureName::Interaction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderConfig {
    pub lambda_bar: f64,
    pub sigma: Axis,
    pub n_realizations: usize,
    pub seed: u64,
    /// Saturation window in grid points.
    pub sat_window: usize,
    pub sat_tol: f64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        use jcbell_core::disorder::{DEFAULT_REALIZATIONS, DEFAULT_SAT_TOL, DEFAULT_SAT_WINDOW};
        Self {
            lambda_bar: 1.0,
            sigma: Axis::List(vec![0.1]),
            n_realizations: DEFAULT_REALIZATIONS,
            seed: 7,
            sat_window: DEFAULT_SAT_WINDOW,
            sat_tol: DEFAULT_SAT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t: Axis,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t: Axis::range(0.0, 10.0, 400),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerGridConfig {
    /// Phase-plane radius; `max |α| + 5` when absent.
    pub radius: Option<f64>,
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for WignerGridConfig {
    fn default() -> Self {
        Self {
            radius: None,
            n_radial: 96,
            n_angular: 96,
            n_theta: 32,
            n_phi: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// Fock cutoff; chosen per state when absent.
    pub cutoff: Option<usize>,
    pub tail_tol: f64,
    pub quad_tol: f64,
    pub q_max: usize,
    pub wigner: WignerGridConfig,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            cutoff: None,
            tail_tol: 1e-10,
            quad_tol: jcbell_core::wigner::DEFAULT_QUAD_TOL,
            q_max: 5,
            wigner: WignerGridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
}

/// Phase-plane slice of `W` at fixed qubit angles, dumped in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerSlice {
    pub theta: f64,
    pub phi: f64,
    pub half_width: f64,
    pub points: usize,
    pub times: Vec<f64>,
}

impl Default for WignerSlice {
    fn default() -> Self {
        Self {
            theta: 0.0,
            phi: 0.0,
            half_width: 3.0,
            points: 61,
            times: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    /// File stem; the experiment name when absent.
    pub name: Option<String>,
    pub wigner_slice: Option<WignerSlice>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            name: None,
            wigner_slice: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub disorder: DisorderConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, RunError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Default configuration of an experiment, as shipped in `configs/`.
    pub fn default_for(kind: ExperimentKind) -> Self {
        Self::from_toml_str(kind.entry().config_text, &[]).expect("shipped config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn output_stem(&self) -> String {
        self.output.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::Config(m.to_string()));
        let s = &self.state;
        let finite = |x: f64| x.is_finite();
        if s.k.is_empty() {
            return bad("state.k is empty");
        }
        s.r.check_nonneg("state.r")?;
        s.alpha.check_nonneg("state.alpha")?;
        s.p.check("state.p")?;
        if s.p.values().iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("state.p must lie in [0, 1]");
        }
        if !finite(s.squeeze_phase) || !finite(s.alpha_phase) {
            return bad("state phases must be finite");
        }
        let amp = s.a1[0].powi(2) + s.a1[1].powi(2) + s.a2[0].powi(2) + s.a2[1].powi(2);
        if !(amp > 0.0) || !amp.is_finite() {
            return bad("state.a1 and state.a2 cannot both vanish");
        }
        let atom: f64 = s.atom.iter().map(|x| x * x).sum();
        if !(atom > 0.0) || !atom.is_finite() {
            return bad("state.atom must be a nonzero vector");
        }
        let d = &self.dynamics;
        if !(d.lambda > 0.0) || !finite(d.lambda) {
            return bad("dynamics.lambda must be positive");
        }
        if !(d.omega0 >= 0.0) || !finite(d.omega0) {
            return bad("dynamics.omega0 must be non-negative");
        }
        let g = &self.disorder;
        if !(g.lambda_bar > 0.0) || !finite(g.lambda_bar) {
            return bad("disorder.lambda_bar must be positive");
        }
        g.sigma.check_nonneg("disorder.sigma")?;
        if g.n_realizations == 0 || g.sat_window == 0 {
            return bad("disorder.n_realizations and disorder.sat_window must be positive");
        }
        if !(g.sat_tol > 0.0) {
            return bad("disorder.sat_tol must be positive");
        }
        self.sweep.t.check_nonneg("sweep.t")?;
        let n = &self.numerics;
        if n.cutoff == Some(0) {
            return bad("numerics.cutoff must be positive");
        }
        if !(n.tail_tol > 0.0) || !(n.quad_tol > 0.0) {
            return bad("numerics.tail_tol and numerics.quad_tol must be positive");
        }
        let w = &n.wigner;
        if w.n_radial == 0 || w.n_angular == 0 || w.n_theta == 0 || w.n_phi == 0 {
            return bad("numerics.wigner node counts must be positive");
        }
        if matches!(w.radius, Some(r) if !(r > 0.0)) {
            return bad("numerics.wigner.radius must be positive");
        }
        if let Some(sl) = &self.output.wigner_slice {
            if sl.points < 2 || !(sl.half_width > 0.0) || sl.times.is_empty() {
                return bad("output.wigner_slice needs points >= 2, half_width > 0 and at least one time");
            }
        }
        Ok(())
    }
}

/// Applies `a.b.c=value`; the value is read as a TOML literal and falls back
/// to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), RunError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RunError::Config(format!("malformed key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| RunError::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
