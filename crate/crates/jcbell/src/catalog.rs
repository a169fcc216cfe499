//! The experiment catalog and per-experiment column schemas.

use crate::table::{ColumnKind, ColumnSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FockDynamics,
    Smsv,
    CoherentHeatmap,
    Mixture,
    Cat,
    CatHeatmap,
    DisorderOracle,
    DisorderRealistic,
    WignerComparison,
}

pub struct Entry {
    pub kind: ExperimentKind,
    pub figure: &'static str,
    pub title: &'static str,
    pub config_file: &'static str,
    pub config_text: &'static str,
    pub axes: &'static [&'static str],
}

macro_rules! entry {
    ($kind:ident, $fig:literal, $title:literal, $file:literal, [$($axis:literal),*]) => {
        Entry {
            kind: ExperimentKind::$kind,
            figure: $fig,
            title: $title,
            config_file: concat!("configs/", $file),
            config_text: include_str!(concat!("../configs/", $file)),
            axes: &[$($axis),*],
        }
    };
}

static ENTRIES: [Entry; 9] = [
    entry!(FockDynamics, "fig2", "Bell value and entropy for Fock inputs", "fig2_fock_dynamics.toml", ["k", "t"]),
    entry!(Smsv, "fig3", "Bell value and entropy for squeezed-vacuum inputs", "fig3_smsv.toml", ["r", "t"]),
    entry!(CoherentHeatmap, "fig4", "Bell value over displacement and time, coherent input", "fig4_coherent_heatmap.toml", ["alpha", "t"]),
    entry!(Mixture, "fig5", "Bell value for classically correlated mixtures", "fig5_mixture.toml", ["alpha", "p", "t"]),
    entry!(Cat, "fig6", "Bell value and entropy for cat inputs", "fig6_cat.toml", ["alpha", "t"]),
    entry!(CatHeatmap, "fig7", "Bell value over displacement and time, cat input", "fig7_cat_heatmap.toml", ["alpha", "t"]),
    entry!(DisorderOracle, "fig8", "Quenched Bell value, settings re-optimized per realization", "fig8_disorder_oracle.toml", ["param", "sigma", "t"]),
    entry!(DisorderRealistic, "fig9", "Quenched Bell value, settings frozen at the mean coupling", "fig9_disorder_realistic.toml", ["param", "sigma", "t"]),
    entry!(WignerComparison, "fig10", "Wigner negativity volume against Bell excess, cat input", "fig10_wigner_comparison.toml", ["alpha", "t"]),
];

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::FockDynamics,
        ExperimentKind::Smsv,
        ExperimentKind::CoherentHeatmap,
        ExperimentKind::Mixture,
        ExperimentKind::Cat,
        ExperimentKind::CatHeatmap,
        ExperimentKind::DisorderOracle,
        ExperimentKind::DisorderRealistic,
        ExperimentKind::WignerComparison,
    ];

    pub fn entry(self) -> &'static Entry {
        ENTRIES.iter().find(|e| e.kind == self).expect("every kind has an entry")
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FockDynamics => "fock_dynamics",
            ExperimentKind::Smsv => "smsv",
            ExperimentKind::CoherentHeatmap => "coherent_heatmap",
            ExperimentKind::Mixture => "mixture",
            ExperimentKind::Cat => "cat",
            ExperimentKind::CatHeatmap => "cat_heatmap",
            ExperimentKind::DisorderOracle => "disorder_oracle",
            ExperimentKind::DisorderRealistic => "disorder_realistic",
            ExperimentKind::WignerComparison => "wigner_comparison",
        }
    }

    /// Accepts the experiment name or its figure tag.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || k.entry().figure == s)
    }

    pub fn columns(self) -> Vec<ColumnSpec> {
        use ColumnKind::*;
        let c = ColumnSpec::new;
        let bell = || c("bell_max", Float, "maximal CHSH value over settings and q");
        let qstar = || c("q_star", Int, "pseudospin offset q attaining bell_max");
        let entropy = || c("entropy", Float, "qubit von Neumann entropy in bits");
        let t = || c("t", Float, "time");
        let alpha = || c("alpha", Float, "displacement magnitude |alpha|");
        match self {
            ExperimentKind::FockDynamics => {
                vec![c("k", Int, "initial Fock level"), t(), bell(), qstar(), entropy()]
            }
            ExperimentKind::Smsv => vec![c("r", Float, "squeezing strength"), t(), bell(), qstar(), entropy()],
            ExperimentKind::CoherentHeatmap | ExperimentKind::Cat => vec![alpha(), t(), bell(), qstar(), entropy()],
            ExperimentKind::CatHeatmap => vec![alpha(), t(), bell(), qstar()],
            ExperimentKind::Mixture => vec![alpha(), c("p", Float, "weight of the |alpha, e> branch"), t(), bell(), qstar()],
            ExperimentKind::DisorderOracle => vec![
                c("k", Int, "initial Fock level (Fock family)"),
                c("alpha", Float, "displacement magnitude (coherent family)"),
                c("sigma", Float, "standard deviation of the coupling"),
                t(),
                c("q_oracle", Float, "quenched mean with per-realization optimal settings"),
                c("stderr", Float, "standard error of q_oracle"),
                c("t_cr", Float, "saturation onset time; empty when not saturated"),
                c("sat_value", Float, "saturation value; empty when not saturated"),
                c("status", Text, "saturated | not_saturated"),
            ],
            ExperimentKind::DisorderRealistic => vec![
                c("k", Int, "initial Fock level (Fock family)"),
                c("alpha", Float, "displacement magnitude (coherent family)"),
                c("sigma", Float, "standard deviation of the coupling"),
                t(),
                c("q_real", Float, "quenched mean with settings frozen at the mean coupling"),
                c("stderr", Float, "standard error of q_real"),
                c("q_oracle", Float, "oracle quenched mean on the same realizations"),
                c("stderr_oracle", Float, "standard error of q_oracle"),
                c("t_cr", Float, "time of permanent loss of violation; empty otherwise"),
                c("status", Text, "lost | always_violating | never_violating"),
            ],
            ExperimentKind::WignerComparison => vec![
                alpha(),
                t(),
                bell(),
                c("bell_excess", Float, "max(bell_max - 2, 0)"),
                c("v_n", Float, "negative Wigner volume; empty on normalization drift"),
                c("w_integral", Float, "grid integral of W"),
                c("status", Text, "ok | normalization_drift"),
            ],
        }
    }
}

pub fn entries() -> &'static [Entry] {
    &ENTRIES
}

/// Machine-readable catalog, also used as the generated schema file.
pub fn catalog_json() -> serde_json::Value {
    serde_json::Value::Array(
        ENTRIES
            .iter()
            .map(|e| {
                serde_json::json!({
                    "name": e.kind.name(),
                    "figure": e.figure,
                    "title": e.title,
                    "default_config": e.config_file,
                    "axes": e.axes,
                    "columns": e.kind.columns(),
                })
            })
            .collect(),
    )
}
