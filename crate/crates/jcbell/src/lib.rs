//! Experiment runner on top of [`jcbell_core`]: TOML configs, a catalog of
//! named experiments, CSV result tables and JSON metadata.

pub mod catalog;
pub mod config;
pub mod experiments;
pub mod table;

pub use jcbell_core as core;

use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "JCBELL_OUT";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<jcbell_core::Error> for RunError {
    fn from(e: jcbell_core::Error) -> Self {
        match e {
            jcbell_core::Error::InvalidParameter(_) => RunError::Config(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl RunError {
    /// 1 for configuration problems, 2 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Files written by [`run_to_dir`].
#[derive(Debug, Clone)]
pub struct Written {
    pub table: PathBuf,
    pub metadata: PathBuf,
    pub schema: PathBuf,
    pub config: PathBuf,
    pub slice: Option<PathBuf>,
}

/// Runs an experiment and writes `<stem>.csv`, `<stem>.json`,
/// `<stem>.config.toml` and `schema.json` into `dir`.
pub fn run_to_dir(cfg: &config::ExperimentConfig, dir: &Path) -> Result<(experiments::RunOutput, Written), RunError> {
    let out = experiments::run(cfg)?;
    let stem = cfg.output_stem();
    let meta = experiments::metadata(cfg, &out);
    table::write_outputs(dir, &stem, &out.table, &meta)?;
    let (table, metadata) = table::table_paths(dir, &stem);
    let schema = dir.join("schema.json");
    std::fs::write(&schema, serde_json::to_string_pretty(&catalog::catalog_json())? + "\n")?;
    let config = dir.join(format!("{stem}.config.toml"));
    std::fs::write(&config, cfg.to_toml())?;
    let slice = match &out.slice {
        Some(s) => {
            let p = dir.join(format!("{stem}.wigner_slice.csv"));
            s.write_csv(&p)?;
            Some(p)
        }
        None => None,
    };
    Ok((
        out,
        Written {
            table,
            metadata,
            schema,
            config,
            slice,
        },
    ))
}
