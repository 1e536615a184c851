//! Command implementations behind the `molpack` binary.
//!
//! Each `cmd_*` function reads a resolved [`RunConfig`], writes its reports
//! under `config.out` and returns a summary. CSV reports start with a
//! `# molpack <version> config_hash=<sha256>` line; JSON reports carry the
//! same data in a `header` object.

mod commands;
mod config;

pub use commands::{
    build_graphs, cmd_bench, cmd_forward, cmd_pack, cmd_plan, cmd_stats, load_molecules,
    BenchSummary, ForwardSummary, PackSummary, PlanOutcome, StatsSummary, SweepRow,
};
pub use config::{BenchConfig, GraphKind, Overrides, Precision, RunConfig};

use std::path::Path;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::kernels::KernelError;
use crate::moldata::MolError;
use crate::packing::PackError;
use crate::planner::PlanError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no molecules parsed from {0}")]
    NoMolecules(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Mol(#[from] MolError),
    #[error(transparent)]
    Pack(#[from] PackError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::NoMolecules(_) => "no_molecules",
            CliError::Io { .. } => "io",
            CliError::Mol(_) => "moldata",
            CliError::Pack(PackError::Capacity { .. } | PackError::EdgeCapacity { .. }) => "capacity",
            CliError::Pack(_) => "packing",
            CliError::Kernel(_) => "kernel",
            CliError::Plan(PlanError::Infeasible { .. }) => "infeasible",
            CliError::Plan(_) => "planner",
            CliError::Check(_) => "check",
        }
    }

    /// One-line JSON failure record for stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

fn header(cfg: &RunConfig) -> serde_json::Value {
    json!({
        "tool": "molpack",
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
    })
}

fn csv_header(cfg: &RunConfig) -> String {
    format!("# molpack {} config_hash={}\n", env!("CARGO_PKG_VERSION"), cfg.hash())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_csv(cfg: &RunConfig, name: &str, body: &str) -> Result<std::path::PathBuf, CliError> {
    let path = cfg.out.join(name);
    write_file(&path, &(csv_header(cfg) + body))?;
    Ok(path)
}

/// Writes `value` with a `header` object added at the top level.
fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, value: &T) -> Result<std::path::PathBuf, CliError> {
    let mut v = serde_json::to_value(value).expect("report serialises");
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("header".into(), header(cfg));
    }
    let path = cfg.out.join(name);
    write_file(&path, &(serde_json::to_string_pretty(&v).expect("report serialises") + "\n"))?;
    Ok(path)
}
