//! Experiment runner for the `osa-core` models: reads a TOML experiment,
//! runs curve, chain, simulate, optimize or compare mode, and writes CSV.

use std::path::PathBuf;

pub mod config;
pub mod experiment;
pub mod table;

pub use config::{parse_config, ExperimentConfig, Mode};
pub use experiment::run_experiment;
pub use table::{emit_csv, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: osa_core::Error,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit code: 2 when nothing feasible was found, else 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Model {
                source: osa_core::Error::Infeasible { .. },
                ..
            } => 2,
            _ => 1,
        }
    }
}
