//! Experiment harness: private outlier counts (scenario 1), private top-h
//! subspace discovery (scenario 2), global-bound sweeps and the oracle
//! verification suite.

pub mod config;
pub mod scenarios;
pub mod verify;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub use config::{RunConfig, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] dpoutlier_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 1 config error, 2 verification failure, 3 resource limit.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 2,
            CliError::Core(dpoutlier_core::Error::ResourceLimit { .. }) => 3,
            _ => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// SplitMix64 finalizer over the base seed and two stream indices, so every
/// (epsilon, repetition) cell gets an independent, reproducible RNG.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes to `path`, creating parent directories, or to stdout.
pub fn emit_rows<T: Serialize>(rows: &[T], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_rows(rows, std::fs::File::create(path)?)
        }
        None => write_rows(rows, std::io::stdout().lock()),
    }
}
