//! Command implementations for the `neuro-l2l` binary.
//!
//! Each subcommand lives in [`cmd`] as a plain function over a small `Args`
//! struct, so integration tests can drive commands in-process; `main.rs`
//! only parses flags and maps errors to exit codes (2 for configuration
//! problems, 3 for runtime failures).
//!
//! Artifact conventions shared by all commands:
//!
//! - every CSV and JSON artifact embeds the FNV-1a hash of the effective
//!   config, so outputs can be traced back to their inputs;
//! - CSVs are RFC 4180 (CRLF, minimal quoting) with floats in shortest
//!   round-trip form, making reruns byte-identical for a given config and
//!   worker count alike;
//! - the `NEURO_L2L_SEED` environment variable overrides the config's
//!   `master_seed` before hashing or running.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use neuro_l2l_core::config::{CompareConfig, ExperimentConfig};
use neuro_l2l_core::{Error, Result};

pub mod cmd;
pub mod plot;
pub mod table;

/// Environment variable that overrides `master_seed` in any loaded config.
pub const SEED_ENV: &str = "NEURO_L2L_SEED";

/// The winning hyperparameter vector of a run, as written to
/// `best_theta.json` and consumed by `eval-agent`, `learning-curves`, and
/// `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaArtifact {
    /// Hash of the config that produced this vector.
    pub config_hash: String,
    pub master_seed: u64,
    /// Mean normalized score on the run's held-out batch.
    pub holdout_mean: f64,
    /// Dimension names, in the search space's order.
    pub names: Vec<String>,
    /// Optimizer-coordinate vector; the portable representation.
    pub encoded: Vec<f64>,
    /// Decoded values per dimension, for human inspection.
    pub decoded: Vec<f64>,
}

/// Reads and parses the seed override, if present.
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))),
        Err(_) => Ok(None),
    }
}

/// Reads a JSON file into `T`; a missing or unreadable file is a
/// configuration error naming the path.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads an experiment config and applies the environment seed override.
pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = load_json(path)?;
    if let Some(seed) = seed_override()? {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Loads a comparison config and applies the environment seed override.
pub fn load_compare_config(path: &Path) -> Result<CompareConfig> {
    let mut cfg: CompareConfig = load_json(path)?;
    if let Some(seed) = seed_override()? {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Output directory: flag wins over the config's `output_dir`, current
/// directory otherwise. Created if absent.
pub fn resolve_out_dir(flag: Option<&Path>, from_config: Option<&Path>) -> Result<PathBuf> {
    let dir = flag
        .or(from_config)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| Error::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| Error::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Mean and standard error of the mean; sem is 0 for fewer than 2 values.
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Percentile-bootstrap 95% interval of the mean.
pub fn bootstrap_mean_ci(values: &[f64], n_boot: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut means: Vec<f64> = (0..n_boot)
        .map(|_| {
            let sum: f64 = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
            sum / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).expect("bootstrap means are finite"));
    let pick = |q: f64| means[((q * (n_boot - 1) as f64).round() as usize).min(n_boot - 1)];
    (pick(0.025), pick(0.975))
}

#[cfg(test)]
mod tests {
    use super::*;
    use neuro_l2l_core::seed::{stream, StreamRole};

    #[test]
    fn mean_sem_matches_hand_numbers() {
        let (mean, sem) = mean_sem(&[1.0, 2.0, 3.0, 4.0]);
        assert!((mean - 2.5).abs() < 1e-12);
        // Sample sd of 1..4 is sqrt(5/3); sem divides by sqrt(4).
        assert!((sem - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_interval_brackets_the_mean_of_a_spread_sample() {
        let values: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let mut rng = stream(7, StreamRole::Analysis, &[2]);
        let (lo, hi) = bootstrap_mean_ci(&values, 2000, &mut rng);
        assert!(lo < 4.5 && 4.5 < hi, "ci [{lo}, {hi}] must cover 4.5");
        assert!(hi - lo < 1.5, "ci [{lo}, {hi}] too wide");
    }

    #[test]
    fn constant_sample_bootstrap_is_degenerate() {
        let mut rng = stream(7, StreamRole::Analysis, &[2]);
        let (lo, hi) = bootstrap_mean_ci(&[0.25; 50], 500, &mut rng);
        assert_eq!((lo, hi), (0.25, 0.25));
    }
}
