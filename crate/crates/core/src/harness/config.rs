use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{solver_by_name, SolverParams, DEFAULT_NG_LAMBDA, DEFAULT_R_MAX, SOLVER_NAMES};

/// Environment variable holding the worker count for parallel trials.
pub const THREADS_ENV: &str = "IRL_LAB_THREADS";

/// `points` log-spaced integers from `lo` to `hi`, rounded and deduplicated.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    assert!(lo >= 1 && hi >= lo && points >= 1, "invalid grid");
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}

fn default_gamma() -> f64 {
    0.1
}
fn default_window() -> f64 {
    0.15
}
fn default_grid() -> Vec<u64> {
    log_grid(10, 1_000_000, 16)
}
fn default_trials() -> usize {
    100
}
fn default_length() -> usize {
    10
}
fn default_solvers() -> Vec<String> {
    SOLVER_NAMES.iter().map(|s| s.to_string()).collect()
}
fn default_smoothing() -> f64 {
    1e-3
}
fn default_lambda() -> f64 {
    DEFAULT_NG_LAMBDA
}
fn default_r_max() -> f64 {
    DEFAULT_R_MAX
}

/// Monte Carlo reward-recovery experiment. Field names match the JSON
/// config file; every field except `n`, `k` and `target_beta` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub target_beta: f64,
    /// Relative tolerance on the measured separability of the instance.
    #[serde(default = "default_window")]
    pub beta_window: f64,
    /// Observed transitions per trial, ascending.
    #[serde(default = "default_grid")]
    pub m_grid: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Transitions per trajectory; trials concatenate trajectories until
    /// `m` transitions are observed.
    #[serde(default = "default_length")]
    pub trajectory_length: usize,
    /// Observe one long trajectory of `m` transitions instead.
    #[serde(default)]
    pub single_trajectory: bool,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<String>,
    #[serde(default)]
    pub base_seed: u64,
    /// Seed of the generated instance; defaults to `base_seed`.
    #[serde(default)]
    pub instance_seed: Option<u64>,
    /// Draw a new instance for every trial.
    #[serde(default)]
    pub fresh_instance: bool,
    /// Hand the solvers the true transitions instead of estimates.
    #[serde(default)]
    pub true_transitions: bool,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default = "default_lambda")]
    pub ng_lambda: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Worker count; the environment variable takes precedence.
    #[serde(default)]
    pub threads: Option<usize>,
    /// External upper bound on the sample complexity, drawn on the plot.
    #[serde(default)]
    pub upper_line: Option<f64>,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_plot: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(n: usize, k: usize, target_beta: f64) -> Self {
        ExperimentConfig {
            n,
            k,
            gamma: default_gamma(),
            target_beta,
            beta_window: default_window(),
            m_grid: default_grid(),
            trials: default_trials(),
            trajectory_length: default_length(),
            single_trajectory: false,
            solvers: default_solvers(),
            base_seed: 0,
            instance_seed: None,
            fresh_instance: false,
            true_transitions: false,
            smoothing: default_smoothing(),
            ng_lambda: default_lambda(),
            r_max: default_r_max(),
            threads: None,
            upper_line: None,
            out_csv: None,
            out_plot: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            ng_lambda: self.ng_lambda,
            r_max: self.r_max,
        }
    }

    pub fn instance_seed(&self) -> u64 {
        self.instance_seed.unwrap_or(self.base_seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("need n >= 2, got {}", self.n));
        }
        if self.k < 2 {
            return bad(format!("need k >= 2, got {}", self.k));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.target_beta > 0.0) {
            return bad(format!("target_beta must be positive, got {}", self.target_beta));
        }
        if !(self.beta_window >= 0.0 && self.beta_window < 1.0) {
            return bad(format!("beta_window must lie in [0, 1), got {}", self.beta_window));
        }
        if self.m_grid.is_empty() || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("m_grid must be nonempty and strictly ascending".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.trajectory_length == 0 {
            return bad("trajectory_length must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers selected".into());
        }
        if !(self.smoothing >= 0.0) {
            return bad(format!("smoothing must be nonnegative, got {}", self.smoothing));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let params = self.solver_params();
        for s in &self.solvers {
            solver_by_name(s, &params)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_six_decades() {
        let g = default_grid();
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], 10);
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn json_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"n": 7, "k": 7, "target_beta": 0.0032}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::new(7, 7, 0.0032));
        assert!(ExperimentConfig::from_json(r#"{"n": 7, "k": 1, "target_beta": 0.0032}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"n": 7, "k": 7, "target_beta": 0.0032, "solvers": ["mwal"]}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"n": 7, "k": 7, "target_beta": 0.0032, "m_grid": [10, 10]}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(r#"{"n": 7, "k": 7, "target_beta": 0.1, "typo": 1}"#).is_err());
    }
}
