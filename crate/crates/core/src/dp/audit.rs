//! Empirical privacy-loss audit of the one-dimensional mechanism.
//!
//! Two adjacent inputs release `f(D) = 0` and `f(D') = Δ` (geodesic distance
//! from the pole). Outputs are analysed in the arc-length chart of the
//! geodesic through the pole, where the wrapped density along the geodesic is
//! an ordinary Gaussian in the signed distance `u`. For outputs drawn from
//! `D` the privacy loss is `L(u) = ln p(u | 0) − ln p(u | Δ)
//! = (Δ² − 2Δu) / (2σ²)`, and the audit reports its `(1 − δ)` quantile.
//! Working in the chart rather than in ball coordinates avoids the
//! saturation of `tanh` near the boundary at large `σ`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use super::{calibrate_sigma, calibration_constant};
use crate::error::{Error, Result};

/// Tolerance factor applied to `ε` when judging the audit.
pub const AUDIT_SLACK: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMode {
    /// Monte Carlo quantile; needs at least `100/δ` trials.
    Empirical,
    /// Closed-form Gaussian quantile of the loss.
    AnalyticTail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub sensitivity: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    /// Multiplies the calibrated `σ`; `0.5` simulates an under-noised mechanism.
    pub sigma_scale: f64,
    pub mode: AuditMode,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            sensitivity: 1.0,
            epsilon: 1.0,
            delta: 1e-3,
            trials: 200_000,
            sigma_scale: 1.0,
            mode: AuditMode::Empirical,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub sensitivity: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub mode: AuditMode,
    pub sigma: f64,
    pub c_const: f64,
    pub quantile: f64,
    pub epsilon_hat: f64,
    pub passed: bool,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            AuditMode::Empirical => "empirical",
            AuditMode::AnalyticTail => "analytic_tail",
        };
        writeln!(f, "sensitivity = {}", self.sensitivity)?;
        writeln!(f, "epsilon = {}", self.epsilon)?;
        writeln!(f, "delta = {}", self.delta)?;
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "mode = {mode}")?;
        writeln!(f, "sigma = {}", self.sigma)?;
        writeln!(f, "c_const = {}", self.c_const)?;
        writeln!(f, "quantile = {}", self.quantile)?;
        writeln!(f, "epsilon_hat = {}", self.epsilon_hat)?;
        writeln!(f, "verdict = {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Runs the audit described in the module docs.
pub fn privacy_audit_1d(cfg: &AuditConfig) -> Result<AuditReport> {
    let AuditConfig {
        sensitivity,
        epsilon,
        delta,
        trials,
        sigma_scale,
        mode,
        seed,
    } = *cfg;
    if !(sigma_scale > 0.0) || !sigma_scale.is_finite() {
        return Err(Error::param(format!("sigma_scale {sigma_scale} must be > 0")));
    }
    let sigma = calibrate_sigma(sensitivity, epsilon, delta)? * sigma_scale;
    let c_const = calibration_constant(delta)?;
    let quantile = 1.0 - delta;
    if mode == AuditMode::Empirical {
        if trials < 100_000 {
            return Err(Error::param(format!("audit needs at least 1e5 trials, got {trials}")));
        }
        if (trials as f64) < 100.0 / delta {
            return Err(Error::param(format!(
                "{trials} trials cannot resolve delta = {delta}; need at least {} or use analytic_tail mode",
                (100.0 / delta).ceil()
            )));
        }
    }
    let epsilon_hat = if sensitivity == 0.0 {
        0.0
    } else {
        let loss = |u: f64| (sensitivity * sensitivity - 2.0 * sensitivity * u) / (2.0 * sigma * sigma);
        match mode {
            AuditMode::AnalyticTail => {
                // u ~ N(0, σ²): the loss is decreasing in u, so its upper
                // quantile sits at the lower quantile of u.
                let z = StatNormal::standard().inverse_cdf(quantile);
                loss(-sigma * z)
            }
            AuditMode::Empirical => {
                let normal = Normal::new(0.0, sigma).map_err(|e| Error::Numeric(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut losses: Vec<f64> = (0..trials).map(|_| loss(normal.sample(&mut rng))).collect();
                let k = ((quantile * trials as f64).ceil() as usize).clamp(1, trials) - 1;
                let (_, q, _) = losses.select_nth_unstable_by(k, f64::total_cmp);
                *q
            }
        }
    };
    Ok(AuditReport {
        sensitivity,
        epsilon,
        delta,
        trials,
        mode,
        sigma,
        c_const,
        quantile,
        epsilon_hat,
        passed: epsilon_hat <= AUDIT_SLACK * epsilon,
    })
}
