//! Hierarchy-aware differential privacy: sensitivities, the wrapped Gaussian
//! mechanism, noise calibration and generation, and a privacy-loss audit.

mod audit;
mod sensitivity;
mod wrapped;

pub use audit::{privacy_audit_1d, AuditConfig, AuditMode, AuditReport};
pub use sensitivity::{
    hierarchy_sensitivities, inter_hierarchy_sensitivity, intra_hierarchy_sensitivity, DEFAULT_CLIP_TAU,
};
pub use wrapped::{
    gamma_factor, gamma_of_distance, wrapped_gaussian_coordinate_density, wrapped_gaussian_density,
    wrapped_gaussian_log_density, wrapped_gaussian_sample,
};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conformal factor at the origin; noise lives in the tangent space there.
pub const LAMBDA_ORIGIN: f64 = 2.0;

/// Upper bound used for the volume correction `γ` during calibration.
pub const GAMMA_BOUND: f64 = 1.0;

/// Radius (inter-hierarchy) and angle (intra-hierarchy) sensitivities, both
/// measured in Poincaré-norm units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPair {
    pub delta_r: f64,
    pub delta_alpha: f64,
}

impl SensitivityPair {
    pub fn new(delta_r: f64, delta_alpha: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(delta_r) || !ok(delta_alpha) {
            return Err(Error::param(format!(
                "sensitivities must be finite and ≥ 0, got ({delta_r}, {delta_alpha})"
            )));
        }
        Ok(Self { delta_r, delta_alpha })
    }

    pub fn zero() -> Self {
        Self {
            delta_r: 0.0,
            delta_alpha: 0.0,
        }
    }
}

/// `(ε, δ)` together with the fraction `β` of `ε` spent on the radius term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
    #[serde(default = "half")]
    beta: f64,
}

fn half() -> f64 {
    0.5
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64, beta: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_delta(delta)?;
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!("beta {beta} outside (0, 1)")));
        }
        Ok(Self { epsilon, delta, beta })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.epsilon, self.delta, self.beta).map(|_| ())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.epsilon, self.delta, beta)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.delta, self.beta)
    }

    /// `(ε_r, ε_α)`.
    pub fn split(&self) -> (f64, f64) {
        split_epsilon(self.beta, self.epsilon)
    }
}

/// `(βε, ε − βε)`; the second term is formed by subtraction so the parts add
/// back to `ε`.
pub fn split_epsilon(beta: f64, epsilon: f64) -> (f64, f64) {
    let r = beta * epsilon;
    (r, epsilon - r)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param(format!("epsilon {epsilon} outside (0, 1]")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Calibrated noise scales for the two hierarchy terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale {
    pub sigma_r: f64,
    pub sigma_alpha: f64,
    /// Multiplier `c` in `σ = c·Δ·γ/ε`.
    pub c_const: f64,
}

/// `max(√(2 ln(1.25 γ / δ)), 3/2)`, nudged one ulp up so that `c²` strictly
/// exceeds the bound.
pub fn calibration_constant(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let c = (2.0 * (1.25 * GAMMA_BOUND / delta).ln()).sqrt();
    Ok(c.next_up().max(1.5))
}

/// `σ = c·Δ·γ/ε` with the log-map at the origin acting as the identity on the
/// sensitivity magnitude.
pub fn calibrate_sigma(sensitivity: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if !(sensitivity >= 0.0) || !sensitivity.is_finite() {
        return Err(Error::param(format!(
            "sensitivity {sensitivity} must be finite and ≥ 0"
        )));
    }
    check_epsilon(epsilon)?;
    Ok(calibration_constant(delta)? * sensitivity * GAMMA_BOUND / epsilon)
}

/// Both scales for a budget split.
pub fn calibrate_noise_scale(sens: SensitivityPair, budget: &PrivacyBudget) -> Result<NoiseScale> {
    let (eps_r, eps_a) = budget.split();
    Ok(NoiseScale {
        sigma_r: calibrate_sigma(sens.delta_r, eps_r, budget.delta())?,
        sigma_alpha: calibrate_sigma(sens.delta_alpha, eps_a, budget.delta())?,
        c_const: calibration_constant(budget.delta())?,
    })
}

/// One round of hierarchy noise in reparameterised form: the raw standard
/// normal draws `ζ` are kept so that `η = (σ/λ_0)·ζ` can be differentiated
/// with respect to `σ`.
#[derive(Clone, Debug)]
pub struct HierarchyNoise {
    pub scale: NoiseScale,
    pub epsilon_r: f64,
    pub epsilon_alpha: f64,
    pub zeta_r: Array2<f64>,
    pub zeta_alpha: Array2<f64>,
}

impl HierarchyNoise {
    /// Radius noise `η_r`, one tangent vector per row.
    pub fn eta_r(&self) -> Array2<f64> {
        &self.zeta_r * (self.scale.sigma_r / LAMBDA_ORIGIN)
    }

    /// Angle noise `η_α`.
    pub fn eta_alpha(&self) -> Array2<f64> {
        &self.zeta_alpha * (self.scale.sigma_alpha / LAMBDA_ORIGIN)
    }
}

/// Fills a `rows × dim` matrix with standard normal draws in row-major order.
pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, dim), || rng.sample(StandardNormal))
}

/// Draws `rows` independent tangent-space noise vectors of dimension `dim` for
/// each hierarchy term. Each row is the origin log-map of a wrapped Gaussian
/// sample, so it can be added directly to a Euclidean hidden vector.
pub fn generate_hierarchy_noise<R: Rng + ?Sized>(
    sens: SensitivityPair,
    budget: &PrivacyBudget,
    rows: usize,
    dim: usize,
    rng: &mut R,
) -> Result<HierarchyNoise> {
    if dim == 0 {
        return Err(Error::param("noise dimension must be ≥ 1"));
    }
    let scale = calibrate_noise_scale(sens, budget)?;
    let (epsilon_r, epsilon_alpha) = budget.split();
    let zeta_r = standard_normal_matrix(rows, dim, rng);
    let zeta_alpha = standard_normal_matrix(rows, dim, rng);
    Ok(HierarchyNoise {
        scale,
        epsilon_r,
        epsilon_alpha,
        zeta_r,
        zeta_alpha,
    })
}
