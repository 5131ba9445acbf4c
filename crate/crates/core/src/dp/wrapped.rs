//! Wrapped Gaussian on the Poincaré ball.
//!
//! A draw is `z = exp_μ(v / λ_μ)` with `v ~ N(0, σ²I)`; its density is
//! `N(λ_μ log_μ(z) | 0, σ²I) · γ(z|μ)` with `γ = (d / sinh d)^{n−1}`.
//! The density is taken with respect to the Riemannian volume of the ball,
//! `dvol = λ(z)^n dz`, which is what makes it integrate to one; use
//! [`wrapped_gaussian_coordinate_density`] when integrating in plain ball
//! coordinates.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hyp::{self, BallPoint, TangentVector};

/// `(d / sinh d)^{n−1}`, with the ratio replaced by its series near `d = 0`.
pub fn gamma_of_distance(d: f64, n: usize) -> f64 {
    let ratio = if d < 1e-4 { 1.0 - d * d / 6.0 } else { d / d.sinh() };
    ratio.powi(n.saturating_sub(1) as i32)
}

/// Volume correction `γ(z|μ)` at the geodesic distance between `mu` and `z`.
pub fn gamma_factor(z: &BallPoint, mu: &BallPoint) -> Result<f64> {
    let d = hyp::poincare_distance(mu, z)?;
    Ok(gamma_of_distance(d, mu.dim()))
}

/// Draws one point from the wrapped Gaussian centred at `mu`.
pub fn wrapped_gaussian_sample<R: Rng + ?Sized>(mu: &BallPoint, sigma: f64, rng: &mut R) -> Result<BallPoint> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma {sigma} must be finite and ≥ 0")));
    }
    if sigma == 0.0 {
        return Ok(mu.clone());
    }
    let lambda = hyp::conformal_factor(mu);
    let v: Vec<f64> = (0..mu.dim())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal) / lambda)
        .collect();
    Ok(hyp::exp_map(&TangentVector::new(mu.clone(), v)?))
}

/// Log-density with respect to the Riemannian volume.
pub fn wrapped_gaussian_log_density(z: &BallPoint, mu: &BallPoint, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("density needs sigma > 0, got {sigma}")));
    }
    let n = mu.dim();
    let lambda = hyp::conformal_factor(mu);
    let u = hyp::log_map(mu, z)?;
    let u2 = hyp::norm_sq(u.coords()) * lambda * lambda;
    let log_normal = -0.5 * n as f64 * (2.0 * PI * sigma * sigma).ln() - u2 / (2.0 * sigma * sigma);
    Ok(log_normal + gamma_factor(z, mu)?.ln())
}

/// Density with respect to the Riemannian volume.
pub fn wrapped_gaussian_density(z: &BallPoint, mu: &BallPoint, sigma: f64) -> Result<f64> {
    wrapped_gaussian_log_density(z, mu, sigma).map(f64::exp)
}

/// Density with respect to Lebesgue measure on ball coordinates, i.e. the
/// Riemannian density times `λ(z)^n`.
pub fn wrapped_gaussian_coordinate_density(z: &BallPoint, mu: &BallPoint, sigma: f64) -> Result<f64> {
    let lambda_z = hyp::conformal_factor(z);
    Ok(wrapped_gaussian_density(z, mu, sigma)? * lambda_z.powi(mu.dim() as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp::Curvature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> BallPoint {
        BallPoint::new(vec![x, y], Curvature::default()).unwrap()
    }

    #[test]
    fn gamma_values() {
        let o = p(0.0, 0.0);
        assert_eq!(gamma_factor(&o, &o).unwrap(), 1.0);
        // d = 1 at |z| = tanh(1/2)
        let z = p(0.5f64.tanh(), 0.0);
        assert!((gamma_factor(&z, &o).unwrap() - 1.0 / 1.0f64.sinh()).abs() < 1e-12);
        assert!((gamma_factor(&z, &o).unwrap() - 0.8509).abs() < 1e-4);
        assert_eq!(gamma_of_distance(3.0, 1), 1.0);
        let mut prev = 1.0;
        for k in 1..100 {
            let g = gamma_of_distance(k as f64 * 0.1, 3);
            assert!(g < prev && g > 0.0);
            prev = g;
        }
        // series and closed form agree across the switch
        assert!((gamma_of_distance(0.99e-4, 2) - gamma_of_distance(1.01e-4, 2)).abs() < 1e-9);
    }

    #[test]
    fn zero_sigma_returns_mu() {
        let mu = p(0.3, -0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(wrapped_gaussian_sample(&mu, 0.0, &mut rng).unwrap(), mu);
        assert!(wrapped_gaussian_sample(&mu, -1.0, &mut rng).is_err());
        assert!(wrapped_gaussian_density(&mu, &mu, 0.0).is_err());
    }

    #[test]
    fn peak_is_euclidean_peak() {
        let mu = p(0.1, 0.4);
        let s = 0.7;
        let v = wrapped_gaussian_density(&mu, &mu, s).unwrap();
        assert!((v - 1.0 / (2.0 * PI * s * s)).abs() < 1e-12);
    }

    #[test]
    fn density_decreases_along_rays() {
        let mu = p(0.0, 0.0);
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let r = 0.019 * k as f64;
            let v = wrapped_gaussian_density(&p(r * 0.6, r * 0.8), &mu, 0.5).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn sample_distance_is_the_tangent_norm() {
        // The sampler puts z at geodesic distance ‖v‖ from μ.
        let mu = p(0.2, 0.1);
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z = wrapped_gaussian_sample(&mu, 0.8, &mut a).unwrap();
            let v: Vec<f64> = (0..2).map(|_| 0.8 * b.sample::<f64, _>(StandardNormal)).collect();
            let d = hyp::poincare_distance(&mu, &z).unwrap();
            assert!((d - hyp::norm(&v)).abs() < 1e-9);
        }
    }

    #[test]
    fn coordinate_density_normalises_on_a_coarse_grid() {
        // Midpoint rule over polar coordinates around the origin.
        let mu = p(0.0, 0.0);
        let (nr, nt) = (2000, 64);
        let mut total = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) / nr as f64 * 0.99999;
            for j in 0..nt {
                let t = (j as f64 + 0.5) / nt as f64 * 2.0 * PI;
                let z = p(r * t.cos(), r * t.sin());
                total += wrapped_gaussian_coordinate_density(&z, &mu, 0.5).unwrap() * r;
            }
        }
        total *= 0.99999 / nr as f64 * 2.0 * PI / nt as f64;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
