//! Samples the wrapped Gaussian around a point of the ball and compares the
//! geodesic spread with the tangent-space Gaussian it came from.

use poindp::dp::{wrapped_gaussian_density, wrapped_gaussian_sample};
use poindp::hyp::{self, BallPoint, Curvature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> poindp::Result<()> {
    let mu = BallPoint::new(vec![0.3, -0.2], Curvature::default())?;
    let sigma = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let mut dist = Vec::with_capacity(n);
    for _ in 0..n {
        let z = wrapped_gaussian_sample(&mu, sigma, &mut rng)?;
        dist.push(hyp::poincare_distance(&mu, &z)?);
    }
    let mean = dist.iter().sum::<f64>() / n as f64;
    // d(μ, z) = ‖v‖ with v ~ N(0, σ²I₂), a Rayleigh variable of mean σ√(π/2)
    println!(
        "mean geodesic distance {mean:.4}, Rayleigh mean {:.4}",
        sigma * (std::f64::consts::PI / 2.0).sqrt()
    );

    for r in [0.0, 0.1, 0.3, 0.6] {
        let z = BallPoint::new(vec![0.3 + r, -0.2], Curvature::default())?;
        println!(
            "density at offset {r}: {:.5}",
            wrapped_gaussian_density(&z, &mu, sigma)?
        );
    }
    Ok(())
}
