//! Poincaré-ball basics: Möbius addition, distances, exp/log maps, angles.

use poindp::hyp::{self, BallPoint, Curvature, TangentVector};

fn main() -> poindp::Result<()> {
    let c = Curvature::default();
    let x = BallPoint::new(vec![0.3, 0.0], c)?;
    let y = BallPoint::new(vec![0.4, 0.0], c)?;
    let origin = BallPoint::origin(2, c);

    let sum = hyp::mobius_add(&x, &y)?;
    println!(
        "(0.3,0) ⊕ (0.4,0) = {:?}  (scalar gyro-sum {:.6})",
        sum.coords(),
        0.7 / 1.12
    );
    println!("x ⊕ (−x)          = {:?}", hyp::mobius_add(&x, &x.neg())?.coords());

    let half = BallPoint::new(vec![0.5, 0.0], c)?;
    println!("d(0, (0.5,0))     = {:.6}", hyp::poincare_distance(&origin, &half)?);
    println!("Poincaré norm     = {:.6}", hyp::poincare_norm(&half));
    println!("λ at (0.5,0)      = {:.6}", hyp::conformal_factor(&half));

    // distances blow up towards the boundary
    for r in [0.9, 0.99, 0.999, 0.9999] {
        let p = BallPoint::new(vec![r, 0.0], c)?;
        println!("  norm of ({r},0) = {:.4}", hyp::poincare_norm(&p));
    }

    let v = TangentVector::new(x.clone(), vec![0.2, -0.7])?;
    let z = hyp::exp_map(&v);
    let back = hyp::log_map(&x, &z)?;
    println!("exp_x(v) = {:?}, log_x(exp_x(v)) = {:?}", z.coords(), back.coords());

    let u = BallPoint::new(vec![0.2, 0.2], c)?;
    let w = BallPoint::new(vec![-0.1, 0.4], c)?;
    println!("cos∠(u, w) = {:.6}", hyp::angle(&u, &w)?);

    let pulled = hyp::project_to_ball(&[3.0, 4.0], c, hyp::DEFAULT_MARGIN)?;
    println!(
        "projected (3,4) → {:?} with norm {:.6}",
        pulled.coords(),
        pulled.euclidean_norm()
    );
    Ok(())
}
