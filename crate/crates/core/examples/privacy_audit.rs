//! Empirical privacy audit of the calibrated mechanism and of an
//! under-noised copy.

use poindp::dp::{privacy_audit_1d, AuditConfig, AuditMode};

fn main() -> poindp::Result<()> {
    for (label, sigma_scale) in [("calibrated σ", 1.0), ("σ / 2", 0.5)] {
        for mode in [AuditMode::Empirical, AuditMode::AnalyticTail] {
            let report = privacy_audit_1d(&AuditConfig {
                sigma_scale,
                mode,
                ..AuditConfig::default()
            })?;
            println!(
                "{label:<13} {mode:?}: σ = {:.4}, ε̂ = {:.4} → {}",
                report.sigma,
                report.epsilon_hat,
                if report.passed { "PASS" } else { "FAIL" }
            );
        }
    }
    let err = privacy_audit_1d(&AuditConfig {
        delta: 1e-6,
        trials: 10_000,
        ..AuditConfig::default()
    });
    println!("δ = 1e-6 with 1e4 trials: {}", err.unwrap_err());
    Ok(())
}
