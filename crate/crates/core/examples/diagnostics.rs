//! Solver and transform diagnostics for one configuration, written to
//! `results/<digest>/diagnostics.json`.
//!
//! Run with `cargo run --release --example diagnostics`.

use singular_drift::drifts::{DriftFamily, DriftSpec, TimeDependence};
use singular_drift::lab::{diagnostics, DriftSource, ExperimentConfig};

fn main() -> singular_drift::Result<()> {
    let cfg = ExperimentConfig {
        drift: DriftSource::Spec(DriftSpec {
            family: DriftFamily::RandomFourier,
            seed: 11,
            beta: 0.25,
            eta: 0.6,
            amplitude: 0.2,
            time_dependence: TimeDependence::PiecewiseConstant { changes: 3 },
        }),
        output_dir: std::env::temp_dir().join("singular-drift-results"),
        ..ExperimentConfig::default()
    };
    let d = diagnostics(&cfg)?;
    println!(
        "lambda {}  kappa {:?}  gradient sup {:.4}",
        d.lambda, d.kappa, d.gradient_sup
    );
    println!("iterations {}  residual {:.2e}", d.solve.iterations, d.solve.residual);
    println!("uniqueness against {:?}: {:.2e}", d.uniqueness.0, d.uniqueness.1);
    println!("Holder({}) constant {:.4}", d.holder.0, d.holder.1);
    println!(
        "bijection residuals {:?}  Lipschitz {:.4}",
        d.bijection_residuals, d.lipschitz
    );
    let held = d.gamma_checks.iter().filter(|c| c.holds).count();
    println!("gamma bound held in {held}/{} cases", d.gamma_checks.len());
    println!("written to {}", d.output.display());
    Ok(())
}
