//! The virtual solution does not depend on the killing rate: ensembles at
//! lambda and 2 lambda agree within the Monte Carlo floor.
//!
//! Run with `cargo run --release --example lambda_invariance -- [paths]`.

use singular_drift::drifts::{DriftFamily, DriftSpec, TimeDependence};
use singular_drift::lab::{study_lambda, DriftSource, ExperimentConfig, SimSettings};

fn main() -> singular_drift::Result<()> {
    let paths = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let cfg = ExperimentConfig {
        drift: DriftSource::Spec(DriftSpec {
            family: DriftFamily::RandomFourier,
            seed: 11,
            beta: 0.25,
            eta: 0.6,
            amplitude: 0.2,
            time_dependence: TimeDependence::Static,
        }),
        sim: SimSettings {
            x0: vec![0.0],
            paths,
            ..SimSettings::default()
        },
        lambda_factors: vec![1.0, 2.0],
        output_dir: std::env::temp_dir().join("singular-drift-results"),
        write_ensembles: false,
        ..ExperimentConfig::default()
    };
    let report = study_lambda(&cfg)?;
    println!("calibrated lambda {}  floor {:.5}", report.lambda, report.floor);
    for l in &report.levels {
        println!(
            "{:<24} W1(T) {:.3e}  W1 at T/4..T {:?}",
            l.label, l.terminal.value, l.w1
        );
    }
    for c in &report.checks {
        println!(
            "{:<28} {:.3e} ({}) {}",
            c.name,
            c.value,
            c.bound,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
