//! For the smooth drift 0.2 sin x the direct Euler scheme and the transformed
//! route agree, and their pathwise gap shrinks like the square root of the step.
//!
//! Run with `cargo run --release --example smooth_consistency -- [paths]`.

use singular_drift::drifts::TrigTerm;
use singular_drift::lab::{study_smooth_consistency, DriftSource, ExperimentConfig, GridConfig, SimSettings};

fn main() -> singular_drift::Result<()> {
    let paths = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let cfg = ExperimentConfig {
        drift: DriftSource::Trig(vec![TrigTerm {
            component: 0,
            k: vec![1],
            cos: 0.0,
            sin: 0.2,
        }]),
        grid: GridConfig {
            dim: 1,
            n: 32,
            intervals: 250,
        },
        sim: SimSettings {
            x0: vec![0.0],
            paths,
            ..SimSettings::default()
        },
        consistency_steps: vec![250, 500, 1000],
        output_dir: std::env::temp_dir().join("singular-drift-results"),
        write_ensembles: false,
        ..ExperimentConfig::default()
    };
    let report = study_smooth_consistency(&cfg)?;
    println!("lambda {}  floor {:.5}", report.lambda, report.floor);
    for (steps, mean, max) in &report.deviations {
        println!("steps {steps:>5}  mean sup deviation {mean:.3e}  max {max:.3e}");
    }
    for c in &report.checks {
        println!(
            "{:<32} {:.4} ({}) {}",
            c.name,
            c.value,
            c.bound,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    for (stage, secs) in &report.timings {
        println!("{stage:<12} {secs:.2}s");
    }
    Ok(())
}
