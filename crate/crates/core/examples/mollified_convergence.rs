//! Classical solutions under mollified drifts approach the virtual solution in law.
//!
//! Run with `cargo run --release --example mollified_convergence -- [family] [paths] [seed]`.

use singular_drift::drifts::{DriftFamily, DriftSpec, TimeDependence};
use singular_drift::lab::{study_mollify, DriftSource, ExperimentConfig, GridConfig, SimSettings};

fn main() -> singular_drift::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (family, eta, drift_seed) = match args.first().map(String::as_str) {
        Some("derivative-of-continuous") => (DriftFamily::DerivativeOfContinuous, 0.3, 3),
        Some("smooth-test") => (DriftFamily::SmoothTest, 0.5, 11),
        _ => (DriftFamily::RandomFourier, 0.6, 11),
    };
    let paths = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let seed = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(2024);
    let env = |k: &str| std::env::var(k).ok().and_then(|v| v.parse::<f64>().ok());
    let eta = env("ETA").unwrap_or(eta);
    let steps = env("STEPS").map_or(128, |s| s as usize);
    let amplitude = env("AMPLITUDE").unwrap_or(0.2);
    let drift_seed = env("DRIFT_SEED").map_or(drift_seed, |s| s as u64);
    let cfg = ExperimentConfig {
        drift: DriftSource::Spec(DriftSpec {
            family,
            seed: drift_seed,
            beta: 0.25,
            eta,
            amplitude,
            time_dependence: TimeDependence::Static,
        }),
        sim: SimSettings {
            x0: vec![0.0],
            paths,
            steps,
            ..SimSettings::default()
        },
        grid: GridConfig {
            intervals: steps,
            ..GridConfig::default()
        },
        output_dir: std::env::temp_dir().join("singular-drift-results"),
        write_ensembles: false,
        seed,
        ..ExperimentConfig::default()
    };
    let report = study_mollify(&cfg)?;
    println!(
        "lambda {}  floor {:.5}  calibration {:?}",
        report.lambda, report.floor, report.calibration
    );
    for l in &report.levels {
        println!(
            "{:<16} W1(T) {:.5} [{:.5}, {:.5}]  W1 at T/4..T {:?}",
            l.label,
            l.terminal.value,
            l.terminal.lo,
            l.terminal.hi,
            l.w1.iter().map(|w| format!("{w:.4}")).collect::<Vec<_>>()
        );
    }
    if let Some(t) = report.trend {
        println!(
            "Kendall tau {:.2}  p {:.4}  decreasing {}",
            t.tau, t.p_value, t.decreasing
        );
    }
    for (stage, secs) in &report.timings {
        println!("{stage:<12} {secs:.2}s");
    }
    println!("written to {}", report.output.display());
    Ok(())
}
