//! Calibrate the killing rate lambda for a rough drift and print the trace.
//!
//! Run with `cargo run --release --example calibrate_lambda -- [eta] [amplitude] [seed] [family] [N]`.

use singular_drift::drifts::{generate, DriftFamily, DriftSpec, TimeDependence};
use singular_drift::kolmogorov::{calibrate_lambda, loglog_slope, PdeConfig};
use singular_drift::spectral::{GridSpec, TimeGrid};

fn main() -> singular_drift::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let eta = args.first().copied().unwrap_or(0.6);
    let amplitude = args.get(1).copied().unwrap_or(0.25);
    let family = match std::env::args().nth(4).as_deref() {
        Some("derivative-of-continuous") => DriftFamily::DerivativeOfContinuous,
        Some("smooth-test") => DriftFamily::SmoothTest,
        _ => DriftFamily::RandomFourier,
    };
    let seed = args.get(2).map_or(11, |&s| s as u64);
    let spec = DriftSpec {
        family,
        seed,
        beta: 0.25,
        eta,
        amplitude,
        time_dependence: TimeDependence::Static,
    };
    let n = std::env::args().nth(5).and_then(|a| a.parse().ok()).unwrap_or(256);
    let grid = GridSpec::periodic(1, n)?;
    let times = TimeGrid::new(1.0, 128)?;
    let b = generate(&spec, grid, times)?;
    let start = std::time::Instant::now();
    let target = std::env::var("TARGET").ok().and_then(|t| t.parse().ok()).unwrap_or(0.5);
    let cal = calibrate_lambda(&b, &PdeConfig::default(), target)?;
    for (lambda, g) in &cal.trace {
        println!("lambda {lambda:>8}  gradient sup {g:.5}");
    }
    let tail = &cal.trace[cal.trace.len().saturating_sub(3)..];
    println!(
        "accepted lambda {}  slope over last three {:.3}",
        cal.lambda,
        loglog_slope(tail)
    );
    println!(
        "rho {}  iterations {}  residual {:.2e}  ratios {:?}",
        cal.report.rho,
        cal.report.iterations,
        cal.report.residual,
        &cal.report.ratios[..cal.report.ratios.len().min(6)]
    );
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
