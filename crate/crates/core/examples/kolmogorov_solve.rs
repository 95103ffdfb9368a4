//! Solve the singular Kolmogorov equation for one lambda and report the
//! Picard iteration, the gradient bound and the uniqueness cross-check.
//!
//! Run with `cargo run --release --example kolmogorov_solve -- [lambda]`.

use singular_drift::drifts::{generate, DriftFamily, DriftSpec, TimeDependence};
use singular_drift::kolmogorov::{gradient_sup, holder_diagnostic, solve, uniqueness_crosscheck, PdeConfig};
use singular_drift::spectral::{GridSpec, TimeGrid};

fn main() -> singular_drift::Result<()> {
    let lambda = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8.0);
    let spec = DriftSpec {
        family: DriftFamily::RandomFourier,
        seed: 11,
        beta: 0.25,
        eta: 0.6,
        amplitude: 0.2,
        time_dependence: TimeDependence::Static,
    };
    let b = generate(&spec, GridSpec::periodic(1, 256)?, TimeGrid::new(1.0, 128)?)?;
    let cfg = PdeConfig::default();
    let (u, report) = solve(&b, lambda, &cfg)?;
    println!("lambda {lambda}  rho {}  iterations {}", report.rho, report.iterations);
    for (k, (d, r)) in report
        .weighted_diffs
        .iter()
        .zip(std::iter::once(&f64::NAN).chain(&report.ratios))
        .enumerate()
    {
        println!("  {:>3}  diff {d:.3e}  ratio {r:.3}", k + 1);
    }
    println!("residual {:.3e}  sup |u| {:.4}", report.residual, report.sup_v);
    println!("sup |grad u| {:.4}", gradient_sup(&u));
    println!(
        "Holder-1/4 constant in H^1 {:.4}",
        holder_diagnostic(&u, 0.25, singular_drift::spectral::SobolevIndex::new(1.0, 2.0)?)
    );
    let gap = uniqueness_crosscheck(&b, lambda, (0.5, 2.5), (0.6, 2.4), &cfg)?;
    println!("(0.5, 2.5) vs (0.6, 2.4): sup gap {gap:.2e}");
    Ok(())
}
