//! Build the transform from a calibrated solution, simulate the virtual
//! solution, and check the transformed integral identity pathwise.
//!
//! Run with `cargo run --release --example virtual_solution -- [paths]`.

use singular_drift::drifts::{generate, DriftFamily, DriftSpec, TimeDependence};
use singular_drift::kolmogorov::{calibrate_lambda, PdeConfig};
use singular_drift::sde::{brownian, simulate_virtual, virtual_residual, SimConfig};
use singular_drift::spectral::{GridSpec, TimeGrid};
use singular_drift::zvonkin::{InverseConfig, TransformContext};

fn main() -> singular_drift::Result<()> {
    let paths = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let spec = DriftSpec {
        family: DriftFamily::DerivativeOfContinuous,
        seed: 3,
        beta: 0.25,
        eta: 0.3,
        amplitude: 0.2,
        time_dependence: TimeDependence::Static,
    };
    let b = generate(&spec, GridSpec::periodic(1, 256)?, TimeGrid::new(1.0, 128)?)?;
    let cal = calibrate_lambda(&b, &PdeConfig::default(), 0.5)?;
    let ctx = TransformContext::new(cal.u, InverseConfig::default())?;
    let (r1, r2) = ctx.bijection_residuals(1000, 1)?;
    println!("lambda {}  sup |grad u| {:.4}", cal.lambda, ctx.gradient_sup());
    println!(
        "phi(psi(y)) - y {r1:.2e}  psi(phi(x)) - x {r2:.2e}  Lipschitz {:.4}",
        ctx.lipschitz_probe(1000, 1)?
    );
    let cfg = SimConfig {
        x0: vec![0.0],
        horizon: 1.0,
        steps: 128,
        paths,
        seed: 2024,
        lambda: cal.lambda,
        noise_steps: None,
    };
    let (_, x) = simulate_virtual(&ctx, &cfg)?;
    let w = brownian(&cfg)?;
    println!(
        "integral identity residual {:.2e}",
        virtual_residual(&ctx, cal.lambda, &x, &w)?
    );
    let xt = x.marginal(cfg.steps, 0);
    let mean = xt.iter().sum::<f64>() / xt.len() as f64;
    let var = xt.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (xt.len() - 1) as f64;
    println!("X_T mean {mean:.4}  variance {var:.4}");
    Ok(())
}
