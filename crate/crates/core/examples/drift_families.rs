//! Generate each drift family, certify it in `H^{-beta}_{q~,q}`, and write
//! the spectral snapshots to a temporary directory.
//!
//! Run with `cargo run --release --example drift_families -- [N]`.

use singular_drift::drifts::{assumption_check, generate, refinement_change, DriftFamily, DriftSpec, TimeDependence};
use singular_drift::spectral::{write_time_field, GridSpec, TimeGrid};

fn main() -> singular_drift::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(256);
    let grid = GridSpec::periodic(1, n)?;
    let times = TimeGrid::new(1.0, 8)?;
    let dir = std::env::temp_dir().join("singular-drift-drifts");
    std::fs::create_dir_all(&dir)?;
    let families = [
        (DriftFamily::RandomFourier, 0.6),
        (DriftFamily::DerivativeOfContinuous, 0.3),
        (DriftFamily::SmoothTest, 0.5),
    ];
    for (family, eta) in families {
        let spec = DriftSpec {
            family,
            seed: 11,
            beta: 0.25,
            eta,
            amplitude: 0.2,
            time_dependence: TimeDependence::PiecewiseConstant { changes: 1 },
        };
        let b = generate(&spec, grid, times)?;
        let r = assumption_check(&b, spec.beta, 3.0)?;
        let refine = refinement_change(&spec, grid, times, 3.0)?;
        println!(
            "{family:?}: ||b||_(q~={:.3}) {:.4}  ||b||_(q=3) {:.4}  truncation {:.2}%  N->2N {:.2}%  sup {:.3}",
            r.q_tilde,
            r.norm_q_tilde,
            r.norm_q,
            100.0 * r.truncation_change,
            100.0 * refine,
            b.node(0).sup_norm()
        );
        let path = dir.join(format!("{family:?}.bin").to_lowercase());
        write_time_field(&path, &b, &serde_json::to_string(&spec)?)?;
    }
    println!("snapshots in {}", dir.display());
    Ok(())
}
