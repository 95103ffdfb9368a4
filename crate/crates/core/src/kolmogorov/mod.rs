//! Mild-solution solver for the Kolmogorov equation
//!
//! ```text
//! du/dt + (1/2) Delta u + b . grad u - (lambda + 1) u = -b,   u(T) = 0,
//! ```
//!
//! solved forward in `v(t) = u(T - t)` as the fixed point of the integral operator
//!
//! ```text
//! I(v)(t) = int_0^t P(t-r) [ b . grad v + b - lambda v ](r) dr.
//! ```
//!
//! Each mode is integrated exactly against the semigroup over one step with
//! the integrand frozen at the left node.

mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_extremes;
use crate::paraproduct::{drift_gradient_product, ProductRule};
use crate::spectral::{symbol, GridSpec, SobolevIndex, SpectralField, TimeField};

pub use quadrature::{gamma_bound_check, gamma_integral, integrate, GammaCheck};

/// Fixed-point controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdeConfig {
    /// Weight rate of the norm `sup_t e^{-rho t} ||.||`; `None` picks it from
    /// the measured gain of the operator.
    pub rho: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub product: ProductRule,
    /// Solution space `H^{1+delta}_p`.
    pub delta: f64,
    pub p: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            rho: None,
            tol: 1e-9,
            max_iter: 200,
            product: ProductRule::Resolved,
            delta: 0.5,
            p: 2.5,
        }
    }
}

impl PdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(format!(
                "need tol > 0 and max_iter >= 1, got {} and {}",
                self.tol, self.max_iter
            )));
        }
        if let Some(rho) = self.rho {
            if !(rho >= 0.0) {
                return Err(Error::Config(format!("rho must be >= 0, got {rho}")));
            }
        }
        SobolevIndex::new(1.0 + self.delta, self.p)?;
        Ok(())
    }

    /// The norm of the solution space, `H^{1+delta}_p`.
    pub fn index(&self) -> SobolevIndex {
        SobolevIndex {
            s: 1.0 + self.delta,
            p: self.p,
        }
    }
}

/// What happened during [`solve_fwd`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub lambda: f64,
    pub rho: f64,
    /// `(rho, measured gain)` for every weight tried.
    pub rho_trace: Vec<(f64, f64)>,
    pub iterations: usize,
    /// `||v_k - v_{k-1}||^{(rho)}` per iteration.
    pub weighted_diffs: Vec<f64>,
    /// Same with `rho = 0`.
    pub plain_diffs: Vec<f64>,
    /// Successive ratios of `weighted_diffs` (zero once the iteration is exact).
    pub ratios: Vec<f64>,
    /// `||v - I(v)||^{(rho)}` for the returned `v`.
    pub residual: f64,
    /// `sup |v|` over nodes and lattice points.
    pub sup_v: f64,
}

impl SolveReport {
    pub fn final_ratio(&self) -> Option<f64> {
        self.ratios.last().copied()
    }
}

/// Per-mode tables for one step: `exp(-dt a)` and `(1 - exp(-dt a)) / a`.
struct StepTables {
    decay: Vec<f64>,
    weight: Vec<f64>,
}

impl StepTables {
    fn new(grid: &GridSpec, dt: f64) -> Self {
        let len = grid.len();
        let mut decay = Vec::with_capacity(len);
        let mut weight = Vec::with_capacity(len);
        for i in 0..len {
            let a = symbol(grid.kappa_sq(i));
            let e = (-dt * a).exp();
            decay.push(e);
            weight.push(-(-dt * a).exp_m1() / a);
        }
        StepTables { decay, weight }
    }
}

fn check_pair(v: &TimeField, b: &TimeField) -> Result<()> {
    if v.times() != b.times() {
        return Err(Error::Mismatch(format!("{:?} vs {:?}", v.times(), b.times())));
    }
    v.node(0).check_same_shape(b.node(0))?;
    if b.components() != b.grid().dim {
        return Err(Error::Mismatch(format!(
            "drift needs {} components, got {}",
            b.grid().dim,
            b.components()
        )));
    }
    Ok(())
}

/// Apply the integral operator to `v`.
///
/// `b` is given in physical time; the forward variable sees `b(T - t)`, so
/// node `l` of the forward integrand uses `b(t_{M-l})`.
pub fn integral_operator(v: &TimeField, b: &TimeField, lambda: f64, cfg: &PdeConfig) -> Result<TimeField> {
    check_pair(v, b)?;
    let times = *v.times();
    let grid = *v.grid();
    let m_last = times.intervals;
    let tables = StepTables::new(&grid, times.step());
    let len = grid.len();
    let comps = v.components();
    let mut acc = vec![rustfft::num_complex::Complex64::default(); len * comps];
    let mut nodes = Vec::with_capacity(times.nodes());
    nodes.push(SpectralField::zeros(grid, comps));
    for l in 0..m_last {
        let bl = b.node(m_last - l);
        let vl = v.node(l);
        let mut g = drift_gradient_product(bl, vl, &cfg.product)?;
        g = &g + bl;
        if lambda != 0.0 {
            g = g.axpy(-lambda, vl);
        }
        let gc = g.coeffs();
        for c in 0..comps {
            let (a, gg) = (&mut acc[c * len..(c + 1) * len], &gc[c * len..(c + 1) * len]);
            for i in 0..len {
                a[i] = a[i] * tables.decay[i] + gg[i] * tables.weight[i];
            }
        }
        nodes.push(SpectralField::from_coeffs(grid, comps, acc.clone(), g.is_real())?);
    }
    TimeField::new(times, nodes)
}

/// `sup_m e^{-rho t_m} ||f(t_m)||_idx`.
pub fn weighted_norm(f: &TimeField, rho: f64, idx: SobolevIndex) -> f64 {
    assert!(rho >= 0.0, "weight rate must be >= 0");
    let times = f.times();
    f.nodes()
        .iter()
        .enumerate()
        .map(|(m, node)| {
            let w = (-rho * times.time(m)).exp();
            if w == 0.0 || node.is_zero() {
                0.0
            } else {
                w * node.sobolev_norm(idx)
            }
        })
        .fold(0.0, f64::max)
}

/// Largest lattice value over all nodes.
pub fn sup_grid(f: &TimeField) -> f64 {
    f.nodes().iter().map(|n| n.sup_norm()).fold(0.0, f64::max)
}

/// Number of Picard differences used to measure the gain of the operator.
pub const GAIN_PROBES: usize = 8;

fn node_norms(f: &TimeField, idx: SobolevIndex) -> Vec<f64> {
    f.nodes()
        .iter()
        .map(|n| if n.is_zero() { 0.0 } else { n.sobolev_norm(idx) })
        .collect()
}

fn weighted_max(norms: &[f64], rho: f64, dt: f64) -> f64 {
    norms
        .iter()
        .enumerate()
        .map(|(m, &n)| {
            if n == 0.0 {
                0.0
            } else {
                (-rho * m as f64 * dt).exp() * n
            }
        })
        .fold(0.0, f64::max)
}

/// Largest successive ratio of weighted norms along a sequence of differences.
fn measured_gain(diffs: &[Vec<f64>], rho: f64, dt: f64) -> f64 {
    diffs
        .windows(2)
        .map(|w| {
            let (a, b) = (weighted_max(&w[0], rho, dt), weighted_max(&w[1], rho, dt));
            if b == 0.0 {
                0.0
            } else {
                b / a
            }
        })
        .fold(0.0, f64::max)
}

/// Double `rho` from 1 until the measured gain drops below 1/2.
fn choose_rho(diffs: &[Vec<f64>], dt: f64) -> (f64, Vec<(f64, f64)>) {
    let mut rho = 1.0;
    let mut trace = Vec::new();
    for _ in 0..64 {
        let gain = measured_gain(diffs, rho, dt);
        trace.push((rho, gain));
        if gain < 0.5 {
            break;
        }
        rho *= 2.0;
    }
    (rho, trace)
}

/// Picard iteration `v_{k+1} = I(v_k)` from `v_0 = 0`.
///
/// Since `I` is affine, the differences `v_{k+1} - v_k` are the powers of its
/// linear part applied to `I(0)`; the first [`GAIN_PROBES`] of them measure the
/// gain that fixes `rho` when the config leaves it open. Iteration stops once
/// the successive difference is below `tol` in both the weighted and the plain
/// sup-in-time `H^{1+delta}_p` norm.
pub fn solve_fwd(b: &TimeField, lambda: f64, cfg: &PdeConfig) -> Result<(TimeField, SolveReport)> {
    cfg.validate()?;
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let idx = cfg.index();
    let dt = b.times().step();
    let mut prev = TimeField::zeros(*b.times(), *b.grid(), b.components());
    let mut next = integral_operator(&prev, b, lambda, cfg)?;
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    let mut fixed_rho = cfg.rho.map(|r| (r, Vec::new()));
    let mut iterations = 0;
    let converged = loop {
        iterations += 1;
        let norms = node_norms(&next.sub(&prev)?, idx);
        let plain = norms.iter().copied().fold(0.0, f64::max);
        diffs.push(norms);
        if fixed_rho.is_none() && (diffs.len() == GAIN_PROBES || plain < cfg.tol) {
            fixed_rho = Some(choose_rho(&diffs, dt));
        }
        // the weighted norm never exceeds the plain one
        if plain < cfg.tol {
            break true;
        }
        if iterations >= cfg.max_iter {
            break false;
        }
        let image = integral_operator(&next, b, lambda, cfg)?;
        prev = std::mem::replace(&mut next, image);
    };
    let (rho, rho_trace) = fixed_rho.unwrap_or_else(|| choose_rho(&diffs, dt));
    let weighted_diffs: Vec<f64> = diffs.iter().map(|n| weighted_max(n, rho, dt)).collect();
    let plain_diffs: Vec<f64> = diffs.iter().map(|n| n.iter().copied().fold(0.0, f64::max)).collect();
    if !converged {
        return Err(Error::MaxIterExceeded {
            iterations,
            last_diff: *plain_diffs.last().expect("at least one iteration"),
        });
    }
    let ratios = weighted_diffs
        .windows(2)
        .map(|w| if w[1] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect();
    let image = integral_operator(&next, b, lambda, cfg)?;
    let residual = weighted_norm(&image.sub(&next)?, rho, idx);
    let report = SolveReport {
        lambda,
        rho,
        rho_trace,
        iterations,
        weighted_diffs,
        plain_diffs,
        ratios,
        residual,
        sup_v: sup_grid(&next),
    };
    Ok((next, report))
}

/// `u(t_m) = v(t_{M-m})`.
pub fn to_backward(v: &TimeField) -> TimeField {
    v.reversed()
}

/// Solve and return the backward solution `u` with its report.
pub fn solve(b: &TimeField, lambda: f64, cfg: &PdeConfig) -> Result<(TimeField, SolveReport)> {
    let (v, report) = solve_fwd(b, lambda, cfg)?;
    Ok((to_backward(&v), report))
}

/// Largest operator norm of the Jacobian `grad u` over nodes and points.
///
/// Evaluated on the 2x refined lattice, which contains the original points.
pub fn gradient_sup(u: &TimeField) -> f64 {
    let grid = *u.grid();
    let d = grid.dim;
    let fine = grid.refined(2);
    let len = fine.len();
    let mut best = 0.0f64;
    let mut jac = vec![0.0; u.components() * d];
    for node in u.nodes() {
        if node.is_zero() {
            continue;
        }
        let values = node.gradient().resample(fine).expect("same period").values();
        let comps = u.components() * d;
        for i in 0..len {
            for (c, j) in jac.iter_mut().enumerate().take(comps) {
                *j = values[c * len + i];
            }
            let norm = if u.components() == d {
                singular_extremes(&jac, d).0
            } else {
                jac.iter().map(|v| v * v).sum::<f64>().sqrt()
            };
            best = best.max(norm);
        }
    }
    best
}

/// Result of [`calibrate_lambda`].
#[derive(Clone, Debug)]
pub struct Calibration {
    pub lambda: f64,
    /// `(lambda, gradient_sup(u_lambda))` for every lambda tried.
    pub trace: Vec<(f64, f64)>,
    /// The backward solution at the accepted `lambda`.
    pub u: TimeField,
    pub report: SolveReport,
}

/// Maximum number of doublings tried by [`calibrate_lambda`].
pub const MAX_DOUBLINGS: usize = 40;

/// Double `lambda` from 1 until `gradient_sup(u_lambda) <= target`.
pub fn calibrate_lambda(b: &TimeField, cfg: &PdeConfig, target: f64) -> Result<Calibration> {
    let mut lambda = 1.0;
    let mut trace = Vec::new();
    for _ in 0..=MAX_DOUBLINGS {
        let (u, report) = solve(b, lambda, cfg)?;
        let g = gradient_sup(&u);
        trace.push((lambda, g));
        if g <= target {
            return Ok(Calibration {
                lambda,
                trace,
                u,
                report,
            });
        }
        lambda *= 2.0;
    }
    Err(Error::CalibrationFailed {
        doublings: MAX_DOUBLINGS,
        last_gradient: trace.last().map_or(f64::NAN, |t| t.1),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// `max_{s != t} ||u(t) - u(s)||_idx / |t - s|^gamma` over node pairs.
pub fn holder_diagnostic(u: &TimeField, gamma: f64, idx: SobolevIndex) -> f64 {
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    let grid = *u.grid();
    let len = grid.len();
    let comps = u.components();
    let vol = grid.cell_volume();
    let values: Vec<Vec<rustfft::num_complex::Complex64>> = u
        .nodes()
        .iter()
        .map(|f| f.bessel_power(idx.s).complex_values())
        .collect();
    let times = u.times();
    let mut best = 0.0f64;
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            let mut acc = 0.0;
            for i in 0..len {
                let mag: f64 = (0..comps)
                    .map(|c| (values[b][c * len + i] - values[a][c * len + i]).norm_sqr())
                    .sum();
                acc += if idx.p == 2.0 { mag } else { mag.powf(0.5 * idx.p) };
            }
            let norm = (acc * vol).powf(1.0 / idx.p);
            let dt = times.time(b) - times.time(a);
            best = best.max(norm / dt.powf(gamma));
        }
    }
    best
}

/// Solve under two choices of `(delta, p)` and return the largest lattice
/// difference of the two solutions.
pub fn uniqueness_crosscheck(
    b: &TimeField,
    lambda: f64,
    kappa1: (f64, f64),
    kappa2: (f64, f64),
    cfg: &PdeConfig,
) -> Result<f64> {
    let c1 = PdeConfig {
        delta: kappa1.0,
        p: kappa1.1,
        ..*cfg
    };
    let c2 = PdeConfig {
        delta: kappa2.0,
        p: kappa2.1,
        ..*cfg
    };
    let (v1, _) = solve_fwd(b, lambda, &c1)?;
    if kappa1 == kappa2 {
        return Ok(0.0);
    }
    let (v2, _) = solve_fwd(b, lambda, &c2)?;
    Ok(sup_grid(&v1.sub(&v2)?))
}
