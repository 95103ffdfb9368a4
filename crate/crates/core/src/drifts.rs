//! Random distributional drifts, the admissible parameter window and the
//! mollified approximations `b_n`.
//!
//! Generation is keyed by wavevector: the phase of mode `k` depends only on
//! `(seed, piece, k, component)`, so the same spec sampled on `N` and `2N`
//! agrees on the common modes. That is what makes refinement studies meaningful.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SobolevIndex, SpectralField, TimeField, TimeGrid, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftFamily {
    /// `c_k = amplitude * xi_k * |kappa|^{-eta}` with unimodular random `xi_k`.
    RandomFourier,
    /// `b = grad w` for a continuous field `w` made of randomly placed Holder cusps.
    DerivativeOfContinuous,
    /// A handful of low modes (`|k|_inf <= 3`); smooth, for consistency checks.
    SmoothTest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeDependence {
    #[default]
    Static,
    /// `changes` equally spaced change points; an independent draw per piece.
    PiecewiseConstant { changes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub family: DriftFamily,
    pub seed: u64,
    pub beta: f64,
    pub eta: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub time_dependence: TimeDependence,
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::InvalidSpec(format!(
                "beta must lie in (0, 1/2), got {}",
                self.beta
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "amplitude must be finite and >= 0, got {}",
                self.amplitude
            )));
        }
        if !self.eta.is_finite() {
            return Err(Error::InvalidSpec(format!("decay must be finite, got {}", self.eta)));
        }
        Ok(())
    }

    /// The same drift with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DriftSpec {
        DriftSpec {
            amplitude: self.amplitude * factor,
            ..self.clone()
        }
    }
}

/// Uniform angle in `[0, 2 pi)` for a wavevector key.
fn phase(seed: u64, piece: u64, key: u128) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(piece);
    rng.set_word_pos(key * 2);
    let bits = rng.next_u64() >> 11;
    bits as f64 * (1.0 / (1u64 << 53) as f64) * std::f64::consts::TAU
}

fn zigzag(k: i64) -> u128 {
    if k >= 0 {
        (2 * k) as u128
    } else {
        (-2 * k - 1) as u128
    }
}

/// Resolution-independent key for `(k, component)`.
fn mode_key(k: &[i64], component: usize) -> u128 {
    let a = zigzag(k[0]);
    let b = if k.len() > 1 { zigzag(k[1]) } else { 0 };
    let pair = (a + b) * (a + b + 1) / 2 + b;
    pair * MAX_DIM as u128 + component as u128
}

/// Representative of `{k, -k}`: first nonzero coordinate positive.
fn is_canonical(k: &[i64]) -> bool {
    match k.iter().find(|&&v| v != 0) {
        Some(&v) => v > 0,
        None => false,
    }
}

/// Fill Hermitian pairs: `value(k)` is called for canonical `k` only.
fn hermitian_field<F>(grid: GridSpec, components: usize, mut value: F) -> SpectralField
where
    F: FnMut(&[i64], usize) -> Complex64,
{
    let len = grid.len();
    let mut coeffs = vec![Complex64::default(); len * components];
    for c in 0..components {
        for i in 0..len {
            if grid.is_nyquist(i) {
                continue;
            }
            let k = grid.wavenumbers(i);
            let k = &k[..grid.dim];
            if !is_canonical(k) {
                continue;
            }
            let v = value(k, c);
            coeffs[c * len + i] = v;
            coeffs[c * len + grid.conjugate_index(i)] = v.conj();
        }
    }
    SpectralField::from_coeffs(grid, components, coeffs, true).expect("shape is consistent by construction")
}

fn random_fourier(spec: &DriftSpec, grid: GridSpec, piece: u64) -> SpectralField {
    let w = grid.base_frequency();
    hermitian_field(grid, grid.dim, |k, c| {
        let kappa = w * k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        let theta = phase(spec.seed, piece, mode_key(k, c));
        Complex64::from_polar(spec.amplitude * kappa.powf(-spec.eta), theta)
    })
}

/// Number of cusps in the derivative-of-continuous family.
pub const CUSPS: usize = 1;

/// `b = grad w` with `w = A sum_c s_c sum_{kappa != 0} |kappa|^{-(d+eta)} cos(kappa . (x - x_c))`:
/// a sum of Holder-`eta` cusps at random centres `x_c` with random signs `s_c`.
fn derivative_of_continuous(spec: &DriftSpec, grid: GridSpec, piece: u64) -> SpectralField {
    let d = grid.dim;
    // cusp parameters live far above every wavevector key
    let base = 1u128 << 100;
    let mut centres = Vec::with_capacity(CUSPS);
    for c in 0..CUSPS {
        let key = base + (c * (MAX_DIM + 1)) as u128;
        let mut x = [0.0; MAX_DIM];
        for (a, xa) in x.iter_mut().enumerate().take(d) {
            *xa = phase(spec.seed, piece, key + a as u128) / std::f64::consts::TAU * grid.period;
        }
        let sign = if phase(spec.seed, piece, key + MAX_DIM as u128) < std::f64::consts::PI {
            1.0
        } else {
            -1.0
        };
        centres.push((x, sign));
    }
    let w = grid.base_frequency();
    let exponent = d as f64 + spec.eta;
    let potential = hermitian_field(grid, 1, |k, _| {
        let kappa: Vec<f64> = k.iter().map(|&v| w * v as f64).collect();
        let norm = kappa.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut acc = Complex64::default();
        for (x, sign) in &centres {
            let dot: f64 = kappa.iter().zip(x).map(|(a, b)| a * b).sum();
            // cos(kappa.(x - c)) contributes e^{-i kappa.c} / 2 at +kappa
            acc += Complex64::from_polar(0.5 * sign, -dot);
        }
        acc * spec.amplitude * norm.powf(-exponent)
    });
    potential.gradient()
}

fn smooth_test(spec: &DriftSpec, grid: GridSpec, piece: u64) -> SpectralField {
    let w = grid.base_frequency();
    hermitian_field(grid, grid.dim, |k, c| {
        if k.iter().any(|v| v.abs() > 3) {
            return Complex64::default();
        }
        let kappa = w * k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        let theta = phase(spec.seed, piece, mode_key(k, c));
        Complex64::from_polar(spec.amplitude * kappa.powf(-spec.eta), theta)
    })
}

fn piece_of(dep: TimeDependence, times: &TimeGrid, m: usize) -> u64 {
    match dep {
        TimeDependence::Static => 0,
        TimeDependence::PiecewiseConstant { changes } => {
            let pieces = changes + 1;
            let s = m as f64 / times.intervals as f64 * pieces as f64;
            (s.floor() as usize).min(pieces - 1) as u64
        }
    }
}

/// Sample `b` at one piece of its time dependence.
pub fn generate_piece(spec: &DriftSpec, grid: GridSpec, piece: u64) -> Result<SpectralField> {
    spec.validate()?;
    grid.validate()?;
    if spec.amplitude == 0.0 {
        return Ok(SpectralField::zeros(grid, grid.dim));
    }
    Ok(match spec.family {
        DriftFamily::RandomFourier => random_fourier(spec, grid, piece),
        DriftFamily::DerivativeOfContinuous => derivative_of_continuous(spec, grid, piece),
        DriftFamily::SmoothTest => smooth_test(spec, grid, piece),
    })
}

/// Sample the drift on every node of `times`. Deterministic in `spec.seed`.
pub fn generate(spec: &DriftSpec, grid: GridSpec, times: TimeGrid) -> Result<TimeField> {
    spec.validate()?;
    let mut cache: Vec<(u64, SpectralField)> = Vec::new();
    let mut nodes = Vec::with_capacity(times.nodes());
    for m in 0..times.nodes() {
        let piece = piece_of(spec.time_dependence, &times, m);
        let field = match cache.iter().find(|(p, _)| *p == piece) {
            Some((_, f)) => f.clone(),
            None => {
                let f = generate_piece(spec, grid, piece)?;
                cache.push((piece, f.clone()));
                f
            }
        };
        nodes.push(field);
    }
    TimeField::new(times, nodes)
}

/// One explicit real trigonometric term `cos_coef cos(kappa.x) + sin_coef sin(kappa.x)`
/// in component `component`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub component: usize,
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Static drift given by explicit trigonometric terms, e.g. `0.2 sin x`.
pub fn trigonometric(grid: GridSpec, times: TimeGrid, terms: &[TrigTerm]) -> Result<TimeField> {
    let mut f = SpectralField::zeros(grid, grid.dim);
    for t in terms {
        if t.component >= grid.dim || t.k.len() != grid.dim {
            return Err(Error::InvalidSpec(format!(
                "term {t:?} does not fit dimension {}",
                grid.dim
            )));
        }
        let neg: Vec<i64> = t.k.iter().map(|v| -v).collect();
        // a cos + b sin = (a - ib)/2 e^{ikx} + (a + ib)/2 e^{-ikx}
        let plus = SpectralField::mode(grid, &t.k, Complex64::new(0.5 * t.cos, -0.5 * t.sin))?;
        let minus = SpectralField::mode(grid, &neg, Complex64::new(0.5 * t.cos, 0.5 * t.sin))?;
        let scalar = &plus + &minus;
        let mut parts: Vec<SpectralField> = (0..grid.dim).map(|_| SpectralField::zeros(grid, 1)).collect();
        parts[t.component] = scalar;
        let term = SpectralField::stack(&parts)?;
        f = &f + &term;
    }
    let (g, c, coeffs, _) = f.into_parts();
    let f = SpectralField::from_coeffs(g, c, coeffs, true)?;
    Ok(TimeField::constant(times, f))
}

/// Admissible window for `(beta, q)` in dimension `dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRegion {
    pub beta: f64,
    pub q: f64,
    pub dim: usize,
}

impl KappaRegion {
    pub fn new(beta: f64, q: f64, dim: usize) -> Result<Self> {
        let r = KappaRegion { beta, q, dim };
        if !(beta > 0.0 && beta < 0.5) || !(q > r.q_tilde() && q < dim as f64 / beta) {
            return Err(Error::EmptyRegion { beta, q, dim });
        }
        Ok(r)
    }

    /// Lower integrability exponent `d / (1 - beta)`.
    pub fn q_tilde(&self) -> f64 {
        self.dim as f64 / (1.0 - self.beta)
    }

    /// Whether `beta < delta < 1 - beta` and `d/delta < p < q`.
    pub fn contains(&self, delta: f64, p: f64) -> bool {
        self.beta < delta && delta < 1.0 - self.beta && self.dim as f64 / delta < p && p < self.q
    }
}

/// A point of the region: `delta = 1/2` when admissible, `p` the midpoint of
/// `(d/delta, q)`.
pub fn pick_kappa(region: &KappaRegion, dim: usize) -> Result<(f64, f64)> {
    let empty = Error::EmptyRegion {
        beta: region.beta,
        q: region.q,
        dim,
    };
    let region = KappaRegion { dim, ..*region };
    let (beta, q, d) = (region.beta, region.q, dim as f64);
    if !(beta > 0.0 && beta < 0.5) || !(q > d / (1.0 - beta)) {
        return Err(empty);
    }
    let delta = if d / 0.5 < q {
        0.5
    } else {
        (beta.max(d / q) + (1.0 - beta)) / 2.0
    };
    let p = (d / delta + q) / 2.0;
    if !region.contains(delta, p) {
        return Err(empty);
    }
    Ok((delta, p))
}

/// Norms of a drift in `H^{-beta}_{q~, q}` and their sensitivity to resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub beta: f64,
    pub q: f64,
    pub q_tilde: f64,
    /// `sup_t ||b(t)||_{H^{-beta}_{q~}}`.
    pub norm_q_tilde: f64,
    /// `sup_t ||b(t)||_{H^{-beta}_q}`.
    pub norm_q: f64,
    /// Max of the two.
    pub norm: f64,
    /// Relative change of `norm` when the upper half of the spectrum is dropped.
    pub truncation_change: f64,
    pub finite: bool,
}

fn sup_norm_pair(b: &TimeField, beta: f64, q_tilde: f64, q: f64) -> (f64, f64) {
    let mut seen: Vec<&SpectralField> = Vec::new();
    let (mut a, mut c) = (0.0f64, 0.0f64);
    for node in b.nodes() {
        // piecewise-constant drifts repeat the same field
        if seen.last().is_some_and(|&s| s == node) {
            continue;
        }
        seen.push(node);
        a = a.max(node.sobolev_norm(SobolevIndex { s: -beta, p: q_tilde }));
        c = c.max(node.sobolev_norm(SobolevIndex { s: -beta, p: q }));
    }
    (a, c)
}

/// Check the window on `(beta, q)` and measure the drift in `H^{-beta}_{q~,q}`.
pub fn assumption_check(b: &TimeField, beta: f64, q: f64) -> Result<AssumptionReport> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::AssumptionViolated(format!("beta = {beta} is not in (0, 1/2)")));
    }
    let d = b.grid().dim as f64;
    let q_tilde = d / (1.0 - beta);
    if !(q > q_tilde) {
        return Err(Error::AssumptionViolated(format!("q = {q} <= d/(1-beta) = {q_tilde}")));
    }
    if !(q < d / beta) {
        return Err(Error::AssumptionViolated(format!("q = {q} >= d/beta = {}", d / beta)));
    }
    let (norm_q_tilde, norm_q) = sup_norm_pair(b, beta, q_tilde, q);
    let norm = norm_q_tilde.max(norm_q);
    let finite = norm.is_finite();
    if !finite {
        return Err(Error::AssumptionViolated(format!("drift norm is not finite ({norm})")));
    }
    let grid = *b.grid();
    let truncation_change = if norm == 0.0 || grid.n < 16 {
        0.0
    } else {
        let coarse = GridSpec { n: grid.n / 2, ..grid };
        let cut = b.map(|f| f.resample(coarse).and_then(|g| g.resample(grid)).expect("same period"));
        let (x, y) = sup_norm_pair(&cut, beta, q_tilde, q);
        (x.max(y) - norm).abs() / norm
    };
    Ok(AssumptionReport {
        beta,
        q,
        q_tilde,
        norm_q_tilde,
        norm_q,
        norm,
        truncation_change,
        finite,
    })
}

/// Regenerate `spec` on `2N` and return the relative change of the
/// `H^{-beta}_{q~,q}` norm.
pub fn refinement_change(spec: &DriftSpec, grid: GridSpec, times: TimeGrid, q: f64) -> Result<f64> {
    let coarse = assumption_check(&generate(spec, grid, times)?, spec.beta, q)?;
    let fine = assumption_check(&generate(spec, grid.refined(2), times)?, spec.beta, q)?;
    if coarse.norm == 0.0 {
        return Ok(0.0);
    }
    Ok((fine.norm - coarse.norm).abs() / coarse.norm)
}

/// `b_n = b * rho_n` for each `n`; `n_list` must be strictly increasing.
pub fn mollified_sequence(b: &TimeField, n_list: &[f64]) -> Result<Vec<TimeField>> {
    if n_list.windows(2).any(|w| !(w[0] < w[1])) || n_list.iter().any(|&n| !(n >= 1.0)) {
        return Err(Error::Config(format!(
            "mollification levels must be increasing and >= 1: {n_list:?}"
        )));
    }
    Ok(n_list.iter().map(|&n| b.map(|f| f.mollify(n))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(family: DriftFamily) -> DriftSpec {
        DriftSpec {
            family,
            seed: 7,
            beta: 0.25,
            eta: 0.6,
            amplitude: 0.3,
            time_dependence: TimeDependence::Static,
        }
    }

    fn grids(n: usize) -> (GridSpec, TimeGrid) {
        (GridSpec::periodic(1, n).unwrap(), TimeGrid::new(1.0, 8).unwrap())
    }

    #[test]
    fn zero_amplitude_is_zero() {
        let (g, t) = grids(64);
        let b = generate(&spec(DriftFamily::RandomFourier).scaled(0.0), g, t).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn deterministic_and_hermitian() {
        let (g, t) = grids(64);
        for fam in [
            DriftFamily::RandomFourier,
            DriftFamily::DerivativeOfContinuous,
            DriftFamily::SmoothTest,
        ] {
            let a = generate(&spec(fam), g, t).unwrap();
            let b = generate(&spec(fam), g, t).unwrap();
            assert_eq!(a, b);
            assert!(a.node(0).hermitian_defect() < 1e-15);
            assert!(!a.node(0).is_zero());
        }
    }

    #[test]
    fn coarse_modes_survive_refinement() {
        let (g, t) = grids(32);
        for fam in [DriftFamily::RandomFourier, DriftFamily::DerivativeOfContinuous] {
            let coarse = generate(&spec(fam), g, t).unwrap();
            let fine = generate(&spec(fam), g.refined(2), t).unwrap();
            for k in -15i64..16 {
                assert_eq!(coarse.node(0).coeff(0, &[k]), fine.node(0).coeff(0, &[k]));
            }
        }
    }

    #[test]
    fn random_fourier_amplitudes() {
        let (g, t) = grids(64);
        let b = generate(&spec(DriftFamily::RandomFourier), g, t).unwrap();
        for k in 1i64..32 {
            assert_relative_eq!(
                b.node(0).coeff(0, &[k]).norm(),
                0.3 * (k as f64).powf(-0.6),
                epsilon = 1e-14
            );
        }
        assert_eq!(b.node(0).coeff(0, &[0]).norm(), 0.0);
        assert_eq!(b.node(0).coeff(0, &[-32]).norm(), 0.0);
    }

    #[test]
    fn piecewise_constant_changes() {
        let (g, _) = grids(32);
        let t = TimeGrid::new(1.0, 10).unwrap();
        let s = DriftSpec {
            time_dependence: TimeDependence::PiecewiseConstant { changes: 1 },
            ..spec(DriftFamily::RandomFourier)
        };
        let b = generate(&s, g, t).unwrap();
        assert_eq!(b.node(0), b.node(4));
        assert_ne!(b.node(4), b.node(5));
        assert_eq!(b.node(5), b.node(10));
    }

    #[test]
    fn invalid_beta_rejected() {
        let (g, t) = grids(32);
        let s = DriftSpec {
            beta: 0.6,
            ..spec(DriftFamily::RandomFourier)
        };
        assert!(matches!(generate(&s, g, t), Err(Error::InvalidSpec(_))));
        let b = TimeField::zeros(t, g, 1);
        assert!(matches!(
            assumption_check(&b, 0.6, 3.0),
            Err(Error::AssumptionViolated(_))
        ));
        assert!(matches!(
            assumption_check(&b, 0.25, 1.2),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn zero_drift_passes() {
        let (g, t) = grids(32);
        let r = assumption_check(&TimeField::zeros(t, g, 1), 0.25, 3.0).unwrap();
        assert_eq!(r.norm, 0.0);
        assert!(r.finite);
    }

    #[test]
    fn pick_kappa_examples() {
        let region = KappaRegion::new(0.25, 3.0, 1).unwrap();
        assert_eq!(pick_kappa(&region, 1).unwrap(), (0.5, 2.5));
        assert!(region.contains(0.5, 2.5));
        assert!(matches!(KappaRegion::new(0.25, 1.0, 1), Err(Error::EmptyRegion { .. })));
        let bad = KappaRegion {
            beta: 0.25,
            q: 1.0,
            dim: 1,
        };
        assert!(matches!(pick_kappa(&bad, 1), Err(Error::EmptyRegion { .. })));
        // q below 2d forces delta above 1/2
        let tight = KappaRegion::new(0.25, 1.8, 1).unwrap();
        let (delta, p) = pick_kappa(&tight, 1).unwrap();
        assert!(tight.contains(delta, p));
    }

    #[test]
    fn trigonometric_sine() {
        let (g, t) = grids(16);
        let b = trigonometric(
            g,
            t,
            &[TrigTerm {
                component: 0,
                k: vec![1],
                cos: 0.0,
                sin: 0.2,
            }],
        )
        .unwrap();
        let v = b.node(0).evaluate(&[std::f64::consts::FRAC_PI_2]);
        assert_relative_eq!(v[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn mollified_sequence_levels() {
        let (g, t) = grids(32);
        let b = TimeField::zeros(t, g, 1);
        assert_eq!(mollified_sequence(&b, &[1.0]).unwrap(), vec![b.clone()]);
        assert!(mollified_sequence(&b, &[4.0, 2.0]).is_err());
    }
}
