//! Regularized pointwise product `fg = lim_j S^j f . S^j g` of a distribution
//! with a function, evaluated on a dealiased grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SobolevIndex, SpectralField};

/// First dyadic level tried by [`product`].
pub const FIRST_LEVEL: i32 = 3;

fn smooth_step_kernel(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth radial cutoff: `1` on `[0, 1]`, `0` on `[3/2, inf)`, `C^inf` in between.
pub fn cutoff_profile(r: f64) -> f64 {
    let t = 3.0 - 2.0 * r;
    if t >= 1.0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let a = smooth_step_kernel(t);
    a / (a + smooth_step_kernel(1.0 - t))
}

/// How the solver forms `b . grad u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProductRule {
    /// Terminal level of the dyadic sequence: the exact product of the stored
    /// band-limited representations.
    #[default]
    Resolved,
    /// Run the dyadic sequence and require its increments to fall below `tol`.
    Converged { tol: f64, index: SobolevIndex },
}

impl ProductRule {
    pub fn apply(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        match *self {
            ProductRule::Resolved => resolved_product(f, g),
            ProductRule::Converged { tol, index } => product(f, g, tol, index),
        }
    }
}

/// Exact pointwise product of the two band-limited representations, computed
/// on a 2x zero-padded grid and projected back onto the input lattice.
///
/// Scalars broadcast against multi-component fields; otherwise the product is
/// componentwise.
pub fn resolved_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.check_same_grid(g)?;
    let (fc, gc) = (f.components(), g.components());
    if fc != gc && fc != 1 && gc != 1 {
        return Err(Error::Mismatch(format!("cannot multiply {fc} by {gc} components")));
    }
    let grid = *f.grid();
    let fine = grid.refined(2);
    let fv = f.resample(fine)?.complex_values();
    let gv = g.resample(fine)?.complex_values();
    let len = fine.len();
    let components = fc.max(gc);
    let mut out = Vec::with_capacity(len * components);
    for c in 0..components {
        let a = &fv[(c % fc) * len..][..len];
        let b = &gv[(c % gc) * len..][..len];
        out.extend(a.iter().zip(b).map(|(x, y)| x * y));
    }
    let real = f.is_real() && g.is_real();
    let product = SpectralField::from_complex_values(fine, components, out, real);
    let coarse = product.resample(grid)?;
    Ok(if real { coarse.without_nyquist() } else { coarse })
}

/// Smallest level at which the cutoff is the identity on the whole lattice.
pub fn terminal_level(f: &SpectralField) -> i32 {
    f.grid().max_kappa().log2().ceil().max(0.0) as i32
}

/// Dyadic regularized product: returns the first `S^j f . S^j g` (from
/// `j = 3`) whose increment over the previous level is below `tol` in the
/// `idx` norm.
///
/// Fails with [`Error::NonConvergent`] if the lattice is exhausted first.
pub fn product(f: &SpectralField, g: &SpectralField, tol: f64, idx: SobolevIndex) -> Result<SpectralField> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("product tolerance must be positive, got {tol}")));
    }
    let last = terminal_level(f).max(FIRST_LEVEL);
    let at_level = |j: i32| resolved_product(&f.dyadic_cutoff(j), &g.dyadic_cutoff(j));
    let mut prev = at_level(FIRST_LEVEL)?;
    if last == FIRST_LEVEL {
        return Ok(prev);
    }
    let mut residual = f64::INFINITY;
    for j in FIRST_LEVEL + 1..=last {
        let next = at_level(j)?;
        residual = (&next - &prev).sobolev_norm(idx);
        if residual < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergent { level: last, residual })
}

/// `(b . grad) u` componentwise: `out_i = sum_j b_j d_j u_i`.
pub fn drift_gradient_product(b: &SpectralField, u: &SpectralField, rule: &ProductRule) -> Result<SpectralField> {
    let d = b.grid().dim;
    if b.components() != d || u.components() != d {
        return Err(Error::Mismatch(format!(
            "drift and solution need {d} components, got {} and {}",
            b.components(),
            u.components()
        )));
    }
    if u.is_zero() || b.is_zero() {
        return Ok(SpectralField::zeros(*u.grid(), d));
    }
    let jac = u.gradient();
    let mut parts = Vec::with_capacity(d);
    for i in 0..d {
        let mut acc: Option<SpectralField> = None;
        for j in 0..d {
            let term = rule.apply(&b.component(j), &jac.component(i * d + j))?;
            acc = Some(match acc {
                None => term,
                Some(a) => &a + &term,
            });
        }
        parts.push(acc.expect("dimension is at least one"));
    }
    SpectralField::stack(&parts)
}

/// Empirical constant of the product estimate:
/// `||fg||_{H^{-beta}_p} / (||f||_{H^delta_p} ||g||_{H^{-beta}_q})`.
pub fn product_bound_ratio(f: &SpectralField, g: &SpectralField, beta: f64, delta: f64, p: f64, q: f64) -> Result<f64> {
    let d = f.grid().dim as f64;
    if !(0.0 < beta && beta < delta) || !(q > p.max(d / delta)) || !(p > 1.0) {
        return Err(Error::Config(format!(
            "product estimate needs 0 < beta < delta and q > max(p, d/delta); got beta={beta}, delta={delta}, p={p}, q={q}"
        )));
    }
    let fg = resolved_product(f, g)?;
    let num = fg.sobolev_norm(SobolevIndex { s: -beta, p });
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = f.sobolev_norm(SobolevIndex { s: delta, p }) * g.sobolev_norm(SobolevIndex { s: -beta, p: q });
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::num_complex::Complex64;

    fn band_limited(grid: GridSpec, kmax: i64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for k in 0..=kmax {
            let c = Complex64::new(
                rng.random_range(-1.0..1.0),
                if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) },
            );
            coeffs[grid.flat_of(&[k]).unwrap()] = c;
            if k > 0 {
                coeffs[grid.flat_of(&[-k]).unwrap()] = c.conj();
            }
        }
        SpectralField::from_coeffs(grid, 1, coeffs, true).unwrap()
    }

    #[test]
    fn profile_values() {
        assert_eq!(cutoff_profile(0.5), 1.0);
        assert_eq!(cutoff_profile(1.0), 1.0);
        assert_eq!(cutoff_profile(2.0), 0.0);
        assert_eq!(cutoff_profile(1.5), 0.0);
        assert_relative_eq!(cutoff_profile(1.25), 0.5, epsilon = 1e-15);
        let mut last = 1.0;
        for i in 0..=100 {
            let v = cutoff_profile(1.0 + 0.005 * i as f64);
            assert!((0.0..=1.0).contains(&v) && v <= last);
            last = v;
        }
    }

    #[test]
    fn unit_element() {
        let grid = GridSpec::periodic(1, 64).unwrap();
        let g = band_limited(grid, 6, 1);
        let one = SpectralField::constant(grid, &[1.0]);
        let idx = SobolevIndex::new(-0.25, 2.0).unwrap();
        let out = product(&one, &g, 1e-12, idx).unwrap();
        assert!(out.max_coeff_diff(&g) < 1e-15);
    }

    #[test]
    fn sine_squared() {
        let grid = GridSpec::periodic(1, 32).unwrap();
        let s = SpectralField::from_fn(grid, 1, |x, o| o[0] = x[0].sin());
        let idx = SobolevIndex::new(0.0, 2.0).unwrap();
        let out = product(&s, &s, 1e-12, idx).unwrap();
        for x in [0.0, 0.7, 2.0, 5.5] {
            assert_relative_eq!(out.evaluate(&[x])[0], (1.0 - (2.0 * x).cos()) / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn symmetric_and_bilinear() {
        let grid = GridSpec::periodic(1, 64).unwrap();
        let f1 = band_limited(grid, 5, 2);
        let f2 = band_limited(grid, 7, 3);
        let g = band_limited(grid, 4, 4);
        let idx = SobolevIndex::new(-0.25, 2.0).unwrap();
        let fg = product(&f1, &g, 1e-12, idx).unwrap();
        assert_eq!(fg, product(&g, &f1, 1e-12, idx).unwrap());
        let a = 0.7;
        let lhs = product(&f1.scale(a).axpy(1.0, &f2), &g, 1e-12, idx).unwrap();
        let rhs = fg.scale(a).axpy(1.0, &product(&f2, &g, 1e-12, idx).unwrap());
        assert!(lhs.max_coeff_diff(&rhs) < 1e-10);
    }

    #[test]
    fn rough_input_does_not_stabilize() {
        let grid = GridSpec::periodic(1, 256).unwrap();
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for k in 1..128i64 {
            let c = Complex64::from_polar((k as f64).powf(-0.2), 0.3 * k as f64);
            coeffs[grid.flat_of(&[k]).unwrap()] = c;
            coeffs[grid.flat_of(&[-k]).unwrap()] = c.conj();
        }
        let b = SpectralField::from_coeffs(grid, 1, coeffs, true).unwrap();
        let one = SpectralField::constant(grid, &[1.0]);
        let idx = SobolevIndex::new(-0.25, 2.0).unwrap();
        assert!(matches!(product(&b, &one, 1e-6, idx), Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn drift_gradient_cases() {
        let grid = GridSpec::periodic(1, 32).unwrap();
        let b = SpectralField::from_fn(grid, 1, |x, o| o[0] = x[0].sin());
        let zero = SpectralField::zeros(grid, 1);
        assert!(drift_gradient_product(&b, &zero, &ProductRule::Resolved)
            .unwrap()
            .is_zero());
        let out = drift_gradient_product(&b, &b, &ProductRule::Resolved).unwrap();
        for x in [0.2, 1.1, 3.0] {
            assert_relative_eq!(out.evaluate(&[x])[0], (2.0 * x).sin() / 2.0, epsilon = 1e-14);
        }
        let c = SpectralField::constant(grid, &[0.4]);
        let u = SpectralField::from_fn(grid, 1, |x, o| o[0] = (3.0 * x[0]).cos());
        let out = drift_gradient_product(&c, &u, &ProductRule::Resolved).unwrap();
        for x in [0.2, 1.1, 3.0] {
            assert_relative_eq!(out.evaluate(&[x])[0], -1.2 * (3.0 * x).sin(), epsilon = 1e-13);
        }
    }

    #[test]
    fn two_dimensional_drift_gradient() {
        let grid = GridSpec::periodic(2, 16).unwrap();
        let b = SpectralField::constant(grid, &[0.5, -1.0]);
        let u = SpectralField::from_fn(grid, 2, |x, o| {
            o[0] = x[0].sin() * x[1].cos();
            o[1] = (x[0] + x[1]).sin();
        });
        let out = drift_gradient_product(&b, &u, &ProductRule::Resolved).unwrap();
        let x = [0.4, 2.2];
        let v = out.evaluate(&x);
        let e0 = 0.5 * x[0].cos() * x[1].cos() + x[0].sin() * x[1].sin();
        let e1 = 0.5 * (x[0] + x[1]).cos() - (x[0] + x[1]).cos();
        assert_relative_eq!(v[0], e0, epsilon = 1e-13);
        assert_relative_eq!(v[1], e1, epsilon = 1e-13);
    }

    #[test]
    fn bound_ratio_edge_cases() {
        let grid = GridSpec::periodic(1, 64).unwrap();
        let g = band_limited(grid, 6, 9);
        let zero = SpectralField::zeros(grid, 1);
        assert_eq!(product_bound_ratio(&g, &zero, 0.25, 0.5, 2.5, 3.0).unwrap(), 0.0);
        assert!(product_bound_ratio(&g, &g, 0.5, 0.25, 2.5, 3.0).is_err());
        // unit f: ||g||_{H^{-beta}_p} / (|f|_{H^delta_p} ||g||_{H^{-beta}_q}) with ||1||_{H^delta_p} = (2 pi)^{1/p}
        let one = SpectralField::constant(grid, &[1.0]);
        let r = product_bound_ratio(&one, &g, 0.25, 0.5, 2.5, 3.0).unwrap();
        let gp = g.sobolev_norm(SobolevIndex::new(-0.25, 2.5).unwrap());
        let gq = g.sobolev_norm(SobolevIndex::new(-0.25, 3.0).unwrap());
        assert_relative_eq!(
            r,
            gp / ((2.0 * std::f64::consts::PI).powf(1.0 / 2.5) * gq),
            max_relative = 1e-12
        );
    }
}
