//! The transform `phi(t, x) = x + u(t, x)` and its inverse `psi(t, .)`.
//!
//! `u` is interpolated linearly in time between solver nodes and summed
//! spectrally in space. A [`Slice`] freezes the interpolation at one time so
//! that many points (all paths of an ensemble at one step) share the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kolmogorov::gradient_sup;
use crate::spectral::{PointEvaluator, TimeField, MAX_DIM};

pub const DEFAULT_INVERSE_TOL: f64 = 1e-12;
pub const DEFAULT_INVERSE_MAX_ITER: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            tol: DEFAULT_INVERSE_TOL,
            max_iter: DEFAULT_INVERSE_MAX_ITER,
        }
    }
}

/// `u` together with its gradient certificate.
#[derive(Clone, Debug)]
pub struct TransformContext {
    u: TimeField,
    inverse: InverseConfig,
    gradient_sup: f64,
}

impl TransformContext {
    /// Fails with [`Error::AssumptionViolated`] unless `sup |grad u| <= 1/2`.
    pub fn new(u: TimeField, inverse: InverseConfig) -> Result<Self> {
        if u.components() != u.grid().dim {
            return Err(Error::Mismatch(format!(
                "transform needs {} components, got {}",
                u.grid().dim,
                u.components()
            )));
        }
        if !(inverse.tol > 0.0) || inverse.max_iter == 0 {
            return Err(Error::Config(format!("invalid inverse settings {inverse:?}")));
        }
        let g = gradient_sup(&u);
        if g > 0.5 {
            return Err(Error::AssumptionViolated(format!("sup |grad u| = {g} exceeds 1/2")));
        }
        Ok(TransformContext {
            u,
            inverse,
            gradient_sup: g,
        })
    }

    pub fn u(&self) -> &TimeField {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.grid().dim
    }

    pub fn horizon(&self) -> f64 {
        self.u.times().horizon
    }

    pub fn inverse(&self) -> InverseConfig {
        self.inverse
    }

    pub fn gradient_sup(&self) -> f64 {
        self.gradient_sup
    }

    /// Same `u` with a different inverse tolerance.
    pub fn with_inverse(&self, inverse: InverseConfig) -> TransformContext {
        TransformContext {
            inverse,
            ..self.clone()
        }
    }

    /// Freeze the time interpolation at `t`.
    pub fn slice(&self, t: f64) -> Slice {
        let field = self.u.interpolate(t);
        let grad = field.gradient();
        Slice {
            t,
            dim: self.dim(),
            inverse: self.inverse,
            u: PointEvaluator::new(std::slice::from_ref(&field)),
            u_grad: PointEvaluator::new(&[field, grad]),
        }
    }

    pub fn phi(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.slice(t).phi_into(x, &mut out);
        out
    }

    pub fn psi(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.slice(t).psi_into(y, &mut out)?;
        Ok(out)
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> [f64; MAX_DIM] {
        let l = self.u.grid().period;
        let mut x = [0.0; MAX_DIM];
        for xa in x.iter_mut().take(self.dim()) {
            *xa = rng.random_range(0.0..l);
        }
        x
    }

    /// Largest `|psi(t, y1) - psi(t, y2)| / |y1 - y2|` over random pairs at
    /// separations spread over three decades.
    pub fn lipschitz_probe(&self, samples: usize, seed: u64) -> Result<f64> {
        assert!(samples >= 2, "need at least two samples");
        let d = self.dim();
        let l = self.u.grid().period;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
        let mut best = 0.0f64;
        for _ in 0..samples {
            let t = rng.random_range(0.0..=self.horizon());
            let y1 = self.random_point(&mut rng);
            let scale = l * 10f64.powf(-rng.random_range(0.0..3.0));
            let mut y2 = y1;
            for v in y2.iter_mut().take(d) {
                *v += scale * rng.random_range(-1.0..1.0);
            }
            let s = self.slice(t);
            s.psi_into(&y1[..d], &mut a)?;
            s.psi_into(&y2[..d], &mut b)?;
            let num = dist(&a, &b);
            let den = dist(&y1[..d], &y2[..d]);
            if den > 0.0 {
                best = best.max(num / den);
            }
        }
        Ok(best)
    }

    /// Largest `|psi(t1, y) - psi(t2, y)| / |t1 - t2|^gamma` over random samples.
    pub fn time_continuity_probe(&self, gamma: f64, samples: usize, seed: u64) -> Result<f64> {
        assert!(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
        let mut best = 0.0f64;
        for _ in 0..samples {
            let t1 = rng.random_range(0.0..=self.horizon());
            let t2 = rng.random_range(0.0..=self.horizon());
            if t1 == t2 {
                continue;
            }
            let y = self.random_point(&mut rng);
            self.slice(t1).psi_into(&y[..d], &mut a)?;
            self.slice(t2).psi_into(&y[..d], &mut b)?;
            best = best.max(dist(&a, &b) / (t1 - t2).abs().powf(gamma));
        }
        Ok(best)
    }

    /// `(max |phi(t, psi(t, y)) - y|, max |psi(t, phi(t, x)) - x|)` over random samples.
    pub fn bijection_residuals(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
        let (mut r1, mut r2) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let t = rng.random_range(0.0..=self.horizon());
            let p = self.random_point(&mut rng);
            let p = &p[..d];
            let s = self.slice(t);
            s.psi_into(p, &mut a)?;
            s.phi_into(&a, &mut b);
            r1 = r1.max(dist(&b, p));
            s.phi_into(p, &mut a);
            s.psi_into(&a, &mut b)?;
            r2 = r2.max(dist(&b, p));
        }
        Ok((r1, r2))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `u(t, .)` and `grad u(t, .)` at one fixed time.
#[derive(Clone, Debug)]
pub struct Slice {
    t: f64,
    dim: usize,
    inverse: InverseConfig,
    u: PointEvaluator,
    u_grad: PointEvaluator,
}

impl Slice {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn u_into(&self, x: &[f64], out: &mut [f64]) {
        self.u.eval_into(x, out);
    }

    /// `u` in `out[..d]` followed by the Jacobian `d_j u_i` at `out[d + i*d + j]`.
    pub fn u_grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.u_grad.eval_into(x, out);
    }

    pub fn phi_into(&self, x: &[f64], out: &mut [f64]) {
        self.u.eval_into(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += xi;
        }
    }

    /// Fixed point of `x -> y - u(t, x)` from `x = y`; returns the iteration count.
    pub fn psi_into(&self, y: &[f64], out: &mut [f64]) -> Result<usize> {
        let d = self.dim;
        let mut u = [0.0; MAX_DIM];
        out[..d].copy_from_slice(&y[..d]);
        let mut step = f64::INFINITY;
        for it in 1..=self.inverse.max_iter {
            self.u.eval_into(&out[..d], &mut u);
            let mut sq = 0.0;
            for a in 0..d {
                let next = y[a] - u[a];
                sq += (next - out[a]) * (next - out[a]);
                out[a] = next;
            }
            step = sq.sqrt();
            if step < self.inverse.tol {
                return Ok(it);
            }
        }
        Err(Error::InverseDiverged {
            t: self.t,
            iterations: self.inverse.max_iter,
            last_step: step,
        })
    }
}
