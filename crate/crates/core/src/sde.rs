//! Euler-Maruyama for the transformed equation
//!
//! ```text
//! dY = (lambda + 1) u(t, psi(t, Y)) dt + (grad u(t, psi(t, Y)) + I) dW,   Y_0 = x0 + u(0, x0),
//! ```
//!
//! the virtual solution `X = psi(t, Y)`, and the classical scheme
//! `dX = b_n(t, X) dt + dW` for smooth drifts.
//!
//! Brownian increments come from counter-addressed streams: path `p` reads
//! ChaCha8 stream `p` of the master seed, and fine step `j` starts at a fixed
//! word offset, so every ensemble that shares `(seed, noise_steps)` sees the
//! same Brownian paths whatever its own step count or worker count.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_extremes;
use crate::spectral::{PointEvaluator, TimeField, MAX_DIM};
use crate::zvonkin::{Slice, TransformContext};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SINGULAR_DRIFT_THREADS";

/// Shared worker pool, sized by [`THREADS_ENV`] when set.
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    /// Must match the PDE solve behind the transform.
    pub lambda: f64,
    /// Resolution of the Brownian increments; a multiple of `steps`.
    /// Defaults to `steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_steps: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.paths == 0 {
            return Err(Error::Config(format!(
                "need steps >= 1 and paths >= 1, got {} and {}",
                self.steps, self.paths
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.x0.is_empty() || self.x0.len() > MAX_DIM {
            return Err(Error::Config(format!(
                "initial point must have 1..={MAX_DIM} coordinates"
            )));
        }
        let fine = self.noise_steps();
        if fine % self.steps != 0 {
            return Err(Error::Config(format!(
                "noise resolution {fine} is not a multiple of {} steps",
                self.steps
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn noise_steps(&self) -> usize {
        self.noise_steps.unwrap_or(self.steps)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.horizon / self.steps as f64
    }
}

/// Where the randomness of an ensemble came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub noise_steps: usize,
    pub stream_rule: String,
}

const STREAM_RULE: &str = "chacha8(seed), stream = path index, fine step j starts at word 4*ceil(d/2)*j, \
Box-Muller on pairs of u64, increments summed over fine steps";

impl Provenance {
    fn of(cfg: &SimConfig) -> Self {
        Provenance {
            seed: cfg.seed,
            noise_steps: cfg.noise_steps(),
            stream_rule: STREAM_RULE.to_string(),
        }
    }
}

/// Brownian increments of one path.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    dim: usize,
    fine_dt: f64,
    per_step: usize,
}

impl NoiseStream {
    /// Stream of `path`, positioned at fine step 0.
    pub fn new(seed: u64, path: u64, dim: usize, horizon: f64, noise_steps: usize, per_step: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        NoiseStream {
            rng,
            dim,
            fine_dt: horizon / noise_steps as f64,
            per_step,
        }
    }

    fn for_cfg(cfg: &SimConfig, path: usize) -> Self {
        Self::new(
            cfg.seed,
            path as u64,
            cfg.dim(),
            cfg.horizon,
            cfg.noise_steps(),
            cfg.noise_steps() / cfg.steps,
        )
    }

    fn words_per_fine_step(dim: usize) -> u128 {
        4 * dim.div_ceil(2) as u128
    }

    /// Jump to fine step `j`.
    pub fn seek(&mut self, fine_step: usize) {
        self.rng
            .set_word_pos(fine_step as u128 * Self::words_per_fine_step(self.dim));
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normals for one fine step.
    fn fine(&mut self, out: &mut [f64]) {
        let mut a = 0;
        while a < self.dim {
            let r = (-2.0 * self.uniform().ln()).sqrt();
            let theta = std::f64::consts::TAU * self.uniform();
            out[a] = r * theta.cos();
            if a + 1 < self.dim {
                out[a + 1] = r * theta.sin();
            }
            a += 2;
        }
    }

    /// Next coarse increment `W(t_{m+1}) - W(t_m)`.
    pub fn next_increment(&mut self, out: &mut [f64]) {
        let mut z = [0.0; MAX_DIM];
        out[..self.dim].iter_mut().for_each(|v| *v = 0.0);
        let s = self.fine_dt.sqrt();
        for _ in 0..self.per_step {
            self.fine(&mut z);
            for a in 0..self.dim {
                out[a] += s * z[a];
            }
        }
    }
}

/// Paths stored `paths x (steps + 1) x d`, path-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub cfg: SimConfig,
    pub label: String,
    pub provenance: Provenance,
    states: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    cfg: SimConfig,
    label: String,
    provenance: Provenance,
    paths: usize,
    steps: usize,
    dim: usize,
}

impl PathEnsemble {
    fn empty(cfg: &SimConfig, label: &str) -> Self {
        PathEnsemble {
            cfg: cfg.clone(),
            label: label.to_string(),
            provenance: Provenance::of(cfg),
            states: vec![0.0; cfg.paths * (cfg.steps + 1) * cfg.dim()],
        }
    }

    pub fn paths(&self) -> usize {
        self.cfg.paths
    }

    pub fn steps(&self) -> usize {
        self.cfg.steps
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = (self.steps() + 1) * self.dim();
        &self.states[p * n..(p + 1) * n]
    }

    pub fn state(&self, p: usize, m: usize) -> &[f64] {
        let d = self.dim();
        &self.path(p)[m * d..(m + 1) * d]
    }

    fn state_mut(&mut self, p: usize, m: usize) -> &mut [f64] {
        let d = self.dim();
        let n = (self.steps() + 1) * d;
        &mut self.states[p * n + m * d..p * n + (m + 1) * d]
    }

    /// Coordinate `a` of every path at step `m`.
    pub fn marginal(&self, m: usize, a: usize) -> Vec<f64> {
        (0..self.paths()).map(|p| self.state(p, m)[a]).collect()
    }

    /// Projection `sum_a w_a X^a` of every path at step `m`.
    pub fn projection(&self, m: usize, w: &[f64]) -> Vec<f64> {
        (0..self.paths())
            .map(|p| self.state(p, m).iter().zip(w).map(|(x, c)| x * c).sum())
            .collect()
    }

    /// Step index closest to time `t`.
    pub fn step_at(&self, t: f64) -> usize {
        ((t / self.cfg.horizon) * self.steps() as f64)
            .round()
            .clamp(0.0, self.steps() as f64) as usize
    }

    /// One compact JSON header line, then the states as little-endian `f64`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header = EnsembleHeader {
            cfg: self.cfg.clone(),
            label: self.label.clone(),
            provenance: self.provenance.clone(),
            paths: self.paths(),
            steps: self.steps(),
            dim: self.dim(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for v in &self.states {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(std::fs::File::open(path)?);
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: EnsembleHeader = serde_json::from_str(line.trim_end())?;
        if header.cfg.paths != header.paths || header.cfg.steps != header.steps || header.cfg.dim() != header.dim {
            return Err(Error::Format("ensemble header disagrees with its config".into()));
        }
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let expect = header.paths * (header.steps + 1) * header.dim * 8;
        if bytes.len() != expect {
            return Err(Error::Format(format!(
                "ensemble payload has {} bytes, expected {expect}",
                bytes.len()
            )));
        }
        let states = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(PathEnsemble {
            cfg: header.cfg,
            label: header.label,
            provenance: header.provenance,
            states,
        })
    }
}

fn check_dims(ctx_dim: usize, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.dim() != ctx_dim {
        return Err(Error::Mismatch(format!(
            "initial point has {} coordinates, field lives in dimension {ctx_dim}",
            cfg.dim()
        )));
    }
    Ok(())
}

/// Drift `mu` and diffusion `sigma` (row-major) of the transformed equation at `y`.
///
/// Also returns `x = psi(t, y)`. Fails with [`Error::Degenerate`] if the
/// smallest singular value of `sigma` drops below 1/2.
fn coefficients_at(
    slice: &Slice,
    lambda: f64,
    y: &[f64],
    x: &mut [f64],
    mu: &mut [f64],
    sigma: &mut [f64],
) -> Result<()> {
    let d = y.len();
    slice.psi_into(y, x)?;
    let mut buf = [0.0; MAX_DIM + MAX_DIM * MAX_DIM];
    slice.u_grad_into(x, &mut buf);
    for a in 0..d {
        mu[a] = (lambda + 1.0) * buf[a];
        for j in 0..d {
            sigma[a * d + j] = buf[d + a * d + j] + if a == j { 1.0 } else { 0.0 };
        }
    }
    let (_, lo) = singular_extremes(&sigma[..d * d], d);
    if lo < 0.5 {
        return Err(Error::Degenerate {
            t: slice.time(),
            min_singular: lo,
        });
    }
    Ok(())
}

/// `(mu(t, y), sigma(t, y))` for a single point.
pub fn coefficients(ctx: &TransformContext, lambda: f64, t: f64, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = ctx.dim();
    let (mut x, mut mu, mut sigma) = (vec![0.0; d], vec![0.0; d], vec![0.0; d * d]);
    coefficients_at(&ctx.slice(t), lambda, y, &mut x, &mut mu, &mut sigma)?;
    Ok((mu, sigma))
}

struct Walker {
    noise: NoiseStream,
    y: [f64; MAX_DIM],
}

/// Simulate `Y` and `X = psi(t, Y)` together.
pub fn simulate_virtual(ctx: &TransformContext, cfg: &SimConfig) -> Result<(PathEnsemble, PathEnsemble)> {
    check_dims(ctx.dim(), cfg)?;
    if (ctx.horizon() - cfg.horizon).abs() > 1e-12 * cfg.horizon {
        return Err(Error::Mismatch(format!(
            "simulation horizon {} differs from the solution horizon {}",
            cfg.horizon,
            ctx.horizon()
        )));
    }
    let d = cfg.dim();
    let dt = cfg.dt();
    let mut ys = PathEnsemble::empty(cfg, "transformed");
    let mut xs = PathEnsemble::empty(cfg, "virtual");
    let mut u0 = vec![0.0; d];
    ctx.slice(0.0).u_into(&cfg.x0, &mut u0);
    let mut walkers: Vec<Walker> = (0..cfg.paths)
        .map(|p| {
            let mut y = [0.0; MAX_DIM];
            for a in 0..d {
                y[a] = cfg.x0[a] + u0[a];
            }
            Walker {
                noise: NoiseStream::for_cfg(cfg, p),
                y,
            }
        })
        .collect();
    let mut frame_y = vec![0.0; cfg.paths * d];
    let mut frame_x = vec![0.0; cfg.paths * d];
    for m in 0..=cfg.steps {
        let slice = ctx.slice(cfg.time(m));
        let last = m == cfg.steps;
        pool().install(|| {
            walkers
                .par_iter_mut()
                .zip(frame_y.par_chunks_mut(d))
                .zip(frame_x.par_chunks_mut(d))
                .try_for_each(|((w, fy), fx)| -> Result<()> {
                    let y = &mut w.y[..d];
                    fy.copy_from_slice(y);
                    let (mut mu, mut sigma) = ([0.0; MAX_DIM], [0.0; MAX_DIM * MAX_DIM]);
                    if last {
                        slice.psi_into(y, fx)?;
                        return Ok(());
                    }
                    coefficients_at(&slice, cfg.lambda, y, fx, &mut mu[..d], &mut sigma[..d * d])?;
                    let mut dw = [0.0; MAX_DIM];
                    w.noise.next_increment(&mut dw);
                    for a in 0..d {
                        let mut s = 0.0;
                        for j in 0..d {
                            s += sigma[a * d + j] * dw[j];
                        }
                        y[a] += mu[a] * dt + s;
                    }
                    Ok(())
                })
        })?;
        for p in 0..cfg.paths {
            ys.state_mut(p, m).copy_from_slice(&frame_y[p * d..(p + 1) * d]);
            xs.state_mut(p, m).copy_from_slice(&frame_x[p * d..(p + 1) * d]);
        }
    }
    Ok((ys, xs))
}

/// Euler-Maruyama for the transformed process `Y`.
pub fn simulate_y(ctx: &TransformContext, cfg: &SimConfig) -> Result<PathEnsemble> {
    Ok(simulate_virtual(ctx, cfg)?.0)
}

/// `X_m = psi(t_m, Y_m)` along every path.
pub fn virtual_x(ctx: &TransformContext, y: &PathEnsemble) -> Result<PathEnsemble> {
    let cfg = &y.cfg;
    check_dims(ctx.dim(), cfg)?;
    let d = cfg.dim();
    let mut xs = PathEnsemble::empty(cfg, "virtual");
    xs.provenance = y.provenance.clone();
    let mut frame = vec![0.0; cfg.paths * d];
    for m in 0..=cfg.steps {
        let slice = ctx.slice(cfg.time(m));
        pool().install(|| {
            frame
                .par_chunks_mut(d)
                .enumerate()
                .try_for_each(|(p, fx)| slice.psi_into(y.state(p, m), fx).map(|_| ()))
        })?;
        for p in 0..cfg.paths {
            xs.state_mut(p, m).copy_from_slice(&frame[p * d..(p + 1) * d]);
        }
    }
    Ok(xs)
}

/// Euler-Maruyama for `dX = b_n(t, X) dt + dW` with the drift frozen at the
/// last node `<= t` of its time grid.
pub fn simulate_classical(b_n: &TimeField, cfg: &SimConfig, label: &str) -> Result<PathEnsemble> {
    check_dims(b_n.grid().dim, cfg)?;
    if b_n.components() != cfg.dim() {
        return Err(Error::Mismatch(format!("drift has {} components", b_n.components())));
    }
    let d = cfg.dim();
    let dt = cfg.dt();
    let mut xs = PathEnsemble::empty(cfg, label);
    let mut walkers: Vec<Walker> = (0..cfg.paths)
        .map(|p| {
            let mut y = [0.0; MAX_DIM];
            y[..d].copy_from_slice(&cfg.x0);
            Walker {
                noise: NoiseStream::for_cfg(cfg, p),
                y,
            }
        })
        .collect();
    let mut frame = vec![0.0; cfg.paths * d];
    let mut cache: Vec<Option<PointEvaluator>> = vec![None; b_n.times().nodes()];
    for m in 0..=cfg.steps {
        let node = b_n.left_node(cfg.time(m));
        let k = b_n
            .nodes()
            .iter()
            .position(|f| std::ptr::eq(f, node))
            .expect("node of b_n");
        let eval = &*cache[k].get_or_insert_with(|| PointEvaluator::new(std::slice::from_ref(node)));
        let last = m == cfg.steps;
        pool().install(|| {
            walkers.par_iter_mut().zip(frame.par_chunks_mut(d)).for_each(|(w, fx)| {
                let x = &mut w.y[..d];
                fx.copy_from_slice(x);
                if last {
                    return;
                }
                let mut b = [0.0; MAX_DIM];
                eval.eval_into(x, &mut b);
                let mut dw = [0.0; MAX_DIM];
                w.noise.next_increment(&mut dw);
                for a in 0..d {
                    x[a] += b[a] * dt + dw[a];
                }
            })
        });
        for p in 0..cfg.paths {
            xs.state_mut(p, m).copy_from_slice(&frame[p * d..(p + 1) * d]);
        }
    }
    Ok(xs)
}

/// `x0 + W` for the Brownian paths seen by `cfg`, sampled at `cfg.steps`
/// and accumulated in the same order as the schemes.
pub fn brownian(cfg: &SimConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    let d = cfg.dim();
    let mut out = PathEnsemble::empty(cfg, "brownian");
    for p in 0..cfg.paths {
        let mut noise = NoiseStream::for_cfg(cfg, p);
        let mut w = [0.0; MAX_DIM];
        w[..d].copy_from_slice(&cfg.x0);
        out.state_mut(p, 0).copy_from_slice(&w[..d]);
        let mut dw = [0.0; MAX_DIM];
        for m in 1..=cfg.steps {
            noise.next_increment(&mut dw);
            for a in 0..d {
                w[a] += dw[a];
            }
            out.state_mut(p, m).copy_from_slice(&w[..d]);
        }
    }
    Ok(out)
}

/// Largest discrepancy, over paths and the nodes of `w`, in the identity
///
/// ```text
/// X_t = x0 + u(0, x0) - u(t, X_t) + (lambda + 1) int_0^t u(s, X_s) ds + int_0^t (grad u(s, X_s) + I) dW_s,
/// ```
///
/// with left-point sums on the time grid of `w`. `w` may be finer than `x`
/// (an integer multiple of its steps); `x` is then interpolated linearly in time.
pub fn virtual_residual(ctx: &TransformContext, lambda: f64, x: &PathEnsemble, w: &PathEnsemble) -> Result<f64> {
    let d = x.dim();
    if w.dim() != d || w.paths() != x.paths() || w.steps() % x.steps() != 0 {
        return Err(Error::Mismatch(format!(
            "Brownian ensemble ({} paths, {} steps) does not refine the solution ({} paths, {} steps)",
            w.paths(),
            w.steps(),
            x.paths(),
            x.steps()
        )));
    }
    let ratio = w.steps() / x.steps();
    let h = w.cfg.dt();
    let x0 = &x.cfg.x0;
    let mut u0 = vec![0.0; d];
    ctx.slice(0.0).u_into(x0, &mut u0);
    let mut drift_sum = vec![[0.0; MAX_DIM]; x.paths()];
    let mut noise_sum = vec![[0.0; MAX_DIM]; x.paths()];
    let mut worst = 0.0f64;
    for j in 0..=w.steps() {
        let slice = ctx.slice(w.cfg.time(j));
        let (m, frac) = (j / ratio, (j % ratio) as f64 / ratio as f64);
        let step_worst = pool().install(|| {
            drift_sum
                .par_iter_mut()
                .zip(noise_sum.par_iter_mut())
                .enumerate()
                .map(|(p, (ds, ns))| {
                    let mut xj = [0.0; MAX_DIM];
                    let a0 = x.state(p, m);
                    for a in 0..d {
                        xj[a] = if frac == 0.0 {
                            a0[a]
                        } else {
                            (1.0 - frac) * a0[a] + frac * x.state(p, m + 1)[a]
                        };
                    }
                    let mut buf = [0.0; MAX_DIM + MAX_DIM * MAX_DIM];
                    slice.u_grad_into(&xj[..d], &mut buf);
                    let mut err = 0.0;
                    for a in 0..d {
                        let rhs = x0[a] + u0[a] - buf[a] + ds[a] + ns[a];
                        err += (xj[a] - rhs) * (xj[a] - rhs);
                    }
                    if j < w.steps() {
                        let (wa, wb) = (w.state(p, j), w.state(p, j + 1));
                        for a in 0..d {
                            ds[a] += (lambda + 1.0) * buf[a] * h;
                            let mut s = 0.0;
                            for c in 0..d {
                                let sig = buf[d + a * d + c] + if a == c { 1.0 } else { 0.0 };
                                s += sig * (wb[c] - wa[c]);
                            }
                            ns[a] += s;
                        }
                    }
                    err.sqrt()
                })
                .reduce(|| 0.0, f64::max)
        });
        worst = worst.max(step_worst);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GridSpec, SpectralField, TimeGrid};
    use crate::zvonkin::InverseConfig;

    fn cfg(paths: usize, steps: usize) -> SimConfig {
        SimConfig {
            x0: vec![0.5],
            horizon: 1.0,
            steps,
            paths,
            seed: 42,
            lambda: 1.0,
            noise_steps: None,
        }
    }

    fn zero_ctx() -> TransformContext {
        let g = GridSpec::periodic(1, 16).unwrap();
        let t = TimeGrid::new(1.0, 4).unwrap();
        TransformContext::new(TimeField::zeros(t, g, 1), InverseConfig::default()).unwrap()
    }

    #[test]
    fn zero_u_gives_brownian_motion() {
        let c = cfg(20, 16);
        let (y, x) = simulate_virtual(&zero_ctx(), &c).unwrap();
        let w = brownian(&c).unwrap();
        for p in 0..20 {
            for m in 0..=16 {
                assert_eq!(y.state(p, m), w.state(p, m));
                assert_eq!(x.state(p, m), y.state(p, m));
            }
        }
    }

    #[test]
    fn coarse_increments_sum_fine_ones() {
        let coarse = SimConfig {
            noise_steps: Some(64),
            ..cfg(3, 16)
        };
        let fine = cfg(3, 64);
        let wc = brownian(&coarse).unwrap();
        let wf = brownian(&fine).unwrap();
        for p in 0..3 {
            for m in 0..=16 {
                assert!((wc.state(p, m)[0] - wf.state(p, 4 * m)[0]).abs() < 1e-13);
            }
        }
        let zero = TimeField::zeros(TimeGrid::new(1.0, 4).unwrap(), GridSpec::periodic(1, 8).unwrap(), 1);
        let x = simulate_classical(&zero, &fine, "classical").unwrap();
        for p in 0..3 {
            for m in 0..=64 {
                assert_eq!(x.state(p, m), wf.state(p, m));
            }
        }
    }

    #[test]
    fn seek_matches_sequential() {
        let mut a = NoiseStream::new(9, 2, 2, 1.0, 10, 1);
        let mut out = [0.0; 2];
        for _ in 0..7 {
            a.next_increment(&mut out);
        }
        let mut b = NoiseStream::new(9, 2, 2, 1.0, 10, 1);
        b.seek(6);
        let mut other = [0.0; 2];
        b.next_increment(&mut other);
        assert_eq!(out, other);
    }

    #[test]
    fn constant_drift_mean() {
        let g = GridSpec::periodic(1, 8).unwrap();
        let t = TimeGrid::new(1.0, 4).unwrap();
        let b = TimeField::constant(t, SpectralField::constant(g, &[0.8]));
        let c = cfg(4000, 8);
        let x = simulate_classical(&b, &c, "classical").unwrap();
        let xt = x.marginal(8, 0);
        let mean = xt.iter().sum::<f64>() / xt.len() as f64;
        let se = 1.0 / (xt.len() as f64).sqrt();
        assert!((mean - 1.3).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn sine_transform_residual_is_tiny() {
        let g = GridSpec::periodic(1, 32).unwrap();
        let t = TimeGrid::new(1.0, 8).unwrap();
        let u = TimeField::from_fn(t, |_, s| {
            SpectralField::from_fn(g, 1, |x, o| o[0] = 0.2 * (1.0 - s) * x[0].sin())
        })
        .unwrap();
        let ctx = TransformContext::new(u, InverseConfig::default()).unwrap();
        let c = cfg(50, 32);
        let (_, x) = simulate_virtual(&ctx, &c).unwrap();
        assert!((x.state(0, 0)[0] - 0.5).abs() < 1e-10);
        let w = brownian(&c).unwrap();
        let r = virtual_residual(&ctx, c.lambda, &x, &w).unwrap();
        assert!(r < 1e-10, "{r}");
        let (mu, sigma) = coefficients(&ctx, 1.0, 0.3, &[1.0]).unwrap();
        assert_eq!(mu.len(), 1);
        assert!(sigma[0] >= 0.5);
    }

    #[test]
    fn ensemble_round_trip() {
        let c = cfg(3, 4);
        let w = brownian(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        w.write(&path).unwrap();
        assert_eq!(PathEnsemble::read(&path).unwrap(), w);
    }
}
