//! Periodic spectral fields and the Fourier-multiplier calculus.
//!
//! A [`SpectralField`] stores the coefficients `c_k` of
//!
//! ```text
//! f(x) = sum_k c_k exp(i kappa_k . x),    kappa_k = 2 pi k / L,
//! ```
//!
//! on the lattice `k in {-N/2, ..., N/2 - 1}^d`, in FFT ordering. Functions and
//! distributions share this representation; every operator below is a diagonal
//! multiplier on the coefficients. The reference operator is `A = I - Delta/2`
//! with symbol `1 + |kappa|^2 / 2`, and the heat semigroup is `exp(-t A)`.

mod eval;
mod fft;
mod snapshot;
mod time;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paraproduct::cutoff_profile;

pub(crate) use fft::{transform, Direction};

pub use eval::PointEvaluator;
pub use snapshot::{
    read_snapshot, read_time_field, sidecar_path, write_snapshot, write_time_field, SnapshotMeta, TimeFieldManifest,
};
pub use time::{TimeField, TimeGrid};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Periodic lattice `[0, L)^d` with `N` modes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..={MAX_DIM}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "modes per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(GridSpec { dim, n, period })
    }

    /// `[0, 2 pi)^d`.
    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.dim, self.n, self.period).map(|_| ())
    }

    /// Number of lattice points (and of coefficients per component).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same period and dimension, `factor` times more modes per axis.
    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec {
            n: self.n * factor,
            ..*self
        }
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Volume of one quadrature cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Signed wavenumber of FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn index_of_wavenumber(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// Axis indices of a flat row-major index (last axis fastest).
    #[inline]
    pub fn axes(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    #[inline]
    pub fn wavenumbers(&self, flat: usize) -> [i64; MAX_DIM] {
        let axes = self.axes(flat);
        let mut k = [0; MAX_DIM];
        for a in 0..self.dim {
            k[a] = self.wavenumber(axes[a]);
        }
        k
    }

    /// Flat index of an integer wavevector, if it lies on the lattice.
    pub fn flat_of(&self, k: &[i64]) -> Option<usize> {
        let mut flat = 0;
        for &ka in k.iter().take(self.dim) {
            flat = flat * self.n + self.index_of_wavenumber(ka)?;
        }
        Some(flat)
    }

    #[inline]
    pub fn base_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Physical wavevector `kappa = 2 pi k / L`.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [f64; MAX_DIM] {
        let k = self.wavenumbers(flat);
        let w = self.base_frequency();
        let mut kappa = [0.0; MAX_DIM];
        for a in 0..self.dim {
            kappa[a] = w * k[a] as f64;
        }
        kappa
    }

    #[inline]
    pub fn kappa_sq(&self, flat: usize) -> f64 {
        self.wavevector(flat).iter().map(|c| c * c).sum()
    }

    /// Whether any axis of `flat` sits on the unpaired `-N/2` wavenumber.
    #[inline]
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let axes = self.axes(flat);
        axes[..self.dim].iter().any(|&i| i == self.n / 2)
    }

    /// Flat index of `-k` (wrapping the unpaired Nyquist wavenumber onto itself).
    #[inline]
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let axes = self.axes(flat);
        let mut out = 0;
        for &i in axes.iter().take(self.dim) {
            out = out * self.n + (self.n - i) % self.n;
        }
        out
    }

    /// Coordinates of lattice point `flat`.
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let axes = self.axes(flat);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = axes[a] as f64 * h;
        }
        x
    }

    /// Largest `|kappa|` on the lattice.
    pub fn max_kappa(&self) -> f64 {
        self.base_frequency() * (self.n / 2) as f64 * (self.dim as f64).sqrt()
    }
}

/// Symbol of `A = I - Delta/2`.
#[inline]
pub fn symbol(kappa_sq: f64) -> f64 {
    1.0 + 0.5 * kappa_sq
}

/// Order `s` and integrability `p` of the Bessel-potential norm `||A^{s/2} f||_{L^p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex {
    pub s: f64,
    pub p: f64,
}

impl SobolevIndex {
    pub fn new(s: f64, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() || !s.is_finite() {
            return Err(Error::Config(format!(
                "Sobolev index needs finite s and p > 1, got ({s}, {p})"
            )));
        }
        Ok(SobolevIndex { s, p })
    }

    pub fn l2() -> Self {
        SobolevIndex { s: 0.0, p: 2.0 }
    }
}

/// Fourier coefficients of a scalar or vector field on a periodic lattice.
///
/// Coefficients are component-major, then row-major over the lattice in FFT
/// ordering. When `real` is set the coefficients are Hermitian,
/// `c(-k) = conj(c(k))`, and point values are real.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    components: usize,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        SpectralField {
            grid,
            components,
            coeffs: vec![Complex64::default(); grid.len() * components],
            real: true,
        }
    }

    /// Constant field with the given component values.
    pub fn constant(grid: GridSpec, values: &[f64]) -> Self {
        let mut f = Self::zeros(grid, values.len());
        for (c, &v) in values.iter().enumerate() {
            f.coeffs[c * grid.len()] = Complex64::new(v, 0.0);
        }
        f
    }

    pub fn from_coeffs(grid: GridSpec, components: usize, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        grid.validate()?;
        if components == 0 || coeffs.len() != grid.len() * components {
            return Err(Error::Mismatch(format!(
                "{} coefficients for {} components on a lattice of {}",
                coeffs.len(),
                components,
                grid.len()
            )));
        }
        Ok(SpectralField {
            grid,
            components,
            coeffs,
            real,
        })
    }

    /// Transform real grid values (component-major, row-major) to coefficients.
    pub fn from_values(grid: GridSpec, components: usize, values: &[f64]) -> Result<Self> {
        let len = grid.len();
        if values.len() != len * components {
            return Err(Error::Mismatch(format!(
                "{} values for {components} components on a lattice of {len}",
                values.len()
            )));
        }
        let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let norm = 1.0 / len as f64;
        for block in coeffs.chunks_mut(len) {
            transform(block, grid.n, grid.dim, Direction::Forward);
            block.iter_mut().for_each(|c| *c *= norm);
        }
        let mut f = SpectralField {
            grid,
            components,
            coeffs,
            real: true,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Transform complex grid values (component-major) to coefficients.
    pub(crate) fn from_complex_values(
        grid: GridSpec,
        components: usize,
        mut values: Vec<Complex64>,
        real: bool,
    ) -> Self {
        let len = grid.len();
        let norm = 1.0 / len as f64;
        for block in values.chunks_mut(len) {
            transform(block, grid.n, grid.dim, Direction::Forward);
            block.iter_mut().for_each(|c| *c *= norm);
        }
        let mut f = SpectralField {
            grid,
            components,
            coeffs: values,
            real,
        };
        f.symmetrize();
        f
    }

    /// Sample a real function on the lattice, `f(x)` returning one value per component.
    pub fn from_fn<F>(grid: GridSpec, components: usize, mut f: F) -> Self
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let len = grid.len();
        let mut values = vec![0.0; len * components];
        let mut out = vec![0.0; components];
        for i in 0..len {
            let x = grid.point(i);
            f(&x[..grid.dim], &mut out);
            for c in 0..components {
                values[c * len + i] = out[c];
            }
        }
        Self::from_values(grid, components, &values).expect("shape is consistent by construction")
    }

    /// A single complex Fourier mode `amplitude * exp(i kappa_k . x)`.
    pub fn mode(grid: GridSpec, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let flat = grid
            .flat_of(k)
            .ok_or_else(|| Error::InvalidGrid(format!("wavevector {k:?} is not on the lattice")))?;
        let mut f = Self::zeros(grid, 1);
        f.coeffs[flat] = amplitude;
        f.real = k.iter().all(|&v| v == 0) && amplitude.im == 0.0;
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn component_coeffs(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn coeff(&self, component: usize, k: &[i64]) -> Complex64 {
        match self.grid.flat_of(k) {
            Some(flat) => self.coeffs[component * self.grid.len() + flat],
            None => Complex64::default(),
        }
    }

    pub fn into_parts(self) -> (GridSpec, usize, Vec<Complex64>, bool) {
        (self.grid, self.components, self.coeffs, self.real)
    }

    pub fn component(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            components: 1,
            coeffs: self.component_coeffs(c).to_vec(),
            real: self.real,
        }
    }

    /// Stack scalar (or vector) fields into one multi-component field.
    pub fn stack(parts: &[SpectralField]) -> Result<SpectralField> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Mismatch("cannot stack zero fields".into()))?;
        let mut coeffs = Vec::with_capacity(parts.iter().map(|p| p.coeffs.len()).sum());
        let mut real = true;
        for p in parts {
            first.check_same_grid(p)?;
            coeffs.extend_from_slice(&p.coeffs);
            real &= p.real;
        }
        Ok(SpectralField {
            grid: first.grid,
            components: coeffs.len() / first.grid.len(),
            coeffs,
            real,
        })
    }

    pub(crate) fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Mismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &SpectralField) -> Result<()> {
        self.check_same_grid(other)?;
        if self.components != other.components {
            return Err(Error::Mismatch(format!(
                "{} vs {} components",
                self.components, other.components
            )));
        }
        Ok(())
    }

    /// Enforce exact Hermitian symmetry on a field flagged real.
    pub(crate) fn symmetrize(&mut self) {
        if !self.real {
            return;
        }
        let len = self.grid.len();
        for block in self.coeffs.chunks_mut(len) {
            for i in 0..len {
                let j = self.grid.conjugate_index(i);
                if j == i {
                    block[i].im = 0.0;
                } else if j > i {
                    let avg = (block[i] + block[j].conj()) * 0.5;
                    block[i] = avg;
                    block[j] = avg.conj();
                }
            }
        }
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.len();
        self.coeffs
            .chunks(len)
            .flat_map(|block| (0..len).map(move |i| (block[i] - block[self.grid.conjugate_index(i)].conj()).norm()))
            .fold(0.0, f64::max)
    }

    /// Complex point values on the lattice, component-major.
    pub fn complex_values(&self) -> Vec<Complex64> {
        let len = self.grid.len();
        let mut out = self.coeffs.clone();
        for block in out.chunks_mut(len) {
            transform(block, self.grid.n, self.grid.dim, Direction::Inverse);
        }
        out
    }

    /// Real point values on the lattice (real parts when the field is complex).
    pub fn values(&self) -> Vec<f64> {
        self.complex_values().into_iter().map(|c| c.re).collect()
    }

    /// Multiply every coefficient by a real radial factor of `|kappa|^2`.
    pub fn map_radial<F: Fn(f64) -> f64>(&self, factor: F) -> SpectralField {
        let len = self.grid.len();
        let table: Vec<f64> = (0..len).map(|i| factor(self.grid.kappa_sq(i))).collect();
        let mut out = self.clone();
        for block in out.coeffs.chunks_mut(len) {
            for (c, &m) in block.iter_mut().zip(&table) {
                *c *= m;
            }
        }
        out
    }

    /// `A^{s/2} f`: multiply by `(1 + |kappa|^2/2)^{s/2}`.
    pub fn bessel_power(&self, s: f64) -> SpectralField {
        if s == 0.0 {
            return self.clone();
        }
        self.map_radial(|k2| symbol(k2).powf(0.5 * s))
    }

    /// Heat semigroup `P(t) = exp(-t A)` generated by `Delta/2 - I`.
    pub fn heat_semigroup(&self, t: f64) -> SpectralField {
        assert!(t >= 0.0, "heat semigroup needs t >= 0, got {t}");
        if t == 0.0 {
            return self.clone();
        }
        self.map_radial(|k2| (-t * symbol(k2)).exp())
    }

    /// Dyadic frequency cutoff `S^j f` with the smooth profile `psi(kappa / 2^j)`.
    pub fn dyadic_cutoff(&self, j: i32) -> SpectralField {
        let scale = 2f64.powi(j);
        self.map_radial(|k2| cutoff_profile(k2.sqrt() / scale))
    }

    /// Gaussian mollification at width `1/n`: multiplier `exp(-|kappa|^2 / (2 n^2))`.
    pub fn mollify(&self, n: f64) -> SpectralField {
        assert!(n > 0.0, "mollifier index must be positive");
        let inv = 1.0 / (2.0 * n * n);
        self.map_radial(|k2| (-k2 * inv).exp())
    }

    /// Spectral gradient. A scalar field becomes a `d`-component field; a
    /// `c`-component field becomes `c*d` components ordered `(i, j) -> d_j f_i`.
    pub fn gradient(&self) -> SpectralField {
        let len = self.grid.len();
        let d = self.grid.dim;
        let mut coeffs = Vec::with_capacity(len * self.components * d);
        for block in self.coeffs.chunks(len) {
            for j in 0..d {
                coeffs.extend((0..len).map(|i| {
                    let axes = self.grid.axes(i);
                    if axes[j] == self.grid.n / 2 {
                        // no real partner on the lattice
                        Complex64::default()
                    } else {
                        let kappa = self.grid.wavevector(i)[j];
                        block[i] * Complex64::new(0.0, kappa)
                    }
                }));
            }
        }
        SpectralField {
            grid: self.grid,
            components: self.components * d,
            coeffs,
            real: self.real,
        }
    }

    /// Exact `(sum (1+|kappa|^2/2)^s |c_k|^2 L^d)^{1/2}` summed over components.
    pub fn parseval_norm(&self, s: f64) -> f64 {
        let len = self.grid.len();
        let vol = self.grid.period.powi(self.grid.dim as i32);
        let mut acc = 0.0;
        for block in self.coeffs.chunks(len) {
            for (i, c) in block.iter().enumerate() {
                acc += symbol(self.grid.kappa_sq(i)).powf(s) * c.norm_sqr();
            }
        }
        (acc * vol).sqrt()
    }

    /// Grid `L^p` norm of `A^{s/2} f`, the Euclidean magnitude taken over components.
    pub fn sobolev_norm(&self, idx: SobolevIndex) -> f64 {
        let g = self.bessel_power(idx.s);
        let values = g.complex_values();
        let len = self.grid.len();
        let mut acc = 0.0;
        for i in 0..len {
            let mag_sq: f64 = (0..self.components).map(|c| values[c * len + i].norm_sqr()).sum();
            acc += if idx.p == 2.0 { mag_sq } else { mag_sq.powf(0.5 * idx.p) };
        }
        (acc * self.grid.cell_volume()).powf(1.0 / idx.p)
    }

    /// Largest absolute lattice value, over components.
    pub fn sup_norm(&self) -> f64 {
        let values = self.complex_values();
        let len = self.grid.len();
        (0..len)
            .map(|i| {
                (0..self.components)
                    .map(|c| values[c * len + i].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Direct Fourier summation at an arbitrary point (reduced modulo `L`).
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.components];
        PointEvaluator::new(std::slice::from_ref(self)).eval_into(x, &mut out);
        out
    }

    /// Re-express the field on a lattice with a different `N` (same period).
    ///
    /// Refinement is exact. Coarsening drops the modes that do not fit; for real
    /// fields the unpaired Nyquist coefficient is split or cleared so that the
    /// represented real function is preserved as far as the target allows.
    pub fn resample(&self, target: GridSpec) -> Result<SpectralField> {
        if target.dim != self.grid.dim || target.period != self.grid.period {
            return Err(Error::Mismatch(format!(
                "cannot resample {:?} onto {:?}",
                self.grid, target
            )));
        }
        if target == self.grid {
            return Ok(self.clone());
        }
        let src_len = self.grid.len();
        let dst_len = target.len();
        let mut coeffs = vec![Complex64::default(); dst_len * self.components];
        let refine = target.n > self.grid.n;
        for c in 0..self.components {
            let src = &self.coeffs[c * src_len..(c + 1) * src_len];
            let dst = &mut coeffs[c * dst_len..(c + 1) * dst_len];
            for (i, &value) in src.iter().enumerate() {
                if value == Complex64::default() {
                    continue;
                }
                let k = self.grid.wavenumbers(i);
                if refine && self.real && self.grid.is_nyquist(i) {
                    // spread over every sign combination of the Nyquist axes
                    let half = (self.grid.n / 2) as i64;
                    let nyq_axes: Vec<usize> = (0..self.grid.dim).filter(|&a| k[a] == -half).collect();
                    let share = 0.5f64.powi(nyq_axes.len() as i32);
                    for mask in 0..(1usize << nyq_axes.len()) {
                        let mut kk = k;
                        for (bit, &a) in nyq_axes.iter().enumerate() {
                            if mask >> bit & 1 == 1 {
                                kk[a] = half;
                            }
                        }
                        if let Some(j) = target.flat_of(&kk[..target.dim]) {
                            dst[j] += value * share;
                        }
                    }
                    continue;
                }
                if let Some(j) = target.flat_of(&k[..target.dim]) {
                    if !refine && self.real && target.is_nyquist(j) {
                        continue;
                    }
                    dst[j] += value;
                }
            }
        }
        Ok(SpectralField {
            grid: target,
            components: self.components,
            coeffs,
            real: self.real,
        })
    }

    /// Zero every coefficient on an unpaired Nyquist wavenumber.
    pub fn without_nyquist(mut self) -> SpectralField {
        let len = self.grid.len();
        for block in self.coeffs.chunks_mut(len) {
            for (i, c) in block.iter_mut().enumerate() {
                if self.grid.is_nyquist(i) {
                    *c = Complex64::default();
                }
            }
        }
        self
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        self.check_same_shape(other).expect("axpy on mismatched fields");
        SpectralField {
            grid: self.grid,
            components: self.components,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect(),
            real: self.real && other.real,
        }
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        SpectralField {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            ..self.clone()
        }
    }

    /// Largest coefficient-wise difference.
    pub fn max_coeff_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::default())
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}
