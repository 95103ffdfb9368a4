use rustfft::num_complex::Complex64;

use super::{GridSpec, SpectralField, MAX_DIM};

/// Direct Fourier summation of several fields at arbitrary points.
///
/// All channels (the components of every input field, in order) are summed in
/// one pass over the lattice. Real one-dimensional fields use the half
/// spectrum, which is the hot path of the SDE samplers.
#[derive(Clone, Debug)]
pub struct PointEvaluator {
    grid: GridSpec,
    channels: usize,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    /// `coeffs[k * channels + ch]` for `k = 0..N/2`, positive modes doubled.
    HalfLine { coeffs: Vec<Complex64>, nyquist: Vec<f64> },
    /// Full lattice, channel-major.
    Full { coeffs: Vec<Complex64> },
}

impl PointEvaluator {
    pub fn new(fields: &[SpectralField]) -> Self {
        let grid = *fields[0].grid();
        let channels: usize = fields.iter().map(|f| f.components()).sum();
        let real = fields.iter().all(|f| f.is_real());
        for f in fields {
            assert_eq!(f.grid(), &grid, "evaluator fields must share a grid");
        }
        let len = grid.len();
        let blocks: Vec<&[Complex64]> = fields.iter().flat_map(|f| f.coeffs().chunks(len)).collect();
        let kind = if grid.dim == 1 && real {
            let half = grid.n / 2;
            let mut coeffs = vec![Complex64::default(); half * channels];
            let mut nyquist = vec![0.0; channels];
            for (ch, block) in blocks.iter().enumerate() {
                coeffs[ch] = block[0];
                for k in 1..half {
                    coeffs[k * channels + ch] = block[k] * 2.0;
                }
                nyquist[ch] = block[half].re;
            }
            Kind::HalfLine { coeffs, nyquist }
        } else {
            Kind::Full {
                coeffs: blocks.concat(),
            }
        };
        PointEvaluator { grid, channels, kind }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Real part of `sum_k c_k exp(i kappa_k . x)` for every channel.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert!(out.len() >= self.channels);
        let w = self.grid.base_frequency();
        match &self.kind {
            Kind::HalfLine { coeffs, nyquist } => {
                let theta = (w * x[0]).rem_euclid(2.0 * std::f64::consts::PI);
                let step = Complex64::from_polar(1.0, theta);
                let out = &mut out[..self.channels];
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut z = Complex64::new(1.0, 0.0);
                for row in coeffs.chunks_exact(self.channels) {
                    for (o, c) in out.iter_mut().zip(row) {
                        *o += c.re * z.re - c.im * z.im;
                    }
                    z *= step;
                }
                // z now holds exp(i N/2 theta); the Nyquist term is its real part
                for (o, &c) in out.iter_mut().zip(nyquist) {
                    *o += c * z.re;
                }
            }
            Kind::Full { coeffs } => {
                let n = self.grid.n;
                let mut axis_tables: Vec<Vec<Complex64>> = Vec::with_capacity(MAX_DIM);
                for &xa in x.iter().take(self.grid.dim) {
                    let theta = (w * xa).rem_euclid(2.0 * std::f64::consts::PI);
                    let step = Complex64::from_polar(1.0, theta);
                    let mut table = vec![Complex64::default(); n];
                    let mut z = Complex64::new(1.0, 0.0);
                    for slot in table.iter_mut().take(n / 2) {
                        *slot = z;
                        z *= step;
                    }
                    // negative wavenumbers: exp(-i k theta) = conj(exp(i k theta))
                    for i in n / 2..n {
                        let k = n - i;
                        table[i] = if k < n / 2 { table[k].conj() } else { z.conj() };
                    }
                    axis_tables.push(table);
                }
                let len = self.grid.len();
                for (ch, block) in coeffs.chunks(len).enumerate() {
                    let mut acc = Complex64::default();
                    if self.grid.dim == 1 {
                        for (c, e) in block.iter().zip(&axis_tables[0]) {
                            acc += c * e;
                        }
                    } else {
                        for (r, row) in block.chunks(n).enumerate() {
                            let mut racc = Complex64::default();
                            for (c, e) in row.iter().zip(&axis_tables[1]) {
                                racc += c * e;
                            }
                            acc += racc * axis_tables[0][r];
                        }
                    }
                    out[ch] = acc.re;
                }
            }
        }
    }
}
