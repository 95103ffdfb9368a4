use serde::{Deserialize, Serialize};

use super::{GridSpec, SpectralField};
use crate::error::{Error, Result};

/// Uniform time grid `t_m = m T / M`, `m = 0..=M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub intervals: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("time horizon must be positive, got {horizon}")));
        }
        if intervals < 2 {
            return Err(Error::Config(format!(
                "need at least 2 time intervals, got {intervals}"
            )));
        }
        Ok(TimeGrid { horizon, intervals })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    #[inline]
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.horizon / self.intervals as f64
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(|m| self.time(m))
    }

    /// Bracketing node `m` and weight `w` with `t = (1-w) t_m + w t_{m+1}`.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let s = (t / self.horizon).clamp(0.0, 1.0) * self.intervals as f64;
        let m = (s.floor() as usize).min(self.intervals - 1);
        (m, s - m as f64)
    }
}

/// One `c`-component [`SpectralField`] per node of a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct TimeField {
    times: TimeGrid,
    nodes: Vec<SpectralField>,
}

impl TimeField {
    pub fn new(times: TimeGrid, nodes: Vec<SpectralField>) -> Result<Self> {
        if nodes.len() != times.nodes() {
            return Err(Error::Mismatch(format!(
                "{} nodes for a grid of {} intervals",
                nodes.len(),
                times.intervals
            )));
        }
        for f in &nodes[1..] {
            nodes[0].check_same_shape(f)?;
        }
        Ok(TimeField { times, nodes })
    }

    pub fn constant(times: TimeGrid, field: SpectralField) -> Self {
        TimeField {
            times,
            nodes: vec![field; times.nodes()],
        }
    }

    pub fn zeros(times: TimeGrid, grid: GridSpec, components: usize) -> Self {
        Self::constant(times, SpectralField::zeros(grid, components))
    }

    pub fn from_fn<F: FnMut(usize, f64) -> SpectralField>(times: TimeGrid, mut f: F) -> Result<Self> {
        let nodes = (0..times.nodes()).map(|m| f(m, times.time(m))).collect();
        Self::new(times, nodes)
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn grid(&self) -> &GridSpec {
        self.nodes[0].grid()
    }

    pub fn components(&self) -> usize {
        self.nodes[0].components()
    }

    pub fn node(&self, m: usize) -> &SpectralField {
        &self.nodes[m]
    }

    pub fn nodes(&self) -> &[SpectralField] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<SpectralField> {
        self.nodes
    }

    pub fn map<F: FnMut(&SpectralField) -> SpectralField>(&self, f: F) -> TimeField {
        TimeField {
            times: self.times,
            nodes: self.nodes.iter().map(f).collect(),
        }
    }

    pub fn zip_map<F>(&self, other: &TimeField, mut f: F) -> Result<TimeField>
    where
        F: FnMut(&SpectralField, &SpectralField) -> SpectralField,
    {
        if self.times != other.times {
            return Err(Error::Mismatch(format!("{:?} vs {:?}", self.times, other.times)));
        }
        self.nodes[0].check_same_shape(&other.nodes[0])?;
        Ok(TimeField {
            times: self.times,
            nodes: self.nodes.iter().zip(&other.nodes).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &TimeField) -> Result<TimeField> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Node order reversed: `out(t_m) = self(t_{M-m})`.
    pub fn reversed(&self) -> TimeField {
        TimeField {
            times: self.times,
            nodes: self.nodes.iter().rev().cloned().collect(),
        }
    }

    /// Linear interpolation between the bracketing nodes.
    pub fn interpolate(&self, t: f64) -> SpectralField {
        let (m, w) = self.times.locate(t);
        if w == 0.0 {
            self.nodes[m].clone()
        } else if w == 1.0 {
            self.nodes[m + 1].clone()
        } else {
            self.nodes[m].scale(1.0 - w).axpy(w, &self.nodes[m + 1])
        }
    }

    /// Value frozen at the last node `t_m <= t`.
    pub fn left_node(&self, t: f64) -> &SpectralField {
        let (m, w) = self.times.locate(t);
        if w >= 1.0 - 1e-12 {
            &self.nodes[m + 1]
        } else {
            &self.nodes[m]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.nodes.iter().all(|f| f.is_zero())
    }
}
