//! Binary field snapshots: little-endian `f64` pairs `(re, im)`, component-major
//! then row-major over the lattice in FFT ordering, with a JSON sidecar at
//! `<path>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridSpec, SpectralField, TimeField, TimeGrid};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub period: f64,
    pub components: usize,
    pub real_flag: bool,
    pub description: String,
}

/// Sidecar of a time-field file: the snapshot header plus the time grid.
/// The payload is the node snapshots concatenated in time order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFieldManifest {
    #[serde(flatten)]
    pub field: SnapshotMeta,
    pub horizon: f64,
    pub intervals: usize,
    pub node_bytes: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl SnapshotMeta {
    fn of(field: &SpectralField, description: &str) -> Self {
        let g = field.grid();
        SnapshotMeta {
            d: g.dim,
            n: g.n,
            period: g.period,
            components: field.components(),
            real_flag: field.is_real(),
            description: description.to_string(),
        }
    }

    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.d, self.n, self.period)
    }

    fn payload_bytes(&self) -> usize {
        self.n.pow(self.d as u32) * self.components * 16
    }
}

fn encode(field: &SpectralField, out: &mut Vec<u8>) {
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
}

fn decode(meta: &SnapshotMeta, bytes: &[u8]) -> Result<SpectralField> {
    if bytes.len() != meta.payload_bytes() {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            bytes.len(),
            meta.payload_bytes()
        )));
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_coeffs(meta.grid()?, meta.components, coeffs, meta.real_flag)
}

pub fn write_snapshot(path: &Path, field: &SpectralField, description: &str) -> Result<()> {
    let mut bytes = Vec::with_capacity(field.coeffs().len() * 16);
    encode(field, &mut bytes);
    fs::write(path, bytes)?;
    let meta = SnapshotMeta::of(field, description);
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let field = decode(&meta, &fs::read(path)?)?;
    Ok((field, meta))
}

pub fn write_time_field(path: &Path, field: &TimeField, description: &str) -> Result<()> {
    let first = field.node(0);
    let mut bytes = Vec::with_capacity(first.coeffs().len() * 16 * field.times().nodes());
    for node in field.nodes() {
        encode(node, &mut bytes);
    }
    fs::write(path, bytes)?;
    let meta = SnapshotMeta::of(first, description);
    let manifest = TimeFieldManifest {
        node_bytes: meta.payload_bytes(),
        field: meta,
        horizon: field.times().horizon,
        intervals: field.times().intervals,
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_time_field(path: &Path) -> Result<(TimeField, TimeFieldManifest)> {
    let manifest: TimeFieldManifest = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    let node_bytes = manifest.field.payload_bytes();
    if node_bytes != manifest.node_bytes || bytes.len() != node_bytes * (manifest.intervals + 1) {
        return Err(Error::Format(format!(
            "time field payload has {} bytes, manifest implies {} x {}",
            bytes.len(),
            manifest.intervals + 1,
            node_bytes
        )));
    }
    let nodes = bytes
        .chunks_exact(node_bytes)
        .map(|chunk| decode(&manifest.field, chunk))
        .collect::<Result<Vec<_>>>()?;
    let times = TimeGrid::new(manifest.horizon, manifest.intervals)?;
    Ok((TimeField::new(times, nodes)?, manifest))
}
