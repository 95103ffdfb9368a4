//! Experiment orchestration: configuration, the three law-comparison
//! studies, diagnostics and the `results/<digest>/` layout.

mod persist;
pub mod stats;
mod studies;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drifts::{self, AssumptionReport, DriftSpec, KappaRegion, TrigTerm};
use crate::error::{Error, Result};
use crate::kolmogorov::{self, PdeConfig, SolveReport};
use crate::spectral::{read_time_field, GridSpec, TimeField, TimeGrid};
use crate::zvonkin::InverseConfig;

pub use persist::{Environment, Manifest, ResultsDir};
pub use stats::{kendall_trend, ks_stat, wasserstein1, Estimate, TrendTest};
pub use studies::{diagnostics, study_lambda, study_mollify, study_smooth_consistency, Diagnostics};

/// Where the drift comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftSource {
    Zero,
    Spec(DriftSpec),
    /// A time-field file written by `gen-drift`.
    File(PathBuf),
    Trig(Vec<TrigTerm>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub dim: usize,
    /// Lattice points per axis.
    pub n: usize,
    /// Time intervals of the PDE grid.
    pub intervals: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 1,
            n: 256,
            intervals: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_steps: Option<usize>,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            x0: vec![0.0],
            horizon: 1.0,
            steps: 128,
            paths: 10_000,
            noise_steps: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    W1,
    Ks,
    Moment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub drift: DriftSource,
    pub beta: f64,
    pub q: f64,
    /// `(delta, p)`; picked inside the admissible region when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<(f64, f64)>,
    pub pde: PdeConfig,
    /// Fixed `lambda`; calibrated when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub calibration_target: f64,
    pub inverse: InverseConfig,
    pub grid: GridConfig,
    pub sim: SimSettings,
    /// Mollification levels of the mollified-convergence study.
    pub n_list: Vec<f64>,
    /// Multiples of the base `lambda` compared by the invariance study.
    pub lambda_factors: Vec<f64>,
    /// Step counts of the smooth-consistency study.
    pub consistency_steps: Vec<usize>,
    pub statistics: Vec<Statistic>,
    pub bootstrap: usize,
    pub output_dir: PathBuf,
    /// Also write ensemble binaries (large).
    pub write_ensembles: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            drift: DriftSource::Zero,
            beta: 0.25,
            q: 3.0,
            kappa: None,
            pde: PdeConfig::default(),
            lambda: None,
            calibration_target: 0.5,
            inverse: InverseConfig::default(),
            grid: GridConfig::default(),
            sim: SimSettings::default(),
            n_list: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            lambda_factors: vec![1.0, 2.0],
            consistency_steps: vec![250, 500, 1000],
            statistics: vec![Statistic::W1, Statistic::Ks, Statistic::Moment],
            bootstrap: 1000,
            output_dir: PathBuf::from("results"),
            write_ensembles: true,
            seed: 2024,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_slice(&std::fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pde.validate()?;
        if let DriftSource::File(p) = &self.drift {
            if !p.exists() {
                return Err(Error::Config(format!("drift file {} does not exist", p.display())));
            }
        }
        if let DriftSource::Spec(s) = &self.drift {
            s.validate()?;
        }
        if self.n_list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!("n_list must be increasing: {:?}", self.n_list)));
        }
        if self.consistency_steps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("consistency_steps must be increasing".into()));
        }
        if self.sim.x0.len() != self.grid.dim {
            return Err(Error::Config(format!(
                "x0 has {} coordinates in dimension {}",
                self.sim.x0.len(),
                self.grid.dim
            )));
        }
        if self.lambda_factors.iter().any(|&f| !(f >= 1.0)) {
            return Err(Error::Config("lambda factors must be >= 1".into()));
        }
        if self.bootstrap == 0 {
            return Err(Error::Config("bootstrap needs at least one resample".into()));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<GridSpec> {
        GridSpec::periodic(self.grid.dim, self.grid.n)
    }

    pub fn times(&self, intervals: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.sim.horizon, intervals)
    }

    /// Hex SHA-256 of the study name, the config and any drift file it names.
    pub fn digest(&self, study: &str) -> Result<String> {
        let mut h = Sha256::new();
        h.update(study.as_bytes());
        h.update(serde_json::to_vec(self)?);
        if let DriftSource::File(p) = &self.drift {
            h.update(std::fs::read(p)?);
        }
        Ok(hex::encode(h.finalize()))
    }

    /// The drift on the configured space grid and the given time grid.
    pub fn drift(&self, times: TimeGrid) -> Result<TimeField> {
        let grid = self.space()?;
        match &self.drift {
            DriftSource::Zero => Ok(TimeField::zeros(times, grid, grid.dim)),
            DriftSource::Spec(s) => drifts::generate(s, grid, times),
            DriftSource::Trig(terms) => drifts::trigonometric(grid, times, terms),
            DriftSource::File(p) => {
                let (b, _) = read_time_field(p)?;
                if *b.grid() != grid || *b.times() != times {
                    return Err(Error::Mismatch(format!(
                        "drift file {} does not match the configured grid",
                        p.display()
                    )));
                }
                Ok(b)
            }
        }
    }

    /// `(delta, p)`: the configured pair, checked against the admissible region.
    pub fn kappa(&self) -> Result<(f64, f64)> {
        let region = KappaRegion::new(self.beta, self.q, self.grid.dim)?;
        match self.kappa {
            Some((delta, p)) if region.contains(delta, p) => Ok((delta, p)),
            Some((delta, p)) => Err(Error::AssumptionViolated(format!(
                "(delta, p) = ({delta}, {p}) lies outside the admissible region for beta = {}, q = {}",
                self.beta, self.q
            ))),
            None => drifts::pick_kappa(&region, self.grid.dim),
        }
    }

    pub fn pde_config(&self) -> Result<PdeConfig> {
        let (delta, p) = self.kappa()?;
        Ok(PdeConfig { delta, p, ..self.pde })
    }
}

/// Drift, certificate and calibrated solution shared by the studies.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub b: TimeField,
    pub assumption: AssumptionReport,
    pub pde: PdeConfig,
    pub lambda: f64,
    /// `(lambda, gradient_sup)` per calibration step (a single entry for a fixed lambda).
    pub calibration: Vec<(f64, f64)>,
    pub u: TimeField,
    pub report: SolveReport,
}

/// Build the drift, certify it, and solve (calibrating `lambda` unless fixed).
pub fn prepare(cfg: &ExperimentConfig, intervals: usize) -> Result<Prepared> {
    let b = cfg.drift(cfg.times(intervals)?).map_err(Error::in_stage("drift"))?;
    let assumption = drifts::assumption_check(&b, cfg.beta, cfg.q).map_err(Error::in_stage("assumption"))?;
    if !assumption.finite {
        return Err(Error::in_stage("assumption")(Error::AssumptionViolated(
            "drift norm is not finite".into(),
        )));
    }
    let pde = cfg.pde_config().map_err(Error::in_stage("kappa"))?;
    let (lambda, calibration, u, report) = match cfg.lambda {
        Some(lambda) => {
            let (u, report) = kolmogorov::solve(&b, lambda, &pde).map_err(Error::in_stage("solve"))?;
            let g = kolmogorov::gradient_sup(&u);
            if g > cfg.calibration_target {
                return Err(Error::in_stage("solve")(Error::AssumptionViolated(format!(
                    "gradient_sup = {g} exceeds {} at lambda = {lambda}",
                    cfg.calibration_target
                ))));
            }
            (lambda, vec![(lambda, g)], u, report)
        }
        None => {
            let c =
                kolmogorov::calibrate_lambda(&b, &pde, cfg.calibration_target).map_err(Error::in_stage("calibrate"))?;
            (c.lambda, c.trace, c.u, c.report)
        }
    };
    Ok(Prepared {
        b,
        assumption,
        pde,
        lambda,
        calibration,
        u,
        report,
    })
}

/// One compared ensemble in a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStat {
    pub label: String,
    /// Mollification level, `lambda`, or step count.
    pub parameter: f64,
    /// Marginal times.
    pub times: Vec<f64>,
    /// `W_1` against the reference per marginal time; for `d > 1` the
    /// maximum over coordinates and projections.
    pub w1: Vec<f64>,
    /// Per-coordinate and projected `W_1` at the terminal time.
    pub w1_terminal: Vec<f64>,
    /// Terminal `W_1` with a bootstrap interval.
    pub terminal: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    /// `(|mean difference|, |variance difference|)` of the first coordinate at the terminal time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<(f64, f64)>,
}

/// A contract of a study and whether it held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub config_digest: String,
    pub seed: u64,
    pub lambda: f64,
    pub kappa: (f64, f64),
    pub calibration: Vec<(f64, f64)>,
    pub assumption: AssumptionReport,
    pub solve: SolveReport,
    /// Terminal `W_1` between the reference and an independent-seed replica.
    pub floor: f64,
    pub levels: Vec<LevelStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendTest>,
    /// Step counts with mean and max over paths of `sup_t |X_direct - X_virtual|`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<(usize, f64, f64)>,
    pub checks: Vec<Check>,
    pub environment: Environment,
    pub inputs: Vec<(String, String)>,
    pub timings: Vec<(String, f64)>,
    /// Where the artefacts were written.
    pub output: PathBuf,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Input of `gen-drift`: a drift spec plus the lattice and time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftFile {
    #[serde(flatten)]
    pub spec: DriftSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "unit_horizon")]
    pub horizon: f64,
}

fn unit_horizon() -> f64 {
    1.0
}

impl DriftFile {
    pub fn generate(&self) -> Result<TimeField> {
        self.spec.validate()?;
        let grid = GridSpec::periodic(self.grid.dim, self.grid.n)?;
        drifts::generate(&self.spec, grid, TimeGrid::new(self.horizon, self.grid.intervals)?)
    }
}
