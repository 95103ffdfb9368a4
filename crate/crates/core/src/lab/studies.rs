use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::persist::{Environment, ResultsDir};
use super::stats::{self, kendall_trend, paired_bootstrap, Estimate};
use super::{prepare, Check, DriftSource, ExperimentConfig, LevelStat, Prepared, Statistic, StudyReport};
use crate::drifts::{AssumptionReport, KappaRegion};
use crate::error::{Error, Result};
use crate::kolmogorov::{self, GammaCheck, SolveReport};
use crate::sde::{simulate_classical, simulate_virtual, PathEnsemble, SimConfig};
use crate::spectral::write_time_field;
use crate::zvonkin::TransformContext;

/// Seed of the independent replica that sets the Monte Carlo floor.
fn floor_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

const PROJECTIONS: usize = 4;
const PROJECTION_SEED: u64 = 0x5eed;
const TREND_LEVEL: f64 = 0.05;

struct Timer {
    start: Instant,
    laps: Vec<(String, f64)>,
}

impl Timer {
    fn new() -> Self {
        Timer {
            start: Instant::now(),
            laps: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.laps.push((stage.to_string(), (now - self.start).as_secs_f64()));
        self.start = now;
    }
}

fn sim_config(cfg: &ExperimentConfig, lambda: f64, seed: u64, steps: usize, noise_steps: Option<usize>) -> SimConfig {
    SimConfig {
        x0: cfg.sim.x0.clone(),
        horizon: cfg.sim.horizon,
        steps,
        paths: cfg.sim.paths,
        seed,
        lambda,
        noise_steps,
    }
}

/// Step indices of `T/4, T/2, 3T/4, T`.
fn marginal_steps(e: &PathEnsemble) -> Vec<usize> {
    let t = e.cfg.horizon;
    [0.25, 0.5, 0.75, 1.0].iter().map(|f| e.step_at(f * t)).collect()
}

/// Coordinates of every path at step `m`, then fixed projections when `d > 1`.
fn channels(e: &PathEnsemble, m: usize) -> Vec<Vec<f64>> {
    let d = e.dim();
    let mut out: Vec<Vec<f64>> = (0..d).map(|a| e.marginal(m, a)).collect();
    if d > 1 {
        for w in stats::projections(d, PROJECTIONS, PROJECTION_SEED) {
            out.push(e.projection(m, &w));
        }
    }
    out
}

fn w1_vector(a: &PathEnsemble, b: &PathEnsemble, m: usize) -> Vec<f64> {
    channels(a, m)
        .iter()
        .zip(channels(b, m))
        .map(|(x, y)| stats::wasserstein1(x, &y))
        .collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn terminal_w1(a: &PathEnsemble, b: &PathEnsemble) -> f64 {
    max_of(&w1_vector(a, b, a.steps()))
}

fn compare(
    cfg: &ExperimentConfig,
    reference: &PathEnsemble,
    other: &PathEnsemble,
    label: &str,
    parameter: f64,
    boot_seed: u64,
) -> LevelStat {
    let steps = marginal_steps(reference);
    let times = steps.iter().map(|&m| reference.cfg.time(m)).collect();
    let w1 = steps.iter().map(|&m| max_of(&w1_vector(reference, other, m))).collect();
    let last = reference.steps();
    let w1_terminal = w1_vector(reference, other, last);
    let (ra, rb) = (channels(reference, last), channels(other, last));
    let terminal = if ra.len() == 1 {
        stats::w1_bootstrap(&ra[0], &rb[0], cfg.bootstrap, boot_seed)
    } else {
        let e = paired_bootstrap(ra[0].len(), cfg.bootstrap, boot_seed, 0.95, |idx| {
            ra.iter()
                .zip(&rb)
                .map(|(x, y)| {
                    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
                    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                    stats::wasserstein1(&xs, &ys)
                })
                .fold(0.0, f64::max)
        });
        Estimate { lo: e.lo.max(0.0), ..e }
    };
    let ks = cfg.statistics.contains(&Statistic::Ks).then(|| {
        ra.iter()
            .zip(&rb)
            .map(|(x, y)| stats::ks_stat(x, y))
            .fold(0.0, f64::max)
    });
    let moments = cfg.statistics.contains(&Statistic::Moment).then(|| {
        let (ma, va) = stats::mean_var(&ra[0]);
        let (mb, vb) = stats::mean_var(&rb[0]);
        ((ma - mb).abs(), (va - vb).abs())
    });
    LevelStat {
        label: label.to_string(),
        parameter,
        times,
        w1,
        w1_terminal,
        terminal,
        ks,
        moments,
    }
}

fn level_rows(levels: &[LevelStat]) -> Vec<Vec<String>> {
    levels
        .iter()
        .map(|l| {
            vec![
                l.label.clone(),
                l.parameter.to_string(),
                l.terminal.value.to_string(),
                l.terminal.lo.to_string(),
                l.terminal.hi.to_string(),
                l.ks.map_or(String::new(), |v| v.to_string()),
                l.moments.map_or(String::new(), |m| m.0.to_string()),
                l.moments.map_or(String::new(), |m| m.1.to_string()),
            ]
        })
        .collect()
}

const LEVEL_HEADER: [&str; 8] = [
    "label",
    "parameter",
    "w1",
    "w1_lo",
    "w1_hi",
    "ks",
    "mean_diff",
    "var_diff",
];

fn marginal_rows(levels: &[LevelStat]) -> Vec<Vec<String>> {
    levels
        .iter()
        .flat_map(|l| {
            l.times
                .iter()
                .zip(&l.w1)
                .map(|(t, w)| vec![l.label.clone(), l.parameter.to_string(), t.to_string(), w.to_string()])
                .collect::<Vec<_>>()
        })
        .collect()
}

fn calibration_rows(trace: &[(f64, f64)]) -> Vec<Vec<String>> {
    trace.iter().map(|(l, g)| vec![l.to_string(), g.to_string()]).collect()
}

fn check(name: &str, value: f64, bound: &str, passed: bool) -> Check {
    Check {
        name: name.to_string(),
        value,
        bound: bound.to_string(),
        passed,
    }
}

fn inputs(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let mut v = vec![(
        "config".to_string(),
        hex::encode(Sha256::digest(serde_json::to_vec(cfg)?)),
    )];
    if let DriftSource::File(p) = &cfg.drift {
        v.push((p.display().to_string(), super::persist::file_digest(p)?));
    }
    Ok(v)
}

/// Shared tail of every study: write tables and binaries, then the manifest.
fn persist(
    cfg: &ExperimentConfig,
    mut report: StudyReport,
    prep: &Prepared,
    ensembles: &[&PathEnsemble],
    extra: Option<(&str, &[&str], Vec<Vec<String>>)>,
    timer: &mut Timer,
) -> Result<StudyReport> {
    let mut dir = ResultsDir::create(&cfg.output_dir, &report.config_digest)?;
    report.output = dir.root().to_path_buf();
    dir.csv("levels.csv", &LEVEL_HEADER, &level_rows(&report.levels))?;
    dir.csv(
        "marginals.csv",
        &["label", "parameter", "time", "w1"],
        &marginal_rows(&report.levels),
    )?;
    dir.csv(
        "calibration.csv",
        &["lambda", "gradient_sup"],
        &calibration_rows(&report.calibration),
    )?;
    if let Some((name, header, rows)) = extra {
        dir.csv(name, header, &rows)?;
    }
    write_time_field(&dir.file("drift.bin"), &prep.b, "drift")?;
    write_time_field(&dir.file("u.bin"), &prep.u, "backward Kolmogorov solution")?;
    let mut seeds = Vec::new();
    for e in ensembles {
        seeds.push((e.label.clone(), e.cfg.seed));
        if cfg.write_ensembles {
            e.write(&dir.file(&format!("{}.bin", e.label)))?;
        }
    }
    timer.lap("persist");
    report.timings = timer.laps.clone();
    dir.json("report.json", &report)?;
    dir.finish(&report.study, &report.config_digest, seeds, report.inputs.clone())?;
    Ok(report)
}

fn base_report(cfg: &ExperimentConfig, study: &str, digest: String, prep: &Prepared) -> Result<StudyReport> {
    Ok(StudyReport {
        study: study.to_string(),
        config_digest: digest,
        seed: cfg.seed,
        lambda: prep.lambda,
        kappa: (prep.pde.delta, prep.pde.p),
        calibration: prep.calibration.clone(),
        assumption: prep.assumption.clone(),
        solve: prep.report.clone(),
        floor: 0.0,
        levels: Vec::new(),
        trend: None,
        deviations: Vec::new(),
        checks: Vec::new(),
        environment: Environment::current(),
        inputs: inputs(cfg)?,
        timings: Vec::new(),
        output: Default::default(),
    })
}

fn context(prep: &Prepared, cfg: &ExperimentConfig) -> Result<TransformContext> {
    TransformContext::new(prep.u.clone(), cfg.inverse).map_err(Error::in_stage("transform"))
}

/// Virtual solution against classical solutions under mollified drifts
/// `b_n`, all driven by the same Brownian paths.
pub fn study_mollify(cfg: &ExperimentConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut timer = Timer::new();
    let digest = cfg.digest("study-mollify")?;
    let prep = prepare(cfg, cfg.grid.intervals)?;
    timer.lap("solve");
    let ctx = context(&prep, cfg)?;
    let sim = sim_config(cfg, prep.lambda, cfg.seed, cfg.sim.steps, cfg.sim.noise_steps);
    let (_, x) = simulate_virtual(&ctx, &sim).map_err(Error::in_stage("simulate"))?;
    let replica_cfg = SimConfig {
        seed: floor_seed(cfg.seed),
        ..sim.clone()
    };
    let (_, mut replica) = simulate_virtual(&ctx, &replica_cfg).map_err(Error::in_stage("simulate"))?;
    replica.label = "virtual-replica".into();
    timer.lap("virtual");
    let mut classical = Vec::new();
    for &n in &cfg.n_list {
        let b_n = prep.b.map(|f| f.mollify(n));
        classical.push(simulate_classical(&b_n, &sim, &format!("classical-{n}")).map_err(Error::in_stage("simulate"))?);
    }
    timer.lap("classical");
    let mut report = base_report(cfg, "study-mollify", digest, &prep)?;
    report.floor = terminal_w1(&x, &replica);
    report.levels = classical
        .iter()
        .zip(&cfg.n_list)
        .enumerate()
        .map(|(i, (xn, &n))| compare(cfg, &x, xn, &xn.label, n, cfg.seed.wrapping_add(i as u64)))
        .collect();
    let values: Vec<f64> = report.levels.iter().map(|l| l.terminal.value).collect();
    let trend = kendall_trend(&cfg.n_list, &values, TREND_LEVEL);
    let monotone = report
        .levels
        .windows(2)
        .all(|w| w[1].terminal.value <= w[0].terminal.value || w[1].terminal.overlaps(&w[0].terminal));
    report.checks = vec![
        check(
            "decreasing-trend",
            trend.p_value,
            "Kendall tau < 0 at 5%",
            trend.decreasing,
        ),
        check(
            "non-increasing-within-ci",
            values.last().copied().unwrap_or(0.0),
            "each level <= previous or intervals overlap",
            monotone,
        ),
    ];
    report.trend = Some(trend);
    timer.lap("statistics");
    let mut ensembles = vec![&x, &replica];
    ensembles.extend(classical.iter());
    persist(cfg, report, &prep, &ensembles, None, &mut timer)
}

/// Virtual solutions under several `lambda`, all above the calibrated
/// threshold and driven by the same Brownian paths.
pub fn study_lambda(cfg: &ExperimentConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut timer = Timer::new();
    let digest = cfg.digest("study-lambda")?;
    let prep = prepare(cfg, cfg.grid.intervals)?;
    timer.lap("solve");
    let mut runs = Vec::new();
    let mut replica = None;
    for &f in &cfg.lambda_factors {
        let lambda = f * prep.lambda;
        let u = if f == 1.0 {
            prep.u.clone()
        } else {
            kolmogorov::solve(&prep.b, lambda, &prep.pde)
                .map_err(Error::in_stage("solve"))?
                .0
        };
        let ctx = TransformContext::new(u, cfg.inverse).map_err(Error::in_stage("transform"))?;
        let sim = sim_config(cfg, lambda, cfg.seed, cfg.sim.steps, cfg.sim.noise_steps);
        let (_, mut x) = simulate_virtual(&ctx, &sim).map_err(Error::in_stage("simulate"))?;
        x.label = format!("virtual-lambda-{lambda}");
        if replica.is_none() {
            let rc = SimConfig {
                seed: floor_seed(cfg.seed),
                ..sim
            };
            let (_, mut r) = simulate_virtual(&ctx, &rc).map_err(Error::in_stage("simulate"))?;
            r.label = "virtual-replica".into();
            replica = Some(r);
        }
        runs.push((lambda, x));
    }
    timer.lap("virtual");
    let mut report = base_report(cfg, "study-lambda", digest, &prep)?;
    if let (Some(r), Some((_, first))) = (&replica, runs.first()) {
        report.floor = terminal_w1(first, r);
    }
    let mut k = 0;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let label = format!("lambda-{}-vs-{}", runs[i].0, runs[j].0);
            report.levels.push(compare(
                cfg,
                &runs[i].1,
                &runs[j].1,
                &label,
                runs[j].0 / runs[i].0,
                cfg.seed.wrapping_add(k),
            ));
            k += 1;
        }
    }
    let worst = report.levels.iter().map(|l| l.terminal.value).fold(0.0, f64::max);
    report.checks = vec![check(
        "pairwise-within-3x-floor",
        worst,
        &format!("<= 3 x floor = {}", 3.0 * report.floor),
        worst <= 3.0 * report.floor,
    )];
    timer.lap("statistics");
    let mut ensembles: Vec<&PathEnsemble> = runs.iter().map(|(_, x)| x).collect();
    ensembles.extend(replica.as_ref());
    persist(cfg, report, &prep, &ensembles, None, &mut timer)
}

/// Mean and max over paths of `sup_t |a - b|`.
fn pathwise_deviation(a: &PathEnsemble, b: &PathEnsemble) -> (f64, f64) {
    let sups: Vec<f64> = (0..a.paths())
        .map(|p| {
            a.path(p)
                .iter()
                .zip(b.path(p))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    (sups.iter().sum::<f64>() / sups.len() as f64, max_of(&sups))
}

/// A smooth drift simulated directly and through the transform with the
/// same Brownian paths, at several step counts.
pub fn study_smooth_consistency(cfg: &ExperimentConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let steps = &cfg.consistency_steps;
    let finest = *steps
        .last()
        .ok_or_else(|| Error::Config("consistency_steps is empty".into()))?;
    let noise = cfg.sim.noise_steps.unwrap_or(finest);
    if let Some(s) = steps.iter().find(|&&s| noise % s != 0) {
        return Err(Error::Config(format!(
            "noise resolution {noise} is not a multiple of {s} steps"
        )));
    }
    let mut timer = Timer::new();
    let digest = cfg.digest("study-consistency")?;
    // lambda is fixed at the coarsest level and reused
    let first = prepare(cfg, steps[0])?;
    let fixed = ExperimentConfig {
        lambda: Some(first.lambda),
        ..cfg.clone()
    };
    timer.lap("calibrate");
    let mut levels = Vec::new();
    let mut deviations = Vec::new();
    let mut finest_pair = None;
    for (i, &s) in steps.iter().enumerate() {
        let prep = if i == 0 { first.clone() } else { prepare(&fixed, s)? };
        let ctx = context(&prep, cfg)?;
        let sim = sim_config(cfg, prep.lambda, cfg.seed, s, Some(noise));
        let mut direct =
            simulate_classical(&prep.b, &sim, &format!("direct-{s}")).map_err(Error::in_stage("simulate"))?;
        let (_, mut virt) = simulate_virtual(&ctx, &sim).map_err(Error::in_stage("simulate"))?;
        virt.label = format!("virtual-{s}");
        let (mean, max) = pathwise_deviation(&direct, &virt);
        deviations.push((s, mean, max));
        levels.push(compare(
            cfg,
            &direct,
            &virt,
            &format!("steps-{s}"),
            s as f64,
            cfg.seed.wrapping_add(i as u64),
        ));
        if i + 1 == steps.len() {
            let rc = SimConfig {
                seed: floor_seed(cfg.seed),
                ..sim
            };
            let replica = simulate_classical(&prep.b, &rc, "direct-replica").map_err(Error::in_stage("simulate"))?;
            direct.label = format!("direct-{s}");
            virt.label = format!("virtual-{s}");
            finest_pair = Some((prep, direct, virt, replica));
        }
        timer.lap(&format!("steps-{s}"));
    }
    let (prep, direct, virt, replica) = finest_pair.expect("at least one level");
    let mut report = base_report(cfg, "study-consistency", digest, &prep)?;
    report.calibration = first.calibration.clone();
    report.floor = terminal_w1(&direct, &replica);
    report.levels = levels;
    let ratios: Vec<f64> = deviations.windows(2).map(|w| w[1].1 / w[0].1).collect();
    for (w, r) in deviations.windows(2).zip(&ratios) {
        let ok = (0.5..=0.9).contains(r);
        report.checks.push(check(
            &format!("deviation-ratio-{}-{}", w[0].0, w[1].0),
            *r,
            "in [0.5, 0.9]",
            ok,
        ));
    }
    let terminal = report.levels.last().map_or(0.0, |l| l.terminal.value);
    report.checks.push(check(
        "terminal-w1-below-3x-floor",
        terminal,
        &format!("<= {}", 3.0 * report.floor),
        terminal <= 3.0 * report.floor,
    ));
    report.deviations = deviations.clone();
    let rows = deviations
        .iter()
        .map(|(s, m, x)| vec![s.to_string(), m.to_string(), x.to_string()])
        .collect();
    timer.lap("statistics");
    persist(
        cfg,
        report,
        &prep,
        &[&direct, &virt, &replica],
        Some((
            "deviations.csv",
            &["steps", "mean_sup_deviation", "max_sup_deviation"],
            rows,
        )),
        &mut timer,
    )
}

/// Solver and transform diagnostics for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub config_digest: String,
    pub assumption: AssumptionReport,
    pub lambda: f64,
    pub kappa: (f64, f64),
    pub calibration: Vec<(f64, f64)>,
    pub solve: SolveReport,
    pub gradient_sup: f64,
    /// Second admissible `(delta, p)` and the lattice gap between the two solutions.
    pub uniqueness: ((f64, f64), f64),
    /// `(gamma, Hoelder quotient of u in H^{1+delta}_p)`.
    pub holder: (f64, f64),
    pub gamma_checks: Vec<GammaCheck>,
    pub bijection_residuals: (f64, f64),
    pub lipschitz: f64,
    pub time_continuity: f64,
    pub output: std::path::PathBuf,
}

/// A second point of the admissible region, away from `(delta, p)`.
fn second_kappa(region: &KappaRegion, (delta, _): (f64, f64)) -> Option<(f64, f64)> {
    let d = region.dim as f64;
    let lo = region.beta.max(d / region.q);
    let hi = 1.0 - region.beta;
    let candidate = 0.5 * (delta + hi);
    let candidate = if candidate > lo && candidate < hi {
        candidate
    } else {
        0.5 * (lo + delta)
    };
    let p = 0.5 * (d / candidate + region.q);
    region.contains(candidate, p).then_some((candidate, p))
}

pub fn diagnostics(cfg: &ExperimentConfig) -> Result<Diagnostics> {
    cfg.validate()?;
    let digest = cfg.digest("diagnostics")?;
    let prep = prepare(cfg, cfg.grid.intervals)?;
    let ctx = context(&prep, cfg)?;
    let kappa = (prep.pde.delta, prep.pde.p);
    let region = KappaRegion::new(cfg.beta, cfg.q, cfg.grid.dim)?;
    let other = second_kappa(&region, kappa).unwrap_or(kappa);
    let gap = kolmogorov::uniqueness_crosscheck(&prep.b, prep.lambda, kappa, other, &prep.pde)
        .map_err(Error::in_stage("uniqueness"))?;
    let gamma = 0.5 * (1.0 - kappa.0 - cfg.beta).max(0.1);
    let holder = kolmogorov::holder_diagnostic(&prep.u, gamma, prep.pde.index());
    let mut gamma_checks = Vec::new();
    for theta in [0.0, 0.25, 0.5, 0.75] {
        for rho in [1.0, 2.0, 4.0, 8.0] {
            gamma_checks.push(kolmogorov::gamma_bound_check(rho, theta, 0.0, cfg.sim.horizon));
        }
    }
    let diag = Diagnostics {
        config_digest: digest.clone(),
        assumption: prep.assumption.clone(),
        lambda: prep.lambda,
        kappa,
        calibration: prep.calibration.clone(),
        solve: prep.report.clone(),
        gradient_sup: ctx.gradient_sup(),
        uniqueness: (other, gap),
        holder: (gamma, holder),
        gamma_checks,
        bijection_residuals: ctx.bijection_residuals(1000, cfg.seed)?,
        lipschitz: ctx.lipschitz_probe(1000, cfg.seed)?,
        time_continuity: ctx.time_continuity_probe(0.5, 200, cfg.seed)?,
        output: cfg.output_dir.join(&digest),
    };
    let mut dir = ResultsDir::create(&cfg.output_dir, &digest)?;
    dir.json("diagnostics.json", &diag)?;
    dir.csv(
        "calibration.csv",
        &["lambda", "gradient_sup"],
        &calibration_rows(&prep.calibration),
    )?;
    write_time_field(&dir.file("u.bin"), &prep.u, "backward Kolmogorov solution")?;
    dir.finish("diagnostics", &digest, vec![], inputs(cfg)?)?;
    Ok(diag)
}
