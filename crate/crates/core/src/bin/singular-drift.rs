//! Command-line front end over the library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use singular_drift::kolmogorov::{self, PdeConfig};
use singular_drift::lab::{self, DriftFile, ExperimentConfig, StudyReport};
use singular_drift::sde::{self, SimConfig};
use singular_drift::spectral::{read_time_field, write_time_field};
use singular_drift::zvonkin::{InverseConfig, TransformContext};
use singular_drift::Result;

#[derive(Parser)]
#[command(name = "singular-drift", version, about = "SDEs with distributional drift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a drift time field from a JSON spec.
    GenDrift {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the Kolmogorov equation for a fixed lambda.
    SolvePde {
        #[arg(long)]
        drift: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Double lambda until the gradient bound holds; writes JSON and a CSV trace.
    Calibrate {
        #[arg(long)]
        drift: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the accepted solution.
        #[arg(long)]
        u_out: Option<PathBuf>,
    },
    /// Simulate the virtual solution from a solved field.
    Simulate {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the transformed process.
        #[arg(long)]
        y_out: Option<PathBuf>,
        #[arg(long, default_value_t = InverseConfig::default().tol)]
        inverse_tol: f64,
    },
    /// Mollified drifts against the virtual solution.
    StudyMollify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Virtual solutions under several lambda.
    StudyLambda {
        #[arg(long)]
        config: PathBuf,
    },
    /// Direct against transformed simulation for a smooth drift.
    StudyConsistency {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solver and transform diagnostics.
    Diagnostics {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn pde_config(path: Option<&Path>) -> Result<PdeConfig> {
    let cfg = path.map_or_else(|| Ok(PdeConfig::default()), read_json)?;
    cfg.validate()?;
    Ok(cfg)
}

fn print_study(r: &StudyReport) {
    println!("{}: lambda {}  floor {:.6}", r.study, r.lambda, r.floor);
    for l in &r.levels {
        println!(
            "  {:<24} W1(T) {:.6} [{:.6}, {:.6}]",
            l.label, l.terminal.value, l.terminal.lo, l.terminal.hi
        );
    }
    for c in &r.checks {
        println!(
            "  {} {} = {:.6} ({})",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.value,
            c.bound
        );
    }
    println!("  results in {}", r.output.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenDrift { spec, out } => {
            let file: DriftFile = read_json(&spec)?;
            let b = file.generate()?;
            write_time_field(&out, &b, &serde_json::to_string(&file.spec)?)?;
            println!("wrote {}", out.display());
        }
        Command::SolvePde {
            drift,
            lambda,
            config,
            out,
        } => {
            let (b, _) = read_time_field(&drift)?;
            let cfg = pde_config(config.as_deref())?;
            let (u, report) = kolmogorov::solve(&b, lambda, &cfg)?;
            write_time_field(&out, &u, &format!("backward Kolmogorov solution, lambda = {lambda}"))?;
            let mut path = out.into_os_string();
            path.push(".report.json");
            write_json(Path::new(&path), &report)?;
            println!(
                "iterations {}  residual {:.3e}  gradient sup {:.6}",
                report.iterations,
                report.residual,
                kolmogorov::gradient_sup(&u)
            );
        }
        Command::Calibrate {
            drift,
            config,
            target,
            out,
            u_out,
        } => {
            let (b, _) = read_time_field(&drift)?;
            let cfg = pde_config(config.as_deref())?;
            let cal = kolmogorov::calibrate_lambda(&b, &cfg, target)?;
            #[derive(Serialize)]
            struct Out<'a> {
                lambda: f64,
                target: f64,
                trace: &'a [(f64, f64)],
                report: &'a kolmogorov::SolveReport,
            }
            write_json(
                &out,
                &Out {
                    lambda: cal.lambda,
                    target,
                    trace: &cal.trace,
                    report: &cal.report,
                },
            )?;
            let mut w = csv::Writer::from_path(out.with_extension("csv"))?;
            w.write_record(["lambda", "gradient_sup"])?;
            for (l, g) in &cal.trace {
                w.write_record([l.to_string(), g.to_string()])?;
            }
            w.flush()?;
            if let Some(p) = u_out {
                write_time_field(
                    &p,
                    &cal.u,
                    &format!("backward Kolmogorov solution, lambda = {}", cal.lambda),
                )?;
            }
            println!("lambda {}", cal.lambda);
        }
        Command::Simulate {
            u,
            lambda,
            config,
            out,
            y_out,
            inverse_tol,
        } => {
            let (u, _) = read_time_field(&u)?;
            let mut raw: serde_json::Value = read_json(&config)?;
            raw["lambda"] = lambda.into();
            let cfg: SimConfig = serde_json::from_value(raw)?;
            let inverse = InverseConfig {
                tol: inverse_tol,
                ..InverseConfig::default()
            };
            let ctx = TransformContext::new(u, inverse)?;
            let (y, x) = sde::simulate_virtual(&ctx, &cfg)?;
            x.write(&out)?;
            if let Some(p) = y_out {
                y.write(&p)?;
            }
            println!("wrote {} paths x {} steps to {}", cfg.paths, cfg.steps, out.display());
        }
        Command::StudyMollify { config } => print_study(&lab::study_mollify(&ExperimentConfig::load(&config)?)?),
        Command::StudyLambda { config } => print_study(&lab::study_lambda(&ExperimentConfig::load(&config)?)?),
        Command::StudyConsistency { config } => {
            print_study(&lab::study_smooth_consistency(&ExperimentConfig::load(&config)?)?)
        }
        Command::Diagnostics { config } => {
            let d = lab::diagnostics(&ExperimentConfig::load(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&d)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
