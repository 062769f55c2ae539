//! Library side of the `cmj` binary: parsing lives in [`config`], dispatch
//! and output here.

pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cmj_core::scale::{clt_variance, limit_overshoot_density};
use cmj_core::simulate::{
    estimate_e, extract_residual_lifetimes, overshoot_density, run_replicates, simulate_populations, OvershootLaw,
    TreeSimConfig,
};
use cmj_core::verify::{self, RunOptions, TestReport};
use cmj_core::{LevyModel64, ScaleTable64};
use serde_json::Value;
use thiserror::Error;

pub use config::{parse_config, ConfigError, RunConfig, Suite, Task};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] cmj_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// Parameter problems only detectable once a computation starts are
    /// still configuration errors.
    pub fn exit_code(&self) -> u8 {
        use cmj_core::Error as E;
        match self {
            Self::Model(
                E::InvalidDistribution(_)
                | E::MalformedSpec { .. }
                | E::InvalidParameter { .. }
                | E::SubcriticalModel { .. }
                | E::GridTooFine { .. }
                | E::UnsupportedLifespan(_),
            ) => EXIT_CONFIG,
            _ => EXIT_FAILED,
        }
    }
}

/// Twelve significant digits, printed in the shortest form that keeps them.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    rounded.to_string()
}

fn round12(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round12).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round12(v))).collect()),
        v => v,
    }
}

/// JSON list of reports with every number at twelve significant digits.
pub fn reports_to_json(reports: &[TestReport]) -> String {
    let v = serde_json::to_value(reports).unwrap_or(Value::Null);
    serde_json::to_string_pretty(&round12(v)).unwrap_or_default()
}

fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Run a validated configuration; returns the process exit code.
pub fn run(cfg: &RunConfig) -> Result<u8, RunError> {
    let m = &cfg.model;
    let out = cfg.out.as_deref();
    match &cfg.task {
        Task::Psi { x } => {
            let mut w = open(out)?;
            for &x in x {
                writeln!(w, "{} {} {}", fmt12(x), fmt12(m.psi(x)), fmt12(m.psi_prime(x)))?;
            }
            w.flush()?;
        }
        Task::Alpha => {
            let mut w = open(out)?;
            writeln!(w, "alpha {}", fmt12(m.alpha()))?;
            writeln!(w, "psi_prime_alpha {}", fmt12(m.psi_prime_alpha()))?;
            writeln!(w, "clt_variance {}", fmt12(clt_variance(m)))?;
            w.flush()?;
        }
        Task::Scale { t_max, step, stride } => write_scale(m, *t_max, *step, *stride, out)?,
        Task::Simulate {
            horizon,
            checkpoints,
            max_individuals,
            run,
        } => {
            let sim = TreeSimConfig::new(*m, *horizon, checkpoints.clone())?.with_cap(*max_individuals)?;
            let batch = simulate_populations(&sim, run.reps, run.seed, run.threads)?;
            let mut w = open(out)?;
            let names: Vec<String> = (1..=checkpoints.len()).map(|k| format!("N_t{k}")).collect();
            let mut header = vec!["rep".to_string(), "seed".into()];
            header.extend(names);
            header.extend(["N_T".into(), "E_hat".into(), "truncated".into()]);
            writeln!(w, "{}", header.join(","))?;
            for (i, s) in batch.samples.iter().enumerate() {
                let mut row = vec![i.to_string(), batch.replicate_seed(i).to_string()];
                row.extend(s.counts.iter().map(u64::to_string));
                row.push(s.alive_at_horizon.to_string());
                row.push(fmt12(estimate_e(s, m)));
                row.push(u8::from(s.truncated).to_string());
                writeln!(w, "{}", row.join(","))?;
            }
            w.flush()?;
            if batch.dropped() > 0 {
                log::warn!("{} of {} replicates hit the individual cap", batch.dropped(), run.reps);
            }
        }
        Task::Overshoot {
            u,
            points,
            x_max,
            run,
            samples_out,
        } => {
            let tbl = ScaleTable64::build(m, u.max(1.0), cmj_core::scale::DEFAULT_STEP)?;
            let law = OvershootLaw::new(m, &tbl, *u, OvershootLaw::DEFAULT_POINTS)?;
            let mut w = open(out)?;
            writeln!(w, "x,density,limit_density,cdf")?;
            for i in 0..*points {
                let x = x_max * i as f64 / (*points - 1) as f64;
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt12(x),
                    fmt12(overshoot_density(m, &tbl, *u, x)?),
                    fmt12(limit_overshoot_density(m, x)),
                    fmt12(law.cdf(x))
                )?;
            }
            w.flush()?;
            if let Some(path) = samples_out {
                let sim = TreeSimConfig::new(*m, *u, vec![])?;
                let samples = run_replicates(run.reps, run.seed, run.threads, |_, rng| {
                    extract_residual_lifetimes(&sim, rng).residuals
                })?;
                let mut w = open(Some(path))?;
                writeln!(w, "rep,index,residual")?;
                for (rep, r) in samples.iter().enumerate() {
                    for (i, x) in r.iter().enumerate() {
                        writeln!(w, "{rep},{},{}", i + 1, fmt12(*x))?;
                    }
                }
                w.flush()?;
            }
        }
        Task::Verify { suite, t, delta, u, run } => {
            let opts = RunOptions {
                reps: run.reps,
                seed: run.seed,
                threads: run.threads,
            };
            let reports = match suite {
                Suite::Marginal => verify::marginal_experiment(m, t[0], &opts)?,
                Suite::Lln => verify::lln_experiment(m, t[0], &opts)?,
                Suite::Clt => verify::clt_experiment(m, t[0], *delta, &opts)?,
                Suite::Moments => verify::moment_experiment(m, t, *delta, &opts)?,
                Suite::Subtree => verify::subtree_moment_experiment(m, *u, t[0], *delta, &opts)?,
                Suite::Overshoot => verify::overshoot_experiment(m, *u, &opts)?,
            };
            let mut w = open(out)?;
            writeln!(w, "{}", reports_to_json(&reports))?;
            w.flush()?;
            for r in &reports {
                log::info!("{} pass={} statistic={}", r.name, r.pass, fmt12(r.statistic));
            }
            if !verify::all_pass(&reports) {
                return Ok(EXIT_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

fn write_scale(m: &LevyModel64, t_max: f64, step: f64, stride: usize, out: Option<&Path>) -> Result<(), RunError> {
    let tbl = ScaleTable64::build(m, t_max, step)?;
    let mut w = open(out)?;
    writeln!(w, "t,W,WconvPV,meanN,survival,jointNE")?;
    for k in (0..tbl.len()).step_by(stride) {
        let t = tbl.time(k);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt12(t),
            fmt12(tbl.w_values()[k]),
            fmt12(tbl.wconv_values()[k]),
            fmt12(tbl.mean_nt(t)),
            fmt12(tbl.survival_prob(t)),
            fmt12(tbl.joint_moment_ne(t))
        )?;
    }
    w.flush()?;
    Ok(())
}
