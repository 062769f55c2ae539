//! Command-line and config-file parsing into a validated [`RunConfig`].

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use cmj_core::simulate::DEFAULT_MAX_INDIVIDUALS;
use cmj_core::{LevyModel64, LifespanDistribution64};
use thiserror::Error;

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "CMJ_THREADS";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error(transparent)]
    Cli(#[from] clap::Error),
}

impl ConfigError {
    fn invalid(key: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        Self::Invalid {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cmj", version, about = "Splitting trees: scale functions, exact simulation and statistical checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the Laplace exponent and its derivative
    #[command(args_override_self = true)]
    Psi {
        #[command(flatten)]
        model: ModelArgs,
        /// Points at which to evaluate, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Print the Malthusian parameter, the exponent's slope there and the CLT variance
    #[command(args_override_self = true)]
    Alpha {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Tabulate the scale function and the moments built from it
    #[command(args_override_self = true)]
    Scale {
        #[command(flatten)]
        model: ModelArgs,
        /// Table horizon
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        /// Grid step
        #[arg(long, default_value_t = cmj_core::scale::DEFAULT_STEP)]
        step: f64,
        /// Write every n-th grid row
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Output CSV; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Simulate population counts
    #[command(args_override_self = true)]
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Simulation horizon T
        #[arg(long)]
        horizon: f64,
        /// Times t1 < ... < tk <= T at which N is recorded, comma separated
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<f64>,
        /// Individuals per tree before the replicate is truncated
        #[arg(long, default_value_t = DEFAULT_MAX_INDIVIDUALS)]
        max_individuals: u64,
        #[command(flatten)]
        run: RunArgs,
        /// Output CSV; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Tabulate the residual lifetime density at a level and optionally sample residuals
    #[command(args_override_self = true)]
    Overshoot {
        #[command(flatten)]
        model: ModelArgs,
        /// Level u
        #[arg(long)]
        u: f64,
        /// Rows of the density table
        #[arg(long, default_value_t = 400)]
        points: usize,
        /// Right end of the density table; defaults to the lifetime support or eight mean lifetimes
        #[arg(long)]
        xmax: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
        /// Density table CSV; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of sampled residual lifetimes, one row per alive individual
        #[arg(long)]
        samples_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run a statistical check and write a JSON report
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Marginal,
    Lln,
    Clt,
    Moments,
    Subtree,
    Overshoot,
}

#[derive(Debug, Subcommand)]
pub enum VerifySuite {
    /// Geometric law of N_t given survival, its means and the survival probability
    #[command(args_override_self = true)]
    Marginal(VerifyArgs),
    /// Exponential limit of the normalised population
    #[command(args_override_self = true)]
    Lln(VerifyArgs),
    /// Laplace limit of the normalised error
    #[command(args_override_self = true)]
    Clt(VerifyArgs),
    /// Joint moment of N_t and the limit, and the quadratic error
    #[command(args_override_self = true)]
    Moments(VerifyArgs),
    /// Quadratic error of trees rooted at a residual lifetime
    #[command(args_override_self = true)]
    Subtree(VerifyArgs),
    /// Law of residual lifetimes at a level
    #[command(args_override_self = true)]
    Overshoot(VerifyArgs),
}

impl VerifySuite {
    fn split(&self) -> (Suite, &VerifyArgs) {
        match self {
            Self::Marginal(a) => (Suite::Marginal, a),
            Self::Lln(a) => (Suite::Lln, a),
            Self::Clt(a) => (Suite::Clt, a),
            Self::Moments(a) => (Suite::Moments, a),
            Self::Subtree(a) => (Suite::Subtree, a),
            Self::Overshoot(a) => (Suite::Overshoot, a),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Birth rate
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Lifetime law: exp:<d>, det:<v0>, unif:<lo>,<hi>, gamma:<k>,<theta> or inf
    #[arg(long, default_value = "inf")]
    pub lifespan: String,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Replicates
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Master seed; replicate i uses a stream derived from (seed, i)
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArg {
    /// File of `key = value` lines using the long flag names; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Time; comma-separated grid for `moments`. Defaults depend on the suite
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Extra simulated time behind the limit estimate; defaults to ln(400)/alpha
    #[arg(long)]
    pub delta: Option<f64>,
    /// Level for `subtree` and `overshoot`; defaults to 20/alpha
    #[arg(long)]
    pub u: Option<f64>,
    /// Replicates; defaults depend on the suite
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// JSON report; standard output when absent
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
}

/// Replicate settings shared by the simulating tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicates {
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Psi {
        x: Vec<f64>,
    },
    Alpha,
    Scale {
        t_max: f64,
        step: f64,
        stride: usize,
    },
    Simulate {
        horizon: f64,
        checkpoints: Vec<f64>,
        max_individuals: u64,
        run: Replicates,
    },
    Overshoot {
        u: f64,
        points: usize,
        x_max: f64,
        run: Replicates,
        samples_out: Option<PathBuf>,
    },
    Verify {
        suite: Suite,
        t: Vec<f64>,
        delta: f64,
        u: f64,
        run: Replicates,
    },
}

/// A fully validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: LevyModel64,
    pub task: Task,
    /// Main output; standard output when `None`.
    pub out: Option<PathBuf>,
}

/// Parse `argv` (program name first), merging a `--config` file if given.
pub fn parse_config<I, S>(argv: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = merge_config_file(argv)?;
    let cli = Cli::try_parse_from(argv)?;
    validate(cli.command)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Insert `--key value` pairs from the config file right after the
/// subcommand tokens, so later command-line flags override them.
fn merge_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::invalid("config", format!("{}: {e}", path.display())))?;
    let mut names: Vec<String> = argv.iter().skip(1).take(2).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut cmd = Cli::command();
    let mut sub = cmd
        .find_subcommand_mut(&names[0])
        .ok_or_else(|| ConfigError::invalid("config", "a subcommand must come first"))?
        .clone();
    if sub.has_subcommands() {
        let name = names.get(1).cloned().unwrap_or_default();
        sub = sub
            .find_subcommand_mut(&name)
            .ok_or_else(|| ConfigError::invalid("config", "a verify suite must follow `verify`"))?
            .clone();
    } else {
        names.truncate(1);
    }
    let known: HashSet<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|l| l != "config")
        .collect();
    let head = 1 + names.len();
    // list-valued flags append rather than override, so drop file keys the
    // command line sets itself
    let on_cli: HashSet<String> = argv[head..]
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|k| k.split('=').next().unwrap_or(k).to_string()))
        .collect();
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid(format!("line {}", lineno + 1), "expected `key = value`"))?;
        let key = key.trim().replace('_', "-");
        if !known.contains(&key) {
            return Err(ConfigError::invalid(key, "unknown key for this subcommand"));
        }
        if on_cli.contains(&key) {
            continue;
        }
        extra.push(OsString::from(format!("--{key}")));
        extra.push(OsString::from(value.trim()));
    }
    let mut merged: Vec<OsString> = argv[..head].to_vec();
    merged.extend(extra);
    merged.extend(argv[head..].iter().cloned());
    Ok(merged)
}

fn build_model(m: &ModelArgs) -> Result<LevyModel64, ConfigError> {
    let dist: LifespanDistribution64 = m.lifespan.parse().map_err(|e| ConfigError::invalid("lifespan", e))?;
    LevyModel64::new(m.b, dist).map_err(|e| ConfigError::invalid("b", e))
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::invalid(key, format!("must be positive and finite, got {x}")))
    }
}

fn check_threads(threads: Option<usize>) -> Result<Option<usize>, ConfigError> {
    match threads {
        Some(0) => Err(ConfigError::invalid("threads", "must be at least 1")),
        t => Ok(t),
    }
}

fn check_reps(reps: usize) -> Result<usize, ConfigError> {
    if reps == 0 {
        Err(ConfigError::invalid("reps", "must be at least 1"))
    } else {
        Ok(reps)
    }
}

/// Output files must go to an existing directory.
fn check_out(key: &str, path: &Option<PathBuf>) -> Result<(), ConfigError> {
    if let Some(p) = path {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return Err(ConfigError::invalid(key, format!("directory {} does not exist", dir.display())));
        }
    }
    Ok(())
}

fn default_reps(suite: Suite) -> usize {
    match suite {
        Suite::Marginal => 100_000,
        Suite::Moments => 50_000,
        Suite::Overshoot => 2_000,
        _ => 20_000,
    }
}

fn validate(command: Command) -> Result<RunConfig, ConfigError> {
    match command {
        Command::Psi { model, x, .. } => {
            if let Some(bad) = x.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(ConfigError::invalid("x", format!("must be finite and non-negative, got {bad}")));
            }
            Ok(RunConfig {
                model: build_model(&model)?,
                task: Task::Psi { x },
                out: None,
            })
        }
        Command::Alpha { model, .. } => Ok(RunConfig {
            model: build_model(&model)?,
            task: Task::Alpha,
            out: None,
        }),
        Command::Scale {
            model,
            tmax,
            step,
            stride,
            out,
            ..
        } => {
            check_out("out", &out)?;
            if stride == 0 {
                return Err(ConfigError::invalid("stride", "must be at least 1"));
            }
            let points = (positive("tmax", tmax)? / positive("step", step)?).ceil();
            if points > cmj_core::scale::MAX_GRID_POINTS as f64 {
                return Err(ConfigError::invalid("step", format!("{points} grid points exceed the limit")));
            }
            Ok(RunConfig {
                model: build_model(&model)?,
                task: Task::Scale {
                    t_max: tmax,
                    step,
                    stride,
                },
                out,
            })
        }
        Command::Simulate {
            model,
            horizon,
            checkpoints,
            max_individuals,
            run,
            out,
            ..
        } => {
            check_out("out", &out)?;
            let m = build_model(&model)?;
            cmj_core::simulate::TreeSimConfig::new(m, horizon, checkpoints.clone())
                .and_then(|c| c.with_cap(max_individuals))
                .map_err(|e| ConfigError::invalid("checkpoints", e))?;
            Ok(RunConfig {
                model: m,
                task: Task::Simulate {
                    horizon,
                    checkpoints,
                    max_individuals,
                    run: Replicates {
                        reps: check_reps(run.reps)?,
                        seed: run.seed,
                        threads: check_threads(run.threads)?,
                    },
                },
                out,
            })
        }
        Command::Overshoot {
            model,
            u,
            points,
            xmax,
            run,
            out,
            samples_out,
            ..
        } => {
            check_out("out", &out)?;
            check_out("samples-out", &samples_out)?;
            let m = build_model(&model)?;
            let d = *m.lifespan();
            if d.is_infinite() {
                return Err(ConfigError::invalid("lifespan", "residual lifetimes need a finite lifetime law"));
            }
            if points < 2 {
                return Err(ConfigError::invalid("points", "must be at least 2"));
            }
            let x_max = match (xmax, d) {
                (Some(x), _) => positive("xmax", x)?,
                (None, LifespanDistribution64::Deterministic { value }) => value,
                (None, LifespanDistribution64::Uniform { hi, .. }) => hi,
                (None, _) => 8.0 * d.mean(),
            };
            Ok(RunConfig {
                model: m,
                task: Task::Overshoot {
                    u: positive("u", u)?,
                    points,
                    x_max,
                    run: Replicates {
                        reps: check_reps(run.reps)?,
                        seed: run.seed,
                        threads: check_threads(run.threads)?,
                    },
                    samples_out,
                },
                out,
            })
        }
        Command::Verify { suite } => {
            let (suite, a) = suite.split();
            check_out("report", &a.report)?;
            let m = build_model(&a.model)?;
            let alpha = m.alpha();
            let t = match (suite, a.t.as_slice()) {
                (Suite::Moments, []) => vec![0.0, 0.5, 1.0, 2.0, 4.0],
                (Suite::Moments, grid) => grid.to_vec(),
                (_, [t]) => vec![*t],
                (_, []) => vec![match suite {
                    Suite::Marginal => 3.0,
                    Suite::Lln => 1000f64.ln() / alpha,
                    Suite::Clt => 5000f64.ln() / alpha,
                    Suite::Subtree => 100f64.ln() / alpha,
                    _ => 0.0,
                }],
                _ => return Err(ConfigError::invalid("t", "only `moments` takes a grid")),
            };
            if let Some(bad) = t.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(ConfigError::invalid("t", format!("must be finite and non-negative, got {bad}")));
            }
            Ok(RunConfig {
                model: m,
                task: Task::Verify {
                    suite,
                    t,
                    delta: positive("delta", a.delta.unwrap_or(400f64.ln() / alpha))?,
                    u: positive("u", a.u.unwrap_or(20.0 / alpha))?,
                    run: Replicates {
                        reps: check_reps(a.reps.unwrap_or(default_reps(suite)))?,
                        seed: a.seed,
                        threads: check_threads(a.threads)?,
                    },
                },
                out: a.report.clone(),
            })
        }
    }
}
