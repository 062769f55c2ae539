//! Exact simulation of splitting trees.
//!
//! [`simulate_population`] walks the tree depth first with an explicit stack
//! of pending birth times. An individual's children are pushed in increasing
//! birth order, so they come off the stack latest-born first, which is the
//! order in which the contour process visits them. [`simulate_contour_nt`]
//! is an independent sampler of `N_t` from the jump chain of the contour
//! process and serves as an oracle for the tree walk.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LifespanDistribution, LifetimeSampler};
use crate::quad::integrate;
use crate::rng::{stream, stream_seed, SimRng};
use crate::{LevyModel64, ScaleTable64};

pub const DEFAULT_MAX_INDIVIDUALS: u64 = 100_000_000;

/// Largest share of replicates a batch may lose to the individual cap.
pub const MAX_TRUNCATED_FRACTION: f64 = 1e-3;

/// Lifetime of the ancestor.
#[derive(Debug, Clone, Default)]
pub enum RootLifespan {
    /// Drawn from the model's lifetime law.
    #[default]
    Law,
    Exact(f64),
    /// Drawn from the residual lifetime law at a level (see [`OvershootLaw`]).
    Overshoot(Arc<OvershootLaw>),
}

#[derive(Debug, Clone)]
pub struct TreeSimConfig {
    pub model: LevyModel64,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub root: RootLifespan,
    pub max_individuals: u64,
}

impl TreeSimConfig {
    pub fn new(model: LevyModel64, horizon: f64, checkpoints: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            model,
            horizon,
            checkpoints,
            root: RootLifespan::Law,
            max_individuals: DEFAULT_MAX_INDIVIDUALS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_root(mut self, root: RootLifespan) -> Result<Self> {
        self.root = root;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cap(mut self, max_individuals: u64) -> Result<Self> {
        self.max_individuals = max_individuals;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("must be finite and non-negative, got {}", self.horizon),
            });
        }
        if self.checkpoints.iter().any(|&t| !(0.0..=self.horizon).contains(&t)) {
            return Err(Error::InvalidParameter {
                name: "checkpoints",
                reason: format!("must lie in [0, {}]", self.horizon),
            });
        }
        if self.checkpoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter {
                name: "checkpoints",
                reason: "must be ascending".into(),
            });
        }
        if self.max_individuals == 0 {
            return Err(Error::InvalidParameter {
                name: "max_individuals",
                reason: "must be positive".into(),
            });
        }
        if let RootLifespan::Exact(v) = self.root {
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "root_lifespan",
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PopulationSample {
    /// `N` at each checkpoint.
    pub counts: Vec<u64>,
    /// `N_T` at the horizon.
    pub alive_at_horizon: u64,
    pub total_individuals: u64,
    pub truncated: bool,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvershootSample {
    pub u: f64,
    /// Residual lifetimes of the individuals alive at `u`, in contour order.
    pub residuals: Vec<f64>,
    pub n_u: usize,
}

#[inline]
fn exp_gap<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Depth-first walk of the tree truncated at `horizon`. `visit(birth, death)`
/// is called for every individual born by the horizon, in contour order.
/// Returns the number of individuals and whether the cap stopped the walk.
fn walk_tree<R: Rng + ?Sized>(
    cfg: &TreeSimConfig,
    sampler: &LifetimeSampler,
    rng: &mut R,
    mut visit: impl FnMut(f64, f64),
) -> (u64, bool) {
    let b = cfg.model.birth_rate();
    let horizon = cfg.horizon;
    let root_life = match &cfg.root {
        RootLifespan::Law => sampler.sample(rng),
        RootLifespan::Exact(v) => *v,
        RootLifespan::Overshoot(law) => law.sample(rng),
    };
    let mut pending: Vec<f64> = Vec::new();
    let mut total = 0u64;
    let mut next: Option<(f64, f64)> = Some((0.0, root_life));
    while let Some((birth, life)) = next {
        total += 1;
        if total > cfg.max_individuals {
            return (total - 1, true);
        }
        let death = birth + life;
        visit(birth, death);
        let end = death.min(horizon);
        let mut s = birth + exp_gap(rng, b);
        while s < end {
            pending.push(s);
            s += exp_gap(rng, b);
        }
        next = pending.pop().map(|child| (child, sampler.sample(rng)));
    }
    (total, false)
}

/// One exact draw of `(N_{t_1}, …, N_{t_k}, N_T)`.
pub fn simulate_population<R: Rng + ?Sized>(cfg: &TreeSimConfig, rng: &mut R) -> PopulationSample {
    let sampler = cfg.model.lifespan().sampler();
    simulate_population_with(cfg, &sampler, rng)
}

fn simulate_population_with<R: Rng + ?Sized>(
    cfg: &TreeSimConfig,
    sampler: &LifetimeSampler,
    rng: &mut R,
) -> PopulationSample {
    let horizon = cfg.horizon;
    let cps = &cfg.checkpoints;
    let mut counts = vec![0u64; cps.len()];
    let mut alive = 0u64;
    let (total, truncated) = walk_tree(cfg, sampler, rng, |birth, death| {
        // alive on [birth, death)
        let lo = cps.partition_point(|&t| t < birth);
        for (c, &t) in counts[lo..].iter_mut().zip(&cps[lo..]) {
            if t >= death {
                break;
            }
            *c += 1;
        }
        if birth <= horizon && horizon < death {
            alive += 1;
        }
    });
    PopulationSample {
        counts,
        alive_at_horizon: alive,
        total_individuals: total,
        truncated,
        horizon,
    }
}

/// Independent draw of `N_t` from the reflected, killed contour path.
pub fn simulate_contour_nt<R: Rng + ?Sized>(m: &LevyModel64, t: f64, rng: &mut R) -> u64 {
    let sampler = m.lifespan().sampler();
    contour_nt_with(m.birth_rate(), &sampler, t, rng)
}

fn contour_nt_with<R: Rng + ?Sized>(b: f64, sampler: &LifetimeSampler, t: f64, rng: &mut R) -> u64 {
    let mut count = 0u64;
    let mut height = sampler.sample(rng);
    if height > t {
        height = t;
        count += 1;
    }
    loop {
        let gap = exp_gap(rng, b);
        if gap >= height {
            return count;
        }
        height += sampler.sample(rng) - gap;
        if height > t {
            height = t;
            count += 1;
        }
    }
}

/// Residual lifetimes at level `u = cfg.horizon`, in contour order.
pub fn extract_residual_lifetimes<R: Rng + ?Sized>(cfg: &TreeSimConfig, rng: &mut R) -> OvershootSample {
    let u = cfg.horizon;
    let sampler = cfg.model.lifespan().sampler();
    let mut residuals = Vec::new();
    walk_tree(cfg, &sampler, rng, |birth, death| {
        if birth <= u && u < death {
            residuals.push(death - u);
        }
    });
    let n_u = residuals.len();
    OvershootSample { u, residuals, n_u }
}

/// `Ê = ψ'(α) e^{−αT} N_T`, the finite-horizon proxy for the a.s. limit.
pub fn estimate_e(sample: &PopulationSample, m: &LevyModel64) -> f64 {
    m.psi_prime_alpha() * (-m.alpha() * sample.horizon).exp() * sample.alive_at_horizon as f64
}

fn check_level(m: &LevyModel64, u: f64) -> Result<()> {
    if m.lifespan().is_infinite() {
        return Err(Error::UnsupportedLifespan(m.lifespan().to_string()));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "u",
            reason: format!("level must be positive, got {u}"),
        });
    }
    Ok(())
}

const OVERSHOOT_TOL: f64 = 1e-12;

/// Integrate over `[0, u]` after splitting at the given interior points.
fn integrate_split(f: impl Fn(f64) -> f64, u: f64, breaks: &[f64]) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&p| p > 0.0 && p < u).collect();
    pts.push(0.0);
    pts.push(u);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], OVERSHOOT_TOL)).sum()
}

/// Density of `O_i`, `i ≥ 2`, under `P_u`:
/// `∫_0^u W(u − y)/(W(u) − 1) b f_V(x + y) dy`, or for a deterministic
/// lifetime `v0` the closed form `b W(u − v0 + x)/(W(u) − 1)` on
/// `(max(0, v0 − u), v0)`.
pub fn overshoot_density(m: &LevyModel64, tbl: &ScaleTable64, u: f64, x: f64) -> Result<f64> {
    check_level(m, u)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let b = m.birth_rate();
    let norm = tbl.w(u) - 1.0;
    let d = *m.lifespan();
    Ok(match d {
        LifespanDistribution::Deterministic { value } => {
            if x < value && x > value - u {
                b * tbl.w(u - value + x) / norm
            } else {
                0.0
            }
        }
        _ => {
            let breaks = match d {
                LifespanDistribution::Uniform { lo, hi } => vec![lo - x, hi - x],
                _ => vec![],
            };
            let f = |y: f64| tbl.w(u - y) / norm * b * d.density(x + y).unwrap_or(0.0);
            integrate_split(f, u, &breaks)
        }
    })
}

/// `P_u(O_i > s)` for `i ≥ 2`: `∫_0^u W(u − y)/(W(u) − 1) b P(V > s + y) dy`.
pub fn overshoot_tail(m: &LevyModel64, tbl: &ScaleTable64, u: f64, s: f64) -> Result<f64> {
    check_level(m, u)?;
    let s = s.max(0.0);
    let b = m.birth_rate();
    let norm = tbl.w(u) - 1.0;
    let d = *m.lifespan();
    let breaks = match d {
        LifespanDistribution::Deterministic { value } => vec![value - s],
        LifespanDistribution::Uniform { lo, hi } => vec![lo - s, hi - s],
        _ => vec![],
    };
    let f = |y: f64| tbl.w(u - y) / norm * b * d.survival(s + y);
    Ok(integrate_split(f, u, &breaks).clamp(0.0, 1.0))
}

/// The residual lifetime law at level `u`, tabulated for inverse-CDF
/// sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootLaw {
    u: f64,
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl OvershootLaw {
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn new(m: &LevyModel64, tbl: &ScaleTable64, u: f64, points: usize) -> Result<Self> {
        check_level(m, u)?;
        if points < 2 {
            return Err(Error::InvalidParameter {
                name: "points",
                reason: "need at least two grid points".into(),
            });
        }
        let upper = match *m.lifespan() {
            LifespanDistribution::Deterministic { value } => value,
            LifespanDistribution::Uniform { hi, .. } => hi,
            _ => {
                let mut x = m.lifespan().mean().max(1.0);
                while overshoot_tail(m, tbl, u, x)? > 1e-13 && x < 1e6 {
                    x *= 2.0;
                }
                x
            }
        };
        let lower = match *m.lifespan() {
            LifespanDistribution::Deterministic { value } => (value - u).max(0.0),
            _ => 0.0,
        };
        let xs: Vec<f64> = (0..points)
            .map(|i| lower + (upper - lower) * i as f64 / (points - 1) as f64)
            .collect();
        let tails = xs.iter().map(|&x| overshoot_tail(m, tbl, u, x)).collect::<Result<Vec<f64>>>()?;
        let top = tails[0];
        let mut cdf: Vec<f64> = tails.iter().map(|&q| (1.0 - q / top).clamp(0.0, 1.0)).collect();
        for i in 1..cdf.len() {
            cdf[i] = cdf[i].max(cdf[i - 1]);
        }
        *cdf.last_mut().expect("non-empty grid") = 1.0;
        cdf[0] = 0.0;
        Ok(Self { u, xs, cdf })
    }

    pub fn level(&self) -> f64 {
        self.u
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let k = self.xs.partition_point(|&v| v < x);
        if k >= self.xs.len() {
            return 1.0;
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        self.cdf[k - 1] + (self.cdf[k] - self.cdf[k - 1]) * (x - x0) / (x1 - x0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c < p).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let x = if c1 > c0 { x0 + (x1 - x0) * (p - c0) / (c1 - c0) } else { x1 };
        x.max(f64::MIN_POSITIVE)
    }
}

/// Runs `f` for replicates `0..reps`, each with its own stream derived from
/// `(seed, index)`. Results come back in replicate order whatever the thread
/// count; `threads = None` uses the global pool.
pub fn run_replicates<T, F>(reps: usize, seed: u64, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync + Send,
{
    let job = || {
        (0..reps)
            .into_par_iter()
            .map(|i| f(i, &mut stream(seed, i as u64)))
            .collect::<Vec<T>>()
    };
    match threads {
        None => Ok(job()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidParameter {
                    name: "threads",
                    reason: e.to_string(),
                })?;
            Ok(pool.install(job))
        }
    }
}

/// Replicated tree simulations, truncated ones included.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationBatch {
    pub seed: u64,
    pub samples: Vec<PopulationSample>,
}

impl PopulationBatch {
    pub fn replicate_seed(&self, index: usize) -> u64 {
        stream_seed(self.seed, index as u64)
    }

    pub fn dropped(&self) -> usize {
        self.samples.iter().filter(|s| s.truncated).count()
    }

    /// Untruncated samples; fails if more than 0.1% were truncated.
    pub fn kept(&self) -> Result<Vec<&PopulationSample>> {
        let dropped = self.dropped();
        if dropped as f64 > MAX_TRUNCATED_FRACTION * self.samples.len() as f64 {
            return Err(Error::TooManyTruncated {
                dropped,
                total: self.samples.len(),
            });
        }
        if dropped > 0 {
            log::warn!("{dropped} of {} replicates hit the individual cap and were dropped", self.samples.len());
        }
        Ok(self.samples.iter().filter(|s| !s.truncated).collect())
    }
}

pub fn simulate_populations(cfg: &TreeSimConfig, reps: usize, seed: u64, threads: Option<usize>) -> Result<PopulationBatch> {
    cfg.validate()?;
    let sampler = cfg.model.lifespan().sampler();
    let samples = run_replicates(reps, seed, threads, |_, rng| simulate_population_with(cfg, &sampler, rng))?;
    Ok(PopulationBatch { seed, samples })
}

pub fn simulate_contour_counts(m: &LevyModel64, t: f64, reps: usize, seed: u64, threads: Option<usize>) -> Result<Vec<u64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be positive, got {t}"),
        });
    }
    let sampler = m.lifespan().sampler();
    let b = m.birth_rate();
    run_replicates(reps, seed, threads, |_, rng| contour_nt_with(b, &sampler, t, rng))
}
