//! Monte Carlo experiments. Each returns one report per checked property.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scale::{quadratic_error_limit, DEFAULT_STEP};
use crate::simulate::{
    estimate_e, extract_residual_lifetimes, overshoot_density, overshoot_tail, run_replicates, simulate_contour_counts,
    simulate_populations, OvershootLaw, PopulationSample, RootLifespan, TreeSimConfig,
};
use crate::{LevyModel64, LifespanDistribution64, ScaleTable64};

use super::laplace::LaplaceLaw;
use super::stats::{chi_square_geometric, ks_test, ks_two_sample, mean_and_se, variance_and_se};
use super::TestReport;

/// `e^{αΔ}` of the default limit-proxy horizon.
pub const PROXY_GROWTH: f64 = 400.0;

/// Level at which the residual lifetime density is compared with its limit.
pub const LARGE_LEVEL: f64 = 20.0;

/// Fraction of the CLT horizon at which the third-moment trace is taken.
pub const TRACE_FRACTIONS: [f64; 5] = [0.5, 0.625, 0.75, 0.875, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub reps: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self { reps, seed, threads: None }
    }
}

/// `Δ = ln(400)/α`.
pub fn default_delta(m: &LevyModel64) -> f64 {
    PROXY_GROWTH.ln() / m.alpha()
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {x}"),
        })
    }
}

fn check_delta(m: &LevyModel64, delta: f64) -> Result<()> {
    positive("delta", delta)?;
    let min = default_delta(m);
    if delta < min * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be at least ln(400)/alpha = {min}"),
        });
    }
    Ok(())
}

fn run_trees(cfg: &TreeSimConfig, opts: &RunOptions) -> Result<Vec<PopulationSample>> {
    let batch = simulate_populations(cfg, opts.reps, opts.seed, opts.threads)?;
    Ok(batch.kept()?.into_iter().cloned().collect())
}

fn table_to(m: &LevyModel64, t: f64) -> Result<ScaleTable64> {
    ScaleTable64::build(m, t.max(1.0), DEFAULT_STEP)
}

/// Geometric marginal of `N_t` given survival, its conditional and
/// unconditional means, the survival probability, and a two-sample check of
/// the tree walk against the contour simulator.
pub fn marginal_experiment(m: &LevyModel64, t: f64, opts: &RunOptions) -> Result<Vec<TestReport>> {
    positive("t", t)?;
    let tbl = table_to(m, t)?;
    let cfg = TreeSimConfig::new(*m, t, vec![])?;
    let samples = run_trees(&cfg, opts)?;
    let counts: Vec<u64> = samples.iter().map(|s| s.alive_at_horizon).collect();
    let n = counts.len();
    let alive: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    let w = tbl.w(t);
    let mut reports = Vec::new();

    let (chi2, dof, p) = chi_square_geometric(&alive, 1.0 / w)?;
    reports.push(
        TestReport::p_value_test("marginal/geometric_chi_square", alive.len(), chi2, p)
            .with_values(vec![dof as f64], vec![1.0 / w]),
    );

    let cond: Vec<f64> = alive.iter().map(|&c| c as f64).collect();
    let (cm, cse) = mean_and_se(&cond);
    reports.push(TestReport::within_se("marginal/conditional_mean", cond.len(), cm, cse, w));

    let all: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (um, use_) = mean_and_se(&all);
    reports.push(TestReport::within_se("marginal/unconditional_mean", n, um, use_, tbl.mean_nt(t)));

    let surv = alive.len() as f64 / n as f64;
    let target = tbl.survival_prob(t);
    let se = (target * (1.0 - target) / n as f64).sqrt();
    reports.push(TestReport::within_se("marginal/survival_probability", n, surv, se, target));

    let contour = simulate_contour_counts(m, t, opts.reps, opts.seed ^ CONTOUR_SEED_SALT, opts.threads)?;
    let contour: Vec<f64> = contour.iter().map(|&c| c as f64).collect();
    let (d, p) = ks_two_sample(&all, &contour)?;
    reports.push(TestReport::p_value_test("marginal/tree_vs_contour_ks", n.min(contour.len()), d, p));
    Ok(reports)
}

const CONTOUR_SEED_SALT: u64 = 0xC0B7_0A5E_D00D_F00D;

/// `ψ'(α) e^{−αt} N_t` given `N_t > 0` against Exponential(1).
pub fn lln_experiment(m: &LevyModel64, t: f64, opts: &RunOptions) -> Result<Vec<TestReport>> {
    positive("t", t)?;
    if (-m.alpha() * t).exp() > 1e-3 * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("need exp(-alpha t) <= 1e-3, i.e. t >= {}", 1e3f64.ln() / m.alpha()),
        });
    }
    let cfg = TreeSimConfig::new(*m, t, vec![])?;
    let samples = run_trees(&cfg, opts)?;
    let x: Vec<f64> = samples
        .iter()
        .filter(|s| s.alive_at_horizon > 0)
        .map(|s| estimate_e(s, m))
        .collect();
    let (d, p) = ks_test(&x, |v| if v <= 0.0 { 0.0 } else { -(-v).exp_m1() })?;
    let (mean, se) = mean_and_se(&x);
    Ok(vec![
        TestReport::p_value_test("lln/ks_exponential", x.len(), d, p),
        TestReport::within_se("lln/mean", x.len(), mean, se, 1.0),
    ])
}

/// `Z = e^{−αt/2}(ψ'(α) N_t − e^{αt} Ê)` given `N_{t+Δ} > 0`, against the
/// Laplace law of variance `2 − ψ'(α)`, plus the trace of `E|Z|³` over
/// earlier times.
pub fn clt_experiment(m: &LevyModel64, t: f64, delta: f64, opts: &RunOptions) -> Result<Vec<TestReport>> {
    positive("t", t)?;
    check_delta(m, delta)?;
    let (a, pp) = (m.alpha(), m.psi_prime_alpha());
    let grid: Vec<f64> = TRACE_FRACTIONS.iter().map(|f| f * t).collect();
    let cfg = TreeSimConfig::new(*m, t + delta, grid.clone())?;
    let samples = run_trees(&cfg, opts)?;
    let survivors: Vec<&PopulationSample> = samples.iter().filter(|s| s.alive_at_horizon > 0).collect();
    let z_at = |k: usize| -> Vec<f64> {
        let tk = grid[k];
        survivors
            .iter()
            .map(|s| (-0.5 * a * tk).exp() * (pp * s.counts[k] as f64 - (a * tk).exp() * estimate_e(s, m)))
            .collect()
    };
    let z = z_at(grid.len() - 1);
    let law = LaplaceLaw::new(2.0 - pp)?;
    let n = z.len();
    let mut reports = Vec::new();

    let (d, p) = ks_test(&z, |v| law.cdf(v))?;
    reports.push(TestReport::p_value_test("clt/ks_laplace", n, d, p));

    let (var, _) = variance_and_se(&z);
    reports.push(TestReport::within_relative("clt/variance", n, var, law.variance(), 0.1));

    let (mean, se) = mean_and_se(&z);
    reports.push(TestReport::within_se("clt/mean", n, mean, se, 0.0));

    let trace: Vec<f64> = (0..grid.len())
        .map(|k| z_at(k).iter().map(|v| v.abs().powi(3)).sum::<f64>() / n as f64)
        .collect();
    let tail = &trace[trace.len() - 3..];
    let ratio = tail.iter().cloned().fold(f64::MIN, f64::max) / tail.iter().cloned().fold(f64::MAX, f64::min);
    let mut grid_and_limit = grid.clone();
    grid_and_limit.push(law.third_absolute_moment());
    reports.push(
        TestReport::at_most(
            "clt/third_moment_trace",
            n,
            ratio,
            2.0,
            "max/min of E|Z|^3 over the last three grid times <= 2 (empirical = trace; theoretical = grid times, then the Laplace limit)",
        )
        .with_values(trace, grid_and_limit),
    );
    Ok(reports)
}

/// `E[N_t Ê]` against its closed form over a grid, the quadratic error at
/// the largest time, and the renewal-equation route to `E[N_t E]`.
pub fn moment_experiment(m: &LevyModel64, t_grid: &[f64], delta: f64, opts: &RunOptions) -> Result<Vec<TestReport>> {
    check_delta(m, delta)?;
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let t_max = *grid.last().ok_or(Error::InvalidParameter {
        name: "t_grid",
        reason: "empty".into(),
    })?;
    if grid[0] < 0.0 || !t_max.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: "times must be finite and non-negative".into(),
        });
    }
    let tbl = table_to(m, t_max)?;
    let (a, pp) = (m.alpha(), m.psi_prime_alpha());
    let cfg = TreeSimConfig::new(*m, t_max + delta, grid.clone())?;
    let samples = run_trees(&cfg, opts)?;
    let n = samples.len();
    let e_hat: Vec<f64> = samples.iter().map(|s| estimate_e(s, m)).collect();
    let mut reports = Vec::new();
    for (k, &t) in grid.iter().enumerate() {
        let x: Vec<f64> = samples.iter().zip(&e_hat).map(|(s, e)| s.counts[k] as f64 * e).collect();
        let (mean, se) = mean_and_se(&x);
        reports.push(TestReport::within_se(format!("moments/joint_moment_t={t}"), n, mean, se, tbl.joint_moment_ne(t)));
    }
    let k = grid.len() - 1;
    let growth = (a * t_max).exp();
    let y: Vec<f64> = samples
        .iter()
        .zip(&e_hat)
        .map(|(s, e)| (pp * s.counts[k] as f64 - growth * e).powi(2) / growth)
        .collect();
    let (q, _) = mean_and_se(&y);
    reports.push(
        TestReport::within_relative("moments/quadratic_error", n, q, quadratic_error_limit(m), 0.1)
            .with_values(vec![q], vec![quadratic_error_limit(m), tbl.quadratic_error(t_max)]),
    );

    let numeric = tbl.joint_moment_ne_renewal()?;
    let worst = numeric
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let exact = tbl.joint_moment_ne(tbl.time(j));
            (v - exact).abs() / exact.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    reports.push(TestReport::at_most(
        "moments/renewal_cross_check",
        numeric.len(),
        worst,
        1e-4,
        "max over the grid of |renewal - closed form| / max(1, |closed form|) <= 1e-4",
    ));
    Ok(reports)
}

/// Quadratic error of trees whose ancestor lives for a residual lifetime
/// drawn at level `u`, against `ψ'(α)(2 − ψ'(α))`.
pub fn subtree_moment_experiment(
    m: &LevyModel64,
    u: f64,
    t: f64,
    delta: f64,
    opts: &RunOptions,
) -> Result<Vec<TestReport>> {
    positive("u", u)?;
    positive("t", t)?;
    check_delta(m, delta)?;
    if u < 20.0 / m.alpha() * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter {
            name: "u",
            reason: format!("must be at least 20/alpha = {}", 20.0 / m.alpha()),
        });
    }
    if m.lifespan().is_infinite() {
        return Err(Error::UnsupportedLifespan(m.lifespan().to_string()));
    }
    let (a, b, pp) = (m.alpha(), m.birth_rate(), m.psi_prime_alpha());
    let tbl = table_to(m, u)?;
    let law = Arc::new(OvershootLaw::new(m, &tbl, u, OvershootLaw::DEFAULT_POINTS)?);
    // (α/b)(2 − ψ') · b ∫ e^{−αs} P(Ξ > s) ds for the tabulated law
    let xs: Vec<f64> = (0..=20_000).map(|i| i as f64 * 60.0 / a / 20_000.0).collect();
    let integrand: Vec<f64> = xs.iter().map(|&s| (-a * s).exp() * (1.0 - law.cdf(s))).collect();
    let h = xs[1] - xs[0];
    let integral = h * (integrand.iter().sum::<f64>() - 0.5 * (integrand[0] + integrand[integrand.len() - 1]));
    let general = quadratic_error_limit(m) * b * integral;
    let target = pp * (2.0 - pp);

    let cfg = TreeSimConfig::new(*m, t + delta, vec![t])?.with_root(RootLifespan::Overshoot(law))?;
    let samples = run_trees(&cfg, opts)?;
    let growth = (a * t).exp();
    let y: Vec<f64> = samples
        .iter()
        .map(|s| (pp * s.counts[0] as f64 - growth * estimate_e(s, m)).powi(2) / growth)
        .collect();
    let (q, _) = mean_and_se(&y);
    Ok(vec![
        TestReport::within_relative("subtree/quadratic_error", y.len(), q, target, 0.1)
            .with_values(vec![q], vec![target, general]),
        TestReport::within_relative("subtree/limit_formula", xs.len(), general, target, 1e-3),
    ])
}

/// Residual lifetimes at level `u`: the law of `O_i`, `i ≥ 2`, its
/// normalisation, independence of `O_2` and `O_3`, and the density at
/// [`LARGE_LEVEL`] against its limit.
pub fn overshoot_experiment(m: &LevyModel64, u: f64, opts: &RunOptions) -> Result<Vec<TestReport>> {
    positive("u", u)?;
    if m.lifespan().is_infinite() {
        return Err(Error::UnsupportedLifespan(m.lifespan().to_string()));
    }
    let d = *m.lifespan();
    let tbl = table_to(m, u.max(LARGE_LEVEL))?;
    let law = OvershootLaw::new(m, &tbl, u, OvershootLaw::DEFAULT_POINTS)?;
    let cfg = TreeSimConfig::new(*m, u, vec![])?;
    let residuals = run_replicates(opts.reps, opts.seed, opts.threads, |_, rng| extract_residual_lifetimes(&cfg, rng).residuals)?;
    let later: Vec<f64> = residuals.iter().flat_map(|r| r.iter().skip(1).copied()).collect();
    let mut reports = Vec::new();

    let (stat, p) = match d {
        LifespanDistribution64::Exponential { rate } => ks_test(&later, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })?,
        _ => ks_test(&later, |x| law.cdf(x))?,
    };
    reports.push(TestReport::p_value_test("overshoot/ks_later_residuals", later.len(), stat, p));

    let pairs: Vec<(f64, f64)> = residuals.iter().filter(|r| r.len() >= 3).map(|r| (r[1], r[2])).collect();
    let corr = correlation(&pairs);
    let se = 1.0 / (pairs.len() as f64).sqrt();
    reports.push(TestReport::within_se("overshoot/correlation_o2_o3", pairs.len(), corr, se, 0.0));

    let mass = match d {
        LifespanDistribution64::Deterministic { value } => crate::quad::integrate(
            |x| overshoot_density(m, &tbl, u, x).unwrap_or(f64::NAN),
            (value - u).max(0.0),
            value,
            1e-11,
        ),
        _ => overshoot_tail(m, &tbl, u, 0.0)?,
    };
    reports.push(TestReport::at_most(
        "overshoot/density_normalization",
        1,
        (mass - 1.0).abs(),
        1e-6,
        "|total mass - 1| <= 1e-6",
    ));

    let support = match d {
        LifespanDistribution64::Deterministic { value } => value,
        LifespanDistribution64::Uniform { hi, .. } => hi,
        _ => 4.0 * d.mean(),
    };
    let xs: Vec<f64> = (1..=40).map(|i| support * (i as f64 - 0.5) / 40.0).collect();
    let gap = xs
        .iter()
        .map(|&x| {
            let got = overshoot_density(m, &tbl, LARGE_LEVEL, x)?;
            Ok((got - crate::scale::limit_overshoot_density(m, x)).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    reports.push(TestReport::at_most(
        "overshoot/large_level_limit",
        xs.len(),
        gap,
        1e-4,
        "max over x of |density at u = 20 - limit density| <= 1e-4",
    ));
    Ok(reports)
}

fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn markov() -> LevyModel64 {
        LevyModel64::new(2.0, LifespanDistribution64::exponential(1.0).unwrap()).unwrap()
    }

    #[test]
    fn preconditions_are_enforced() {
        let m = markov();
        let opts = RunOptions::new(10, 1);
        assert!(lln_experiment(&m, 2.0, &opts).is_err());
        assert!(clt_experiment(&m, 2.0, 1.0, &opts).is_err());
        assert!(subtree_moment_experiment(&m, 5.0, 2.0, 6.0, &opts).is_err());
        let yule = LevyModel64::yule(1.0).unwrap();
        assert!(matches!(
            overshoot_experiment(&yule, 2.0, &opts),
            Err(Error::UnsupportedLifespan(_))
        ));
    }

    #[test]
    fn small_marginal_run_is_reproducible() {
        let m = markov();
        let opts = RunOptions::new(2000, 9);
        let a = marginal_experiment(&m, 2.0, &opts).unwrap();
        let b = marginal_experiment(&m, 2.0, &RunOptions { threads: Some(2), ..opts }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn correlation_of_dependent_pairs() {
        let pairs: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((correlation(&pairs) - 1.0).abs() < 1e-12);
    }
}
