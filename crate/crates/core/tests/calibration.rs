//! Each test statistic applied to data drawn from its own null law should
//! give p-values that look uniform over many seeds.

use cmj_core::rng::stream;
use cmj_core::verify::stats::{chi_square_geometric, ks_test, ks_two_sample};
use cmj_core::verify::{lln_experiment, marginal_experiment, sample_laplace, LaplaceLaw, RunOptions};
use cmj_core::{LevyModel64, LifespanDistribution64 as Life};
use rand_distr::{Distribution, Exp1, Geometric};

const SEEDS: u64 = 200;
const LEVEL: f64 = 0.001;

fn assert_uniform(name: &str, p: &[f64]) {
    let (d, pv) = ks_test(p, |x| x.clamp(0.0, 1.0)).unwrap();
    assert!(pv > LEVEL, "{name}: p-values not uniform, D = {d}, p = {pv}");
}

fn exp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

#[test]
fn one_sample_ks() {
    let p: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let mut rng = stream(11, s);
            let x: Vec<f64> = (0..500).map(|_| Exp1.sample(&mut rng)).collect();
            ks_test(&x, exp_cdf).unwrap().1
        })
        .collect();
    assert_uniform("ks", &p);
}

#[test]
fn two_sample_ks() {
    let p: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let mut rng = stream(12, s);
            let x: Vec<f64> = (0..400).map(|_| Exp1.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..600).map(|_| Exp1.sample(&mut rng)).collect();
            ks_two_sample(&x, &y).unwrap().1
        })
        .collect();
    assert_uniform("two-sample ks", &p);
}

#[test]
fn laplace_ks() {
    let law = LaplaceLaw::new(1.5).unwrap();
    let p: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let mut rng = stream(13, s);
            let x: Vec<f64> = (0..1000).map(|_| sample_laplace(&law, &mut rng)).collect();
            ks_test(&x, |v| law.cdf(v)).unwrap().1
        })
        .collect();
    assert_uniform("laplace ks", &p);
}

#[test]
fn geometric_chi_square() {
    let q = 0.08;
    let geo = Geometric::new(q).unwrap();
    let p: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let mut rng = stream(14, s);
            let x: Vec<u64> = (0..5000).map(|_| geo.sample(&mut rng) + 1).collect();
            chi_square_geometric(&x, q).unwrap().2
        })
        .collect();
    assert_uniform("geometric chi-square", &p);
}

#[test]
fn marginal_experiment_chi_square() {
    let m = LevyModel64::new(2.0, Life::exponential(1.0).unwrap()).unwrap();
    let p: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let r = marginal_experiment(&m, 2.0, &RunOptions::new(3000, 1000 + s)).unwrap();
            r[0].p_value.unwrap()
        })
        .collect();
    assert_uniform("marginal experiment", &p);
}

#[test]
fn lln_experiment_ks() {
    // N_t is geometric with mean e^t for Yule, so the null is exact up to
    // discreteness of order e^{−t}
    let m = LevyModel64::yule(1.0).unwrap();
    let t = 1000f64.ln();
    let p: Vec<f64> = (0..SEEDS)
        .map(|s| {
            let r = lln_experiment(&m, t, &RunOptions::new(300, 2000 + s)).unwrap();
            r[0].p_value.unwrap()
        })
        .collect();
    assert_uniform("lln experiment", &p);
}
