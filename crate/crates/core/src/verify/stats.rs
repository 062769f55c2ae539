//! Goodness-of-fit statistics.

use crate::error::{Error, Result};
use crate::special::gamma_q;

const KS_MIN_SAMPLES: usize = 10;

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form, fast for small λ
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let sum: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * c).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let sum: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value of a KS distance `d` at effective size `n`, with the
/// usual small-sample correction of the scaling.
pub fn ks_p_value(d: f64, n: f64) -> f64 {
    let sqrt_n = n.sqrt();
    kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// One-sample two-sided Kolmogorov-Smirnov test against a continuous CDF.
/// Returns `(D, p)`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: KS_MIN_SAMPLES,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    Ok((d, ks_p_value(d, nf)))
}

/// Two-sample Kolmogorov-Smirnov test. Ties are handled by stepping both
/// empirical CDFs past equal values together, so discrete data give a
/// conservative p-value. Returns `(D, p)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: s.len(),
                need: KS_MIN_SAMPLES,
            });
        }
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok((d, ks_p_value(d, n * m / (n + m))))
}

/// Pearson chi-square of observed against expected counts. Returns
/// `(statistic, degrees of freedom, p)` with `bins − 1 − fitted` degrees.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> Result<(f64, usize, f64)> {
    if observed.len() != expected.len() || observed.len() < fitted + 2 {
        return Err(Error::TooFewSamples {
            got: observed.len(),
            need: fitted + 2,
        });
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let dof = observed.len() - 1 - fitted;
    Ok((stat, dof, gamma_q(dof as f64 / 2.0, stat / 2.0)))
}

/// Chi-square of positive counts against the geometric law
/// `P(N = k) = p (1 − p)^{k − 1}`, `k ≥ 1`. Bins run over `k = 1, 2, …` while
/// both the bin and the remaining tail expect at least 5 observations; the
/// tail is pooled into the last bin.
pub fn chi_square_geometric(values: &[u64], p: f64) -> Result<(f64, usize, f64)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("success probability must lie in (0, 1], got {p}"),
        });
    }
    let n = values.len() as f64;
    let q = 1.0 - p;
    let mut expected = Vec::new();
    let mut tail = 1.0;
    let mut k = 1u64;
    loop {
        let e = n * p * q.powf((k - 1) as f64);
        let rest = n * tail - e;
        if e < 5.0 || rest < 5.0 {
            break;
        }
        expected.push(e);
        tail -= p * q.powf((k - 1) as f64);
        k += 1;
    }
    // last bin: k and above
    expected.push(n * tail.max(0.0));
    let last = expected.len() as u64;
    let mut observed = vec![0.0; expected.len()];
    for &v in values {
        if v == 0 {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "geometric samples must be positive".into(),
            });
        }
        observed[(v.min(last) - 1) as usize] += 1.0;
    }
    chi_square(&observed, &expected, 0)
}

/// Sample mean and its standard error.
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance and the standard error of that estimate from the
/// fourth central moment.
pub fn variance_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Exp1};

    fn exp_cdf(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x).exp_m1()
        }
    }

    #[test]
    fn kolmogorov_tail_values() {
        // both series agree where they meet
        let c = 1.18;
        let lo = {
            let k = std::f64::consts::PI.powi(2) / (8.0 * c * c);
            1.0 - (2.0 * std::f64::consts::PI).sqrt() / c * (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * k).exp()).sum::<f64>()
        };
        assert_relative_eq!(lo, kolmogorov_survival(c), max_relative = 1e-10);
        // standard critical values
        assert_relative_eq!(kolmogorov_survival(1.3581), 0.05, epsilon = 1e-4);
        assert_relative_eq!(kolmogorov_survival(1.6276), 0.01, epsilon = 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn quantile_samples_give_half_step_distance() {
        let n = 200;
        let xs: Vec<f64> = (1..=n).map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln()).collect();
        let (d, p) = ks_test(&xs, exp_cdf).unwrap();
        assert_relative_eq!(d, 0.5 / n as f64, max_relative = 1e-9);
        assert!(p > 0.99);
    }

    #[test]
    fn shifted_samples_are_rejected() {
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(1);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                e + 3.0
            })
            .collect();
        let (_, p) = ks_test(&xs, exp_cdf).unwrap();
        assert!(p < 1e-6);
    }

    #[test]
    fn ks_needs_ten_samples() {
        assert!(matches!(ks_test(&[1.0; 9], exp_cdf), Err(Error::TooFewSamples { got: 9, need: 10 })));
    }

    #[test]
    fn small_samples_rarely_reject() {
        let mut rejected = 0;
        for seed in 0..1000 {
            let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
            let xs: Vec<f64> = (0..10).map(|_| Exp1.sample(&mut rng)).collect();
            if ks_test(&xs, exp_cdf).unwrap().1 <= 0.001 {
                rejected += 1;
            }
        }
        assert!(rejected <= 1, "{rejected}");
    }

    #[test]
    fn two_sample_same_law_and_shift() {
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(3);
        let a: Vec<f64> = (0..5000).map(|_| Exp1.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| Exp1.sample(&mut rng)).collect();
        assert!(ks_two_sample(&a, &b).unwrap().1 > 0.01);
        let c: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        assert!(ks_two_sample(&a, &c).unwrap().1 < 1e-6);
        let (d, _) = ks_two_sample(&a, &a).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn geometric_chi_square() {
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(4);
        let p = 0.05;
        let geo = rand_distr::Geometric::new(p).unwrap();
        let xs: Vec<u64> = (0..20_000).map(|_| geo.sample(&mut rng) + 1).collect();
        let (_, dof, pv) = chi_square_geometric(&xs, p).unwrap();
        assert!(dof > 20);
        assert!(pv > 0.001);
        let (_, _, bad) = chi_square_geometric(&xs, 0.06).unwrap();
        assert!(bad < 1e-6);
        assert!(chi_square_geometric(&[0, 1, 2], 0.5).is_err());
    }

    #[test]
    fn chi_square_of_exact_counts_is_zero() {
        let (s, dof, p) = chi_square(&[10.0, 20.0, 30.0], &[10.0, 20.0, 30.0], 0).unwrap();
        assert_eq!((s, dof), (0.0, 2));
        assert_relative_eq!(p, 1.0);
    }

    #[test]
    fn moments_of_uniforms() {
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(5);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 0.5).abs() < 4.0 * se);
        let (v, vse) = variance_and_se(&xs);
        assert!((v - 1.0 / 12.0).abs() < 4.0 * vse);
    }
}
