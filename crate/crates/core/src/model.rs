//! Lifetime laws `P_V`.
//!
//! The lifespan measure `Λ = b·P_V` is never built on its own; wherever it
//! appears the birth rate `b` lives in [`crate::LevyModel`] and the law here.
//! An infinite lifetime (the Yule case `P_V = δ_∞`) is represented by
//! `T::infinity()`, which compares above every finite time.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::special::{gamma_p, gamma_q, ln_gamma};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LifespanDistribution<T> {
    Exponential { rate: T },
    Deterministic { value: T },
    Uniform { lo: T, hi: T },
    Gamma { shape: T, scale: T },
    /// Individuals never die.
    Infinite,
}

impl<T: Real> LifespanDistribution<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn deterministic(value: T) -> Result<Self> {
        Self::Deterministic { value }.validated()
    }

    pub fn uniform(lo: T, hi: T) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn gamma(shape: T, scale: T) -> Result<Self> {
        Self::Gamma { shape, scale }.validated()
    }

    pub fn infinite() -> Self {
        Self::Infinite
    }

    fn validated(self) -> Result<Self> {
        let pos = |x: T| x > T::zero() && x.is_finite();
        let ok = match self {
            Self::Exponential { rate } => pos(rate),
            Self::Deterministic { value } => pos(value),
            Self::Uniform { lo, hi } => lo >= T::zero() && hi.is_finite() && hi > lo,
            Self::Gamma { shape, scale } => pos(shape) && pos(scale),
            Self::Infinite => true,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidDistribution(format!("{self}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// `P(V > s)`.
    pub fn survival(&self, s: T) -> T {
        if s < T::zero() {
            return T::one();
        }
        match *self {
            Self::Exponential { rate } => (-rate * s).exp(),
            Self::Deterministic { value } => {
                if s < value {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Uniform { lo, hi } => ((hi - s) / (hi - lo)).max(T::zero()).min(T::one()),
            Self::Gamma { shape, scale } => gamma_q(shape, s / scale),
            Self::Infinite => T::one(),
        }
    }

    /// `P(V <= s)`.
    pub fn cdf(&self, s: T) -> T {
        match *self {
            Self::Exponential { rate } if s > T::zero() => -(-rate * s).exp_m1(),
            Self::Gamma { shape, scale } if s > T::zero() => gamma_p(shape, s / scale),
            _ => T::one() - self.survival(s),
        }
    }

    /// Lebesgue density, when the law has one.
    pub fn density(&self, x: T) -> Option<T> {
        let zero = T::zero();
        match *self {
            Self::Exponential { rate } => Some(if x < zero { zero } else { rate * (-rate * x).exp() }),
            Self::Uniform { lo, hi } => Some(if x < lo || x > hi { zero } else { T::one() / (hi - lo) }),
            Self::Gamma { shape, scale } => Some(if x < zero {
                zero
            } else if x == zero {
                if shape < T::one() {
                    T::infinity()
                } else if shape == T::one() {
                    T::one() / scale
                } else {
                    zero
                }
            } else {
                ((shape - T::one()) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()).exp()
            }),
            Self::Deterministic { .. } | Self::Infinite => None,
        }
    }

    /// `E[V]`, `+∞` for the infinite law.
    pub fn mean(&self) -> T {
        match *self {
            Self::Exponential { rate } => rate.recip(),
            Self::Deterministic { value } => value,
            Self::Uniform { lo, hi } => T::lit(0.5) * (lo + hi),
            Self::Gamma { shape, scale } => shape * scale,
            Self::Infinite => T::infinity(),
        }
    }

    /// `E[e^{-λV}]`.
    pub fn laplace(&self, lambda: T) -> T {
        if lambda == T::zero() {
            return T::one();
        }
        self.partial_laplace(lambda, T::zero())
    }

    /// `1 - E[e^{-λV}]`, without the cancellation of the naive form near 0.
    pub fn one_minus_laplace(&self, lambda: T) -> T {
        if lambda <= T::zero() {
            return T::zero();
        }
        match *self {
            Self::Exponential { rate } => lambda / (lambda + rate),
            Self::Deterministic { value } => -(-lambda * value).exp_m1(),
            Self::Uniform { lo, hi } => {
                let y = lambda * (hi - lo);
                -(-lambda * lo).exp_m1() + (-lambda * lo).exp() * one_minus_exprel(y)
            }
            Self::Gamma { shape, scale } => -(-shape * (scale * lambda).ln_1p()).exp_m1(),
            Self::Infinite => T::one(),
        }
    }

    /// `E[e^{-λV} 1{V > r}]`.
    pub fn partial_laplace(&self, lambda: T, r: T) -> T {
        self.tilted_moment(0, lambda, r.max(T::zero()))
    }

    /// `E[V e^{-xV}]`; zero for the infinite law when `x > 0`.
    pub fn tilted_mean(&self, x: T) -> T {
        self.tilted_moment(1, x, T::zero())
    }

    /// `E[e^{-λV} (V - r)^+]`.
    pub fn tilted_excess(&self, lambda: T, r: T) -> T {
        let r = r.max(T::zero());
        if self.is_infinite() {
            return if lambda > T::zero() { T::zero() } else { T::infinity() };
        }
        (self.tilted_moment(1, lambda, r) - r * self.tilted_moment(0, lambda, r)).max(T::zero())
    }

    /// `E[V 1{V <= s}]`.
    pub fn partial_mean_below(&self, s: T) -> T {
        let zero = T::zero();
        if s <= zero {
            return zero;
        }
        match *self {
            Self::Exponential { rate } => {
                let x = rate * s;
                (-(-x).exp_m1() - x * (-x).exp()) / rate
            }
            Self::Deterministic { value } => {
                if value <= s {
                    value
                } else {
                    zero
                }
            }
            Self::Uniform { lo, hi } => {
                let top = s.min(hi);
                if top <= lo {
                    zero
                } else {
                    (top * top - lo * lo) / (T::lit(2.0) * (hi - lo))
                }
            }
            Self::Gamma { shape, scale } => shape * scale * gamma_p(shape + T::one(), s / scale),
            Self::Infinite => zero,
        }
    }

    /// `E[V^j e^{-λV} 1{V > r}]` for `j ∈ {0, 1}`, `λ >= 0`, `r >= 0`.
    fn tilted_moment(&self, j: u8, lambda: T, r: T) -> T {
        let zero = T::zero();
        let one = T::one();
        match *self {
            Self::Exponential { rate } => {
                let c = lambda + rate;
                let base = rate * (-c * r).exp() / c;
                if j == 0 {
                    base
                } else {
                    base * (r + c.recip())
                }
            }
            Self::Deterministic { value } => {
                if value > r {
                    let e = (-lambda * value).exp();
                    if j == 0 {
                        e
                    } else {
                        value * e
                    }
                } else {
                    zero
                }
            }
            Self::Uniform { lo, hi } => {
                let a = r.max(lo);
                if a >= hi {
                    return zero;
                }
                let width = hi - lo;
                let len = hi - a;
                if lambda == zero {
                    return if j == 0 {
                        len / width
                    } else {
                        (hi * hi - a * a) / (T::lit(2.0) * width)
                    };
                }
                let y = lambda * len;
                let ea = (-lambda * a).exp();
                // ∫_a^hi e^{-λv} dv and ∫_a^hi v e^{-λv} dv
                let i0 = ea * len * exprel(y);
                if j == 0 {
                    i0 / width
                } else {
                    let i1 = a * i0 + ea * len * len * gamma2_rel(y);
                    i1 / width
                }
            }
            Self::Gamma { shape, scale } => {
                let s = one + scale * lambda;
                let x = r * s / scale;
                if j == 0 {
                    (-shape * s.ln()).exp() * gamma_q(shape, x)
                } else {
                    shape * scale * (-(shape + one) * s.ln()).exp() * gamma_q(shape + one, x)
                }
            }
            Self::Infinite => {
                if lambda > zero {
                    zero
                } else if j == 0 {
                    one
                } else {
                    T::infinity()
                }
            }
        }
    }

    /// Draw in `f64`, converted back to `T`. Infinite laws return `+∞`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::lit(LifetimeSampler::new(self).sample(rng))
    }

    /// A prepared `f64` sampler for hot simulation loops.
    pub fn sampler(&self) -> LifetimeSampler {
        LifetimeSampler::new(self)
    }
}

/// `(1 - e^{-y}) / y`.
fn exprel<T: Real>(y: T) -> T {
    if y.abs() < T::lit(1e-3) {
        T::one() - y / T::lit(2.0) + y * y / T::lit(6.0) - y * y * y / T::lit(24.0)
    } else {
        -(-y).exp_m1() / y
    }
}

/// `1 - (1 - e^{-y}) / y`.
fn one_minus_exprel<T: Real>(y: T) -> T {
    if y.abs() < T::lit(0.1) {
        // Σ_{n>=1} (-1)^{n+1} y^n / (n+1)!
        let mut term = T::one();
        let mut sum = T::zero();
        for n in 1..16 {
            term = term * y / T::lit((n + 1) as f64);
            if n % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        sum
    } else {
        T::one() - exprel(y)
    }
}

/// `(1 - e^{-y}(1 + y)) / y^2`, the normalized `∫_0^1 s e^{-ys} ds`.
fn gamma2_rel<T: Real>(y: T) -> T {
    if y.abs() < T::lit(0.1) {
        // Σ_{n>=0} (-y)^n / (n! (n + 2))
        let mut fact = T::one();
        let mut pow = T::one();
        let mut sum = T::zero();
        for n in 0..16 {
            if n > 0 {
                fact *= T::lit(n as f64);
                pow *= -y;
            }
            sum += pow / (fact * T::lit((n + 2) as f64));
        }
        sum
    } else {
        (-(-y).exp_m1() - y * (-y).exp()) / (y * y)
    }
}

/// Pre-built `f64` sampler for a lifetime law.
#[derive(Debug, Clone)]
pub enum LifetimeSampler {
    Exponential(f64),
    Deterministic(f64),
    Uniform(f64, f64),
    Gamma(rand_distr::Gamma<f64>),
    Infinite,
}

impl LifetimeSampler {
    pub fn new<T: Real>(dist: &LifespanDistribution<T>) -> Self {
        match *dist {
            LifespanDistribution::Exponential { rate } => Self::Exponential(rate.as_f64().recip()),
            LifespanDistribution::Deterministic { value } => Self::Deterministic(value.as_f64()),
            LifespanDistribution::Uniform { lo, hi } => Self::Uniform(lo.as_f64(), (hi - lo).as_f64()),
            LifespanDistribution::Gamma { shape, scale } => Self::Gamma(
                rand_distr::Gamma::new(shape.as_f64(), scale.as_f64()).expect("validated gamma parameters"),
            ),
            LifespanDistribution::Infinite => Self::Infinite,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential(mean) => {
                let e: f64 = Exp1.sample(rng);
                e * mean
            }
            Self::Deterministic(v) => *v,
            Self::Uniform(lo, width) => lo + width * rng.random::<f64>(),
            Self::Gamma(g) => g.sample(rng),
            Self::Infinite => f64::INFINITY,
        }
    }
}

impl<T: Real> fmt::Display for LifespanDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Deterministic { value } => write!(f, "det:{value}"),
            Self::Uniform { lo, hi } => write!(f, "unif:{lo},{hi}"),
            Self::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

impl<T: Real> FromStr for LifespanDistribution<T> {
    type Err = Error;

    /// `exp:<d>`, `det:<v0>`, `unif:<lo>,<hi>`, `gamma:<k>,<theta>` or `inf`.
    fn from_str(spec: &str) -> Result<Self> {
        let malformed = |reason: &str| Error::MalformedSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        if spec == "inf" {
            return Ok(Self::Infinite);
        }
        let (tag, args) = spec.split_once(':').ok_or_else(|| malformed("expected `<kind>:<params>`"))?;
        let params = args
            .split(',')
            .map(|p| {
                p.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| malformed(&format!("`{p}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(malformed(&format!("`{tag}` takes {n} parameter(s), got {}", params.len())))
            }
        };
        let p = |i: usize| T::lit(params[i]);
        let built = match tag {
            "exp" => {
                arity(1)?;
                Self::exponential(p(0))
            }
            "det" => {
                arity(1)?;
                Self::deterministic(p(0))
            }
            "unif" => {
                arity(2)?;
                Self::uniform(p(0), p(1))
            }
            "gamma" => {
                arity(2)?;
                Self::gamma(p(0), p(1))
            }
            _ => return Err(malformed(&format!("unknown kind `{tag}`"))),
        };
        built.map_err(|_| malformed("parameters out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_to_infinity};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    type D = LifespanDistribution<f64>;

    fn all() -> Vec<D> {
        vec![
            D::exponential(1.3).unwrap(),
            D::deterministic(2.0).unwrap(),
            D::uniform(0.5, 2.5).unwrap(),
            D::gamma(0.6, 1.7).unwrap(),
            D::gamma(3.0, 0.5).unwrap(),
            D::Infinite,
        ]
    }

    #[test]
    fn survival_examples() {
        let e = D::exponential(1.0).unwrap();
        assert_relative_eq!(e.survival(2.0_f64.ln()), 0.5, epsilon = 1e-15);
        let d = D::deterministic(2.0).unwrap();
        assert_eq!(d.survival(1.0), 1.0);
        assert_eq!(d.survival(3.0), 0.0);
        assert_eq!(d.survival(2.0), 0.0);
        assert_eq!(D::Infinite.survival(1e9), 1.0);
    }

    #[test]
    fn survival_is_monotone_in_unit_interval() {
        for d in all() {
            assert_eq!(d.survival(0.0), 1.0, "{d}");
            let mut prev = 1.0;
            for k in 0..400 {
                let s = d.survival(k as f64 * 0.025);
                assert!((0.0..=1.0).contains(&s));
                assert!(s <= prev + 1e-15, "{d} not monotone at {k}");
                prev = s;
            }
        }
    }

    #[test]
    fn partial_laplace_examples() {
        let e = D::exponential(1.0).unwrap();
        assert_relative_eq!(e.partial_laplace(1.0, 0.0), 0.5, epsilon = 1e-15);
        // closed form d e^{-(λ+d) r} / (λ + d)
        assert_relative_eq!(e.partial_laplace(1.0, 0.7), (-1.4_f64).exp() / 2.0, epsilon = 1e-15);
        assert_eq!(D::Infinite.partial_laplace(1.0, 0.0), 0.0);
        for d in all() {
            for &l in &[0.1, 1.0, 4.0] {
                assert_eq!(d.laplace(l), d.partial_laplace(l, 0.0));
            }
        }
    }

    #[test]
    fn mean_examples() {
        assert_eq!(D::exponential(1.0).unwrap().mean(), 1.0);
        assert!(D::Infinite.mean().is_infinite());
        assert_eq!(D::uniform(0.0, 2.0).unwrap().mean(), 1.0);
    }

    #[test]
    fn mean_matches_integrated_survival() {
        for d in all().into_iter().filter(|d| !d.is_infinite()) {
            // split at the support edges so the kinks sit on panel boundaries
            let integral = match d {
                D::Deterministic { value } => integrate(|s| d.survival(s), 0.0, value, 1e-12),
                D::Uniform { lo, hi } => {
                    integrate(|s| d.survival(s), 0.0, lo, 1e-12) + integrate(|s| d.survival(s), lo, hi, 1e-12)
                }
                _ => integrate(|s| d.survival(s), 0.0, 1.0, 1e-12) + integrate_to_infinity(|s| d.survival(s), 1.0, 1e-12),
            };
            assert_relative_eq!(integral, d.mean(), epsilon = 1e-8);
        }
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        for d in all() {
            let Some(_) = d.density(1.0) else { continue };
            let singular = matches!(d, D::Gamma { shape, .. } if shape < 1.0);
            let f = |v: f64| d.density(v).unwrap();
            for &lambda in &[0.3, 1.0, 2.7] {
                for &r in &[0.0, 0.4, 1.1, 3.0] {
                    if singular && r == 0.0 {
                        continue;
                    }
                    let integral = |g: &dyn Fn(f64) -> f64| match d {
                        D::Uniform { lo, hi } => {
                            let a = lo.max(r);
                            if a >= hi {
                                0.0
                            } else {
                                integrate(g, a, hi, 1e-13)
                            }
                        }
                        _ => integrate(g, r, r + 1.0, 1e-13) + integrate_to_infinity(g, r + 1.0, 1e-13),
                    };
                    let m0 = integral(&|v| (-lambda * v).exp() * f(v));
                    let m1 = integral(&|v| v * (-lambda * v).exp() * f(v));
                    assert_relative_eq!(d.partial_laplace(lambda, r), m0, epsilon = 1e-10);
                    assert_relative_eq!(d.tilted_excess(lambda, r), m1 - r * m0, epsilon = 1e-10);
                    if r == 0.0 {
                        assert_relative_eq!(d.tilted_mean(lambda), m1, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_mean_below_matches_mean_at_infinity() {
        for d in all().into_iter().filter(|d| !d.is_infinite()) {
            assert_relative_eq!(d.partial_mean_below(1e3), d.mean(), epsilon = 1e-10);
            // E[V 1{V<=s}] + E[V 1{V>s}] = E[V]
            for &s in &[0.3, 1.0, 2.2] {
                assert_relative_eq!(
                    d.partial_mean_below(s) + d.tilted_moment(1, 0.0, s),
                    d.mean(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn one_minus_laplace_is_stable() {
        for d in all() {
            for &l in &[1e-9, 1e-4, 0.5, 3.0] {
                let direct = 1.0 - d.laplace(l);
                let stable = d.one_minus_laplace(l);
                assert!((direct - stable).abs() < 1e-12, "{d} at {l}: {direct} vs {stable}");
            }
        }
        let u = D::uniform(1.0, 3.0).unwrap();
        // 1 - L(λ) ≈ λ E[V] for tiny λ
        assert_relative_eq!(u.one_minus_laplace(1e-10), 2e-10, max_relative = 1e-8);
    }

    #[test]
    fn partial_laplace_bounded_by_laplace_and_survival() {
        for d in all() {
            for &l in &[0.2, 1.0, 5.0] {
                let mut prev = f64::INFINITY;
                for k in 0..60 {
                    let r = 0.1 * k as f64;
                    let p = d.partial_laplace(l, r);
                    assert!(p <= d.laplace(l).min(d.survival(r)) + 1e-15);
                    assert!(p <= prev + 1e-15);
                    prev = p;
                }
                if !d.is_infinite() {
                    assert!(d.partial_laplace(l, 200.0) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampling_examples() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let det = D::deterministic(2.0).unwrap();
        assert!((0..100).all(|_| det.sample(&mut rng) == 2.0));
        let u = D::uniform(1.0, 3.0).unwrap().sampler();
        assert!((0..100_000).map(|_| u.sample(&mut rng)).all(|x| (1.0..=3.0).contains(&x)));
        assert!(D::Infinite.sample(&mut rng).is_infinite());
        // 10^6 draws: sd 1/1000, so 0.004 is four standard errors
        let e = D::exponential(1.0).unwrap().sampler();
        let n = 1_000_000;
        let mean = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.004, "{mean}");
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        for s in ["exp:2", "det:0.5", "unif:0,2", "gamma:2.5,0.4", "inf"] {
            let d: D = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        for bad in ["exp:0", "exp:-1", "exp", "exp:1,2", "unif:2,1", "gamma:1", "foo:1", "exp:nan", " exp:1", "det:"] {
            assert!(bad.parse::<D>().is_err(), "{bad}");
        }
    }

    #[test]
    fn single_precision_laplace() {
        let d = LifespanDistribution::<f32>::exponential(1.0).unwrap();
        assert!((d.partial_laplace(1.0, 0.0) - 0.5).abs() < 1e-7);
    }
}
