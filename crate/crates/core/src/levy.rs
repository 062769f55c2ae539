//! Laplace exponent of the contour process and the Malthusian parameter.
//!
//! With lifespan measure `Λ = b·P_V`,
//!
//! ```text
//! ψ(x)  = x − ∫ (1 − e^{−rx}) Λ(dr) = x − b (1 − E[e^{−xV}])
//! ψ'(x) = 1 − b E[V e^{−xV}]
//! ```
//!
//! `ψ` is convex with `ψ(0) = 0`; in the supercritical regime `b E[V] > 1`
//! it has a unique positive root `α`, the Malthusian parameter.

use crate::error::{Error, Result};
use crate::model::LifespanDistribution;
use crate::Real;

/// Lower end of the root bracket.
const BRACKET_LO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyModel<T> {
    b: T,
    dist: LifespanDistribution<T>,
    alpha: T,
    psi_prime_alpha: T,
}

impl<T: Real> LevyModel<T> {
    /// Builds a supercritical model, solving for `α` and caching `ψ'(α)`.
    pub fn new(b: T, dist: LifespanDistribution<T>) -> Result<Self> {
        if !(b > T::zero() && b.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!("birth rate must be positive and finite, got {b}"),
            });
        }
        let alpha = malthusian_alpha(b, &dist)?;
        let psi_prime_alpha = T::one() - b * dist.tilted_mean(alpha);
        Ok(Self {
            b,
            dist,
            alpha,
            psi_prime_alpha,
        })
    }

    /// Yule process: individuals never die.
    pub fn yule(b: T) -> Result<Self> {
        Self::new(b, LifespanDistribution::Infinite)
    }

    pub fn birth_rate(&self) -> T {
        self.b
    }

    pub fn lifespan(&self) -> &LifespanDistribution<T> {
        &self.dist
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn psi_prime_alpha(&self) -> T {
        self.psi_prime_alpha
    }

    pub fn psi(&self, x: T) -> T {
        psi(self.b, &self.dist, x)
    }

    pub fn psi_prime(&self, x: T) -> T {
        T::one() - self.b * self.dist.tilted_mean(x)
    }

    /// `E[e^{−λV}] − (1 + (ψ(λ) − λ)/b)`; zero up to rounding.
    pub fn laplace_identity_residual(&self, lambda: T) -> T {
        self.dist.laplace(lambda) - (T::one() + (self.psi(lambda) - lambda) / self.b)
    }

    /// `E[e^{−αV}] − (1 − α/b)`; zero up to rounding.
    pub fn malthusian_identity_residual(&self) -> T {
        self.dist.laplace(self.alpha) - (T::one() - self.alpha / self.b)
    }

    /// `P(NonEx) = α / b`.
    pub fn non_extinction_probability(&self) -> T {
        self.alpha / self.b
    }

    /// Mean offspring count `b E[V]`.
    pub fn mean_offspring(&self) -> T {
        self.b * self.dist.mean()
    }
}

fn psi<T: Real>(b: T, dist: &LifespanDistribution<T>, x: T) -> T {
    if x == T::zero() {
        return T::zero();
    }
    x - b * dist.one_minus_laplace(x)
}

/// Largest root of `ψ`. Fails with [`Error::SubcriticalModel`] when
/// `b E[V] <= 1`.
///
/// `ψ(ε) < 0` for small `ε` and `ψ` is convex, so the root is bracketed by
/// doubling an upper end until `ψ > 0` and refined by bisection down to
/// adjacent floating point values.
pub fn malthusian_alpha<T: Real>(b: T, dist: &LifespanDistribution<T>) -> Result<T> {
    let offspring = b * dist.mean();
    if offspring <= T::one() {
        return Err(Error::SubcriticalModel {
            mean_offspring: offspring.as_f64(),
        });
    }
    let f = |x: T| psi(b, dist, x);
    let mut lo = T::lit(BRACKET_LO).max(T::epsilon().sqrt() * T::epsilon().sqrt().sqrt());
    if f(lo) >= T::zero() {
        // barely supercritical; rounding hides the dip below zero
        return Err(Error::SubcriticalModel {
            mean_offspring: offspring.as_f64(),
        });
    }
    let mut hi = T::one();
    while f(hi) <= T::zero() {
        lo = hi;
        hi = hi + hi;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: "no sign change of psi found".into(),
            });
        }
    }
    for _ in 0..2_000 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}
