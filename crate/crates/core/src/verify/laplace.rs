use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Centred Laplace law parametrised by its variance `σ²`, i.e. with
/// characteristic function `1/(1 + σ²λ²/2)` and scale `s = sqrt(σ²/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceLaw {
    variance: f64,
}

impl LaplaceLaw {
    pub fn new(variance: f64) -> Result<Self> {
        if variance > 0.0 && variance.is_finite() {
            Ok(Self { variance })
        } else {
            Err(Error::InvalidParameter {
                name: "variance",
                reason: format!("must be positive and finite, got {variance}"),
            })
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn scale(&self) -> f64 {
        (0.5 * self.variance).sqrt()
    }

    pub fn density(&self, x: f64) -> f64 {
        let s = self.scale();
        (-x.abs() / s).exp() / (2.0 * s)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.scale();
        if x < 0.0 {
            0.5 * (x / s).exp()
        } else {
            1.0 - 0.5 * (-x / s).exp()
        }
    }

    pub fn characteristic_function(&self, lambda: f64) -> f64 {
        1.0 / (1.0 + 0.5 * self.variance * lambda * lambda)
    }

    /// `E|X|³ = 6 s³`.
    pub fn third_absolute_moment(&self) -> f64 {
        6.0 * self.scale().powi(3)
    }
}

/// `sqrt(E) · G` with `E ~ Exp(1)` and `G ~ N(0, σ²)`.
pub fn sample_laplace<R: Rng + ?Sized>(law: &LaplaceLaw, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    let g: f64 = StandardNormal.sample(rng);
    e.sqrt() * g * law.variance.sqrt()
}

impl Distribution<f64> for LaplaceLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_laplace(self, rng)
    }
}
