//! Scale function `W` of the contour process and the moment formulas built
//! on it.
//!
//! `W` is characterised by `∫ e^{−λt} W(t) dt = 1/ψ(λ)`. Writing
//! `W(t) = e^{αt}/ψ'(α) − e^{αt}F(t)`, the decay term `F` is the tail of the
//! potential measure of a killed compound Poisson ladder process with jump
//! density `υ(r) = b E[e^{−αV} 1{V > r}]` (total mass `1 − ψ'(α)`).
//! The tilted tail `G(t) = e^{αt}F(t)` solves the proper renewal equation
//!
//! ```text
//! G(t) = ∫_0^t G(t − s) e^{αs} υ(s) ds + e^{αt} Υ(t, ∞) / ψ'(α)
//! ```
//!
//! which is what [`ScaleTable::build`] discretises. `G` stays bounded (it
//! tends to `1/(bE[V] − 1)`), so the table carries absolute accuracy on `G`
//! and relative accuracy on `W`.
//!
//! Renewal equations are marched forward on a uniform grid. The unknown is
//! taken piecewise linear and each grid cell contributes the kernel mass it
//! carries, split between its two end points. With sampled kernels the split
//! is the trapezoid rule; where the kernel's running integrals are known in
//! closed form the cell masses are exact, which keeps atoms of `P_V` and
//! singular lifetime densities from degrading the order.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::model::LifespanDistribution;
use crate::Real;

/// Largest number of grid points a table may allocate.
pub const MAX_GRID_POINTS: usize = 100_000_000;

pub const DEFAULT_STEP: f64 = 1e-3;

/// `F(t) = ∫_0^t F(t − s) γ(s) ds + h(t)` on `t_k = k·step`.
///
/// The kernel is stored as cell masses: `left[j]` and `right[j]` are the
/// parts of `∫_{s_j}^{s_{j+1}} γ` attributed to `s_j` and `s_{j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalProblem<T> {
    left: Vec<T>,
    right: Vec<T>,
    forcing: Vec<T>,
    step: T,
}

impl<T: Real> RenewalProblem<T> {
    /// Kernel density sampled on the grid; trapezoidal cells.
    pub fn new(kernel: Vec<T>, forcing: Vec<T>, step: T) -> Result<Self> {
        check_step(step)?;
        if kernel.len() != forcing.len() || kernel.is_empty() {
            return Err(Error::InconsistentGrid(format!(
                "kernel has {} points, forcing has {}",
                kernel.len(),
                forcing.len()
            )));
        }
        if let Some(k) = kernel.iter().position(|g| !(*g >= T::zero() && g.is_finite())) {
            return Err(Error::InconsistentGrid(format!("kernel density at index {k} is negative or not finite")));
        }
        let half = T::lit(0.5) * step;
        let left = kernel[..kernel.len() - 1].iter().map(|&g| half * g).collect();
        let right = kernel[1..].iter().map(|&g| half * g).collect();
        Self::from_cells(left, right, forcing, step)
    }

    /// Samples `kernel` and `forcing` at `k·step` for `k = 0..=n`, with
    /// `n = ceil(horizon / step)`.
    pub fn from_fns(kernel: impl Fn(T) -> T, forcing: impl Fn(T) -> T, step: T, horizon: T) -> Result<Self> {
        let n = grid_intervals(horizon, step)?;
        let t = |k: usize| T::lit(k as f64) * step;
        Self::new((0..=n).map(|k| kernel(t(k))).collect(), (0..=n).map(|k| forcing(t(k))).collect(), step)
    }

    /// Kernel given by its running integral `Γ(r) = ∫_0^r γ`. Each cell's
    /// mass is exact and split evenly between its end points.
    pub fn from_cumulative(cumulative: impl Fn(T) -> T, forcing: impl Fn(T) -> T, step: T, horizon: T) -> Result<Self> {
        let n = grid_intervals(horizon, step)?;
        let t = |k: usize| T::lit(k as f64) * step;
        let cum: Vec<T> = (0..=n).map(|k| cumulative(t(k))).collect();
        let half = T::lit(0.5);
        let mass: Vec<T> = cum.windows(2).map(|c| (c[1] - c[0]).max(T::zero())).collect();
        let left = mass.iter().map(|&m| half * m).collect();
        let right = mass.iter().map(|&m| half * m).collect();
        Self::from_cells(left, right, (0..=n).map(|k| forcing(t(k))).collect(), step)
    }

    /// Cells given directly; `left` and `right` have one entry fewer than
    /// `forcing`.
    pub fn from_cells(left: Vec<T>, right: Vec<T>, forcing: Vec<T>, step: T) -> Result<Self> {
        check_step(step)?;
        if forcing.is_empty() || left.len() + 1 != forcing.len() || right.len() != left.len() {
            return Err(Error::InconsistentGrid(format!(
                "{} left and {} right cells for {} grid points",
                left.len(),
                right.len(),
                forcing.len()
            )));
        }
        if let Some(k) = left.iter().chain(&right).position(|g| !(*g >= T::zero() && g.is_finite())) {
            return Err(Error::InconsistentGrid(format!("cell weight {k} is negative or not finite")));
        }
        Ok(Self { left, right, forcing, step })
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.forcing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forcing.is_empty()
    }

    /// Kernel mass captured by the grid.
    pub fn kernel_mass(&self) -> T {
        self.left.iter().chain(&self.right).fold(T::zero(), |a, &x| a + x)
    }
}

fn check_step<T: Real>(step: T) -> Result<()> {
    if step > T::zero() && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InconsistentGrid(format!("step must be positive, got {step}")))
    }
}

/// Forward marching: the value at `t_k` depends on the earlier values and on
/// itself through the first cell, which is solved for explicitly.
pub fn solve_renewal<T: Real>(p: &RenewalProblem<T>) -> Vec<T> {
    let n = p.forcing.len();
    let mut sol = Vec::with_capacity(n);
    sol.push(p.forcing[0]);
    if n == 1 {
        return sol;
    }
    // weight[i] multiplies F(t_k − s_i) for 0 < i < k
    let weight: Vec<T> = (0..n - 1)
        .map(|i| if i == 0 { T::zero() } else { p.left[i] + p.right[i - 1] })
        .collect();
    let diag = T::one() - p.left[0];
    for k in 1..n {
        let inner = weight[1..k]
            .iter()
            .zip(sol[1..k].iter().rev())
            .fold(T::zero(), |acc, (&g, &f)| acc + g * f);
        sol.push((p.forcing[k] + inner + p.right[k - 1] * sol[0]) / diag);
    }
    sol
}

fn grid_intervals<T: Real>(horizon: T, step: T) -> Result<usize> {
    if !(step > T::zero() && step.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: format!("must be positive, got {step}"),
        });
    }
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_max",
            reason: format!("must be positive, got {horizon}"),
        });
    }
    let ratio = (horizon / step).as_f64();
    let n = (ratio - 1e-9).ceil().max(1.0);
    if n + 1.0 > MAX_GRID_POINTS as f64 {
        return Err(Error::GridTooFine {
            points: if n.is_finite() { n as usize + 1 } else { usize::MAX },
            limit: MAX_GRID_POINTS,
        });
    }
    Ok(n as usize)
}

/// Cells with exact mass and exact first moment, from `Γ(r) = ∫_0^r γ` and
/// the cell integrals `∫_{s_j}^{s_{j+1}} Γ`.
fn exact_cells<T: Real>(cum: &[T], cum_integral: &[T], h: T) -> (Vec<T>, Vec<T>) {
    let mut left = Vec::with_capacity(cum.len() - 1);
    let mut right = Vec::with_capacity(cum.len() - 1);
    for j in 0..cum.len() - 1 {
        let mass = (cum[j + 1] - cum[j]).max(T::zero());
        // ∫ (s − s_j) γ(s) ds = h Γ(s_{j+1}) − ∫ Γ
        let lever = (cum[j + 1] - cum_integral[j] / h).max(T::zero()).min(mass);
        left.push(mass - lever);
        right.push(lever);
    }
    (left, right)
}

/// Grid index of the atom of a deterministic law, when it sits on the grid.
fn atom_index<T: Real>(dist: &LifespanDistribution<T>, h: T, points: usize) -> Option<usize> {
    match *dist {
        LifespanDistribution::Deterministic { value } => {
            let x = (value / h).as_f64();
            let k = x.round();
            ((x - k).abs() <= 1e-6 && (k as usize) < points).then_some(k as usize)
        }
        _ => None,
    }
}

/// Density of the ladder jump measure `Υ(dr) = b E[e^{−αV} 1{V > r}] dr`.
pub fn upsilon_density<T: Real>(m: &LevyModel<T>, r: T) -> T {
    m.birth_rate() * m.lifespan().partial_laplace(m.alpha(), r)
}

/// `Υ(r, ∞) = b E[e^{−αV} (V − r)^+]`.
pub fn upsilon_tail<T: Real>(m: &LevyModel<T>, r: T) -> T {
    m.birth_rate() * m.lifespan().tilted_excess(m.alpha(), r)
}

/// `μ = lim e^{αt} F(t)`: `1/(bE[V] − 1)` for integrable lifetimes, else 0.
pub fn asymptotic_mu<T: Real>(m: &LevyModel<T>) -> T {
    let mean = m.lifespan().mean();
    if mean.is_finite() {
        T::one() / (m.birth_rate() * mean - T::one())
    } else {
        T::zero()
    }
}

/// Variance `2 − ψ'(α)` of the Laplace limit of the normalised error.
pub fn clt_variance<T: Real>(m: &LevyModel<T>) -> T {
    T::lit(2.0) - m.psi_prime_alpha()
}

/// `lim e^{−αt} E[(ψ'(α)N_t − e^{αt}E)²] = (α/b)(2 − ψ'(α))`.
pub fn quadratic_error_limit<T: Real>(m: &LevyModel<T>) -> T {
    m.non_extinction_probability() * clt_variance(m)
}

/// `e^{αs} E[e^{−αV}; V > s]`, guarded against `∞ · 0`.
fn tilted_partial_laplace<T: Real>(m: &LevyModel<T>, s: T) -> T {
    let p = m.lifespan().partial_laplace(m.alpha(), s);
    if p == T::zero() {
        T::zero()
    } else {
        (m.alpha() * s).exp() * p
    }
}

/// Limit tail `lim_u P_u(O_2 > s) = ∫ e^{−αy} P(V > s + y) b dy` of the
/// residual lifetime at a high level, in closed form
/// `b (P(V > s) − e^{αs} E[e^{−αV}; V > s]) / α`.
pub fn limit_overshoot_tail<T: Real>(m: &LevyModel<T>, s: T) -> T {
    let d = m.lifespan();
    if d.is_infinite() {
        return T::zero();
    }
    if s <= T::zero() {
        return T::one();
    }
    (m.birth_rate() * (d.survival(s) - tilted_partial_laplace(m, s)) / m.alpha()).max(T::zero())
}

/// Density `b e^{αx} E[e^{−αV}; V > x]` of the limit residual lifetime law.
pub fn limit_overshoot_density<T: Real>(m: &LevyModel<T>, x: T) -> T {
    if m.lifespan().is_infinite() || x < T::zero() {
        return T::zero();
    }
    m.birth_rate() * tilted_partial_laplace(m, x)
}

/// `U[0, t]` for the ladder potential measure by solving
/// `U(t) = ∫_0^t U(t − u) υ(u) du + 1` directly. Equals `e^{−αt} W(t)`;
/// kept as an independent route to the table.
pub fn potential_measure<T: Real>(m: &LevyModel<T>, t_max: T, step: T) -> Result<Vec<T>> {
    let (a, b) = (m.alpha(), m.birth_rate());
    let d = *m.lifespan();
    // ∫_0^r υ = b E[e^{−αV} min(V, r)]
    let cum = |r: T| {
        if d.is_infinite() {
            T::zero()
        } else {
            b * (d.tilted_mean(a) - d.tilted_excess(a, r))
        }
    };
    let p = RenewalProblem::from_cumulative(cum, |_| T::one(), step, t_max)?;
    Ok(solve_renewal(&p))
}

static EXTRAPOLATION_WARNED: AtomicBool = AtomicBool::new(false);

fn warn_extrapolation(t: f64, t_max: f64) {
    if !EXTRAPOLATION_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("scale table queried at t = {t} beyond its horizon {t_max}; using the asymptotic form of W");
    }
}

/// `W` and `W ⋆ P_V` on the grid `t_k = k·step`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct ScaleTable<T> {
    model: LevyModel<T>,
    step: T,
    t_max: T,
    w: Vec<T>,
    wconv: Vec<T>,
    tilted_tail: Vec<T>,
}

impl<T: Real> ScaleTable<T> {
    /// The horizon is rounded up to a whole number of steps.
    pub fn build(model: &LevyModel<T>, t_max: T, step: T) -> Result<Self> {
        let n = grid_intervals(t_max, step)?;
        let m = *model;
        let (a, b, pp) = (m.alpha(), m.birth_rate(), m.psi_prime_alpha());
        let dist = *m.lifespan();
        let t_at = |k: usize| T::lit(k as f64) * step;

        let tilted_tail = if dist.is_infinite() {
            vec![T::zero(); n + 1]
        } else {
            // kernel e^{αs}υ(s), a probability density; its running integral
            // is 1 minus the limit overshoot tail
            let cum: Vec<T> = (0..=n).map(|k| T::one() - limit_overshoot_tail(&m, t_at(k))).collect();
            // ∫ over a cell of the running integral, from
            // ∫_0^r Γ = r − (b/α) E[min(V, r)] + Γ(r)/α
            let min_mean: Vec<T> = (0..=n)
                .map(|k| {
                    let s = t_at(k);
                    dist.partial_mean_below(s) + s * dist.survival(s)
                })
                .collect();
            let cum_integral: Vec<T> = (0..n)
                .map(|j| step - b / a * (min_mean[j + 1] - min_mean[j]) + (cum[j + 1] - cum[j]) / a)
                .collect();
            let (left, right) = exact_cells(&cum, &cum_integral, step);
            let forcing: Vec<T> = (0..=n)
                .map(|k| {
                    let t = t_at(k);
                    let tail = dist.tilted_excess(a, t);
                    if tail == T::zero() {
                        T::zero()
                    } else {
                        (a * t).exp() * b * tail / pp
                    }
                })
                .collect();
            solve_renewal(&RenewalProblem::from_cells(left, right, forcing, step)?)
        };

        let w: Vec<T> = tilted_tail
            .iter()
            .enumerate()
            .map(|(k, &g)| (a * t_at(k)).exp() / pp - g)
            .collect();
        let wconv = convolve_with_law(&w, &dist, step);
        Ok(Self {
            model: m,
            step,
            t_max: t_at(n),
            w,
            wconv,
            tilted_tail,
        })
    }

    pub fn model(&self) -> &LevyModel<T> {
        &self.model
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn time(&self, k: usize) -> T {
        T::lit(k as f64) * self.step
    }

    /// Grid values `W(k·step)`.
    pub fn w_values(&self) -> &[T] {
        &self.w
    }

    /// Grid values `(W ⋆ P_V)(k·step)`.
    pub fn wconv_values(&self) -> &[T] {
        &self.wconv
    }

    /// Grid values of `e^{αt}F(t) = e^{αt}/ψ'(α) − W(t)`.
    pub fn tilted_tail_values(&self) -> &[T] {
        &self.tilted_tail
    }

    /// Linear interpolation of a grid sequence; `None` beyond the horizon.
    fn interpolate(&self, values: &[T], t: T) -> Option<T> {
        if t < T::zero() {
            return Some(values[0]);
        }
        let x = t / self.step;
        let k = x.floor().to_usize()?;
        if k + 1 >= values.len() {
            return if k + 1 == values.len() && x == T::lit(k as f64) {
                Some(values[k])
            } else {
                None
            };
        }
        let frac = x - T::lit(k as f64);
        Some(values[k] + frac * (values[k + 1] - values[k]))
    }

    /// `e^{αt} F(t)`; tends to [`asymptotic_mu`].
    pub fn tilted_tail(&self, t: T) -> T {
        self.interpolate(&self.tilted_tail, t).unwrap_or_else(|| {
            warn_extrapolation(t.as_f64(), self.t_max.as_f64());
            asymptotic_mu(&self.model)
        })
    }

    /// `F(t) = 1/ψ'(α) − e^{−αt} W(t)`.
    pub fn decay(&self, t: T) -> T {
        (-self.model.alpha() * t).exp() * self.tilted_tail(t)
    }

    /// `W(t)`. Beyond the horizon uses `e^{αt}/ψ'(α) − μ`.
    pub fn w(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        (self.model.alpha() * t).exp() / self.model.psi_prime_alpha() - self.tilted_tail(t)
    }

    /// `(W ⋆ P_V)(t) = ∫_{[0,t]} W(t − s) P_V(ds)`.
    pub fn w_star_pv(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let a = self.model.alpha();
        let k = (t / self.step).floor().to_usize().unwrap_or(usize::MAX);
        if k + 1 < self.wconv.len() {
            // interpolate e^{−αt}(W ⋆ P_V), which varies slowly
            let t0 = self.time(k);
            let t1 = self.time(k + 1);
            let y0 = (-a * t0).exp() * self.wconv[k];
            let y1 = (-a * t1).exp() * self.wconv[k + 1];
            let frac = (t - t0) / self.step;
            (a * t).exp() * (y0 + frac * (y1 - y0))
        } else if k + 1 == self.wconv.len() && t == self.t_max {
            self.wconv[k]
        } else {
            // W ⋆ P_V = W − W'/b with W' ≈ α e^{αt}/ψ'(α)
            warn_extrapolation(t.as_f64(), self.t_max.as_f64());
            let m = &self.model;
            self.w(t) - a * (a * t).exp() / (m.psi_prime_alpha() * m.birth_rate())
        }
    }

    /// `E N_t = W(t) − (W ⋆ P_V)(t)`.
    pub fn mean_nt(&self, t: T) -> T {
        self.w(t) - self.w_star_pv(t)
    }

    /// `P(N_t > 0) = 1 − (W ⋆ P_V)(t) / W(t)`.
    pub fn survival_prob(&self, t: T) -> T {
        T::one() - self.w_star_pv(t) / self.w(t)
    }

    /// `E[N_t E] = (1 + α/b − e^{−αt}) W(t) − (1 − e^{−αt}) (W ⋆ P_V)(t)`.
    pub fn joint_moment_ne(&self, t: T) -> T {
        let m = &self.model;
        let decay = (-m.alpha() * t).exp();
        (T::one() + m.non_extinction_probability() - decay) * self.w(t) - (T::one() - decay) * self.w_star_pv(t)
    }

    /// `E[N_t²]`: `N_t` is geometric with parameter `1/W(t)` given `N_t > 0`.
    pub fn second_moment_nt(&self, t: T) -> T {
        self.mean_nt(t) * (T::lit(2.0) * self.w(t) - T::one())
    }

    /// Exact `e^{−αt} E[(ψ'(α) N_t − e^{αt} E)²]` at finite `t`, using
    /// `E[E²] = 2α/b`. Loses digits to cancellation once `e^{αt}` is large.
    pub fn quadratic_error(&self, t: T) -> T {
        let m = &self.model;
        let pp = m.psi_prime_alpha();
        let growth = (m.alpha() * t).exp();
        let two = T::lit(2.0);
        (pp * pp * self.second_moment_nt(t) - two * pp * growth * self.joint_moment_ne(t)
            + two * m.non_extinction_probability() * growth * growth)
            / growth
    }

    /// `E[N_t E]` on the table grid from the renewal equation it solves:
    /// kernel `b e^{−αu} P(V > u)`, forcing `ζ1 + ζ2` with
    /// `ζ2(t) = α ∫ e^{−αv} P(V > t, V > v) dv = P(V > t) − E[e^{−αV}; V > t]`
    /// and `ζ1(t) = b ∫_0^t E[N_{t−u}] ζ2(u) du`.
    pub fn joint_moment_ne_renewal(&self) -> Result<Vec<T>> {
        let m = &self.model;
        let (a, b) = (m.alpha(), m.birth_rate());
        let d = *m.lifespan();
        let h = self.step;
        let half = T::lit(0.5);
        let n = self.w.len();
        let zeta2: Vec<T> = (0..n)
            .map(|k| {
                let t = self.time(k);
                d.survival(t) - d.partial_laplace(a, t)
            })
            .collect();
        let mean: Vec<T> = self.w.iter().zip(&self.wconv).map(|(&w, &c)| w - c).collect();
        // at an atom v0 of P_V both ζ2 and E N jump; trapezoid sums need the
        // midpoint inside the range and the inward limit at its ends
        let (mut zeta2_mid, mut zeta2_left) = (zeta2.clone(), zeta2.clone());
        let (mut mean_mid, mut mean_left) = (mean.clone(), mean.clone());
        if let Some(k) = atom_index(&d, h, n) {
            let jump = T::one() - (-a * self.time(k)).exp();
            zeta2_left[k] = zeta2[k] + jump;
            zeta2_mid[k] = zeta2[k] + half * jump;
            mean_left[k] = mean[k] + self.w[0];
            mean_mid[k] = mean[k] + half * self.w[0];
        }
        let forcing: Vec<T> = (0..n)
            .map(|k| {
                let zeta1 = if k == 0 {
                    T::zero()
                } else {
                    let inner = zeta2_mid[1..k]
                        .iter()
                        .zip(mean_mid[1..k].iter().rev())
                        .fold(T::zero(), |acc, (&z, &e)| acc + z * e);
                    b * h * (inner + half * (zeta2[0] * mean_left[k] + zeta2_left[k] * mean[0]))
                };
                zeta1 + zeta2[k]
            })
            .collect();

        // Γ(r) = (b/α)(1 − E[e^{−α min(V, r)}])
        let one_minus_l = d.one_minus_laplace(a);
        let cum: Vec<T> = (0..n)
            .map(|k| {
                let t = self.time(k);
                let e_min = if d.is_infinite() {
                    T::one() - (-a * t).exp()
                } else {
                    one_minus_l + d.partial_laplace(a, t) - (-a * t).exp() * d.survival(t)
                };
                b / a * e_min
            })
            .collect();
        // ∫_0^r Γ = (b/α)(r − Γ(r)/b − r E[e^{−αV}] + E[V e^{−αV}] − E[e^{−αV}(V − r)^+])
        let laplace = T::one() - one_minus_l;
        let excess: Vec<T> = (0..n)
            .map(|k| if d.is_infinite() { T::zero() } else { d.tilted_excess(a, self.time(k)) })
            .collect();
        let cum_integral: Vec<T> = (0..n - 1)
            .map(|j| b / a * (h - (cum[j + 1] - cum[j]) / b - h * laplace - (excess[j + 1] - excess[j])))
            .collect();
        let (left, right) = exact_cells(&cum, &cum_integral, h);
        Ok(solve_renewal(&RenewalProblem::from_cells(left, right, forcing, h)?))
    }
}

/// `(W ⋆ P_V)(t_k)` by product trapezoid: `W` is taken linear on each cell
/// and integrated exactly against `P_V`, which needs only the CDF and the
/// truncated first moment of the law. Atoms on grid points are exact lookups.
fn convolve_with_law<T: Real>(w: &[T], dist: &LifespanDistribution<T>, h: T) -> Vec<T> {
    let n = w.len();
    if dist.is_infinite() {
        return vec![T::zero(); n];
    }
    let s = |k: usize| T::lit(k as f64) * h;
    let cdf: Vec<T> = (0..n).map(|k| dist.cdf(s(k))).collect();
    let moment: Vec<T> = (0..n).map(|k| dist.partial_mean_below(s(k))).collect();
    // mass of cell j sent to its left (a) and right (b) end points
    let mut left = vec![T::zero(); n];
    let mut right = vec![T::zero(); n];
    for j in 0..n.saturating_sub(1) {
        let mass = (cdf[j + 1] - cdf[j]).max(T::zero());
        let lever = (moment[j + 1] - moment[j] - s(j) * mass) / h;
        let lever = lever.max(T::zero()).min(mass);
        left[j] = mass - lever;
        right[j] = lever;
    }
    // point weight of s_i when i < k
    let mut weight = vec![T::zero(); n];
    for i in 0..n {
        weight[i] = left[i] + if i > 0 { right[i - 1] } else { T::zero() };
    }
    let mut out = Vec::with_capacity(n);
    out.push(T::zero());
    for k in 1..n {
        let body = weight[..k]
            .iter()
            .zip(w[1..=k].iter().rev())
            .fold(T::zero(), |acc, (&c, &wv)| acc + c * wv);
        out.push(body + right[k - 1] * w[0]);
    }
    out
}
