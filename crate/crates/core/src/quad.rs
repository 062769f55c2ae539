//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::Real;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639,
    0.949_107_912_342_758_525,
    0.864_864_423_359_769_073,
    0.741_531_185_599_394_440,
    0.586_087_235_467_691_130,
    0.405_845_151_377_397_167,
    0.207_784_955_007_898_468,
    0.000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_184,
    0.140_653_259_715_525_919,
    0.169_004_726_639_267_903,
    0.190_350_578_064_785_410,
    0.204_432_940_075_298_892,
    0.209_482_141_084_727_828,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693,
    0.279_705_391_489_276_668,
    0.381_830_050_505_118_945,
    0.417_959_183_673_469_388,
];

const MAX_DEPTH: u32 = 50;

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron += T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss += T::lit(WG[j / 2]) * pair;
        }
    }
    (kron * radius, ((kron - gauss) * radius).abs())
}

fn adapt<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, whole: T, err: T, tol: T, depth: u32) -> T {
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() <= T::epsilon() * a.abs().max(b.abs()) {
        return whole;
    }
    let mid = T::lit(0.5) * (a + b);
    let (left, el) = kronrod(f, a, mid);
    let (right, er) = kronrod(f, mid, b);
    let half_tol = T::lit(0.5) * tol;
    adapt(f, a, mid, left, el, half_tol, depth + 1) + adapt(f, mid, b, right, er, half_tol, depth + 1)
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    if b < a {
        return -integrate(f, b, a, tol);
    }
    let (whole, err) = kronrod(&f, a, b);
    adapt(&f, a, b, whole, err, tol, 0)
}

/// `∫_a^∞ f` via `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<T: Real, F: Fn(T) -> T>(f: F, a: T, tol: T) -> T {
    let g = |s: T| {
        let one_minus = T::one() - s;
        if one_minus <= T::zero() {
            return T::zero();
        }
        let x = a + s / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    integrate(g, T::zero(), T::one(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let v: f64 = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 8.0, epsilon = 1e-13);
    }

    #[test]
    fn oscillatory() {
        let v: f64 = integrate(|x: f64| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert_relative_eq!(v, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn half_line() {
        let v: f64 = integrate_to_infinity(|x: f64| (-x).exp(), 1.0, 1e-12);
        assert_relative_eq!(v, (-1.0_f64).exp(), epsilon = 1e-11);
        let g: f64 = integrate_to_infinity(|x: f64| x * (-x * x).exp(), 0.0, 1e-12);
        assert_relative_eq!(g, 0.5, epsilon = 1e-11);
    }

    #[test]
    fn reversed_bounds() {
        let v: f64 = integrate(|x: f64| x, 1.0, 0.0, 1e-12);
        assert_relative_eq!(v, -0.5, epsilon = 1e-14);
    }
}
