//! Gaussian tail, density and Mills ratio.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability<T>(T);

impl<T: Real> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value.is_nan() || value < T::zero() || value > T::one() {
            return Err(Error::domain(format!("probability {value} outside [0, 1]")));
        }
        Ok(Probability(value))
    }

    /// Clamps quadrature round-off (a few ulps past 0 or 1) back into range.
    pub(crate) fn clamped(value: T) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.max(T::zero()).min(T::one()))
    }

    pub fn zero() -> Self {
        Probability(T::zero())
    }

    pub fn one() -> Self {
        Probability(T::one())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(T::one() - self.0)
    }
}

/// Upper Gaussian tail `P{N(0,1) > x}` without the finiteness check.
#[inline]
pub(crate) fn psi<T: Real>(x: T) -> T {
    (x * T::FRAC_1_SQRT_2()).erfc() * lit(0.5)
}

/// `P{|N(0,1)| <= x} = 1 - 2 psi(x)` for `x >= 0`, computed through `erf` so it
/// keeps full relative precision near zero.
#[inline]
pub(crate) fn central_mass<T: Real>(x: T) -> T {
    (x * T::FRAC_1_SQRT_2()).erf()
}

#[inline]
pub(crate) fn std_normal_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi: T = lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(x * x) * lit(0.5)).exp()
}

/// Gaussian upper tail `P{N(0,1) > x}`.
pub fn upper_tail<T: Real>(x: T) -> Result<Probability<T>> {
    if !x.is_finite() {
        return Err(Error::domain(format!("upper_tail requires a finite argument, got {x}")));
    }
    Ok(Probability::clamped(psi(x)))
}

/// Density of `N(0, variance)` at `x`.
pub fn gaussian_pdf<T: Real>(x: T, variance: T) -> Result<T> {
    if !(variance > T::zero()) || !variance.is_finite() {
        return Err(Error::domain(format!("gaussian_pdf requires variance > 0, got {variance}")));
    }
    let two_pi = lit::<T>(2.0) * T::PI();
    Ok((-(x * x) / (lit::<T>(2.0) * variance)).exp() / (two_pi * variance).sqrt())
}

/// Mills ratio `R(x) = exp(x^2/2) * int_x^inf exp(-t^2/2) dt` for `x >= 0`.
///
/// Up to `x = 5` this is `sqrt(2 pi) exp(x^2/2) psi(x)`; beyond that the tail
/// underflows relative to the exponential, so the Laplace continued fraction
/// `1/(x + 1/(x + 2/(x + 3/(x + ...))))` is used instead.
pub fn mills_ratio<T: Real>(x: T) -> Result<T> {
    if x.is_nan() || x < T::zero() {
        return Err(Error::domain(format!("mills_ratio requires x >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    if x <= lit(5.0) {
        Ok(mills_from_tail(x))
    } else {
        Ok(mills_continued_fraction(x))
    }
}

fn mills_from_tail<T: Real>(x: T) -> T {
    let sqrt_2pi: T = lit(2.506_628_274_631_000_5);
    sqrt_2pi * (x * x * lit(0.5)).exp() * psi(x)
}

fn mills_continued_fraction<T: Real>(x: T) -> T {
    let mut tail = x;
    for k in (1..=120).rev() {
        tail = x + lit::<T>(k as f64) / tail;
    }
    tail.recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Maclaurin series of erf, summed in f64; only used for moderate x.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-20 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn upper_tail_reference_points() {
        assert_eq!(upper_tail(0.0).unwrap().value(), 0.5);
        let oracle = 0.5 * (1.0 - erf_series(1.0 / 2f64.sqrt()));
        assert!((upper_tail(1.0).unwrap().value() - oracle).abs() < 1e-15);
        assert!((upper_tail(1.0f64).unwrap().value() - 0.158_655_253_931_457_05).abs() < 1e-15);
        let s = upper_tail(1.2f64).unwrap().value() + upper_tail(-1.2).unwrap().value();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn upper_tail_rejects_non_finite() {
        assert!(upper_tail(f64::NAN).is_err());
        assert!(upper_tail(f64::INFINITY).is_err());
    }

    #[test]
    fn gaussian_pdf_scaling() {
        assert_relative_eq!(gaussian_pdf(0.0, 1.0).unwrap(), 0.398_942_280_4, epsilon = 1e-10);
        assert_relative_eq!(
            gaussian_pdf(2.0, 4.0).unwrap(),
            gaussian_pdf(1.0, 1.0).unwrap() / 2.0,
            max_relative = 1e-15
        );
        assert!(gaussian_pdf(0.0, 0.0).is_err());
        assert!(gaussian_pdf(0.0, -1.0).is_err());
    }

    #[test]
    fn mills_ratio_values() {
        assert_relative_eq!(mills_ratio(0.0).unwrap(), (std::f64::consts::PI / 2.0).sqrt(), max_relative = 1e-15);
        // R(10) = int_0^inf exp(-10 s - s^2/2) ds
        let oracle = simpson(|s| (-10.0 * s - 0.5 * s * s).exp(), 0.0, 8.0, 200_000);
        assert_relative_eq!(mills_ratio(10.0).unwrap(), oracle, max_relative = 1e-12);
        // mpmath, 30 digits
        assert_relative_eq!(mills_ratio(10.0f64).unwrap(), 0.099_028_596_471_731_92, max_relative = 1e-15);
        assert!(mills_ratio(10.0f64).unwrap() < 0.1);
        assert!(mills_ratio(-0.1).is_err());
    }

    #[test]
    fn mills_ratio_branches_meet() {
        for x in [5.0, 6.0, 8.0] {
            assert_relative_eq!(mills_from_tail(x), mills_continued_fraction(x), max_relative = 1e-14);
        }
    }

    #[test]
    fn mills_ratio_decreasing_and_bounded() {
        let cap = (std::f64::consts::PI / 2.0).sqrt();
        let mut prev = f64::INFINITY;
        for i in 0..=200 {
            let r = mills_ratio(i as f64 * 0.1).unwrap();
            assert!(r <= cap + 1e-15 && r <= 1.253_314_137_4);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn mills_ratio_matches_tail() {
        for i in 0..=100 {
            let x = i as f64 * 0.1;
            let lhs = mills_ratio(x).unwrap() * (-x * x / 2.0).exp();
            let rhs = (2.0 * std::f64::consts::PI).sqrt() * psi(x);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn central_mass_bound() {
        for i in 0..=400 {
            let x = i as f64 * 0.02;
            let m = central_mass(x);
            assert!((m - (1.0 - 2.0 * psi(x))).abs() < 1e-15);
            assert!(m <= (2.0 / std::f64::consts::PI).sqrt() * x + 1e-16);
            assert!(m <= 1.0);
        }
    }

    #[test]
    fn single_precision() {
        assert!((upper_tail(1.0f32).unwrap().value() - 0.158_655_25).abs() < 1e-6);
        assert!((mills_ratio(7.0f32).unwrap() - mills_ratio(7.0f64).unwrap() as f32).abs() < 1e-6);
    }
}
