//! Law of `inf_{a<=t<=b} |W(t) - M|` for standard Brownian motion `W`.
//!
//! All level-dependent quantities are reduced to `|M|` first, so the
//! `M -> -M` symmetry holds exactly. Gaussian-kernel integrals are rewritten
//! over the standard normal variable `z = W(a)/sqrt(a)` and truncated to
//! `|z| <= 8` (discarded mass `2 psi(8) < 1.3e-15`), with break points placed
//! on every kink of the integrand.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::scalar::{lit, Real};
use crate::special::{central_mass, psi, std_normal_pdf, Probability};

/// Truncation radius in standard-normal units.
const Z_MAX: f64 = 8.0;

/// Time window `[a, b]` with `0 < a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<T> {
    a: T,
    b: T,
}

impl<T: Real> Interval<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || !(a > T::zero()) || !(a <= b) {
            return Err(Error::domain(format!("interval requires 0 < a <= b, got a = {a}, b = {b}")));
        }
        Ok(Interval { a, b })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn length(&self) -> T {
        self.b - self.a
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// The band `(M - c, M + c)` a path is asked to avoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandQuery<T> {
    center: T,
    half_width: T,
}

impl<T: Real> BandQuery<T> {
    pub fn new(center: T, half_width: T) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::domain(format!("band center must be finite, got {center}")));
        }
        if !half_width.is_finite() || !(half_width >= T::zero()) {
            return Err(Error::domain(format!("band half-width must be >= 0, got {half_width}")));
        }
        Ok(BandQuery { center, half_width })
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }
}

/// A probability together with whether it was obtained from the point
/// evaluation forced by a zero-length interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation<T> {
    pub probability: Probability<T>,
    pub degenerate: bool,
}

impl<T: Real> Evaluation<T> {
    fn regular(value: T) -> Self {
        Evaluation {
            probability: Probability::clamped(value),
            degenerate: false,
        }
    }

    fn degenerate(value: T) -> Self {
        Evaluation {
            probability: Probability::clamped(value),
            degenerate: true,
        }
    }

    pub fn value(&self) -> T {
        self.probability.value()
    }
}

fn check_level<T: Real>(m: T) -> Result<T> {
    if m.is_finite() {
        Ok(m.abs())
    } else {
        Err(Error::domain(format!("level M must be finite, got {m}")))
    }
}

/// Break points on `[lo, hi]` at every kink plus a geometric ladder
/// `kink +/- width * 4^j` around it. When `b - a` is small next to `a` the
/// integrands have layers of width `sqrt((b - a)/a)` at the kinks, too thin
/// for the initial Kronrod nodes to see.
fn graded_breaks<T: Real>(lo: T, hi: T, kinks: &[T], width: T) -> Vec<T> {
    let mut points = vec![lo, hi];
    let span = hi - lo;
    let four = lit::<T>(4.0);
    for &k in kinks {
        let k = k.max(lo).min(hi);
        points.push(k);
        let mut d = width.max(span * lit(1e-18));
        while d < span {
            for p in [k - d, k + d] {
                if p > lo && p < hi {
                    points.push(p);
                }
            }
            d = d * four;
        }
    }
    points.sort_by(|x, y| x.partial_cmp(y).expect("break points are not NaN"));
    points.dedup();
    points
}

/// Evaluates the band-avoidance family with a fixed quadrature configuration.
#[derive(Debug, Clone, Copy)]
pub struct BandSolver<T> {
    quadrature: Quadrature<T>,
}

impl<T: Real> Default for BandSolver<T> {
    fn default() -> Self {
        BandSolver {
            quadrature: Quadrature::default(),
        }
    }
}

impl<T: Real> BandSolver<T> {
    pub fn new(quadrature: Quadrature<T>) -> Self {
        BandSolver { quadrature }
    }

    /// `P{inf_{[a,b]} |W - M| >= c}` for `c > 0`.
    ///
    /// Conditioning on `W(a) = M + v` with `|v| > c`, the path must not travel
    /// `|v| - c` toward the band during `b - a`, which by reflection has
    /// probability `1 - 2 psi((|v| - c)/sqrt(b - a))`.
    pub fn avoid_prob(&self, iv: Interval<T>, q: BandQuery<T>) -> Result<Evaluation<T>> {
        let c = q.half_width();
        if !(c > T::zero()) {
            return Err(Error::domain(
                "avoid_prob requires c > 0; the c -> 0 limit is inf_positive_prob, and \
                 P{inf >= 0} = 1 trivially",
            ));
        }
        let m = check_level(q.center())?;
        let sa = iv.a().sqrt();
        if iv.is_degenerate() {
            return Ok(Evaluation::degenerate(psi((c - m) / sa) + psi((c + m) / sa)));
        }
        let s = iv.length().sqrt();
        let integrand = |z: T| {
            let gap = (sa * z - m).abs() - c;
            if gap <= T::zero() {
                T::zero()
            } else {
                central_mass(gap / s) * std_normal_pdf(z)
            }
        };
        let zmax = lit::<T>(Z_MAX);
        let breaks = graded_breaks(-zmax, zmax, &[(m - c) / sa, (m + c) / sa], s / sa);
        let r = self.quadrature.integrate_with_breaks(integrand, &breaks)?;
        Ok(Evaluation::regular(r.value))
    }

    /// `P{inf_{[a,b]} |W - M| > 0}`, the `c -> 0` limit of [`Self::avoid_prob`].
    pub fn inf_positive_prob(&self, iv: Interval<T>, m: T) -> Result<Evaluation<T>> {
        let m = check_level(m)?;
        if iv.is_degenerate() {
            return Ok(Evaluation::degenerate(T::one()));
        }
        let (sa, s) = (iv.a().sqrt(), iv.length().sqrt());
        let integrand = |z: T| central_mass((sa * z - m).abs() / s) * std_normal_pdf(z);
        let r = self.kinked_at_level(integrand, m / sa, s / sa)?;
        Ok(Evaluation::regular(r))
    }

    /// `P{inf_{[a,b]} |W - M| = 0} = 2 E[psi(|W(a) - M| / sqrt(b - a))]`.
    pub fn zero_touch_prob(&self, iv: Interval<T>, m: T) -> Result<Evaluation<T>> {
        let m = check_level(m)?;
        if iv.is_degenerate() {
            return Ok(Evaluation::degenerate(T::zero()));
        }
        let (sa, s) = (iv.a().sqrt(), iv.length().sqrt());
        let integrand = |z: T| lit::<T>(2.0) * psi((sa * z - m).abs() / s) * std_normal_pdf(z);
        let r = self.kinked_at_level(integrand, m / sa, s / sa)?;
        Ok(Evaluation::regular(r))
    }

    fn kinked_at_level<F: Fn(T) -> T>(&self, integrand: F, kink: T, width: T) -> Result<T> {
        let zmax = lit::<T>(Z_MAX);
        let breaks = graded_breaks(-zmax, zmax, &[kink], width);
        Ok(self.quadrature.integrate_with_breaks(integrand, &breaks)?.value)
    }

    /// Zero-touch probability from the single-integral representation
    /// obtained by integrating `d/ds F(s)` with `s = sqrt(a / (b - a))`:
    ///
    /// ```text
    /// 1 - (2/pi) e^{-m^2/2} atan(s)
    ///   - sqrt(2/pi) m int_0^{sqrt(a/b)} e^{-m^2 w^2 / 2} P{|g| <= m sqrt(1 - w^2)} dw,
    /// ```
    ///
    /// where `m = |M| / sqrt(a)`. For `M = 0` only the arctan term remains and
    /// no quadrature is performed.
    pub fn zero_touch_prob_closed(&self, iv: Interval<T>, m: T) -> Result<Evaluation<T>> {
        let m = check_level(m)?;
        if iv.is_degenerate() {
            return Ok(Evaluation::degenerate(T::zero()));
        }
        let two_over_pi = T::FRAC_2_PI();
        let s = (iv.a() / iv.length()).sqrt();
        let m1 = m / iv.a().sqrt();
        let arctan_term = T::one() - two_over_pi * (-(m1 * m1) * lit(0.5)).exp() * s.atan();
        if m1 == T::zero() {
            return Ok(Evaluation::regular(arctan_term));
        }
        let upper = (iv.a() / iv.b()).sqrt();
        let integrand = |w: T| {
            let band = central_mass(m1 * (T::one() - w * w).max(T::zero()).sqrt());
            (-(m1 * m1 * w * w) * lit(0.5)).exp() * band
        };
        let r = self.quadrature.integrate(integrand, T::zero(), upper)?;
        let sqrt_2_over_pi = two_over_pi.sqrt();
        Ok(Evaluation::regular(arctan_term - sqrt_2_over_pi * m1 * r.value))
    }

    /// `P{W has no zero in (a, b)} = (2/pi) asin(sqrt(a/b))`.
    pub fn no_zero_prob(&self, iv: Interval<T>) -> Probability<T> {
        Probability::clamped(T::FRAC_2_PI() * (iv.a() / iv.b()).sqrt().asin())
    }

    /// `P{0 < inf_{[a,b]} |W| < c}` for `c > 0`.
    ///
    /// Difference of the positive-infimum and band-avoidance laws at `M = 0`,
    /// written over `u = |W(a)|/sqrt(a)`:
    ///
    /// ```text
    /// 2 int_0^{c/sqrt a} (1 - 2 psi(u sqrt(a/(b-a)))) phi(u) du
    ///   + 4 int_{c/sqrt a}^inf (psi((u sqrt a - c)/sqrt(b-a)) - psi(u sqrt a/sqrt(b-a))) phi(u) du
    /// ```
    ///
    /// The law of the infimum has no atom on `(0, inf)`, so this is also
    /// `P{0 < inf <= c}`.
    pub fn small_inf_prob(&self, iv: Interval<T>, c: T) -> Result<Evaluation<T>> {
        if !c.is_finite() || !(c > T::zero()) {
            return Err(Error::domain(format!("small_inf_prob requires c > 0, got {c}")));
        }
        let sa = iv.a().sqrt();
        if iv.is_degenerate() {
            return Ok(Evaluation::degenerate(central_mass(c / sa)));
        }
        let s = iv.length().sqrt();
        let zmax = lit::<T>(Z_MAX);
        let split = c / sa;

        let near = |u: T| central_mass(u * sa / s) * std_normal_pdf(u);
        let far = |u: T| (psi((u * sa - c) / s) - psi(u * sa / s)) * std_normal_pdf(u);

        let width = s / sa;
        let mut total = T::zero();
        let near_hi = split.min(zmax);
        let near_breaks = graded_breaks(T::zero(), near_hi, &[T::zero()], width);
        total = total + lit::<T>(2.0) * self.quadrature.integrate_with_breaks(near, &near_breaks)?.value;
        if split < zmax {
            let far_breaks = graded_breaks(split, zmax, &[split], width);
            total = total + lit::<T>(4.0) * self.quadrature.integrate_with_breaks(far, &far_breaks)?.value;
        }
        Ok(Evaluation::regular(total))
    }
}

pub fn avoid_prob<T: Real>(iv: Interval<T>, q: BandQuery<T>) -> Result<Evaluation<T>> {
    BandSolver::default().avoid_prob(iv, q)
}

pub fn inf_positive_prob<T: Real>(iv: Interval<T>, m: T) -> Result<Evaluation<T>> {
    BandSolver::default().inf_positive_prob(iv, m)
}

pub fn zero_touch_prob<T: Real>(iv: Interval<T>, m: T) -> Result<Evaluation<T>> {
    BandSolver::default().zero_touch_prob(iv, m)
}

pub fn zero_touch_prob_closed<T: Real>(iv: Interval<T>, m: T) -> Result<Evaluation<T>> {
    BandSolver::default().zero_touch_prob_closed(iv, m)
}

pub fn no_zero_prob<T: Real>(iv: Interval<T>) -> Probability<T> {
    BandSolver::default().no_zero_prob(iv)
}

pub fn small_inf_prob<T: Real>(iv: Interval<T>, c: T) -> Result<Evaluation<T>> {
    BandSolver::default().small_inf_prob(iv, c)
}
