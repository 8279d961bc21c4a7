//! Explicit upper bounds for zero-touch, small-infimum and negative-moment
//! functionals of `beta = inf_{[a,b]} |W|`.

use serde::Serialize;

use crate::band::{BandSolver, Interval};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Configuration for the zero-touch bound. The absolute constant in that
/// bound is existential, so it is a parameter here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConfig<T> {
    touch_constant: T,
}

impl<T: Real> Default for BoundConfig<T> {
    fn default() -> Self {
        BoundConfig {
            touch_constant: lit(4.0),
        }
    }
}

impl<T: Real> BoundConfig<T> {
    pub fn new(touch_constant: T) -> Result<Self> {
        if !touch_constant.is_finite() || !(touch_constant > T::zero()) {
            return Err(Error::domain(format!(
                "zero-touch bound constant must be positive, got {touch_constant}"
            )));
        }
        Ok(BoundConfig { touch_constant })
    }

    pub fn constant(&self) -> T {
        self.touch_constant
    }
}

fn require_proper<T: Real>(iv: Interval<T>, what: &str) -> Result<()> {
    if iv.is_degenerate() {
        Err(Error::domain(format!("{what} requires a < b")))
    } else {
        Ok(())
    }
}

/// `min(1/sqrt(b - a), 1/sqrt(a))`.
pub(crate) fn window_factor<T: Real>(iv: Interval<T>) -> T {
    let inv_a = iv.a().sqrt().recip();
    if iv.is_degenerate() {
        inv_a
    } else {
        iv.length().sqrt().recip().min(inv_a)
    }
}

/// `C min(1, sqrt((b-a)/a) exp(-M^2 / (8 max(a, b-a))))`.
pub fn touch_upper_bound<T: Real>(iv: Interval<T>, m: T, cfg: BoundConfig<T>) -> Result<T> {
    require_proper(iv, "touch_upper_bound")?;
    if !m.is_finite() {
        return Err(Error::domain(format!("level M must be finite, got {m}")));
    }
    let spread = iv.a().max(iv.length());
    let kernel = (iv.length() / iv.a()).sqrt() * (-(m * m) / (lit::<T>(8.0) * spread)).exp();
    Ok(cfg.constant() * kernel.min(T::one()))
}

/// The level-free corollary `C min(1, sqrt((b-a)/a))`.
pub fn touch_upper_bound_level_free<T: Real>(iv: Interval<T>, cfg: BoundConfig<T>) -> Result<T> {
    require_proper(iv, "touch_upper_bound_level_free")?;
    Ok(cfg.constant() * (iv.length() / iv.a()).sqrt().min(T::one()))
}

/// `P{0 < beta <= eta} <= (16 eta / sqrt(2 pi)) min(1/sqrt(b-a), 1/sqrt(a))`.
pub fn small_inf_upper_bound<T: Real>(iv: Interval<T>, eta: T) -> Result<T> {
    require_proper(iv, "small_inf_upper_bound")?;
    if !eta.is_finite() || !(eta > T::zero()) {
        return Err(Error::domain(format!("small_inf_upper_bound requires eta > 0, got {eta}")));
    }
    Ok(small_inf_bound_unchecked(iv, eta))
}

/// Same display without the `a < b` / `eta > 0` preconditions; for a
/// zero-length window the `1/sqrt(b-a)` branch is infinite and drops out.
pub(crate) fn small_inf_bound_unchecked<T: Real>(iv: Interval<T>, eta: T) -> T {
    let sqrt_2pi: T = lit(2.506_628_274_631_000_5);
    lit::<T>(16.0) * eta / sqrt_2pi * window_factor(iv)
}

/// `E[beta^-alpha 1{beta > 0}] <= (47/(1 - alpha)) min(1/sqrt(b-a), 1/sqrt(a)) + 1`.
pub fn neg_moment_upper_bound<T: Real>(iv: Interval<T>, alpha: T) -> Result<T> {
    require_proper(iv, "neg_moment_upper_bound")?;
    if alpha.is_nan() || alpha < T::zero() || alpha >= T::one() {
        return Err(Error::domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(lit::<T>(47.0) / (T::one() - alpha) * window_factor(iv) + T::one())
}

/// Largest observed ratio of the exact zero-touch probability to the
/// zero-touch bound kernel over a parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TouchConstantSweep<T> {
    pub constant: T,
    pub a: T,
    pub b: T,
    pub level: T,
}

/// Sweeps `(a, b, M)` over the Cartesian grid (keeping `b > a`) and returns
/// the supremum of `P{inf |W - M| = 0} / min(1, sqrt((b-a)/a) e^{-M^2/(8 max(a,b-a))})`.
pub fn empirical_touch_constant<T: Real>(
    solver: &BandSolver<T>,
    times: &[T],
    levels: &[T],
) -> Result<TouchConstantSweep<T>> {
    let unit = BoundConfig::new(T::one())?;
    let mut best: Option<TouchConstantSweep<T>> = None;
    for &a in times {
        for &b in times.iter().filter(|&&b| b > a) {
            let iv = Interval::new(a, b)?;
            for &m in levels {
                let exact = solver.zero_touch_prob(iv, m)?.value();
                let ratio = exact / touch_upper_bound(iv, m, unit)?;
                if best.is_none_or(|s| ratio > s.constant) {
                    best = Some(TouchConstantSweep {
                        constant: ratio,
                        a,
                        b,
                        level: m,
                    });
                }
            }
        }
    }
    best.ok_or_else(|| Error::domain("sweep grid has no pair with b > a"))
}
