//! Globally adaptive Gauss–Kronrod (10/21) quadrature on finite, semi-infinite
//! and doubly infinite ranges.
//!
//! Infinite pieces are mapped onto `(0, 1]` with `x = p ± (1 - t)/t`. Every
//! piece of every call shares one error budget: the panel with the largest
//! `|K21 - G10|` estimate is bisected until the summed estimate drops below
//! the absolute tolerance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationResult<T> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    abs_tol: T,
    max_subdivisions: usize,
}

impl<T: Real> Default for Quadrature<T> {
    fn default() -> Self {
        Quadrature {
            abs_tol: T::default_tolerance(),
            max_subdivisions: 4000,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
enum Map<T> {
    Finite,
    /// `[p, inf)` via `x = p + (1 - t)/t`.
    Upper(T),
    /// `(-inf, p]` via `x = p - (1 - t)/t`.
    Lower(T),
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    lo: T,
    hi: T,
    map: Map<T>,
    value: T,
    error: T,
    splittable: bool,
}

impl<T: Real> Quadrature<T> {
    pub fn new(abs_tol: T) -> Result<Self> {
        if !(abs_tol > T::zero()) || !abs_tol.is_finite() {
            return Err(Error::domain(format!("abs_tol must be positive and finite, got {abs_tol}")));
        }
        Ok(Quadrature {
            abs_tol,
            ..Default::default()
        })
    }

    pub fn with_max_subdivisions(mut self, max_subdivisions: usize) -> Self {
        self.max_subdivisions = max_subdivisions.max(1);
        self
    }

    pub fn abs_tol(&self) -> T {
        self.abs_tol
    }

    /// Integrates `f` over `(lo, hi)`; either endpoint may be infinite.
    pub fn integrate<F>(&self, f: F, lo: T, hi: T) -> Result<IntegrationResult<T>>
    where
        F: Fn(T) -> T,
    {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::domain(format!("integration requires lo < hi, got ({lo}, {hi})")));
        }
        self.integrate_with_breaks(f, &[lo, hi])
    }

    /// Integrates over `(points[0], points[last])`, starting the adaptive
    /// scheme from the pieces between consecutive break points. Use this to
    /// place known kinks on panel boundaries.
    pub fn integrate_with_breaks<F>(&self, f: F, points: &[T]) -> Result<IntegrationResult<T>>
    where
        F: Fn(T) -> T,
    {
        if points.len() < 2 {
            return Err(Error::domain("need at least two break points"));
        }
        if points.iter().any(|p| p.is_nan()) || points.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("break points must be sorted and not NaN"));
        }
        if !(points[0] < points[points.len() - 1]) {
            return Err(Error::domain("integration range is empty"));
        }

        let mut evaluations = 0usize;
        let mut panels: Vec<Panel<T>> = Vec::new();
        for w in points.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(lo < hi) {
                continue;
            }
            let pieces: Vec<(T, T, Map<T>)> = match (lo.is_infinite(), hi.is_infinite()) {
                (false, false) => vec![(lo, hi, Map::Finite)],
                (false, true) => vec![(T::zero(), T::one(), Map::Upper(lo))],
                (true, false) => vec![(T::zero(), T::one(), Map::Lower(hi))],
                (true, true) => vec![
                    (T::zero(), T::one(), Map::Lower(T::zero())),
                    (T::zero(), T::one(), Map::Upper(T::zero())),
                ],
            };
            for (plo, phi, map) in pieces {
                panels.push(self.panel(&f, plo, phi, map, &mut evaluations)?);
            }
        }

        loop {
            let (value, error) = totals(&panels);
            if error <= self.abs_tol {
                return Ok(IntegrationResult {
                    value,
                    error_estimate: error,
                    evaluations,
                });
            }
            let worst = panels
                .iter()
                .enumerate()
                .filter(|(_, p)| p.splittable)
                .max_by(|(_, x), (_, y)| x.error.partial_cmp(&y.error).expect("finite error"))
                .map(|(i, _)| i);
            let Some(i) = worst.filter(|_| panels.len() < self.max_subdivisions) else {
                return Err(Error::BudgetExceeded {
                    value: to_f64(value),
                    error_estimate: to_f64(error),
                    evaluations,
                });
            };
            let p = panels[i];
            let mid = (p.lo + p.hi) * lit(0.5);
            let left = self.panel(&f, p.lo, mid, p.map, &mut evaluations)?;
            let right = self.panel(&f, mid, p.hi, p.map, &mut evaluations)?;
            panels[i] = left;
            panels.push(right);
        }
    }

    fn panel<F>(&self, f: &F, lo: T, hi: T, map: Map<T>, evaluations: &mut usize) -> Result<Panel<T>>
    where
        F: Fn(T) -> T,
    {
        let g = |t: T| -> T {
            match map {
                Map::Finite => f(t),
                Map::Upper(p) => {
                    let x = p + (T::one() - t) / t;
                    f(x) / (t * t)
                }
                Map::Lower(p) => {
                    let x = p - (T::one() - t) / t;
                    f(x) / (t * t)
                }
            }
        };
        let (value, error) = gauss_kronrod_21(g, lo, hi)?;
        *evaluations += 21;
        let eps = T::epsilon();
        let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
        let splittable = (hi - lo) > lit::<T>(64.0) * eps * scale;
        Ok(Panel {
            lo,
            hi,
            map,
            value,
            error,
            splittable,
        })
    }
}

fn totals<T: Real>(panels: &[Panel<T>]) -> (T, T) {
    panels
        .iter()
        .fold((T::zero(), T::zero()), |(v, e), p| (v + p.value, e + p.error))
}

fn gauss_kronrod_21<T: Real, G: Fn(T) -> T>(g: G, lo: T, hi: T) -> Result<(T, T)> {
    let half = (hi - lo) * lit(0.5);
    let center = (hi + lo) * lit(0.5);
    let eval = |x: T| -> Result<T> {
        let y = g(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::domain(format!("integrand is not finite at {x}")))
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * lit(WGK[10]);
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = half * lit(XGK[j]);
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod = kronrod + pair * lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * lit(WG[j / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok((value, error))
}

/// Integrates `f` over `(lo, hi)` to absolute tolerance `abs_tol`.
pub fn integrate<T, F>(f: F, lo: T, hi: T, abs_tol: T) -> Result<IntegrationResult<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    Quadrature::new(abs_tol)?.integrate(f, lo, hi)
}
