//! Monte Carlo oracle for the band-avoidance laws.
//!
//! Paths start from an exact draw `W(a) ~ N(0, a)` and move on a uniform grid
//! of `steps_per_interval` Gaussian increments over `[a, b]`. Between grid
//! points the path is a Brownian bridge, which is handled exactly:
//!
//! * single-barrier events use the survival-product estimator
//!   `prod (1 - bridge_hit_prob)`, which is conditionally unbiased given the
//!   grid;
//! * events that need the infimum itself (negative moments, envelope
//!   violations) sample each bridge minimum exactly,
//!   `m = (x + y - sqrt((y - x)^2 - 2 dt ln U)) / 2`.
//!
//! Every path owns a ChaCha8 stream indexed by its path number, so estimates
//! depend only on `(seed, n_paths, steps_per_interval)`. Paths are grouped in
//! fixed blocks, summarised with Welford moments and merged in block order.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::Probability;
use crate::{BandQuery, Interval};

const BLOCK_PATHS: u64 = 4096;

/// Upper limit on simulated grid increments per request.
pub const MAX_TOTAL_STEPS: u64 = 50_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub steps_per_interval: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 1_000_000,
            steps_per_interval: 1000,
            seed: 0,
            workers: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::domain("n_paths must be at least 1"));
        }
        if self.steps_per_interval == 0 {
            return Err(Error::domain("steps_per_interval must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("workers must be at least 1"));
        }
        Ok(())
    }

    /// Checks that `n_paths * intervals * steps_per_interval` stays within
    /// [`MAX_TOTAL_STEPS`].
    pub(crate) fn check_budget(&self, intervals: u64) -> Result<()> {
        let total = self
            .n_paths
            .checked_mul(intervals.max(1))
            .and_then(|n| n.checked_mul(self.steps_per_interval as u64));
        match total {
            Some(n) if n <= MAX_TOTAL_STEPS => Ok(()),
            _ => Err(Error::SimulationBudget(format!(
                "{} paths x {} intervals x {} steps exceeds {MAX_TOTAL_STEPS} increments",
                self.n_paths, intervals, self.steps_per_interval
            ))),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_paths: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// `inf |W - M| >= c`
    Avoid,
    /// `inf |W - M| = 0`
    ZeroTouch,
    /// `0 < inf |W| < c`
    SmallInf,
    /// `E[beta^-alpha 1{beta > 0}]`
    NegMoment,
    /// No zero and `inf |W| < eta` (hit-or-miss, exact bridge minima)
    EnvelopeViolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventSpec {
    kind: EventKind,
    interval: Interval,
    band: Option<BandQuery>,
    alpha: Option<f64>,
}

impl EventSpec {
    pub fn new(
        kind: EventKind,
        interval: Interval,
        band: Option<BandQuery>,
        alpha: Option<f64>,
    ) -> Result<Self> {
        let spec = EventSpec {
            kind,
            interval,
            band,
            alpha,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn avoid(interval: Interval, band: BandQuery) -> Result<Self> {
        Self::new(EventKind::Avoid, interval, Some(band), None)
    }

    pub fn zero_touch(interval: Interval, level: f64) -> Result<Self> {
        Self::new(EventKind::ZeroTouch, interval, Some(BandQuery::new(level, 0.0)?), None)
    }

    pub fn small_inf(interval: Interval, eta: f64) -> Result<Self> {
        Self::new(EventKind::SmallInf, interval, Some(BandQuery::new(0.0, eta)?), None)
    }

    pub fn neg_moment(interval: Interval, alpha: f64) -> Result<Self> {
        Self::new(EventKind::NegMoment, interval, None, Some(alpha))
    }

    pub fn envelope_violation(interval: Interval, eta: f64) -> Result<Self> {
        Self::new(EventKind::EnvelopeViolation, interval, Some(BandQuery::new(0.0, eta)?), None)
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            EventKind::Avoid => {
                let band = self.require_band()?;
                if !(band.half_width() > 0.0) {
                    return Err(Error::domain("Avoid events need a band half-width c > 0"));
                }
            }
            EventKind::ZeroTouch => {
                self.require_band()?;
            }
            EventKind::SmallInf | EventKind::EnvelopeViolation => {
                let band = self.require_band()?;
                if band.center() != 0.0 {
                    return Err(Error::domain(format!("{:?} events require band center 0", self.kind)));
                }
                if self.kind == EventKind::SmallInf && !(band.half_width() > 0.0) {
                    return Err(Error::domain("SmallInf events need eta > 0"));
                }
            }
            EventKind::NegMoment => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::domain("NegMoment events need alpha"))?;
                check_alpha(alpha)?;
            }
        }
        Ok(())
    }

    fn require_band(&self) -> Result<BandQuery> {
        self.band
            .ok_or_else(|| Error::domain(format!("{:?} events need a band", self.kind)))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(())
}

/// Probability that a Brownian bridge from `x` to `y` over `dt` touches `level`.
pub fn bridge_hit_prob(x: f64, y: f64, dt: f64, level: f64) -> Result<Probability<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("bridge_hit_prob requires dt > 0, got {dt}")));
    }
    if !(x.is_finite() && y.is_finite() && level.is_finite()) {
        return Err(Error::domain("bridge_hit_prob requires finite endpoints and level"));
    }
    Ok(Probability::clamped(bridge_hit(x - level, y - level, dt)))
}

/// Hit probability of level 0 for a bridge between gaps `x` and `y`.
#[inline]
fn bridge_hit(x: f64, y: f64, dt: f64) -> f64 {
    if x * y <= 0.0 {
        1.0
    } else {
        (-2.0 * x * y / dt).exp()
    }
}

/// Deterministic per-path random streams.
#[derive(Clone)]
pub(crate) struct PathStreams {
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl PathStreams {
    pub(crate) fn new(seed: u64) -> Self {
        PathStreams {
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
        }
    }

    #[inline]
    pub(crate) fn path(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64);
        Moments { n, mean, m2 }
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn std_err(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        (var / self.n as f64).sqrt()
    }
}

/// Splits `0..n_paths` into fixed blocks and maps them on a `workers`-thread
/// pool. Results come back in block order.
pub(crate) fn run_blocks<R, F>(n_paths: u64, workers: usize, job: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(Range<u64>) -> R + Sync,
{
    let blocks: Vec<Range<u64>> = (0..n_paths.div_ceil(BLOCK_PATHS))
        .map(|i| i * BLOCK_PATHS..((i + 1) * BLOCK_PATHS).min(n_paths))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::SimulationBudget(format!("could not start worker pool: {e}")))?;
    Ok(pool.install(|| blocks.into_par_iter().map(&job).collect()))
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Survival probability of a Brownian motion started at `gap > 0` against an
/// absorbing level at 0, conditional on the simulated grid.
#[inline]
fn survival(rng: &mut ChaCha8Rng, gap: f64, dt: f64, steps: usize) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    let sd = dt.sqrt();
    let mut x = gap;
    let mut weight = 1.0;
    for _ in 0..steps {
        let y = x + sd * normal(rng);
        if y <= 0.0 {
            return 0.0;
        }
        weight *= 1.0 - (-2.0 * x * y / dt).exp();
        x = y;
    }
    weight
}

/// `P{no zero} - P{inf >= c}` on one path, both conditional on the grid
/// (common random numbers). `start = |W(a)|`.
#[inline]
fn small_inf_weight(rng: &mut ChaCha8Rng, start: f64, c: f64, dt: f64, steps: usize) -> f64 {
    let sd = dt.sqrt();
    let mut x = start;
    let mut no_zero = 1.0;
    let mut above = if start > c { 1.0 } else { 0.0 };
    for _ in 0..steps {
        let y = x + sd * normal(rng);
        if y <= 0.0 {
            return 0.0;
        }
        no_zero *= 1.0 - (-2.0 * x * y / dt).exp();
        if above > 0.0 {
            let (gx, gy) = (x - c, y - c);
            above = if gy <= 0.0 {
                0.0
            } else {
                above * (1.0 - (-2.0 * gx * gy / dt).exp())
            };
        }
        x = y;
    }
    no_zero - above
}

/// Exact minimum of a Brownian bridge from `x > 0` to `y > 0` over `dt`.
#[inline]
pub(crate) fn bridge_minimum(rng: &mut ChaCha8Rng, x: f64, y: f64, dt: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let d = y - x;
    0.5 * (x + y - (d * d - 2.0 * dt * u.ln()).sqrt())
}

/// Samples `inf |W|` over a window starting at `|W| = start`; `None` when
/// the path hits zero.
#[inline]
pub(crate) fn sample_infimum(rng: &mut ChaCha8Rng, start: f64, dt: f64, steps: usize) -> Option<f64> {
    if start <= 0.0 {
        return None;
    }
    let sd = dt.sqrt();
    let mut x = start;
    let mut inf = start;
    for _ in 0..steps {
        let y = x + sd * normal(rng);
        if y <= 0.0 {
            return None;
        }
        let m = bridge_minimum(rng, x, y, dt);
        if m <= 0.0 {
            return None;
        }
        inf = inf.min(m);
        x = y;
    }
    Some(inf)
}

fn grid(interval: Interval, steps: usize) -> (f64, usize) {
    if interval.is_degenerate() {
        (0.0, 0)
    } else {
        (interval.length() / steps as f64, steps)
    }
}

fn simulate<F>(cfg: SimConfig, sample: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    cfg.validate()?;
    cfg.check_budget(1)?;
    let streams = PathStreams::new(cfg.seed);
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut acc = Moments::default();
        for path in range {
            let mut rng = streams.path(path);
            acc.push(sample(&mut rng));
        }
        acc
    })?;
    let total = blocks.into_iter().fold(Moments::default(), Moments::merge);
    let mean = total.mean();
    if !mean.is_finite() {
        return Err(Error::SimulationBudget(format!("estimate overflowed: {mean}")));
    }
    Ok(McEstimate {
        mean,
        std_err: total.std_err(),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
    })
}

/// Estimates the probability or moment described by `event`.
pub fn estimate(event: EventSpec, cfg: SimConfig) -> Result<McEstimate> {
    event.validate()?;
    let iv = event.interval;
    let root_a = iv.a().sqrt();
    let (dt, steps) = grid(iv, cfg.steps_per_interval);
    match event.kind {
        EventKind::Avoid => {
            let band = event.require_band()?;
            let (m, c) = (band.center().abs(), band.half_width());
            simulate(cfg, |rng| {
                let gap = (root_a * normal(rng) - m).abs() - c;
                if gap <= 0.0 {
                    0.0
                } else if steps == 0 {
                    1.0
                } else {
                    survival(rng, gap, dt, steps)
                }
            })
        }
        EventKind::ZeroTouch => {
            let m = event.require_band()?.center().abs();
            simulate(cfg, |rng| {
                let gap = (root_a * normal(rng) - m).abs();
                if steps == 0 {
                    if gap == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    1.0 - survival(rng, gap, dt, steps)
                }
            })
        }
        EventKind::SmallInf => {
            let c = event.require_band()?.half_width();
            simulate(cfg, |rng| {
                let start = (root_a * normal(rng)).abs();
                if steps == 0 {
                    if start > 0.0 && start < c {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    small_inf_weight(rng, start, c, dt, steps)
                }
            })
        }
        EventKind::NegMoment => {
            estimate_neg_moment(iv, event.alpha.expect("validated"), cfg)
        }
        EventKind::EnvelopeViolation => {
            let eta = event.require_band()?.half_width();
            simulate(cfg, |rng| {
                let start = (root_a * normal(rng)).abs();
                match sample_infimum(rng, start, dt, steps) {
                    Some(inf) if inf < eta => 1.0,
                    _ => 0.0,
                }
            })
        }
    }
}

/// Estimates `E[beta^-alpha 1{beta > 0}]` for `beta = inf_{[a,b]} |W|`, with
/// `beta` sampled from exact bridge minima on each grid segment.
pub fn estimate_neg_moment(iv: Interval, alpha: f64, cfg: SimConfig) -> Result<McEstimate> {
    check_alpha(alpha)?;
    let root_a = iv.a().sqrt();
    let (dt, steps) = grid(iv, cfg.steps_per_interval);
    simulate(cfg, |rng| {
        let start = (root_a * normal(rng)).abs();
        match sample_infimum(rng, start, dt, steps) {
            Some(beta) if alpha == 0.0 => {
                debug_assert!(beta > 0.0);
                1.0
            }
            Some(beta) => beta.powf(-alpha),
            None => 0.0,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn cfg(n_paths: u64, steps: usize, seed: u64) -> SimConfig {
        SimConfig {
            n_paths,
            steps_per_interval: steps,
            seed,
            workers: 1,
        }
    }

    #[test]
    fn bridge_hit_values() {
        let p = bridge_hit_prob(1.0, 1.0, 2.0, 0.0).unwrap().value();
        assert!((p - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(bridge_hit_prob(1.0, -1.0, 5.0, 0.0).unwrap().value(), 1.0);
        let far = bridge_hit_prob(2.0, 2.0, 0.5, 0.0).unwrap().value();
        assert!((far - (-16.0f64).exp()).abs() < 1e-22);
        assert!((far - 1.125e-7).abs() < 1e-10);
        assert!(bridge_hit_prob(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(bridge_hit_prob(3.0, 4.0, 1.0, 2.0).unwrap().value() > 0.0);
    }

    #[test]
    fn bridge_hit_matches_fine_grid_simulation() {
        // Bridges from 1 to 1 over dt = 2, refined into 2000 substeps; each
        // substep also uses the exact hit formula, so the check is against
        // the composition of many short bridges.
        let (x, y, dt, substeps, n) = (1.0, 1.0, 2.0, 2000, 20_000u64);
        let h = dt / substeps as f64;
        let streams = PathStreams::new(7);
        let mut hits = Moments::default();
        for path in 0..n {
            let mut rng = streams.path(path);
            let mut prev = x;
            let mut survive = 1.0;
            for k in 1..=substeps {
                let t = k as f64 * h;
                let remaining = dt - (t - h);
                // bridge step toward y: mean prev + (y - prev) h/remaining
                let mean = prev + (y - prev) * h / remaining;
                let var = h * (remaining - h) / remaining;
                let next = if k == substeps { y } else { mean + var.sqrt() * normal(&mut rng) };
                survive *= 1.0 - bridge_hit(prev, next, h);
                prev = next;
            }
            hits.push(1.0 - survive);
        }
        let exact = (-1.0f64).exp();
        assert!((hits.mean() - exact).abs() < 4.0 * hits.std_err(), "{} vs {exact}", hits.mean());
    }

    #[test]
    fn bridge_minimum_law() {
        // P{min <= 0} must equal the hit probability exp(-2xy/dt).
        let streams = PathStreams::new(3);
        let mut rng = streams.path(0);
        let (x, y, dt) = (0.6, 0.9, 1.5);
        let n = 200_000;
        let hits = (0..n).filter(|_| bridge_minimum(&mut rng, x, y, dt) <= 0.0).count();
        let p = hits as f64 / n as f64;
        let exact = bridge_hit(x, y, dt);
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se);
    }

    #[test]
    fn sim_config_validation() {
        assert!(cfg(0, 10, 0).validate().is_err());
        assert!(cfg(10, 0, 0).validate().is_err());
        assert!(SimConfig { workers: 0, ..cfg(10, 10, 0) }.validate().is_err());
        let huge = cfg(u64::MAX / 2, 1000, 0);
        assert!(matches!(huge.check_budget(1), Err(Error::SimulationBudget(_))));
    }

    #[test]
    fn event_spec_validation() {
        let w = iv(1.0, 2.0);
        assert!(EventSpec::avoid(w, BandQuery::new(0.0, 0.0).unwrap()).is_err());
        assert!(EventSpec::neg_moment(w, 1.0).is_err());
        assert!(EventSpec::new(EventKind::SmallInf, w, Some(BandQuery::new(1.0, 0.3).unwrap()), None).is_err());
        assert!(EventSpec::new(EventKind::ZeroTouch, w, None, None).is_err());
        assert!(estimate_neg_moment(w, -0.5, cfg(10, 10, 0)).is_err());
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (l, r) = xs.split_at(313);
        let mut a = Moments::default();
        l.iter().for_each(|&x| a.push(x));
        let mut b = Moments::default();
        r.iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert!((merged.mean() - all.mean()).abs() < 1e-12);
        assert!((merged.std_err() - all.std_err()).abs() < 1e-12);
    }

    #[test]
    fn zero_touch_small_sample() {
        let e = estimate(EventSpec::zero_touch(iv(1.0, 2.0), 0.0).unwrap(), cfg(40_000, 100, 1)).unwrap();
        assert!((e.mean - 0.5).abs() < 4.0 * e.std_err, "{e:?}");
    }

    #[test]
    fn wide_band_is_never_avoided() {
        let e = estimate(
            EventSpec::avoid(iv(1.0, 2.0), BandQuery::new(0.0, 50.0).unwrap()).unwrap(),
            cfg(20_000, 50, 1),
        )
        .unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn deterministic_and_worker_invariant() {
        let ev = EventSpec::small_inf(iv(1.0, 2.0), 0.3).unwrap();
        let one = estimate(ev, cfg(10_000, 50, 42)).unwrap();
        let again = estimate(ev, cfg(10_000, 50, 42)).unwrap();
        let four = estimate(ev, SimConfig { workers: 4, ..cfg(10_000, 50, 42) }).unwrap();
        assert_eq!(one, again);
        assert_eq!(one, four);
        let other = estimate(ev, cfg(10_000, 50, 43)).unwrap();
        assert_ne!(one.mean, other.mean);
    }

    #[test]
    fn degenerate_window_events() {
        let point = iv(1.0, 1.0);
        let e = estimate(EventSpec::zero_touch(point, 0.0).unwrap(), cfg(1000, 10, 0)).unwrap();
        assert_eq!(e.mean, 0.0);
        let e = estimate_neg_moment(point, 0.0, cfg(1000, 10, 0)).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn neg_moment_alpha_zero_is_no_zero_probability() {
        let e = estimate_neg_moment(iv(1.0, 2.0), 0.0, cfg(40_000, 200, 5)).unwrap();
        assert!((e.mean - 0.5).abs() < 4.0 * e.std_err);
    }
}
