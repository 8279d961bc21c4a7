//! Lower envelopes for `inf_{I_N} |W|` along a partition of the half-line.
//!
//! Given gaps `theta_k >= 0` with partial sums `T_N` and candidate envelope
//! levels `eta_N`, almost surely every late window `I_N = [T_N, T_{N+1}]`
//! either contains a zero of `W` or keeps `|W| >= eta_N`, provided
//! `sum_N eta_N min(1/sqrt(T_{N+1} - T_N), 1/sqrt(T_N))` converges. This module
//! builds the partition, classifies that series for the built-in families,
//! and runs the matching path experiment.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bounds::small_inf_bound_unchecked;
use crate::error::{Error, Result};
use crate::montecarlo::{bridge_minimum, run_blocks, PathStreams, SimConfig};
use crate::Interval;

use rand::Rng;
use rand_distr::StandardNormal;

/// Which sequence of the envelope statement a family describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Theta,
    Eta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FamilyKind {
    /// `coeff * k^exponent`
    PowerLaw { coeff: f64, exponent: f64 },
    /// `coeff * ratio^(k - 1)`
    Geometric { coeff: f64, ratio: f64 },
    /// Terms listed explicitly, `k = 1, 2, ...`
    Explicit(Vec<f64>),
}

/// A nonnegative sequence indexed from `k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceFamily {
    kind: FamilyKind,
    role: Role,
}

impl SequenceFamily {
    pub fn power_law(role: Role, coeff: f64, exponent: f64) -> Result<Self> {
        if !coeff.is_finite() || coeff < 0.0 || !exponent.is_finite() {
            return Err(Error::domain(format!(
                "power law needs finite coeff >= 0 and finite exponent, got ({coeff}, {exponent})"
            )));
        }
        Ok(SequenceFamily {
            kind: FamilyKind::PowerLaw { coeff, exponent },
            role,
        })
    }

    pub fn geometric(role: Role, coeff: f64, ratio: f64) -> Result<Self> {
        if !coeff.is_finite() || coeff < 0.0 || !ratio.is_finite() || !(ratio > 0.0) {
            return Err(Error::domain(format!(
                "geometric family needs finite coeff >= 0 and ratio > 0, got ({coeff}, {ratio})"
            )));
        }
        Ok(SequenceFamily {
            kind: FamilyKind::Geometric { coeff, ratio },
            role,
        })
    }

    pub fn explicit(role: Role, terms: Vec<f64>) -> Result<Self> {
        if let Some(bad) = terms.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::domain(format!("explicit terms must be finite and >= 0, found {bad}")));
        }
        Ok(SequenceFamily {
            kind: FamilyKind::Explicit(terms),
            role,
        })
    }

    /// Parses `pow:<coeff>:<exponent>`, `geo:<coeff>:<ratio>` or
    /// `list:<t1>,<t2>,...`.
    pub fn parse(role: Role, text: &str) -> Result<Self> {
        let bad = || Error::domain(format!("cannot parse sequence family '{text}'"));
        let number = |s: &str| f64::from_str(s.trim()).map_err(|_| bad());
        let (tag, rest) = text.split_once(':').ok_or_else(bad)?;
        match tag {
            "pow" | "geo" => {
                let (x, y) = rest.split_once(':').ok_or_else(bad)?;
                let (x, y) = (number(x)?, number(y)?);
                if tag == "pow" {
                    Self::power_law(role, x, y)
                } else {
                    Self::geometric(role, x, y)
                }
            }
            "list" => {
                let terms = rest.split(',').map(number).collect::<Result<Vec<_>>>()?;
                Self::explicit(role, terms)
            }
            _ => Err(bad()),
        }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Number of available terms (`None` for the infinite families).
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Term `k >= 1`.
    pub fn term(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::domain("sequence terms are indexed from 1"));
        }
        let value = match &self.kind {
            FamilyKind::PowerLaw { coeff, exponent } => coeff * (k as f64).powf(*exponent),
            FamilyKind::Geometric { coeff, ratio } => coeff * ratio.powf((k - 1) as f64),
            FamilyKind::Explicit(v) => *v.get(k - 1).ok_or_else(|| {
                Error::domain(format!("explicit {:?} list has only {} terms, term {k} requested", self.role, v.len()))
            })?,
        };
        if !value.is_finite() {
            return Err(Error::domain(format!("{:?} term {k} is not finite", self.role)));
        }
        Ok(value)
    }
}

impl fmt::Display for SequenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FamilyKind::PowerLaw { coeff, exponent } => write!(f, "pow:{coeff}:{exponent}"),
            FamilyKind::Geometric { coeff, ratio } => write!(f, "geo:{coeff}:{ratio}"),
            FamilyKind::Explicit(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", items.join(","))
            }
        }
    }
}

/// Whether the partition times exhaust the half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Growth {
    Unbounded,
    Bounded,
    /// Explicit list; only a finite horizon is known.
    FiniteHorizon,
}

/// `T_1 <= T_2 <= ... <= T_{N+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    times: Vec<f64>,
    growth: Growth,
    /// Indices `N` (1-based) whose window `I_N` has zero length.
    zero_length: Vec<usize>,
}

impl Partition {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn zero_length(&self) -> &[usize] {
        &self.zero_length
    }

    /// `T_n`, 1-based.
    pub fn time(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.times.get(i).copied())
    }

    /// `I_n = [T_n, T_{n+1}]`.
    pub fn window(&self, n: usize) -> Option<(f64, f64)> {
        Some((self.time(n)?, self.time(n + 1)?))
    }

    /// First `N` with `T_N > 0`.
    pub fn first_positive(&self) -> Option<usize> {
        self.times.iter().position(|&t| t > 0.0).map(|i| i + 1)
    }
}

fn growth_of(theta: &SequenceFamily) -> Growth {
    match *theta.kind() {
        FamilyKind::PowerLaw { coeff, exponent } if coeff > 0.0 && exponent >= -1.0 => Growth::Unbounded,
        FamilyKind::Geometric { coeff, ratio } if coeff > 0.0 && ratio >= 1.0 => Growth::Unbounded,
        FamilyKind::Explicit(_) => Growth::FiniteHorizon,
        _ => Growth::Bounded,
    }
}

/// Partial sums `T_1, ..., T_{n+1}` of `theta`.
pub fn cumulative_times(theta: &SequenceFamily, n: usize) -> Result<Partition> {
    if n == 0 {
        return Err(Error::domain("cumulative_times needs N >= 1"));
    }
    let mut times = Vec::with_capacity(n + 1);
    let mut zero_length = Vec::new();
    let mut total = 0.0;
    for k in 1..=n + 1 {
        let gap = theta.term(k)?;
        if k >= 2 && gap == 0.0 {
            zero_length.push(k - 1);
        }
        total += gap;
        times.push(total);
    }
    Ok(Partition {
        times,
        growth: growth_of(theta),
        zero_length,
    })
}

/// `min(1/sqrt(T_{n+1} - T_n), 1/sqrt(T_n))`; a zero-length window or
/// `T_n = 0` makes the corresponding branch infinite.
pub fn theorem_weight(p: &Partition, n: usize) -> Result<f64> {
    let (lo, hi) = p
        .window(n)
        .ok_or_else(|| Error::domain(format!("window {n} is outside a partition of {} times", p.times.len())))?;
    let width = hi - lo;
    let by_width = if width > 0.0 { width.sqrt().recip() } else { f64::INFINITY };
    let by_time = if lo > 0.0 { lo.sqrt().recip() } else { f64::INFINITY };
    let w = by_width.min(by_time);
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::domain(format!("weight of window {n} is not finite (T_N = 0 and zero length)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub verdict: Verdict,
    pub partial_sum: f64,
    pub terms_used: usize,
    pub rationale: String,
    /// First window index included in the partial sum (first `T_N > 0`).
    pub start_index: usize,
}

/// Terms behave like `rate^N * N^power * (ln N)^log_power`.
#[derive(Debug, Clone, Copy)]
struct Asymptotics {
    rate: f64,
    power: f64,
    log_power: f64,
}

const CLOSE: f64 = 1e-12;

fn weight_asymptotics(theta: &SequenceFamily) -> Option<Asymptotics> {
    match *theta.kind() {
        FamilyKind::PowerLaw { coeff, exponent } if coeff > 0.0 => {
            if exponent > -1.0 {
                // T_N ~ N^(p+1) dominates theta_{N+1} ~ N^p
                Some(Asymptotics {
                    rate: 1.0,
                    power: -(exponent + 1.0) / 2.0,
                    log_power: 0.0,
                })
            } else if exponent == -1.0 {
                Some(Asymptotics {
                    rate: 1.0,
                    power: 0.0,
                    log_power: -0.5,
                })
            } else {
                None
            }
        }
        FamilyKind::Geometric { coeff, ratio } if coeff > 0.0 => {
            if ratio > 1.0 {
                Some(Asymptotics {
                    rate: ratio.sqrt().recip(),
                    power: 0.0,
                    log_power: 0.0,
                })
            } else if ratio == 1.0 {
                Some(Asymptotics {
                    rate: 1.0,
                    power: -0.5,
                    log_power: 0.0,
                })
            } else {
                None
            }
        }
        _ => None,
    }
}

/// `(rate, power)` of `eta_N`, or `None` when eta vanishes identically.
fn eta_asymptotics(eta: &SequenceFamily) -> Option<Option<(f64, f64)>> {
    match *eta.kind() {
        FamilyKind::PowerLaw { coeff, .. } | FamilyKind::Geometric { coeff, .. } if coeff == 0.0 => Some(None),
        FamilyKind::PowerLaw { exponent, .. } => Some(Some((1.0, exponent))),
        FamilyKind::Geometric { ratio, .. } => Some(Some((ratio, 0.0))),
        FamilyKind::Explicit(_) => None,
    }
}

/// Renders `x` as a small fraction when it is one (`1.5 -> "3/2"`).
fn fraction(x: f64) -> String {
    for den in 1..=12u32 {
        let num = x * den as f64;
        if (num - num.round()).abs() < 1e-9 {
            let num = num.round() as i64;
            return if den == 1 { format!("{num}") } else { format!("{num}/{den}") };
        }
    }
    format!("{x}")
}

fn classify(theta: &SequenceFamily, eta: &SequenceFamily) -> (Verdict, String) {
    let Some(eta_shape) = eta_asymptotics(eta) else {
        return (Verdict::Inconclusive, "explicit eta list: numeric partial sum only".into());
    };
    if matches!(theta.kind(), FamilyKind::Explicit(_)) {
        return (Verdict::Inconclusive, "explicit theta list: numeric partial sum only".into());
    }
    let Some(w) = weight_asymptotics(theta) else {
        return (
            Verdict::Inconclusive,
            "partition times stay bounded; the hypothesis T_N -> infinity fails".into(),
        );
    };
    let Some((eta_rate, eta_power)) = eta_shape else {
        return (Verdict::Converges, "eta vanishes identically".into());
    };

    let rate = w.rate * eta_rate;
    if (rate - 1.0).abs() > CLOSE {
        let verdict = if rate < 1.0 { Verdict::Converges } else { Verdict::Diverges };
        return (verdict, format!("geometric ratio {rate}"));
    }
    let p = -(w.power + eta_power);
    if w.log_power == 0.0 {
        let verdict = if p > 1.0 + CLOSE { Verdict::Converges } else { Verdict::Diverges };
        return (verdict, format!("p-series {}", fraction(p)));
    }
    // N^-p (ln N)^log_power with log_power = -1/2: converges only for p > 1.
    let verdict = if p > 1.0 + CLOSE { Verdict::Converges } else { Verdict::Diverges };
    (verdict, format!("p-series {} with (ln N)^{}", fraction(p), fraction(w.log_power)))
}

/// Decides `sum_N eta_N min(1/sqrt(T_{N+1} - T_N), 1/sqrt(T_N)) < infinity`
/// analytically for power-law and geometric families and reports the partial
/// sum over `horizon` terms either way.
pub fn summability_check(theta: &SequenceFamily, eta: &SequenceFamily, horizon: usize) -> Result<SummabilityReport> {
    if horizon == 0 {
        return Err(Error::domain("summability_check needs horizon >= 1"));
    }
    let mut n_windows = horizon;
    if let Some(len) = theta.len() {
        n_windows = n_windows.min(len.saturating_sub(1));
    }
    if let Some(len) = eta.len() {
        n_windows = n_windows.min(len);
    }
    let (verdict, rationale) = classify(theta, eta);
    if n_windows == 0 {
        return Ok(SummabilityReport {
            verdict,
            partial_sum: 0.0,
            terms_used: 0,
            rationale,
            start_index: 1,
        });
    }
    let partition = cumulative_times(theta, n_windows)?;
    let start = partition.first_positive().unwrap_or(n_windows + 1);
    let mut partial_sum = 0.0;
    let mut terms_used = 0;
    for n in start..=n_windows {
        partial_sum += eta.term(n)? * theorem_weight(&partition, n)?;
        terms_used += 1;
    }
    Ok(SummabilityReport {
        verdict,
        partial_sum,
        terms_used,
        rationale,
        start_index: start,
    })
}

/// Empirical violation statistics for one window `I_N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationRow {
    pub n: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub eta: f64,
    pub violations: u64,
    pub frequency: f64,
    pub std_err: f64,
    /// `16 eta / sqrt(2 pi) * min(1/sqrt(T_{N+1} - T_N), 1/sqrt(T_N))`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationTable {
    pub rows: Vec<ViolationRow>,
    /// Per path, the largest `N` whose window was violated.
    pub largest_violation: Vec<Option<usize>>,
    pub n_paths: u64,
    pub seed: u64,
    /// First simulated window (first `T_N > 0`).
    pub start_index: usize,
}

impl ViolationTable {
    /// Fraction of paths with some violation at `N > n0`.
    pub fn fraction_violating_beyond(&self, n0: usize) -> f64 {
        let count = self
            .largest_violation
            .iter()
            .filter(|v| v.is_some_and(|n| n > n0))
            .count();
        count as f64 / self.n_paths as f64
    }

    /// `sum_{N > n0} bound_N` over the simulated windows.
    pub fn tail_bound_sum(&self, n0: usize) -> f64 {
        self.rows.iter().filter(|r| r.n > n0).map(|r| r.bound).sum()
    }
}

/// Largest number of windows an experiment may track.
pub const MAX_WINDOWS: usize = 10_000_000;
/// Largest number of paths whose per-path summary is retained.
pub const MAX_TRACKED_PATHS: u64 = 100_000_000;

struct BlockTally {
    violations: Vec<u64>,
    largest: Vec<Option<usize>>,
}

/// Simulates `cfg.n_paths` continuous paths over `[T_start, T_{n_max+1}]` and
/// records, for every window, whether it has no zero and `inf |W| < eta_N`.
pub fn envelope_experiment(
    theta: &SequenceFamily,
    eta: &SequenceFamily,
    n_max: usize,
    cfg: SimConfig,
) -> Result<ViolationTable> {
    cfg.validate()?;
    if n_max == 0 {
        return Err(Error::domain("envelope_experiment needs N_max >= 1"));
    }
    if n_max > MAX_WINDOWS {
        return Err(Error::SimulationBudget(format!("N_max = {n_max} exceeds {MAX_WINDOWS} windows")));
    }
    if cfg.n_paths > MAX_TRACKED_PATHS {
        return Err(Error::SimulationBudget(format!(
            "{} paths exceeds the {MAX_TRACKED_PATHS} per-path records kept",
            cfg.n_paths
        )));
    }
    cfg.check_budget(n_max as u64)?;

    let partition = cumulative_times(theta, n_max)?;
    let start = partition
        .first_positive()
        .filter(|&s| s <= n_max)
        .ok_or_else(|| Error::domain("partition never leaves 0 within N_max windows"))?;

    let mut windows = Vec::with_capacity(n_max + 1 - start);
    for n in start..=n_max {
        let (lo, hi) = partition.window(n).expect("partition covers n_max + 1 times");
        windows.push((n, lo, hi, eta.term(n)?));
    }

    let steps = cfg.steps_per_interval;
    let streams = PathStreams::new(cfg.seed);
    let t0 = windows[0].1;
    let tallies = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut tally = BlockTally {
            violations: vec![0; windows.len()],
            largest: Vec::with_capacity((range.end - range.start) as usize),
        };
        for path in range {
            let mut rng = streams.path(path);
            let mut w = t0.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let mut largest = None;
            for (slot, &(n, lo, hi, level)) in windows.iter().enumerate() {
                let width = hi - lo;
                let mut zero = w == 0.0;
                let mut inf = w.abs();
                if width > 0.0 {
                    let dt = width / steps as f64;
                    let sd = dt.sqrt();
                    for _ in 0..steps {
                        let next = w + sd * rng.sample::<f64, _>(StandardNormal);
                        if w * next <= 0.0 {
                            zero = true;
                        } else if !zero {
                            let m = bridge_minimum(&mut rng, w.abs(), next.abs(), dt);
                            if m <= 0.0 {
                                zero = true;
                            } else {
                                inf = inf.min(m);
                            }
                        }
                        w = next;
                    }
                }
                if !zero && inf < level {
                    tally.violations[slot] += 1;
                    largest = Some(n);
                }
            }
            tally.largest.push(largest);
        }
        tally
    })?;

    let mut violations = vec![0u64; windows.len()];
    let mut largest_violation = Vec::with_capacity(cfg.n_paths as usize);
    for tally in tallies {
        for (total, v) in violations.iter_mut().zip(&tally.violations) {
            *total += v;
        }
        largest_violation.extend(tally.largest);
    }

    let n = cfg.n_paths as f64;
    let rows = windows
        .iter()
        .zip(&violations)
        .map(|(&(idx, lo, hi, level), &count)| {
            let frequency = count as f64 / n;
            let std_err = if cfg.n_paths > 1 {
                (frequency * (1.0 - frequency) / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let bound = if level > 0.0 {
                small_inf_bound_unchecked(Interval::new(lo, hi).expect("0 < T_N <= T_N+1"), level)
            } else {
                0.0
            };
            ViolationRow {
                n: idx,
                t_start: lo,
                t_end: hi,
                eta: level,
                violations: count,
                frequency,
                std_err,
                bound,
            }
        })
        .collect();

    Ok(ViolationTable {
        rows,
        largest_violation,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        start_index: start,
    })
}
