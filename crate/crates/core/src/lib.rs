//! Exact laws, explicit bounds and Monte Carlo oracles for the local infima
//! `inf_{a<=t<=b} |W(t) - M|` of a standard Brownian motion, plus tools to
//! build and test lower-envelope sequences for `inf_{I_N} |W|` over a
//! partition `I_N = [T_N, T_{N+1}]` of the half-line.
//!
//! The analytic layer ([`special`], [`quadrature`], [`band`], [`bounds`]) is
//! generic over [`Real`] (`f32`/`f64`); the aliases below fix it to `f64`,
//! which is what the simulation layer and the CLI use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod bounds;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Interval = band::Interval<f64>;
pub type BandQuery = band::BandQuery<f64>;
pub type Evaluation = band::Evaluation<f64>;
pub type BandSolver = band::BandSolver<f64>;
pub type Probability = special::Probability<f64>;
pub type Quadrature = quadrature::Quadrature<f64>;
pub type IntegrationResult = quadrature::IntegrationResult<f64>;
pub type BoundConfig = bounds::BoundConfig<f64>;

pub use band::{avoid_prob, inf_positive_prob, no_zero_prob, small_inf_prob, zero_touch_prob, zero_touch_prob_closed};
pub use bounds::{neg_moment_upper_bound, small_inf_upper_bound, touch_upper_bound, touch_upper_bound_level_free};
pub use envelope::{
    cumulative_times, envelope_experiment, summability_check, theorem_weight, Partition, Role, SequenceFamily,
    SummabilityReport, Verdict, ViolationTable,
};
pub use montecarlo::{bridge_hit_prob, estimate, estimate_neg_moment, EventKind, EventSpec, McEstimate, SimConfig};
pub use special::{gaussian_pdf, mills_ratio, upper_tail};
