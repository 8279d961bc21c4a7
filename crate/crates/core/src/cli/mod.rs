//! Command-line front end. `run` parses an argument vector, evaluates one
//! command and returns the rendered records together with the exit code.

pub mod record;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};

use crate::envelope::{envelope_experiment, summability_check, Role, SequenceFamily};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate, estimate_neg_moment, EventSpec, SimConfig};
use crate::{
    neg_moment_upper_bound, small_inf_upper_bound, touch_upper_bound, touch_upper_bound_level_free, BandQuery,
    BandSolver, BoundConfig, Evaluation, Interval, Quadrature,
};

pub use record::{Format, Provenance, Record};

/// Exit code, standard output and standard error of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "bminf",
    version,
    about = "Laws, bounds and simulations for inf |W(t) - M| over a time window [a, b]"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an exact probability by quadrature or closed form
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Evaluate an explicit upper bound
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Estimate a probability or moment by simulation
    #[command(subcommand)]
    Mc(McCmd),
    /// Envelope sequences for inf |W| along a partition of the half-line
    #[command(subcommand)]
    Envelope(EnvelopeCmd),
}

#[derive(Args, Debug, Clone, Copy)]
struct Window {
    /// Left end of the window, a > 0
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    /// Right end of the window, b >= a
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
}

#[derive(Args, Debug, Clone, Copy)]
struct Output {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Clone, Copy)]
struct Precision {
    /// Absolute tolerance of the adaptive quadrature
    #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
    tol: f64,
}

#[derive(Args, Debug, Clone, Copy)]
struct Sim {
    /// Number of simulated paths
    #[arg(long, default_value_t = 1_000_000)]
    paths: u64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid steps per window
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Worker threads; the estimate does not depend on this
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl Sim {
    fn config(self) -> SimConfig {
        SimConfig {
            n_paths: self.paths,
            steps_per_interval: self.steps,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

#[derive(Subcommand, Debug)]
enum EvalCmd {
    /// P{inf_[a,b] |W - M| >= c}
    ///
    /// Conditions on W(a) and applies the reflection principle on [a, b]:
    /// E[1{|W(a) - M| >= c} (1 - 2 psi((|W(a) - M| - c)/sqrt(b - a)))], where psi is
    /// the standard Gaussian upper tail. Requires c > 0.
    Avoid {
        #[command(flatten)]
        window: Window,
        /// Band centre M
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        /// Band half-width c > 0
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
    /// P{inf_[a,b] |W - M| > 0}
    ///
    /// E[1 - 2 psi(|W(a) - M|/sqrt(b - a))], the probability that W does not
    /// reach level M during [a, b].
    InfPositive {
        #[command(flatten)]
        window: Window,
        /// Level M
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
    /// P{inf_[a,b] |W - M| = 0}
    ///
    /// E[2 psi(|W(a) - M|/sqrt(b - a))] by quadrature; for M = 0 the exact value
    /// (2/pi) arctan(sqrt((b - a)/a)) is returned.
    ZeroTouch {
        #[command(flatten)]
        window: Window,
        /// Level M
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
    /// P{inf_[a,b] |W - M| = 0} from the arctan representation
    ///
    /// 1 - (2/pi) exp(-M^2/(2a)) arctan(sqrt(a/(b - a)))
    ///   - sqrt(2/pi) (|M|/sqrt(a)) int_0^sqrt(a/b) exp(-M^2 w^2/(2a)) erf(|M| sqrt(1 - w^2)/sqrt(2a)) dw.
    ZeroTouchClosed {
        #[command(flatten)]
        window: Window,
        /// Level M
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
    /// P{W has no zero in [a, b]} = (2/pi) arcsin(sqrt(a/b))
    NoZero {
        #[command(flatten)]
        window: Window,
        #[command(flatten)]
        output: Output,
    },
    /// P{0 < inf_[a,b] |W| < c}
    ///
    /// P{no zero in [a, b]} - P{inf_[a,b] |W| >= c}, with both terms integrated
    /// against the law of W(a).
    SmallInf {
        #[command(flatten)]
        window: Window,
        /// Threshold c > 0
        #[arg(long, visible_alias = "eta", allow_negative_numbers = true)]
        c: f64,
        #[command(flatten)]
        precision: Precision,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand, Debug)]
enum BoundCmd {
    /// C min(1, sqrt((b - a)/a) exp(-M^2/(8 max(a, b - a)))) >= P{inf |W - M| = 0}
    ///
    /// Without --m the level-free form C min(1, sqrt((b - a)/a)) is returned.
    Touch {
        #[command(flatten)]
        window: Window,
        /// Level M
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
        /// Absolute constant C
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        constant: f64,
        #[command(flatten)]
        output: Output,
    },
    /// (16 eta/sqrt(2 pi)) min(1/sqrt(b - a), 1/sqrt(a)) >= P{0 < inf |W| <= eta}
    SmallInf {
        #[command(flatten)]
        window: Window,
        /// Threshold eta > 0
        #[arg(long, allow_negative_numbers = true)]
        eta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// (47/(1 - alpha)) min(1/sqrt(b - a), 1/sqrt(a)) + 1 >= E[beta^-alpha 1{beta > 0}]
    ///
    /// beta = inf_[a,b] |W|, 0 <= alpha < 1.
    NegMoment {
        #[command(flatten)]
        window: Window,
        /// Exponent 0 <= alpha < 1
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand, Debug)]
enum McCmd {
    /// Simulated P{inf_[a,b] |W - M| >= c}
    ///
    /// Each path is weighted by the product of Brownian-bridge survival
    /// factors 1 - exp(-2 x y/dt) over its grid, so the estimate carries no
    /// discretisation bias.
    Avoid {
        #[command(flatten)]
        window: Window,
        /// Level M
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        /// Band half-width c > 0
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
    /// Simulated P{inf_[a,b] |W - M| = 0}, bridge-weighted
    ZeroTouch {
        #[command(flatten)]
        window: Window,
        /// Level M
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
    /// Simulated P{0 < inf_[a,b] |W| < eta}, bridge-weighted
    SmallInf {
        #[command(flatten)]
        window: Window,
        /// Threshold eta > 0
        #[arg(long, allow_negative_numbers = true)]
        eta: f64,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
    /// Simulated E[beta^-alpha 1{beta > 0}], beta = inf_[a,b] |W|
    ///
    /// beta is sampled from exact bridge minima on every grid segment.
    NegMoment {
        #[command(flatten)]
        window: Window,
        /// Exponent 0 <= alpha < 1
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand, Debug)]
enum EnvelopeCmd {
    /// Classify sum_N eta_N min(1/sqrt(T_{N+1} - T_N), 1/sqrt(T_N)), T_N = theta_1 + ... + theta_N
    ///
    /// Families: pow:<coeff>:<exponent> (coeff k^exponent),
    /// geo:<coeff>:<ratio> (coeff ratio^(k-1)), list:<t1>,<t2>,...
    /// Convergence implies that almost surely every late window [T_N, T_{N+1}]
    /// contains a zero of W or keeps |W| >= eta_N.
    Check {
        /// Gap family theta_k
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        /// Envelope family eta_N
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        /// Number of terms in the reported partial sum
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate paths and count windows with no zero and inf |W| < eta_N
    ///
    /// One record per window I_N = [T_N, T_{N+1}], with the bound
    /// (16 eta_N/sqrt(2 pi)) min(1/sqrt(T_{N+1} - T_N), 1/sqrt(T_N)).
    Simulate {
        /// Gap family theta_k
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        /// Envelope family eta_N
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        /// Last window index N_max
        #[arg(long)]
        n_max: usize,
        /// Number of simulated paths
        #[arg(long, default_value_t = 10_000)]
        paths: u64,
        /// Master seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid steps per window
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// Parses `argv` (including the program name) and executes the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(cli.command) {
        Ok((records, format)) => Outcome {
            code: EXIT_OK,
            stdout: record::render(&records, format),
            stderr: String::new(),
        },
        Err(e) => {
            let code = match e {
                Error::Domain(_) => EXIT_USAGE,
                Error::BudgetExceeded { .. } | Error::SimulationBudget(_) => EXIT_NUMERIC,
            };
            Outcome {
                code,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("--{name} must be finite, got {x}")))
    }
}

fn solver(precision: Precision) -> Result<BandSolver> {
    let tol = finite("tol", precision.tol)?;
    Ok(BandSolver::new(Quadrature::new(tol)?))
}

fn window(w: Window) -> Result<Interval> {
    Interval::new(finite("a", w.a)?, finite("b", w.b)?)
}

fn windowed(command: &str, value: f64, provenance: Provenance, w: Window) -> Record {
    Record::new(command, value, provenance).input("a", w.a).input("b", w.b)
}

fn analytic(command: &str, eval: Evaluation, w: Window, precision: Precision, exact: bool) -> Record {
    let provenance = if exact || eval.degenerate {
        Provenance::ClosedForm
    } else {
        Provenance::Quadrature
    };
    windowed(command, eval.value(), provenance, w)
        .flag("degenerate", eval.degenerate)
        .flag("tol", precision.tol)
}

fn simulated(command: &str, est: crate::McEstimate, w: Window, sim: Sim) -> Record {
    windowed(command, est.mean, Provenance::MonteCarlo, w)
        .std_err(est.std_err)
        .flag("paths", sim.paths)
        .flag("seed", sim.seed)
        .flag("steps", sim.steps)
        .flag("workers", sim.workers)
}

fn execute(command: Command) -> Result<(Vec<Record>, Format)> {
    match command {
        Command::Eval(cmd) => eval(cmd),
        Command::Bound(cmd) => bound(cmd),
        Command::Mc(cmd) => mc(cmd),
        Command::Envelope(cmd) => envelope(cmd),
    }
}

fn eval(cmd: EvalCmd) -> Result<(Vec<Record>, Format)> {
    let (record, output) = match cmd {
        EvalCmd::Avoid {
            window: w,
            m,
            c,
            precision,
            output,
        } => {
            let q = BandQuery::new(finite("m", m)?, finite("c", c)?)?;
            let e = solver(precision)?.avoid_prob(window(w)?, q)?;
            let r = analytic("eval avoid", e, w, precision, false).input("m", m).input("c", c);
            (r, output)
        }
        EvalCmd::InfPositive {
            window: w,
            m,
            precision,
            output,
        } => {
            let e = solver(precision)?.inf_positive_prob(window(w)?, finite("m", m)?)?;
            let r = analytic("eval inf-positive", e, w, precision, m == 0.0).input("m", m);
            (r, output)
        }
        EvalCmd::ZeroTouch {
            window: w,
            m,
            precision,
            output,
        } => {
            let e = solver(precision)?.zero_touch_prob(window(w)?, finite("m", m)?)?;
            let r = analytic("eval zero-touch", e, w, precision, m == 0.0).input("m", m);
            (r, output)
        }
        EvalCmd::ZeroTouchClosed {
            window: w,
            m,
            precision,
            output,
        } => {
            let e = solver(precision)?.zero_touch_prob_closed(window(w)?, finite("m", m)?)?;
            let r = analytic("eval zero-touch-closed", e, w, precision, m == 0.0).input("m", m);
            (r, output)
        }
        EvalCmd::NoZero { window: w, output } => {
            let iv = window(w)?;
            let p = BandSolver::default().no_zero_prob(iv);
            let r = windowed("eval no-zero", p.value(), Provenance::ClosedForm, w)
                .flag("degenerate", iv.is_degenerate());
            (r, output)
        }
        EvalCmd::SmallInf {
            window: w,
            c,
            precision,
            output,
        } => {
            let e = solver(precision)?.small_inf_prob(window(w)?, finite("c", c)?)?;
            let r = analytic("eval small-inf", e, w, precision, false).input("c", c);
            (r, output)
        }
    };
    Ok((vec![record], output.format))
}

fn bound(cmd: BoundCmd) -> Result<(Vec<Record>, Format)> {
    let (record, output) = match cmd {
        BoundCmd::Touch {
            window: w,
            m,
            constant,
            output,
        } => {
            let cfg = BoundConfig::new(finite("constant", constant)?)?;
            let iv = window(w)?;
            let r = match m {
                Some(m) => windowed(
                    "bound touch",
                    touch_upper_bound(iv, finite("m", m)?, cfg)?,
                    Provenance::Bound,
                    w,
                )
                .input("m", m),
                None => windowed("bound touch", touch_upper_bound_level_free(iv, cfg)?, Provenance::Bound, w),
            };
            (r.flag("constant", constant), output)
        }
        BoundCmd::SmallInf { window: w, eta, output } => {
            let v = small_inf_upper_bound(window(w)?, finite("eta", eta)?)?;
            (windowed("bound small-inf", v, Provenance::Bound, w).input("eta", eta), output)
        }
        BoundCmd::NegMoment {
            window: w,
            alpha,
            output,
        } => {
            let v = neg_moment_upper_bound(window(w)?, finite("alpha", alpha)?)?;
            (windowed("bound neg-moment", v, Provenance::Bound, w).input("alpha", alpha), output)
        }
    };
    Ok((vec![record], output.format))
}

fn mc(cmd: McCmd) -> Result<(Vec<Record>, Format)> {
    let (record, output) = match cmd {
        McCmd::Avoid {
            window: w,
            m,
            c,
            sim,
            output,
        } => {
            let event = EventSpec::avoid(window(w)?, BandQuery::new(finite("m", m)?, finite("c", c)?)?)?;
            let est = estimate(event, sim.config())?;
            (simulated("mc avoid", est, w, sim).input("m", m).input("c", c), output)
        }
        McCmd::ZeroTouch {
            window: w,
            m,
            sim,
            output,
        } => {
            let est = estimate(EventSpec::zero_touch(window(w)?, finite("m", m)?)?, sim.config())?;
            (simulated("mc zero-touch", est, w, sim).input("m", m), output)
        }
        McCmd::SmallInf {
            window: w,
            eta,
            sim,
            output,
        } => {
            let est = estimate(EventSpec::small_inf(window(w)?, finite("eta", eta)?)?, sim.config())?;
            (simulated("mc small-inf", est, w, sim).input("eta", eta), output)
        }
        McCmd::NegMoment {
            window: w,
            alpha,
            sim,
            output,
        } => {
            let est = estimate_neg_moment(window(w)?, finite("alpha", alpha)?, sim.config())?;
            (simulated("mc neg-moment", est, w, sim).input("alpha", alpha), output)
        }
    };
    Ok((vec![record], output.format))
}

fn envelope(cmd: EnvelopeCmd) -> Result<(Vec<Record>, Format)> {
    match cmd {
        EnvelopeCmd::Check {
            theta,
            eta,
            horizon,
            output,
        } => {
            let theta_f = SequenceFamily::parse(Role::Theta, &theta)?;
            let eta_f = SequenceFamily::parse(Role::Eta, &eta)?;
            let report = summability_check(&theta_f, &eta_f, horizon)?;
            let r = Record::new("envelope check", report.partial_sum, Provenance::ClosedForm)
                .input("theta", theta)
                .input("eta", eta)
                .input("horizon", horizon)
                .flag("verdict", report.verdict.to_string())
                .flag("rationale", report.rationale)
                .flag("terms_used", report.terms_used)
                .flag("start_index", report.start_index);
            Ok((vec![r], output.format))
        }
        EnvelopeCmd::Simulate {
            theta,
            eta,
            n_max,
            paths,
            seed,
            steps,
            workers,
            output,
        } => {
            let theta_f = SequenceFamily::parse(Role::Theta, &theta)?;
            let eta_f = SequenceFamily::parse(Role::Eta, &eta)?;
            let cfg = SimConfig {
                n_paths: paths,
                steps_per_interval: steps,
                seed,
                workers,
            };
            let table = envelope_experiment(&theta_f, &eta_f, n_max, cfg)?;
            let records = table
                .rows
                .iter()
                .map(|row| {
                    Record::new("envelope simulate", row.frequency, Provenance::MonteCarlo)
                        .std_err(row.std_err)
                        .input("theta", theta.clone())
                        .input("eta", eta.clone())
                        .input("n", row.n)
                        .input("t_start", row.t_start)
                        .input("t_end", row.t_end)
                        .input("eta_n", row.eta)
                        .flag("violations", row.violations)
                        .flag("bound", row.bound)
                        .flag("within_bound", row.frequency <= row.bound + 3.0 * row.std_err)
                        .flag("violating_beyond", table.fraction_violating_beyond(row.n))
                        .flag("tail_bound", table.tail_bound_sum(row.n))
                        .flag("paths", paths)
                        .flag("seed", seed)
                        .flag("steps", steps)
                        .flag("workers", workers)
                })
                .collect();
            Ok((records, output.format))
        }
    }
}
