//! Transversality of the power series `g(x) = 1 + Σ (a_k − b_k) x^k` built from
//! pairs of admissible words: on `[0, 1/β + ε]`, `|g(x)| < δ` must force
//! `g′(x) < −δ`.
//!
//! [`epsilon_bound`] gives an explicit admissible ε for `1 < β < 2` and
//! [`check_epsilon_condition`] tests the general sufficient condition.
//! [`verify_transversality`] checks the implication for a concrete δ either
//! by randomized search or by a certified branch-and-bound over coefficient
//! prefixes and x-subintervals; [`find_delta`] scans a geometric grid of δ.

mod search;
mod series;

use serde::Serialize;

pub use search::{
    realize_pair, CoefficientClass, DischargeReason, DischargedBox, Witness, MIN_BOX_WIDTH,
    ROOT_SLICES, SAMPLE_GRID,
};
pub use series::{eval_series, tail_bands, DiffSeries, Interval, TERM_SLACK};

use crate::beta_shift::BetaSystem;
use crate::error::{domain, Error, Result};
use crate::real::Real;
use search::SearchOutcome;

pub const DEFAULT_DEPTH: usize = 25;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_MAX_BOXES: u64 = 50_000_000;

/// Exponents of the δ grid `2^{-4}, …, 2^{-20}` scanned by [`find_delta`].
pub const DELTA_EXPONENTS: std::ops::RangeInclusive<i32> = 4..=20;

/// Explicit ε for `1 < β < 2`:
/// `(16/9)(1 − 1/β)^8 / (32 / log(2/(1 + 1/β)) + 16 / log(2/(1 − 1/β)))²`,
/// clamped into `0 < ε < min{(1 − 1/β)/2, 1/⌊β⌋}`.
pub fn epsilon_bound<T: Real>(beta: T) -> Result<T> {
    if !(beta > T::one() && beta < T::lit(2.0)) {
        return Err(domain(format!("beta must lie in (1, 2), got {beta}")));
    }
    let two = T::lit(2.0);
    let q = T::one() - beta.recip();
    let denom =
        T::lit(32.0) / (two / (T::one() + beta.recip())).ln() + T::lit(16.0) / (two / q).ln();
    let eps = T::lit(16.0) / T::lit(9.0) * q.powi(8) / (denom * denom);
    let cap = (q / two).min(T::one() / beta.floor());
    // Strictly inside the open bound.
    Ok(eps.min(cap * T::lit(0.5)))
}

/// Whether ε satisfies `0 < ε < min{(1 − 1/β)/2, 1/⌊β⌋}` and
/// `2^5⌊β⌋² ε log(⌊β⌋ε) / log((1 + 1/β)/2) + 2^4⌊β⌋² ε < (1 − 1/β)^4`.
pub fn check_epsilon_condition<T: Real>(beta: T, epsilon: T) -> bool {
    if !(beta > T::one()) || !(epsilon > T::zero()) {
        return false;
    }
    let two = T::lit(2.0);
    let q = T::one() - beta.recip();
    let fb = beta.floor();
    if !(epsilon < q / two && epsilon < fb.recip()) {
        return false;
    }
    let fb2 = fb * fb;
    let first =
        T::lit(32.0) * fb2 * epsilon * (fb * epsilon).ln() / ((T::one() + beta.recip()) / two).ln();
    let second = T::lit(16.0) * fb2 * epsilon;
    first + second < q.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Randomized { samples: usize, seed: u64 },
    Certified { max_boxes: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    /// Certified: every box discharged. Randomized: no violation among the samples.
    Verified,
    CounterexampleCandidate,
    /// Certified search ran out of boxes.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    /// `None` for the unrestricted class.
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub interval: Interval,
    pub truncation: usize,
    pub mode: Mode,
    pub status: Status,
    pub witness: Option<Witness>,
    pub boxes_checked: u64,
    pub samples_checked: usize,
    /// Whether ε passed [`check_epsilon_condition`].
    pub epsilon_condition: Option<bool>,
    #[serde(skip)]
    pub certificate: Vec<DischargedBox>,
}

/// A transversality question for a class of series on an x-range.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub class: CoefficientClass<'a>,
    pub x_range: Interval,
    pub delta: f64,
    pub depth: usize,
}

impl Problem<'_> {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(domain("delta must be positive"));
        }
        if self.depth == 0 {
            return Err(domain("truncation depth must be positive"));
        }
        let x = self.x_range;
        if !(x.lo >= 0.0 && x.lo < x.hi && x.hi < 1.0) {
            return Err(domain(format!(
                "x range [{}, {}] must be a nonempty subset of [0, 1)",
                x.lo, x.hi
            )));
        }
        let (tail, _) = tail_bands(self.depth, self.class.digit_bound(), x.hi);
        if 2.0 * tail >= 2.0 * self.delta {
            return Err(Error::TruncationTooShallow {
                depth: self.depth,
                x: x.hi,
                tail_band: 2.0 * tail,
                delta: self.delta,
            });
        }
        Ok(())
    }
}

/// Options for [`verify_problem`].
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Keep every discharged box in the report's certificate.
    pub record_certificate: bool,
}

/// Checks `|g| < δ ⇒ g′ < −δ` on `problem.x_range` for the whole class.
pub fn verify_problem(
    problem: &Problem<'_>,
    mode: Mode,
    options: VerifyOptions,
) -> Result<TransversalityReport> {
    problem.validate()?;
    let beta = match problem.class {
        CoefficientClass::Admissible(sys) => Some(sys.beta()),
        CoefficientClass::Unrestricted { .. } => None,
    };
    let mut report = TransversalityReport {
        beta,
        epsilon: None,
        delta: problem.delta,
        interval: problem.x_range,
        truncation: problem.depth,
        mode,
        status: Status::Verified,
        witness: None,
        boxes_checked: 0,
        samples_checked: 0,
        epsilon_condition: None,
        certificate: Vec::new(),
    };
    match mode {
        Mode::Randomized { samples, seed } => {
            let w = search::randomized(
                problem.class,
                problem.x_range,
                problem.delta,
                problem.depth,
                samples,
                seed,
            )?;
            report.samples_checked = samples;
            if let Some(w) = w {
                report.status = Status::CounterexampleCandidate;
                report.witness = Some(w);
            }
        }
        Mode::Certified { max_boxes } => {
            let run = search::certify(
                problem.class,
                problem.x_range,
                problem.delta,
                problem.depth,
                max_boxes,
                options.record_certificate,
            )?;
            report.boxes_checked = run.boxes;
            report.certificate = run.certificate;
            match run.outcome {
                SearchOutcome::Verified => {}
                SearchOutcome::Exhausted => report.status = Status::Inconclusive,
                SearchOutcome::Witness(w) => {
                    report.status = Status::CounterexampleCandidate;
                    report.witness = Some(w);
                }
            }
        }
    }
    Ok(report)
}

/// Pairs admissible for `sys` on `x ∈ [0, 1/β + ε]`.
///
/// An ε failing [`check_epsilon_condition`] is accepted and flagged in the
/// report rather than rejected.
pub fn verify_transversality(
    sys: &BetaSystem<f64>,
    epsilon: f64,
    delta: f64,
    depth: usize,
    mode: Mode,
) -> Result<TransversalityReport> {
    verify_transversality_with(sys, epsilon, delta, depth, mode, VerifyOptions::default())
}

pub fn verify_transversality_with(
    sys: &BetaSystem<f64>,
    epsilon: f64,
    delta: f64,
    depth: usize,
    mode: Mode,
    options: VerifyOptions,
) -> Result<TransversalityReport> {
    if !(epsilon >= 0.0) {
        return Err(domain("epsilon must be non-negative"));
    }
    let problem = Problem {
        class: CoefficientClass::Admissible(sys),
        x_range: Interval::new(0.0, 1.0 / sys.beta() + epsilon),
        delta,
        depth,
    };
    let mut report = verify_problem(&problem, mode, options)?;
    report.epsilon = Some(epsilon);
    report.epsilon_condition = Some(check_epsilon_condition(sys.beta(), epsilon));
    Ok(report)
}

/// Largest δ in `{2^{-4}, …, 2^{-20}}` that the certified search verifies.
///
/// Returns `Ok(None)` when no grid value verifies. A grid value whose
/// truncation band is too wide ends the scan with
/// [`Error::TruncationTooShallow`], since every smaller δ fails the same way.
pub fn find_delta(
    sys: &BetaSystem<f64>,
    epsilon: f64,
    depth: usize,
    max_boxes: u64,
) -> Result<Option<TransversalityReport>> {
    for e in DELTA_EXPONENTS {
        let delta = 0.5f64.powi(e);
        let report =
            verify_transversality(sys, epsilon, delta, depth, Mode::Certified { max_boxes })?;
        if report.status == Status::Verified {
            return Ok(Some(report));
        }
    }
    Ok(None)
}

/// [`find_delta`] for an arbitrary problem; `problem.delta` is ignored.
pub fn find_delta_problem(
    problem: &Problem<'_>,
    max_boxes: u64,
) -> Result<Option<TransversalityReport>> {
    for e in DELTA_EXPONENTS {
        let p = Problem {
            delta: 0.5f64.powi(e),
            ..*problem
        };
        let report = verify_problem(&p, Mode::Certified { max_boxes }, VerifyOptions::default())?;
        if report.status == Status::Verified {
            return Ok(Some(report));
        }
    }
    Ok(None)
}
