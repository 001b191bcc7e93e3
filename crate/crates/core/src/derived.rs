//! Derived sequences and infinite derivability.
//!
//! An allowable word over `{a, a−1}` starting with `a` is written uniquely as
//! `(a^{n₁}, b, a^{n₂}, b, …)` with `b = a − 1`; its derived word is the run
//! length sequence `(n₁, n₂, …)`. β belongs to the symmetric set exactly when
//! `d(1, β)` can be derived infinitely often, which for eventually periodic
//! words is decided by cycle detection on canonical forms.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::digits::{Digit, EPWord};
use crate::error::{domain, Error, Result};

pub const DEFAULT_MAX_STEPS: usize = 64;

/// Why a word is not allowable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Disallowed {
    Zero,
    /// Some digit is neither `a` nor `a − 1`.
    DigitSet {
        a: Digit,
        offending: Digit,
    },
    /// The word does not start with `a` (so `n₁ = 0`).
    LeadingRun {
        a: Digit,
        first: Digit,
    },
}

impl fmt::Display for Disallowed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disallowed::Zero => write!(f, "the zero word"),
            Disallowed::DigitSet { a, offending } => {
                write!(f, "digit {offending} is neither a = {a} nor a - 1")
            }
            Disallowed::LeadingRun { a, first } => {
                write!(f, "word starts with {first}, not a = {a} (n_1 = 0)")
            }
        }
    }
}

/// Checks allowability; `Ok(Err(reason))` for a well-formed but non-allowable word.
pub fn is_allowable(w: &EPWord) -> Result<std::result::Result<(), Disallowed>> {
    if w.is_zero() {
        return Err(domain("the zero word has no largest digit"));
    }
    let a = w.max_digit();
    let offending = w
        .preperiod()
        .iter()
        .chain(w.period())
        .copied()
        .find(|&d| d != a && d + 1 != a);
    if let Some(offending) = offending {
        return Ok(Err(Disallowed::DigitSet { a, offending }));
    }
    let first = w.digit(0);
    if first != a {
        return Ok(Err(Disallowed::LeadingRun { a, first }));
    }
    Ok(Ok(()))
}

/// Result of one derivation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derived {
    Word(EPWord),
    /// The input ends in `a^∞`: the run lengths before the infinite run.
    InfiniteRun {
        prefix: Vec<Digit>,
    },
}

/// The run-length word of an allowable word.
pub fn derive(w: &EPWord) -> Result<Derived> {
    if let Err(reason) = is_allowable(w)? {
        return Err(Error::NotAllowable(reason));
    }
    let a = w.max_digit();
    let pre = w.preperiod();
    let per = w.period();

    let Some(j) = per.iter().position(|&d| d != a) else {
        return Ok(Derived::InfiniteRun {
            prefix: run_lengths(pre, a).0,
        });
    };
    // Rotate so that the period starts right after a `b`; both parts then
    // consist of complete runs.
    let mut head = pre.to_vec();
    head.extend_from_slice(&per[..=j]);
    let mut cycle = per[j + 1..].to_vec();
    cycle.extend_from_slice(&per[..=j]);

    let (head_runs, open) = run_lengths(&head, a);
    debug_assert_eq!(open, 0);
    let (cycle_runs, open) = run_lengths(&cycle, a);
    debug_assert_eq!(open, 0);
    let bound = head_runs
        .iter()
        .chain(&cycle_runs)
        .copied()
        .max()
        .unwrap_or(0);
    Ok(Derived::Word(EPWord::new(head_runs, cycle_runs, bound)?))
}

// Run lengths of `a` terminated by each `b`, and the length of the trailing open run.
fn run_lengths(ds: &[Digit], a: Digit) -> (Vec<Digit>, Digit) {
    let mut runs = Vec::new();
    let mut current = 0;
    for &d in ds {
        if d == a {
            current += 1;
        } else {
            runs.push(current);
            current = 0;
        }
    }
    (runs, current)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DerivationStatus {
    InfinitelyDerivable,
    NotDerivable,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivationReason {
    /// The chain returned to the word at this index.
    Cycle {
        back_to: usize,
    },
    NotAllowable {
        step: usize,
        reason: Disallowed,
    },
    InfiniteRun {
        step: usize,
    },
    StepsExhausted,
}

impl fmt::Display for DerivationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cycle { back_to } => write!(f, "cycle back to step {back_to}"),
            Self::NotAllowable { step, reason } => write!(f, "step {step} not allowable: {reason}"),
            Self::InfiniteRun { step } => write!(f, "step {step} ends in an infinite run"),
            Self::StepsExhausted => write!(f, "step budget exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationOutcome {
    pub status: DerivationStatus,
    /// Distinct words of the chain, starting with the input.
    pub steps: Vec<EPWord>,
    pub reason: DerivationReason,
}

/// Iterates [`derive`] until a word repeats, derivation fails, or
/// `max_steps` derivations have been performed.
pub fn derivability_status(w: &EPWord, max_steps: usize) -> DerivationOutcome {
    let mut steps = vec![w.clone()];
    let mut seen: HashSet<EPWord> = HashSet::from([w.clone()]);
    for step in 0..max_steps {
        let current = &steps[step];
        let next = match is_allowable(current) {
            Err(_) => {
                return DerivationOutcome {
                    status: DerivationStatus::NotDerivable,
                    reason: DerivationReason::NotAllowable {
                        step,
                        reason: Disallowed::Zero,
                    },
                    steps,
                }
            }
            Ok(Err(reason)) => {
                return DerivationOutcome {
                    status: DerivationStatus::NotDerivable,
                    reason: DerivationReason::NotAllowable { step, reason },
                    steps,
                }
            }
            Ok(Ok(())) => derive(current).expect("allowable word derives"),
        };
        match next {
            Derived::InfiniteRun { .. } => {
                return DerivationOutcome {
                    status: DerivationStatus::NotDerivable,
                    reason: DerivationReason::InfiniteRun { step },
                    steps,
                }
            }
            Derived::Word(next) => {
                if seen.contains(&next) {
                    let back_to = steps
                        .iter()
                        .position(|s| *s == next)
                        .expect("seen word is in chain");
                    return DerivationOutcome {
                        status: DerivationStatus::InfinitelyDerivable,
                        reason: DerivationReason::Cycle { back_to },
                        steps,
                    };
                }
                seen.insert(next.clone());
                steps.push(next);
            }
        }
    }
    DerivationOutcome {
        status: DerivationStatus::Unknown,
        reason: DerivationReason::StepsExhausted,
        steps,
    }
}

/// `d(1, β_n) = (1, 0^n, (1, 0^{n+1})^∞)`.
pub fn beta_n_word(n: usize) -> Result<EPWord> {
    if n < 1 {
        return Err(domain("n must be at least 1"));
    }
    let mut pre = vec![1];
    pre.extend(std::iter::repeat_n(0, n));
    let mut per = vec![1];
    per.extend(std::iter::repeat_n(0, n + 1));
    EPWord::new(pre, per, 1)
}
