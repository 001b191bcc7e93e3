//! β-expansions and the Parry admissibility criterion.
//!
//! A word `a` lies in the β-shift iff `σ^k a ≤ d_-(1, β)` for every `k ≥ 0`,
//! where `d_-(1, β)` is the quasi-greedy expansion of one. [`BetaSystem`]
//! pairs a β with that word and answers admissibility queries, both for
//! eventually periodic words and incrementally for finite prefixes through
//! [`ParryState`].

use std::cmp::Ordering;

use crate::digits::{Digit, EPWord};
use crate::error::{domain, Error, Result};
use crate::real::Real;

/// Default number of digits kept for a numerically constructed `d_-(1, β)`.
pub const DEFAULT_DMINUS_DEPTH: usize = 256;

const BISECTION_STEPS: usize = 200;

/// Largest digit a greedy expansion of `x < 1` can produce.
pub fn max_digit<T: Real>(beta: T) -> Digit {
    let c = beta.ceil().to_u32().unwrap_or(Digit::MAX);
    c.saturating_sub(1)
}

/// `f_β(x) = βx mod 1`.
pub fn f_beta<T: Real>(x: T, beta: T) -> T {
    let y = beta * x;
    y - y.floor()
}

/// Greedy digits together with a reliability marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyExpansion {
    pub digits: Vec<Digit>,
    /// Index of the first digit produced from an iterate within the boundary
    /// tolerance of a digit change. Digits from there on may differ from the
    /// exact expansion.
    pub first_unreliable: Option<usize>,
    /// Set when the orbit reached exactly zero, i.e. the expansion is finite
    /// and all remaining digits are zero.
    pub terminated_at: Option<usize>,
}

fn boundary_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1024.0))
}

fn snap_tolerance<T: Real>() -> T {
    T::epsilon() * T::lit(64.0)
}

/// First `depth` digits of `d(x, β)`.
pub fn greedy_expansion<T: Real>(x: T, beta: T, depth: usize) -> Result<Vec<Digit>> {
    greedy_expansion_detailed(x, beta, depth).map(|g| g.digits)
}

/// Like [`greedy_expansion`] but also reports where floating point drift may
/// have corrupted the digits.
///
/// Iterates that land within `64·ε` of an integer are snapped to it, so that
/// finite expansions such as `d(1, golden ratio) = (1,1,0,…)` come out exact.
pub fn greedy_expansion_detailed<T: Real>(x: T, beta: T, depth: usize) -> Result<GreedyExpansion> {
    if !(beta > T::one()) {
        return Err(domain(format!("beta must exceed 1, got {beta}")));
    }
    if !(x >= T::zero() && x <= T::one()) {
        return Err(domain(format!("x must lie in [0, 1], got {x}")));
    }
    if depth == 0 {
        return Err(domain("depth must be positive"));
    }
    if x == T::one() && beta == beta.floor() {
        return Err(domain("d(1, beta) is not defined here for integer beta"));
    }
    let top = if x == T::one() {
        beta.floor().to_u32().unwrap_or(Digit::MAX)
    } else {
        max_digit(beta)
    };
    let snap = snap_tolerance::<T>();
    let near = boundary_tolerance::<T>();

    let mut digits = Vec::with_capacity(depth);
    let mut first_unreliable = None;
    let mut terminated_at = None;
    let mut y = x;
    for k in 0..depth {
        if terminated_at.is_some() {
            digits.push(0);
            continue;
        }
        let z = beta * y;
        let nearest = z.round();
        if first_unreliable.is_none() && z > T::zero() && (z - nearest).abs() < near {
            first_unreliable = Some(k);
        }
        let d = (z + snap).floor();
        let d_u = d.to_u32().unwrap_or(0).min(top);
        let rest = z - T::from(d_u).expect("digit fits");
        y = if rest < snap {
            T::zero()
        } else {
            rest.min(T::below_one())
        };
        digits.push(d_u);
        if y == T::zero() {
            terminated_at = Some(k + 1);
        }
    }
    Ok(GreedyExpansion {
        digits,
        first_unreliable,
        terminated_at,
    })
}

/// `Σ d_k β^{-k}` over a finite digit list.
pub fn phi_prefix<T: Real>(digits: &[Digit], beta: T) -> T {
    let inv = beta.recip();
    digits.iter().rev().fold(T::zero(), |acc, &d| {
        (acc + T::from(d).expect("digit fits")) * inv
    })
}

/// `φ_β(w) = Σ w_k β^{-k}`, summed in closed form over the period.
pub fn phi_eval<T: Real>(w: &EPWord, beta: T) -> T {
    let pre = w.preperiod();
    let per = w.period();
    let head = phi_prefix(pre, beta);
    let cycle = phi_prefix(per, beta);
    let inv_pow_pre = beta.powi(-(pre.len() as i32));
    let inv_pow_per = beta.powi(-(per.len() as i32));
    head + inv_pow_pre * cycle / (T::one() - inv_pow_per)
}

/// The quasi-greedy word `d_-(1, β)` as stored by a [`BetaSystem`].
#[derive(Debug, Clone, PartialEq)]
pub enum DMinus {
    Exact(EPWord),
    /// Leading digits only; queries needing more report [`Error::Indeterminate`].
    Truncated(Vec<Digit>),
}

/// A base β together with its quasi-greedy expansion of one.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSystem<T> {
    beta: T,
    dminus: DMinus,
    digit_bound: Digit,
}

impl<T: Real> BetaSystem<T> {
    /// Builds the system for `d(1, β) = c`, solving for β. See [`solve_beta`].
    pub fn from_greedy_word(c: &EPWord) -> Result<Self> {
        solve_beta(c)
    }

    /// Builds the system whose quasi-greedy word is `dminus`, solving
    /// `φ_β(dminus) = 1` for β.
    pub fn from_quasi_greedy(dminus: EPWord) -> Result<Self> {
        check_shift_maximal(&dminus)?;
        let beta = bisect_root(&dminus)?;
        Self::with_dminus(beta, dminus)
    }

    /// Pairs an explicit β with an explicit quasi-greedy word.
    pub fn with_dminus(beta: T, dminus: EPWord) -> Result<Self> {
        if !(beta > T::one()) {
            return Err(domain(format!("beta must exceed 1, got {beta}")));
        }
        let bound = beta.floor().to_u32().unwrap_or(Digit::MAX);
        if dminus.max_digit() > bound {
            return Err(domain(format!(
                "d_-(1, beta) digit {} exceeds floor(beta) = {bound}",
                dminus.max_digit()
            )));
        }
        if dminus.is_finite() {
            return Err(domain(
                "d_-(1, beta) must have infinitely many nonzero digits",
            ));
        }
        check_shift_maximal(&dminus)?;
        let dminus = dminus.with_bound(bound)?;
        Ok(Self {
            beta,
            dminus: DMinus::Exact(dminus),
            digit_bound: max_digit(beta),
        })
    }

    /// Numerical construction from a floating β, keeping up to
    /// [`DEFAULT_DMINUS_DEPTH`] reliable digits.
    pub fn from_beta(beta: T) -> Result<Self> {
        Self::from_beta_with_depth(beta, DEFAULT_DMINUS_DEPTH)
    }

    /// Numerical construction keeping at most `depth` digits of `d_-(1, β)`.
    ///
    /// Integer β gets the exact word `(β−1)^∞`. A finite greedy expansion of
    /// one is turned into its exact quasi-greedy word. Otherwise the word is
    /// truncated at `depth` or at the first digit that floating point error
    /// could have changed, whichever comes first.
    pub fn from_beta_with_depth(beta: T, depth: usize) -> Result<Self> {
        if !(beta > T::one()) || !beta.is_finite() {
            return Err(domain(format!("beta must exceed 1, got {beta}")));
        }
        if beta == beta.floor() {
            let b = beta.to_u32().ok_or_else(|| domain("beta too large"))?;
            let dminus = EPWord::new(Vec::new(), vec![b - 1], b - 1)?;
            return Ok(Self {
                beta,
                dminus: DMinus::Exact(dminus),
                digit_bound: b - 1,
            });
        }
        let g = greedy_expansion_detailed(T::one(), beta, depth.max(1))?;
        if let Some(m) = g.terminated_at {
            let d1 = EPWord::finite(g.digits[..m].to_vec())?;
            return Self::with_dminus(beta, quasi_greedy_one(&d1)?);
        }
        let reliable = reliable_len(beta, &g.digits, depth);
        Ok(Self {
            beta,
            dminus: DMinus::Truncated(g.digits[..reliable].to_vec()),
            digit_bound: max_digit(beta),
        })
    }

    /// A system with an exact quasi-greedy word that agrees with this one on
    /// every known digit.
    ///
    /// A truncated word `d₁…d_L` is replaced by the quasi-greedy word of the
    /// finite expansion `(d₁, …, d_L)`, which belongs to a base within about
    /// `β^{−L}` of β. Exact systems are returned unchanged.
    pub fn exact_proxy(&self) -> Result<Self> {
        let DMinus::Truncated(ds) = &self.dminus else {
            return Ok(self.clone());
        };
        let Some(end) = ds.iter().rposition(|&d| d != 0) else {
            return Err(Error::Indeterminate {
                needed: 1,
                available: 0,
            });
        };
        let d1 = EPWord::finite(ds[..=end].to_vec())?;
        let mut proxy = Self::with_dminus(self.beta, quasi_greedy_one(&d1)?)?;
        proxy.digit_bound = self.digit_bound;
        Ok(proxy)
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn dminus(&self) -> &DMinus {
        &self.dminus
    }

    /// Largest digit allowed in the shift, `⌈β⌉ − 1`.
    pub fn digit_bound(&self) -> Digit {
        self.digit_bound
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.dminus, DMinus::Exact(_))
    }

    /// Digit `i` (zero-based) of `d_-(1, β)`.
    #[inline]
    pub fn dminus_digit(&self, i: usize) -> Result<Digit> {
        match &self.dminus {
            DMinus::Exact(w) => Ok(w.digit(i)),
            DMinus::Truncated(ds) => ds.get(i).copied().ok_or(Error::Indeterminate {
                needed: i + 1,
                available: ds.len(),
            }),
        }
    }

    /// Parry's criterion for an eventually periodic word.
    pub fn is_admissible(&self, w: &EPWord) -> Result<bool> {
        if w.max_digit() > self.digit_bound {
            return Ok(false);
        }
        for k in 0..w.orbit_len() {
            let s = w.shift(k);
            let ord = match &self.dminus {
                DMinus::Exact(d) => s.lex_cmp(d),
                DMinus::Truncated(ds) => {
                    match ds
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| s.digit(i).cmp(&d))
                        .find(|o| o.is_ne())
                    {
                        Some(o) => o,
                        None => {
                            return Err(Error::Indeterminate {
                                needed: ds.len() + 1,
                                available: ds.len(),
                            })
                        }
                    }
                }
            };
            if ord == Ordering::Greater {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether `digits` is a prefix of some admissible sequence, equivalently
    /// whether `digits · 0^∞` is admissible.
    pub fn is_admissible_prefix(&self, digits: &[Digit]) -> Result<bool> {
        let mut state = ParryState::default();
        for &d in digits {
            match self.push(&state, d)? {
                Some(next) => state = next,
                None => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Largest digit that may follow a prefix in `state`.
    pub fn max_next(&self, state: &ParryState) -> Result<Digit> {
        let mut top = self.dminus_digit(0)?.min(self.digit_bound);
        for &m in &state.tight {
            top = top.min(self.dminus_digit(m)?);
        }
        Ok(top)
    }

    /// Extends a prefix by `d`; `None` if the result is not admissible.
    pub fn push(&self, state: &ParryState, d: Digit) -> Result<Option<ParryState>> {
        if d > self.digit_bound {
            return Ok(None);
        }
        let mut tight = Vec::with_capacity(state.tight.len() + 1);
        for m in std::iter::once(0).chain(state.tight.iter().copied()) {
            let t = self.dminus_digit(m)?;
            match d.cmp(&t) {
                Ordering::Greater => return Ok(None),
                Ordering::Equal => tight.push(m + 1),
                Ordering::Less => {}
            }
        }
        tight.sort_unstable();
        tight.dedup();
        Ok(Some(ParryState { tight }))
    }
}

/// Incremental admissibility state of a finite prefix.
///
/// Holds the lengths of the suffixes that currently coincide with a prefix of
/// `d_-(1, β)`. Every other suffix is already strictly below it and can no
/// longer cause a violation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParryState {
    tight: Vec<usize>,
}

impl ParryState {
    pub fn tight_lengths(&self) -> &[usize] {
        &self.tight
    }
}

/// Free-function form of [`BetaSystem::is_admissible`].
pub fn is_admissible<T: Real>(w: &EPWord, sys: &BetaSystem<T>) -> Result<bool> {
    sys.is_admissible(w)
}

/// `d_-(1, β)` from `d(1, β)`: unchanged when it has infinitely many nonzero
/// digits, otherwise `(d_1, …, d_{m−1}, d_m − 1)^∞` for the last nonzero `d_m`.
pub fn quasi_greedy_one(d1: &EPWord) -> Result<EPWord> {
    if d1.is_zero() {
        return Err(domain("the zero word is not an expansion of 1"));
    }
    if !d1.is_finite() {
        return Ok(d1.clone());
    }
    let mut digits = d1.preperiod().to_vec();
    let last = digits.iter().rposition(|&d| d != 0).expect("nonzero word");
    digits.truncate(last + 1);
    digits[last] -= 1;
    if digits.iter().all(|&d| d == 0) {
        return Err(domain("quasi-greedy word would be 0^∞ (beta = 1)"));
    }
    EPWord::new(Vec::new(), digits, d1.bound())
}

/// Solves `φ_β(c) = 1` for β by bisection and checks that `c` really is the
/// greedy expansion `d(1, β)`.
pub fn solve_beta<T: Real>(c: &EPWord) -> Result<BetaSystem<T>> {
    let first = c.digit(0);
    if first == 0 {
        return Err(domain("first digit of d(1, beta) must be at least 1"));
    }
    let beta: T = bisect_root(c)?;

    let horizon = c.preperiod().len() + 3 * c.period().len();
    let got = greedy_expansion(T::one(), beta, horizon)?;
    if let Some(index) = (0..horizon).find(|&i| got[i] != c.digit(i)) {
        return Err(Error::Inconsistent {
            index,
            expected: c.digit(index),
            found: got[index],
        });
    }
    BetaSystem::with_dminus(beta, quasi_greedy_one(c)?)
}

fn bisect_root<T: Real>(c: &EPWord) -> Result<T> {
    let upper = c.digit(0) + 1;
    let f = |b: T| phi_eval(c, b) - T::one();
    let mut hi = T::from(upper).expect("digit fits");
    let mut lo = T::one() + T::epsilon().sqrt();
    if !(f(lo) > T::zero()) || f(hi) > T::zero() {
        return Err(Error::NoRoot {
            upper: upper as f64,
        });
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / (T::one() + T::one());
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The root is bracketed by adjacent floats; keep the side with the smaller residual.
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

fn check_shift_maximal(w: &EPWord) -> Result<()> {
    for k in 1..w.orbit_len() {
        if w.shift(k).lex_cmp(w) == Ordering::Greater {
            return Err(domain(format!(
                "word {} is not shift-maximal (shift {k} is larger)",
                w.pretty()
            )));
        }
    }
    Ok(())
}

// Number of digits of d(1, β) that survive a forward error estimate: the
// orbit error grows by a factor β per step and a digit is trusted only while
// the error stays below the distance of βy to the nearest integer.
fn reliable_len<T: Real>(beta: T, digits: &[Digit], depth: usize) -> usize {
    let mut y = T::one();
    let mut err = T::epsilon();
    for (k, &d) in digits.iter().enumerate().take(depth) {
        let z = beta * y;
        err = err * beta + T::epsilon() * z;
        let dist = (z - z.round()).abs();
        if dist <= err * T::lit(4.0) {
            return k;
        }
        y = z - T::from(d).expect("digit fits");
    }
    digits.len().min(depth)
}
