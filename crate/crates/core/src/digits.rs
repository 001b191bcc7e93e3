//! Eventually periodic digit words.
//!
//! An [`EPWord`] is the infinite word `pre · per · per · …`. Finite words are
//! encoded with the period `(0)`, so the space is closed under shifting and
//! derivation.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{domain, Error, Result};

pub type Digit = u32;

/// Eventually periodic word over `{0, …, bound}`.
///
/// Equality and hashing compare the infinite words, not the representation or
/// the declared bound.
#[derive(Debug, Clone)]
pub struct EPWord {
    pre: Vec<Digit>,
    per: Vec<Digit>,
    bound: Digit,
}

impl EPWord {
    /// Builds a word with an explicit digit bound. The result is canonical.
    pub fn new(pre: Vec<Digit>, per: Vec<Digit>, bound: Digit) -> Result<Self> {
        if per.is_empty() {
            return Err(domain("period must be non-empty"));
        }
        if let Some(&d) = pre.iter().chain(per.iter()).find(|&&d| d > bound) {
            return Err(domain(format!("digit {d} exceeds bound {bound}")));
        }
        Ok(Self { pre, per, bound }.canonicalize())
    }

    /// Builds a word whose bound is its largest digit.
    pub fn from_digits(pre: Vec<Digit>, per: Vec<Digit>) -> Result<Self> {
        let bound = pre.iter().chain(per.iter()).copied().max().unwrap_or(0);
        Self::new(pre, per, bound)
    }

    /// The finite word `digits` followed by `0^∞`.
    pub fn finite(digits: Vec<Digit>) -> Result<Self> {
        Self::from_digits(digits, vec![0])
    }

    /// The purely periodic word `per^∞`.
    pub fn periodic(per: Vec<Digit>) -> Result<Self> {
        Self::from_digits(Vec::new(), per)
    }

    pub fn zero() -> Self {
        Self {
            pre: Vec::new(),
            per: vec![0],
            bound: 0,
        }
    }

    pub fn preperiod(&self) -> &[Digit] {
        &self.pre
    }

    pub fn period(&self) -> &[Digit] {
        &self.per
    }

    pub fn bound(&self) -> Digit {
        self.bound
    }

    /// Returns the same word with a different declared bound.
    pub fn with_bound(mut self, bound: Digit) -> Result<Self> {
        if self.max_digit() > bound {
            return Err(domain(format!(
                "digit {} exceeds bound {bound}",
                self.max_digit()
            )));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn max_digit(&self) -> Digit {
        self.pre
            .iter()
            .chain(self.per.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.pre.iter().chain(self.per.iter()).all(|&d| d == 0)
    }

    /// True when the word ends in `0^∞`.
    pub fn is_finite(&self) -> bool {
        self.per.iter().all(|&d| d == 0)
    }

    /// Digit at zero-based position `i`.
    #[inline]
    pub fn digit(&self, i: usize) -> Digit {
        if i < self.pre.len() {
            self.pre[i]
        } else {
            self.per[(i - self.pre.len()) % self.per.len()]
        }
    }

    /// The first `n` digits.
    pub fn prefix(&self, n: usize) -> Vec<Digit> {
        (0..n).map(|i| self.digit(i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Digit> + '_ {
        self.pre
            .iter()
            .copied()
            .chain(self.per.iter().copied().cycle())
    }

    /// Minimal representation of the same infinite word: the period is reduced
    /// to its primitive root and trailing preperiod digits are absorbed into it.
    pub fn canonicalize(mut self) -> Self {
        let p = primitive_period_len(&self.per);
        self.per.truncate(p);
        while let (Some(&last), Some(&per_last)) = (self.pre.last(), self.per.last()) {
            if last != per_last {
                break;
            }
            self.pre.pop();
            self.per.rotate_right(1);
        }
        self
    }

    pub fn is_canonical(&self) -> bool {
        let c = self.clone().canonicalize();
        c.pre.len() == self.pre.len() && c.per.len() == self.per.len()
    }

    /// Number of distinct shifts of the word: `σ^k w` for `k ≥ pre + per`
    /// repeats an earlier shift.
    pub fn orbit_len(&self) -> usize {
        self.pre.len() + self.per.len()
    }

    /// Drops the first `k` digits. The result is canonical.
    pub fn shift(&self, k: usize) -> Self {
        let (pre, per) = if k < self.pre.len() {
            (self.pre[k..].to_vec(), self.per.clone())
        } else {
            let mut per = self.per.clone();
            per.rotate_left((k - self.pre.len()) % self.per.len());
            (Vec::new(), per)
        };
        Self {
            pre,
            per,
            bound: self.bound,
        }
        .canonicalize()
    }

    /// Position after which both words are jointly periodic.
    pub fn comparison_horizon(&self, other: &Self) -> usize {
        self.pre.len() + other.pre.len() + lcm(self.per.len(), other.per.len())
    }

    /// Lexicographic (product) order of the infinite words.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let horizon = self.comparison_horizon(other);
        (0..horizon)
            .map(|i| self.digit(i).cmp(&other.digit(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }

    /// Paper-style rendering, e.g. `(1,0,(1,0,0)^∞)` or `(1,0^∞)`.
    pub fn pretty(&self) -> String {
        let mut parts: Vec<String> = self.pre.iter().map(|d| d.to_string()).collect();
        let per = join(&self.per);
        if self.per.len() == 1 {
            parts.push(format!("{per}^∞"));
        } else {
            parts.push(format!("({per})^∞"));
        }
        format!("({})", parts.join(","))
    }
}

/// Free-function form of [`EPWord::canonicalize`].
pub fn canonicalize(w: EPWord) -> EPWord {
    w.canonicalize()
}

/// Free-function form of [`EPWord::lex_cmp`].
pub fn lex_compare(u: &EPWord, v: &EPWord) -> Ordering {
    u.lex_cmp(v)
}

/// Free-function form of [`EPWord::shift`].
pub fn shift(w: &EPWord, k: usize) -> EPWord {
    w.shift(k)
}

impl PartialEq for EPWord {
    fn eq(&self, other: &Self) -> bool {
        self.lex_cmp(other).is_eq()
    }
}

impl Eq for EPWord {}

impl Hash for EPWord {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let c = self.clone().canonicalize();
        c.pre.hash(state);
        c.per.hash(state);
    }
}

/// Text form `pre;per` with comma-separated digits, e.g. `1,0;1,0,0`.
impl fmt::Display for EPWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", join(&self.pre), join(&self.per))
    }
}

impl FromStr for EPWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (pre, per) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("expected `pre;per`, got {s:?}")))?;
        let pre = parse_digits(pre)?;
        let per = parse_digits(per)?;
        if per.is_empty() {
            return Err(Error::Parse("period must be non-empty".into()));
        }
        Self::from_digits(pre, per)
    }
}

fn parse_digits(s: &str) -> Result<Vec<Digit>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<Digit>()
                .map_err(|e| Error::Parse(format!("bad digit {t:?}: {e}")))
        })
        .collect()
}

fn join(ds: &[Digit]) -> String {
    ds.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn primitive_period_len(per: &[Digit]) -> usize {
    let n = per.len();
    (1..=n)
        .filter(|p| n.is_multiple_of(*p))
        .find(|&p| (p..n).all(|i| per[i] == per[i - p]))
        .unwrap_or(n)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
