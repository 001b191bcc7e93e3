//! Difference series `g(x) = 1 + Σ c_k x^k` and their interval enclosures.

use serde::Serialize;

use crate::digits::Digit;
use crate::error::{domain, Result};

/// Slack added per polynomial term to cover rounding in the enclosures.
pub const TERM_SLACK: f64 = 1e-12;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "[{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn widen(&self, r: f64) -> Self {
        Self {
            lo: self.lo - r,
            hi: self.hi + r,
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Self { lo, hi }
        } else {
            // Disjoint only through rounding; keep the narrower enclosure.
            if self.width() <= other.width() {
                *self
            } else {
                *other
            }
        }
    }

    pub fn bisect(&self) -> (Self, Self) {
        let m = self.mid();
        (Self { lo: self.lo, hi: m }, Self { lo: m, hi: self.hi })
    }

    fn mul(&self, o: &Self) -> Self {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        Self {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Truncated difference series with coefficients `c_1, …, c_N`; the constant
/// term is an implicit `+1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffSeries {
    pub coeffs: Vec<i32>,
    /// The pair `(a, b)` with `c_k = a_k − b_k`, when known.
    pub source: Option<(Vec<Digit>, Vec<Digit>)>,
    /// Bound on the digits of `a` and `b`, hence on `|c_k|` in the tail.
    pub digit_bound: Digit,
}

impl DiffSeries {
    pub fn from_pair(a: &[Digit], b: &[Digit], digit_bound: Digit) -> Result<Self> {
        if a.len() != b.len() {
            return Err(domain("digit words must have equal length"));
        }
        if a.iter().chain(b).any(|&d| d > digit_bound) {
            return Err(domain("digit exceeds the digit bound"));
        }
        let coeffs = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| x as i32 - y as i32)
            .collect();
        Ok(Self {
            coeffs,
            source: Some((a.to_vec(), b.to_vec())),
            digit_bound,
        })
    }

    pub fn from_coeffs(coeffs: Vec<i32>, digit_bound: Digit) -> Result<Self> {
        if coeffs.iter().any(|c| c.unsigned_abs() > digit_bound) {
            return Err(domain("coefficient exceeds the digit bound"));
        }
        Ok(Self {
            coeffs,
            source: None,
            digit_bound,
        })
    }

    pub fn depth(&self) -> usize {
        self.coeffs.len()
    }

    /// Value and derivative of the polynomial part `1 + Σ_{k≤N} c_k x^k`.
    pub fn poly_at(&self, x: f64) -> (f64, f64) {
        poly_at(&self.coeffs, x)
    }

    /// See [`eval_series`].
    pub fn enclose(&self, x: Interval) -> Result<(Interval, Interval)> {
        eval_series(self, x)
    }
}

pub(crate) fn poly_at(coeffs: &[i32], x: f64) -> (f64, f64) {
    let mut g = 0.0;
    let mut gp = 0.0;
    for &c in coeffs.iter().rev() {
        gp = gp * x + g;
        g = g * x + c as f64;
    }
    // g currently holds Σ c_k x^{k-1}; multiply through by x and add the constant.
    let value = 1.0 + g * x;
    let slope = g + gp * x;
    (value, slope)
}

/// Half-widths of the tail bands `Σ_{k>n} D x^k` and `Σ_{k>n} D k x^{k−1}` at `x`.
pub fn tail_bands(n: usize, digit_bound: Digit, x: f64) -> (f64, f64) {
    let d = digit_bound as f64;
    let nf = n as f64;
    let one_minus = 1.0 - x;
    let xn = x.powi(n as i32);
    let g = d * xn * x / one_minus;
    let gp = d * xn * (nf + 1.0 - nf * x) / (one_minus * one_minus);
    (g, gp)
}

/// Enclosures of `g` and `g′` over `x`, valid for every continuation of the
/// coefficients beyond the stored prefix with `|c_k| ≤ digit_bound`.
pub fn eval_series(s: &DiffSeries, x: Interval) -> Result<(Interval, Interval)> {
    if !(x.lo >= 0.0 && x.lo <= x.hi) {
        return Err(domain(format!(
            "x interval [{}, {}] must be a subset of [0, 1)",
            x.lo, x.hi
        )));
    }
    if x.hi >= 1.0 {
        return Err(domain("x interval must stay below 1"));
    }
    Ok(enclose(&s.coeffs, s.digit_bound, x))
}

/// Polynomial-part enclosures without tails: `(g, g′)`.
pub(crate) fn enclose_poly(coeffs: &[i32], x: Interval) -> (Interval, Interval) {
    let (l, h) = (x.lo, x.hi);
    // Termwise monotone bounds (x ≥ 0).
    let (mut g_lo, mut g_hi) = (1.0, 1.0);
    let (mut d_lo, mut d_hi) = (0.0, 0.0);
    let (mut s_lo, mut s_hi) = (0.0, 0.0);
    let (mut lk, mut hk) = (1.0f64, 1.0f64); // x^{k-1}
    let (mut lk2, mut hk2) = (0.0f64, 0.0f64); // x^{k-2}
    for (i, &c) in coeffs.iter().enumerate() {
        let k = (i + 1) as f64;
        let cf = c as f64;
        let (pl, ph) = (lk * l, hk * h); // x^k
        if c >= 0 {
            g_lo += cf * pl;
            g_hi += cf * ph;
            d_lo += cf * k * lk;
            d_hi += cf * k * hk;
            s_lo += cf * k * (k - 1.0) * lk2;
            s_hi += cf * k * (k - 1.0) * hk2;
        } else {
            g_lo += cf * ph;
            g_hi += cf * pl;
            d_lo += cf * k * hk;
            d_hi += cf * k * lk;
            s_lo += cf * k * (k - 1.0) * hk2;
            s_hi += cf * k * (k - 1.0) * lk2;
        }
        lk2 = lk;
        hk2 = hk;
        lk = pl;
        hk = ph;
    }
    let naive_g = Interval::new(g_lo, g_hi);
    let naive_d = Interval::new(d_lo, d_hi);
    let naive_s = Interval::new(s_lo, s_hi);
    if x.width() == 0.0 {
        return (naive_g, naive_d);
    }
    // Mean value forms around the midpoint.
    let m = x.mid();
    let (gm, dm) = poly_at(coeffs, m);
    let offset = Interval::new(l - m, h - m);
    let mv_g = naive_d.mul(&offset);
    let mv_d = naive_s.mul(&offset);
    let g = naive_g.intersect(&Interval::new(gm + mv_g.lo, gm + mv_g.hi));
    let d = naive_d.intersect(&Interval::new(dm + mv_d.lo, dm + mv_d.hi));
    (g, d)
}

pub(crate) fn enclose(coeffs: &[i32], digit_bound: Digit, x: Interval) -> (Interval, Interval) {
    let (g, d) = enclose_poly(coeffs, x);
    let slack = TERM_SLACK * (coeffs.len() + 1) as f64;
    let (tg, td) = tail_bands(coeffs.len(), digit_bound, x.hi);
    (g.widen(tg + slack), d.widen(td + slack))
}
