//! The skew product on the unit square, its orbit and symbolic samplers, and
//! rasterization of point clouds.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beta_shift::{BetaSystem, ParryState};
use crate::digits::Digit;
use crate::error::{domain, Result};
use crate::real::Real;

pub const DEFAULT_BURN_IN: usize = 1000;

/// Truncation target for the symbolic sampler: both geometric tails below this.
pub const SYMBOLIC_TAIL: f64 = 1e-9;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// Whether the point lies in `[0, 1) × [0, 1)`.
    pub fn in_unit_square(&self) -> bool {
        self.x >= T::zero() && self.x < T::one() && self.y >= T::zero() && self.y < T::one()
    }
}

/// `T_{β,λ}` with validated parameters, `1 < β ≤ 2` and `0 < λ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BakerMap<T> {
    beta: T,
    lambda: T,
    threshold: T,
}

impl<T: Real> BakerMap<T> {
    pub fn new(beta: T, lambda: T) -> Result<Self> {
        if !(beta > T::one() && beta <= T::lit(2.0)) {
            return Err(domain(format!("beta must lie in (1, 2], got {beta}")));
        }
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(domain(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        Ok(Self {
            beta,
            lambda,
            threshold: beta.recip(),
        })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// One application of the map. Results are clamped below one so that
    /// rounding cannot leave the square.
    #[inline]
    pub fn apply(&self, p: Point<T>) -> Point<T> {
        let top = T::below_one();
        if p.y < self.threshold {
            Point {
                x: self.lambda * p.x,
                y: (self.beta * p.y).min(top),
            }
        } else {
            Point {
                x: (self.lambda * p.x + T::one() - self.lambda).min(top),
                y: (self.beta * p.y - T::one()).max(T::zero()).min(top),
            }
        }
    }
}

/// Free-function form of [`BakerMap::apply`] with parameter validation.
pub fn step<T: Real>(p: Point<T>, beta: T, lambda: T) -> Result<Point<T>> {
    if !p.in_unit_square() {
        return Err(domain("point outside the unit square"));
    }
    Ok(BakerMap::new(beta, lambda)?.apply(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Forward orbit of one uniformly random start point.
    Orbit { burn_in: usize },
    /// Projections of random admissible two-sided words.
    Symbolic {
        past_depth: usize,
        future_depth: usize,
    },
    /// Points supplied by the caller; `beta` and `lambda` are meaningless.
    External,
}

/// Everything needed to regenerate a cloud exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub beta: f64,
    pub lambda: f64,
    pub seed: u64,
    pub count: usize,
    #[serde(flatten)]
    pub method: SamplingMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    pub points: Vec<Point<T>>,
    pub provenance: Provenance,
}

impl<T: Real> PointCloud<T> {
    /// Wraps caller-supplied points.
    pub fn from_points(points: Vec<Point<T>>) -> Self {
        let count = points.len();
        Self {
            points,
            provenance: Provenance {
                beta: 0.0,
                lambda: 0.0,
                seed: 0,
                count,
                method: SamplingMethod::External,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every `k`-th point, keeping the provenance.
    pub fn subsample(&self, k: usize) -> Self {
        Self {
            points: self.points.iter().step_by(k.max(1)).copied().collect(),
            provenance: self.provenance,
        }
    }

    /// Writes `x,y` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y")?;
        for p in &self.points {
            writeln!(out, "{:.16e},{:.16e}", p.x.as_f64(), p.y.as_f64())?;
        }
        Ok(())
    }
}

/// Orbit sampler for the SRB measure: a uniformly random start point is
/// iterated `burn_in` times and the next `count` iterates are kept.
///
/// A floating point orbit of an expanding map loses one low-order digit per
/// step (for β = 2 it reaches zero after ~53 steps). Each step therefore
/// refills the lowest bits of `y` with fresh random bits, which is the exact
/// orbit of a random real start point whose unrepresented digits are drawn
/// lazily.
pub fn srb_sample<T: Real>(
    beta: T,
    lambda: T,
    seed: u64,
    burn_in: usize,
    count: usize,
) -> Result<PointCloud<T>> {
    let map = BakerMap::new(beta, lambda)?;
    if count == 0 {
        return Err(domain("count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dither = T::epsilon() * T::lit(4.0);
    let top = T::below_one();
    let mut p = Point::new(
        T::lit(rng.random::<f64>()).min(top),
        T::lit(rng.random::<f64>()).min(top),
    );
    let advance = |p: Point<T>, rng: &mut ChaCha8Rng| {
        let mut q = map.apply(p);
        q.y = (q.y + dither * T::lit(rng.random::<f64>())).min(top);
        q
    };
    for _ in 0..burn_in {
        p = advance(p, &mut rng);
    }
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        p = advance(p, &mut rng);
        points.push(p);
    }
    Ok(PointCloud {
        points,
        provenance: Provenance {
            beta: beta.as_f64(),
            lambda: lambda.as_f64(),
            seed,
            count,
            method: SamplingMethod::Orbit { burn_in },
        },
    })
}

/// A finite window `(a_{−m}, …, a_0 | a_1, …, a_n)` of a two-sided sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoSidedWord {
    /// `(a_0, a_{−1}, …, a_{−m})`.
    pub past: Vec<Digit>,
    /// `(a_1, …, a_n)`.
    pub future: Vec<Digit>,
}

impl TwoSidedWord {
    pub fn new(past: Vec<Digit>, future: Vec<Digit>) -> Self {
        Self { past, future }
    }

    /// Digits in natural order, `a_{−m}` first.
    pub fn window(&self) -> Vec<Digit> {
        self.past
            .iter()
            .rev()
            .chain(self.future.iter())
            .copied()
            .collect()
    }

    /// Every suffix of the window is admissible.
    pub fn is_admissible<T: Real>(&self, sys: &BetaSystem<T>) -> Result<bool> {
        sys.is_admissible_prefix(&self.window())
    }

    /// The left shift: `a_1` moves into position 0.
    pub fn shift(&self) -> Self {
        let mut past = Vec::with_capacity(self.past.len() + 1);
        if let Some(&a1) = self.future.first() {
            past.push(a1);
        }
        past.extend_from_slice(&self.past);
        Self {
            past,
            future: self.future.iter().skip(1).copied().collect(),
        }
    }
}

/// A projected point with the truncation error bounds of each coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    pub point: Point<T>,
    pub x_error: T,
    pub y_error: T,
}

/// `π(a) = ((1 − λ) Σ_{k≥0} a_{−k} λ^k, Σ_{k≥1} a_k β^{−k})` over the window.
pub fn project<T: Real>(
    word: &TwoSidedWord,
    sys: &BetaSystem<T>,
    lambda: T,
) -> Result<Projection<T>> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !word.is_admissible(sys)? {
        return Err(domain("two-sided word has an inadmissible window"));
    }
    Ok(project_unchecked(
        word,
        sys.beta(),
        sys.digit_bound(),
        lambda,
    ))
}

fn project_unchecked<T: Real>(
    word: &TwoSidedWord,
    beta: T,
    bound: Digit,
    lambda: T,
) -> Projection<T> {
    let digit = |d: Digit| T::from(d).expect("digit fits");
    let x_sum = word
        .past
        .iter()
        .rev()
        .fold(T::zero(), |acc, &d| acc * lambda + digit(d));
    let inv = beta.recip();
    let y = word
        .future
        .iter()
        .rev()
        .fold(T::zero(), |acc, &d| (acc + digit(d)) * inv);
    let top = T::below_one();
    Projection {
        point: Point::new(((T::one() - lambda) * x_sum).min(top), y.min(top)),
        x_error: digit(bound) * lambda.powi(word.past.len() as i32),
        y_error: beta.powi(-(word.future.len() as i32)),
    }
}

/// Depths `(m, n)` with `λ^m < tail` and `β^{−n} < tail`.
pub fn symbolic_depths<T: Real>(beta: T, lambda: T, tail: f64) -> (usize, usize) {
    let t = tail.ln();
    let m = (t / lambda.as_f64().ln()).ceil().max(1.0) as usize;
    let n = (t / -beta.as_f64().ln()).ceil().max(1.0) as usize;
    (m + 1, n + 1)
}

/// Symbolic sampler of the attractor: random admissible two-sided words are
/// generated digit by digit, each digit uniform among those that keep the
/// window admissible, and projected.
///
/// Systems with a truncated `d_-(1, β)` are sampled through
/// [`BetaSystem::exact_proxy`].
///
/// Points are produced in fixed chunks, each with its own random stream, so
/// the output does not depend on the number of worker threads.
pub fn attractor_cloud<T: Real>(
    sys: &BetaSystem<T>,
    lambda: T,
    seed: u64,
    count: usize,
) -> Result<PointCloud<T>> {
    let beta = sys.beta();
    BakerMap::new(beta, lambda)?;
    if count == 0 {
        return Err(domain("count must be at least 1"));
    }
    let (past_depth, future_depth) = symbolic_depths(beta, lambda, SYMBOLIC_TAIL);
    let sys = &sys.exact_proxy()?;
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<Point<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(count - c * CHUNK);
            (0..n)
                .map(|_| {
                    let word = random_two_sided(sys, past_depth, future_depth, &mut rng)?;
                    Ok(project_unchecked(&word, beta, sys.digit_bound(), lambda).point)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointCloud {
        points: parts.into_iter().flatten().collect(),
        provenance: Provenance {
            beta: beta.as_f64(),
            lambda: lambda.as_f64(),
            seed,
            count,
            method: SamplingMethod::Symbolic {
                past_depth,
                future_depth,
            },
        },
    })
}

/// A random admissible window with `past_depth` past digits and
/// `future_depth` future digits.
pub fn random_two_sided<T: Real, R: Rng>(
    sys: &BetaSystem<T>,
    past_depth: usize,
    future_depth: usize,
    rng: &mut R,
) -> Result<TwoSidedWord> {
    let digits = random_admissible(sys, past_depth + future_depth, rng)?;
    let (past, future) = digits.split_at(past_depth);
    Ok(TwoSidedWord {
        past: past.iter().rev().copied().collect(),
        future: future.to_vec(),
    })
}

/// A random admissible prefix of length `len`.
pub fn random_admissible<T: Real, R: Rng>(
    sys: &BetaSystem<T>,
    len: usize,
    rng: &mut R,
) -> Result<Vec<Digit>> {
    let mut state = ParryState::default();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let top = sys.max_next(&state)?;
        let d = rng.random_range(0..=top);
        state = sys
            .push(&state, d)?
            .expect("digit below max_next is admissible");
        out.push(d);
    }
    Ok(out)
}

/// Occupancy counts on a `width × height` grid; cell `(i, j)` covers
/// `[i/width, (i+1)/width) × [j/height, (j+1)/height)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridRaster {
    pub width: usize,
    pub height: usize,
    /// Row-major with `j` (the y bin) as the row index, `j = 0` at `y = 0`.
    pub counts: Vec<u64>,
}

impl GridRaster {
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[j * self.width + i]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// 8-bit grey levels scaled by the maximum count, first row at `y ≈ 1`.
    pub fn gray8(&self) -> Vec<u8> {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut out = Vec::with_capacity(self.width * self.height);
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                let c = self.count(i, j);
                let v = (c * 255 + max / 2).checked_div(max).unwrap_or(0);
                out.push(v as u8);
            }
        }
        out
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.gray8());
        out
    }
}

pub fn rasterize<T: Real>(
    cloud: &PointCloud<T>,
    width: usize,
    height: usize,
) -> Result<GridRaster> {
    if width == 0 || height == 0 {
        return Err(domain("raster dimensions must be positive"));
    }
    let mut counts = vec![0u64; width * height];
    for p in &cloud.points {
        let i = cell(p.x.as_f64(), width);
        let j = cell(p.y.as_f64(), height);
        counts[j * width + i] += 1;
    }
    Ok(GridRaster {
        width,
        height,
        counts,
    })
}

#[inline]
pub(crate) fn cell(v: f64, n: usize) -> usize {
    ((v * n as f64).floor().max(0.0) as usize).min(n - 1)
}
