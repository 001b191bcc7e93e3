//! Desk-scale estimators: box-counting dimension, the x-marginal density
//! diagnostic and cylinder mass decay.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::baker::{cell, PointCloud, SamplingMethod};
use crate::beta_shift::greedy_expansion;
use crate::error::{domain, Error, Result};
use crate::real::Real;

/// Minimum mean number of points per occupied box for a scale to be used.
pub const MIN_POINTS_PER_BOX: f64 = 10.0;

/// Minimum cloud size for [`marginal_density`].
pub const MIN_DENSITY_CLOUD: usize = 100_000;

pub const MAX_CYLINDER_DEPTH: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionFormula<T> {
    pub value: T,
    /// `λβ ≥ 1`: the value is at least two and says nothing.
    pub trivial_bound: bool,
}

/// `1 + log β / log(1/λ)`.
pub fn dimension_formula<T: Real>(beta: T, lambda: T) -> Result<DimensionFormula<T>> {
    if !(beta > T::one()) {
        return Err(domain(format!("beta must exceed 1, got {beta}")));
    }
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let value = T::one() + beta.ln() / lambda.recip().ln();
    Ok(DimensionFormula {
        value,
        trivial_bound: lambda * beta >= T::one(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    /// Dyadic exponents `k` (box side `2^{-k}`) that entered the fit.
    pub scales_used: Vec<u32>,
    /// Occupied boxes per used scale.
    pub counts: Vec<u64>,
    pub fit_r2: f64,
    /// Prediction of the dimension formula for the cloud's parameters.
    pub formula_value: Option<f64>,
}

/// Occupied boxes of side `2^{-k}`.
pub fn occupied_boxes<T: Real>(cloud: &PointCloud<T>, k: u32) -> u64 {
    let n = 1usize << k;
    let mut ids: Vec<u64> = cloud
        .points
        .par_iter()
        .map(|p| (cell(p.x.as_f64(), n) as u64) << 32 | cell(p.y.as_f64(), n) as u64)
        .collect();
    ids.par_sort_unstable();
    ids.dedup();
    ids.len() as u64
}

/// Least-squares slope of `log N(2^{-k})` against `log 2^k` over
/// `k_min..=k_max`. Scales with fewer than [`MIN_POINTS_PER_BOX`] points per
/// occupied box are skipped.
pub fn box_dimension<T: Real>(
    cloud: &PointCloud<T>,
    k_min: u32,
    k_max: u32,
) -> Result<DimensionEstimate> {
    if k_min > k_max || k_max > 30 {
        return Err(domain(format!("bad scale range {k_min}..{k_max}")));
    }
    let total = cloud.len() as f64;
    let (mut scales, mut counts) = (Vec::new(), Vec::new());
    for k in k_min..=k_max {
        let n = occupied_boxes(cloud, k);
        if n > 0 && total / n as f64 >= MIN_POINTS_PER_BOX {
            scales.push(k);
            counts.push(n);
        }
    }
    if scales.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "only {} usable scales in {k_min}..{k_max} (need 3)",
            scales.len()
        )));
    }
    let xs: Vec<f64> = scales
        .iter()
        .map(|&k| k as f64 * std::f64::consts::LN_2)
        .collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = linear_fit(&xs, &ys);
    let formula_value = match cloud.provenance.method {
        SamplingMethod::External => None,
        _ => dimension_formula(cloud.provenance.beta, cloud.provenance.lambda)
            .ok()
            .map(|f| f.value),
    };
    Ok(DimensionEstimate {
        value: fit.slope,
        scales_used: scales,
        counts,
        fit_r2: fit.r2,
        formula_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictHint {
    ConsistentWithAC,
    ConsistentWithSingular,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityLevel {
    pub bins: usize,
    pub max_over_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub bins: usize,
    /// Mass per bin at the finest level; sums to one.
    pub histogram: Vec<f64>,
    /// Coarsest level first: `bins/4`, `bins/2`, `bins`.
    pub levels: Vec<DensityLevel>,
    /// Ratio of consecutive `max_over_mean` values, coarse to fine.
    pub growth: Vec<f64>,
    pub verdict_hint: VerdictHint,
}

/// Histogram of the x-coordinates and the growth of its peak-to-mean ratio
/// under refinement. Growth below 10% per level hints at a bounded density,
/// growth of 50% or more at a singular marginal.
pub fn marginal_density<T: Real>(cloud: &PointCloud<T>, bins: usize) -> Result<DensityReport> {
    if bins < 4 || !bins.is_power_of_two() {
        return Err(domain(format!(
            "bins must be a power of two and at least 4, got {bins}"
        )));
    }
    if cloud.len() < MIN_DENSITY_CLOUD {
        return Err(Error::UndersizedCloud {
            size: cloud.len(),
            required: MIN_DENSITY_CLOUD,
        });
    }
    let counts = cloud
        .points
        .par_iter()
        .fold(
            || vec![0u64; bins],
            |mut acc, p| {
                acc[cell(p.x.as_f64(), bins)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; bins],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    let total = cloud.len() as f64;

    let mut levels = Vec::new();
    for shift in (0..3).rev() {
        let nb = bins >> shift;
        let coarse: Vec<u64> = counts.chunks(1 << shift).map(|c| c.iter().sum()).collect();
        let max = coarse.iter().copied().max().unwrap_or(0) as f64;
        levels.push(DensityLevel {
            bins: nb,
            max_over_mean: max / (total / nb as f64),
        });
    }
    let growth: Vec<f64> = levels
        .windows(2)
        .map(|w| w[1].max_over_mean / w[0].max_over_mean)
        .collect();
    let verdict_hint = if growth.iter().all(|&g| g < 1.10) {
        VerdictHint::ConsistentWithAC
    } else if growth.iter().all(|&g| g >= 1.5) {
        VerdictHint::ConsistentWithSingular
    } else {
        VerdictHint::Inconclusive
    };
    Ok(DensityReport {
        bins,
        histogram: counts.iter().map(|&c| c as f64 / total).collect(),
        levels,
        growth,
        verdict_hint,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderDecay {
    /// Fitted decay rate `r` in `M(n) ≈ K e^{−rn}`; compare with `log β`.
    pub exponent: f64,
    pub k: f64,
    /// `M(n)` for `n = 1..=n_max`.
    pub max_mass: Vec<f64>,
}

/// Largest empirical mass of an `n`-cylinder `[d_1 … d_n]` of the greedy
/// digits of the y-coordinates, fitted against `K β^{−n}`.
pub fn cylinder_decay<T: Real>(
    cloud: &PointCloud<T>,
    beta: T,
    n_max: usize,
) -> Result<CylinderDecay> {
    if n_max < 2 {
        return Err(Error::DegenerateFit(
            "need at least two cylinder depths".into(),
        ));
    }
    if n_max > MAX_CYLINDER_DEPTH {
        return Err(domain(format!(
            "n_max must be at most {MAX_CYLINDER_DEPTH}"
        )));
    }
    if cloud.is_empty() {
        return Err(Error::DegenerateFit("empty cloud has no cylinders".into()));
    }
    let radix = crate::beta_shift::max_digit(beta) as u64 + 1;
    let words: Vec<Vec<u64>> = cloud
        .points
        .par_iter()
        .map(|p| {
            let digits = greedy_expansion(p.y, beta, n_max)?;
            let mut code = 0u64;
            Ok(digits
                .iter()
                .map(|&d| {
                    code = code * radix + d as u64;
                    code
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let total = cloud.len() as f64;
    let mut max_mass = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let mut freq: HashMap<u64, u64> = HashMap::new();
        for w in &words {
            *freq.entry(w[n]).or_default() += 1;
        }
        let m = freq.values().copied().max().unwrap_or(0);
        max_mass.push(m as f64 / total);
    }
    let xs: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
    let ys: Vec<f64> = max_mass.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(CylinderDecay {
        exponent: -fit.slope,
        k: fit.intercept.exp(),
        max_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}
