//! Certified branch-and-bound and randomized search for transversality
//! violations.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::series::{enclose, enclose_poly, poly_at, tail_bands, Interval};
use crate::baker::random_admissible;
use crate::beta_shift::{BetaSystem, ParryState};
use crate::digits::Digit;
use crate::error::Result;

/// Number of equal x-slices explored as independent subtrees.
pub const ROOT_SLICES: usize = 64;

/// Boxes narrower than this in x count as fully refined.
pub const MIN_BOX_WIDTH: f64 = 1e-12;

/// Grid resolution of the randomized search.
pub const SAMPLE_GRID: usize = 256;

/// Which power series are considered.
#[derive(Debug, Clone, Copy)]
pub enum CoefficientClass<'a> {
    /// `c = a − b` for a Parry-admissible pair.
    Admissible(&'a BetaSystem<f64>),
    /// Every `c_k ∈ {−D, …, D}`.
    Unrestricted { digit_bound: Digit },
}

impl CoefficientClass<'_> {
    pub fn digit_bound(&self) -> Digit {
        match self {
            Self::Admissible(sys) => sys.digit_bound(),
            Self::Unrestricted { digit_bound } => *digit_bound,
        }
    }
}

/// A point where the implication `|g| < δ ⇒ g′ < −δ` fails or may fail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub coeffs: Vec<i32>,
    pub a: Option<Vec<Digit>>,
    pub b: Option<Vec<Digit>>,
    pub x: f64,
    /// Value and slope of the finite series (zero continuation).
    pub g: f64,
    pub gprime: f64,
    /// True when the finite series itself violates the implication, so the
    /// witness is a genuine member of the class. False for a fully refined box
    /// that could only be explained by its tail bands.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DischargeReason {
    /// `|g| ≥ δ` on the whole box.
    Magnitude,
    /// `g′ ≤ −δ` on the whole box.
    Slope,
}

/// A box removed from the search, for certificate output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DischargedBox {
    pub coeffs: Vec<i32>,
    pub x: Interval,
    pub reason: DischargeReason,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SearchOutcome {
    Verified,
    Witness(Witness),
    Exhausted,
}

#[derive(Debug, Clone)]
pub(crate) struct CertifiedRun {
    pub outcome: SearchOutcome,
    pub boxes: u64,
    pub certificate: Vec<DischargedBox>,
}

struct Node {
    coeffs: Vec<i32>,
    states: Vec<(ParryState, ParryState)>,
    x: Interval,
}

struct Tree<'a> {
    class: CoefficientClass<'a>,
    delta: f64,
    depth: usize,
    cap: u64,
    record: bool,
}

impl Tree<'_> {
    fn children(&self, node: &Node) -> Result<Vec<Node>> {
        let bound = self.class.digit_bound() as i32;
        let mut out = Vec::new();
        for c in -bound..=bound {
            let states = match self.class {
                CoefficientClass::Unrestricted { .. } => Vec::new(),
                CoefficientClass::Admissible(sys) => {
                    let mut next = BTreeSet::new();
                    for (sa, sb) in &node.states {
                        let (ta, tb) = (sys.max_next(sa)?, sys.max_next(sb)?);
                        for a in 0..=ta {
                            let b = a as i32 - c;
                            if b < 0 || b > tb as i32 {
                                continue;
                            }
                            let na = sys.push(sa, a)?.expect("digit within max_next");
                            let nb = sys.push(sb, b as Digit)?.expect("digit within max_next");
                            next.insert((na, nb));
                        }
                    }
                    if next.is_empty() {
                        continue;
                    }
                    next.into_iter().collect()
                }
            };
            let mut coeffs = node.coeffs.clone();
            coeffs.push(c);
            out.push(Node {
                coeffs,
                states,
                x: node.x,
            });
        }
        Ok(out)
    }

    fn run(&self, root: Node) -> Result<CertifiedRun> {
        let bound = self.class.digit_bound();
        let delta = self.delta;
        let mut stack = vec![root];
        let mut boxes = 0u64;
        let mut certificate = Vec::new();
        while let Some(node) = stack.pop() {
            boxes += 1;
            if boxes > self.cap {
                return Ok(CertifiedRun {
                    outcome: SearchOutcome::Exhausted,
                    boxes,
                    certificate,
                });
            }
            let (g, gp) = enclose(&node.coeffs, bound, node.x);
            let reason = if g.lo >= delta || g.hi <= -delta {
                Some(DischargeReason::Magnitude)
            } else if gp.hi < -delta {
                Some(DischargeReason::Slope)
            } else {
                None
            };
            if let Some(reason) = reason {
                if self.record {
                    certificate.push(DischargedBox {
                        coeffs: node.coeffs.clone(),
                        x: node.x,
                        reason,
                    });
                }
                continue;
            }

            // The prefix followed by zeros is itself in the class.
            let m = node.x.mid();
            let (gm, dm) = poly_at(&node.coeffs, m);
            if gm.abs() < delta && dm >= -delta {
                let witness = self.witness(&node.coeffs, m, true)?;
                return Ok(CertifiedRun {
                    outcome: SearchOutcome::Witness(witness),
                    boxes,
                    certificate,
                });
            }

            let n = node.coeffs.len();
            let can_extend = n < self.depth;
            let can_split = node.x.width() > MIN_BOX_WIDTH;
            if !can_extend && !can_split {
                let witness = self.witness(&node.coeffs, m, false)?;
                return Ok(CertifiedRun {
                    outcome: SearchOutcome::Witness(witness),
                    boxes,
                    certificate,
                });
            }
            let extend = can_extend && (!can_split || self.coefficients_dominate(&node));
            if extend {
                let mut kids = self.children(&node)?;
                kids.reverse();
                stack.extend(kids);
            } else {
                let (left, right) = node.x.bisect();
                stack.push(Node {
                    coeffs: node.coeffs.clone(),
                    states: node.states.clone(),
                    x: right,
                });
                stack.push(Node {
                    coeffs: node.coeffs,
                    states: node.states,
                    x: left,
                });
            }
        }
        Ok(CertifiedRun {
            outcome: SearchOutcome::Verified,
            boxes,
            certificate,
        })
    }

    // Refine the coefficients when the tail uncertainty is at least as wide as
    // the spread of the polynomial part over the x-box, for either g or g′.
    fn coefficients_dominate(&self, node: &Node) -> bool {
        let (pg, pd) = enclose_poly(&node.coeffs, node.x);
        let (tg, td) = tail_bands(node.coeffs.len(), self.class.digit_bound(), node.x.hi);
        2.0 * tg >= pg.width() || 2.0 * td >= pd.width()
    }

    fn witness(&self, coeffs: &[i32], x: f64, exact: bool) -> Result<Witness> {
        let (g, gprime) = poly_at(coeffs, x);
        let (a, b) = match self.class {
            CoefficientClass::Admissible(sys) => match realize_pair(sys, coeffs)? {
                Some((a, b)) => (Some(a), Some(b)),
                None => (None, None),
            },
            CoefficientClass::Unrestricted { .. } => (None, None),
        };
        Ok(Witness {
            coeffs: coeffs.to_vec(),
            a,
            b,
            x,
            g,
            gprime,
            exact,
        })
    }
}

/// Runs the certified search over `x_range`, split into [`ROOT_SLICES`]
/// independent subtrees. Each subtree may use up to `max_boxes` boxes; the
/// reported count is the exact sum.
pub(crate) fn certify(
    class: CoefficientClass<'_>,
    x_range: Interval,
    delta: f64,
    depth: usize,
    max_boxes: u64,
    record: bool,
) -> Result<CertifiedRun> {
    let tree = Tree {
        class,
        delta,
        depth,
        cap: max_boxes,
        record,
    };
    let states = match class {
        CoefficientClass::Admissible(_) => vec![(ParryState::default(), ParryState::default())],
        CoefficientClass::Unrestricted { .. } => Vec::new(),
    };
    let w = x_range.width() / ROOT_SLICES as f64;
    let slices: Vec<Interval> = (0..ROOT_SLICES)
        .map(|i| {
            let lo = x_range.lo + w * i as f64;
            let hi = if i + 1 == ROOT_SLICES {
                x_range.hi
            } else {
                x_range.lo + w * (i + 1) as f64
            };
            Interval::new(lo, hi)
        })
        .collect();
    let runs: Vec<CertifiedRun> = slices
        .into_par_iter()
        .map(|x| {
            tree.run(Node {
                coeffs: Vec::new(),
                states: states.clone(),
                x,
            })
        })
        .collect::<Result<_>>()?;

    let boxes = runs.iter().map(|r| r.boxes).sum::<u64>();
    let witness = runs.iter().find_map(|r| match &r.outcome {
        SearchOutcome::Witness(w) => Some(w.clone()),
        _ => None,
    });
    let exhausted = boxes > max_boxes || runs.iter().any(|r| r.outcome == SearchOutcome::Exhausted);
    let outcome = match (witness, exhausted) {
        (Some(w), _) => SearchOutcome::Witness(w),
        (None, true) => SearchOutcome::Exhausted,
        (None, false) => SearchOutcome::Verified,
    };
    let certificate = if record {
        runs.into_iter().flat_map(|r| r.certificate).collect()
    } else {
        Vec::new()
    };
    Ok(CertifiedRun {
        outcome,
        boxes,
        certificate,
    })
}

/// Some admissible pair `(a, b)` with `a − b = coeffs`, if one exists.
pub fn realize_pair(
    sys: &BetaSystem<f64>,
    coeffs: &[i32],
) -> Result<Option<(Vec<Digit>, Vec<Digit>)>> {
    fn go(
        sys: &BetaSystem<f64>,
        coeffs: &[i32],
        sa: &ParryState,
        sb: &ParryState,
        a: &mut Vec<Digit>,
        b: &mut Vec<Digit>,
    ) -> Result<bool> {
        let k = a.len();
        if k == coeffs.len() {
            return Ok(true);
        }
        let (ta, tb) = (sys.max_next(sa)?, sys.max_next(sb)?);
        for da in 0..=ta {
            let db = da as i32 - coeffs[k];
            if db < 0 || db > tb as i32 {
                continue;
            }
            let na = sys.push(sa, da)?.expect("digit within max_next");
            let nb = sys.push(sb, db as Digit)?.expect("digit within max_next");
            a.push(da);
            b.push(db as Digit);
            if go(sys, coeffs, &na, &nb, a, b)? {
                return Ok(true);
            }
            a.pop();
            b.pop();
        }
        Ok(false)
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let found = go(
        sys,
        coeffs,
        &ParryState::default(),
        &ParryState::default(),
        &mut a,
        &mut b,
    )?;
    Ok(found.then_some((a, b)))
}

type SourcePair = (Vec<Digit>, Vec<Digit>);

/// Draws one series of the class with `depth` coefficients.
pub(crate) fn sample_series<R: Rng>(
    class: CoefficientClass<'_>,
    depth: usize,
    rng: &mut R,
) -> Result<(Vec<i32>, Option<SourcePair>)> {
    match class {
        CoefficientClass::Admissible(sys) => {
            let a = random_admissible(sys, depth, rng)?;
            let b = random_admissible(sys, depth, rng)?;
            let c = a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| x as i32 - y as i32)
                .collect();
            Ok((c, Some((a, b))))
        }
        CoefficientClass::Unrestricted { digit_bound } => {
            let d = digit_bound as i32;
            Ok(((0..depth).map(|_| rng.random_range(-d..=d)).collect(), None))
        }
    }
}

/// Looks for a point of `[lo, hi]` with `|g| < δ` and `g′ ≥ −δ` for the
/// finite series `1 + Σ c_k x^k`: grid points, refined roots of `g` and
/// refined critical points of `g`.
pub(crate) fn scan_series(coeffs: &[i32], x_range: Interval, delta: f64) -> Option<f64> {
    let violates = |x: f64| {
        let (g, d) = poly_at(coeffs, x);
        g.abs() < delta && d >= -delta
    };
    let h = x_range.width() / SAMPLE_GRID as f64;
    let xs: Vec<f64> = (0..=SAMPLE_GRID)
        .map(|i| x_range.lo + h * i as f64)
        .collect();
    let vals: Vec<(f64, f64)> = xs.iter().map(|&x| poly_at(coeffs, x)).collect();
    if let Some(&x) = xs.iter().find(|&&x| violates(x)) {
        return Some(x);
    }
    for i in 0..SAMPLE_GRID {
        let (l, r) = (xs[i], xs[i + 1]);
        let ((gl, dl), (gr, dr)) = (vals[i], vals[i + 1]);
        if gl.signum() != gr.signum() {
            let root = bisect(|x| poly_at(coeffs, x).0, l, r, gl);
            if violates(root) {
                return Some(root);
            }
        }
        if dl.signum() != dr.signum() {
            let crit = bisect(|x| poly_at(coeffs, x).1, l, r, dl);
            if violates(crit) {
                return Some(crit);
            }
        }
    }
    None
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let s = f_lo.signum();
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if f(m).signum() == s {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Randomized search; sample `i` uses random stream `i` of `seed`, so the
/// first witness (by sample index) does not depend on the thread count.
pub(crate) fn randomized(
    class: CoefficientClass<'_>,
    x_range: Interval,
    delta: f64,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<Option<Witness>> {
    let found = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Option<Witness>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (coeffs, pair) = sample_series(class, depth, &mut rng)?;
            Ok(scan_series(&coeffs, x_range, delta).map(|x| {
                let (g, gprime) = poly_at(&coeffs, x);
                let (a, b) = pair.map_or((None, None), |(a, b)| (Some(a), Some(b)));
                Witness {
                    coeffs,
                    a,
                    b,
                    x,
                    g,
                    gprime,
                    exact: true,
                }
            }))
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    match found {
        None => Ok(None),
        Some(r) => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::EPWord;

    fn beta1() -> BetaSystem<f64> {
        BetaSystem::from_greedy_word(&"1,0;1,0,0".parse::<EPWord>().unwrap()).unwrap()
    }

    #[test]
    fn realize_pair_respects_admissibility() {
        let sys = beta1();
        let (a, b) = realize_pair(&sys, &[1, -1, 0, 1]).unwrap().unwrap();
        assert!(sys.is_admissible_prefix(&a).unwrap() && sys.is_admissible_prefix(&b).unwrap());
        let c: Vec<i32> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| x as i32 - y as i32)
            .collect();
        assert_eq!(c, vec![1, -1, 0, 1]);
        // a would need (1,1) in its first two digits.
        assert_eq!(realize_pair(&sys, &[1, 1]).unwrap(), None);
    }

    #[test]
    fn children_follow_admissibility() {
        let sys = beta1();
        let tree = Tree {
            class: CoefficientClass::Admissible(&sys),
            delta: 0.1,
            depth: 5,
            cap: 10,
            record: false,
        };
        let root = Node {
            coeffs: vec![1],
            states: vec![(
                sys.push(&ParryState::default(), 1).unwrap().unwrap(),
                ParryState::default(),
            )],
            x: Interval::new(0.0, 0.5),
        };
        // After a_1 = 1 the next a digit must be 0, so c_2 = −b_2 ∈ {0, −1}.
        let kids: Vec<i32> = tree
            .children(&root)
            .unwrap()
            .iter()
            .map(|k| k.coeffs[1])
            .collect();
        assert_eq!(kids, vec![-1, 0]);
    }

    #[test]
    fn scan_finds_double_root() {
        // (1 − 2x)² = 1 − 4x + 4x² touches zero at x = 1/2 with zero slope.
        let x = scan_series(&[-4, 4], Interval::new(0.0, 0.9), 1e-3).unwrap();
        assert!((x - 0.5).abs() < 1e-2);
        assert_eq!(scan_series(&[-1], Interval::new(0.0, 0.9), 1e-3), None);
    }
}
