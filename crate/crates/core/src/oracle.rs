//! Brute-force ground truth.
//!
//! Round optima by exhaustive subset enumeration, the submodularity ratio and
//! curvature of small set functions by exhaustive scans, the approximation
//! factor built from them, and the variation statistics of a comparator
//! trajectory.

use serde::{Deserialize, Serialize};

use crate::domains::{distance, ConvexDomain, DomainKind};
use crate::error::{invalid, Error, Result};
use crate::rewards::{concave_quadratic_max, Outer, RewardFunction};
use crate::subset::Subset;

/// Largest ground set [`round_optimum`] enumerates.
pub const MAX_ENUMERATION: usize = 20;
/// Largest ground set the set-function scans accept.
pub const MAX_SCAN: usize = 12;
/// Relative tolerance separating zero from positive marginal gains.
pub const GAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOptimum {
    pub set: Subset,
    pub point: Vec<f64>,
    pub value: f64,
}

/// Continuous inner maximization method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    /// Vertex formula; quadratic and modular families on boxes only.
    ClosedForm,
    /// Scan of each coordinate at the given spacing.
    Grid { resolution: f64 },
    /// Projected gradient ascent.
    Pga { iters: usize, tol: f64 },
}

impl OracleMethod {
    pub const GRID: OracleMethod = OracleMethod::Grid { resolution: 1e-3 };
    pub const PGA: OracleMethod = OracleMethod::Pga {
        iters: 500,
        tol: 1e-8,
    };
}

fn grid_points(lo: f64, hi: f64, resolution: f64) -> impl Iterator<Item = f64> {
    let steps = ((hi - lo) / resolution).ceil().max(1.0) as usize;
    (0..=steps).map(move |k| {
        if k == steps {
            hi
        } else {
            lo + (hi - lo) * k as f64 / steps as f64
        }
    })
}

/// Maximizer of element `i`'s term over `[lo, hi]`.
fn coordinate_argmax(
    f: &RewardFunction,
    i: usize,
    lo: f64,
    hi: f64,
    method: OracleMethod,
) -> Result<f64> {
    match method {
        OracleMethod::ClosedForm => match f {
            RewardFunction::Quadratic(q) => {
                Ok(concave_quadratic_max(q.a()[i], q.b()[i], q.c()[i], lo, hi).0)
            }
            RewardFunction::Modular(m) => {
                Ok(concave_quadratic_max(0.0, m.weights()[i], 0.0, lo, hi).0)
            }
            _ => Err(Error::Unsupported(
                "closed-form optimum needs a quadratic or modular family".into(),
            )),
        },
        OracleMethod::Grid { resolution } => {
            if resolution.is_nan() || resolution <= 0.0 {
                return Err(invalid("grid resolution must be positive"));
            }
            let mut best = (f64::NEG_INFINITY, 0.0);
            for x in grid_points(lo, hi, resolution) {
                let v = f.element_term(i, x);
                if v > best.0 {
                    best = (v, x);
                }
            }
            Ok(best.1)
        }
        OracleMethod::Pga { iters, tol } => {
            let step0 = match f.element_smoothness(i) {
                Some(s) if s > 0.0 => 1.0 / s,
                _ => 1.0,
            };
            let mut x = 0.0_f64.clamp(lo, hi);
            for _ in 0..iters {
                let g = f.element_derivative(i, x);
                let fx = f.element_term(i, x);
                let mut step = step0;
                let mut next = (x + step * g).clamp(lo, hi);
                while f.element_term(i, next) < fx && step > 1e-12 {
                    step *= 0.5;
                    next = (x + step * g).clamp(lo, hi);
                }
                let moved = (next - x).abs();
                x = next;
                if moved < tol {
                    break;
                }
            }
            Ok(x)
        }
    }
}

/// Joint projected gradient ascent on `x -> f(S, x)` over a ball.
fn ball_argmax(
    f: &RewardFunction,
    s: Subset,
    domain: &ConvexDomain,
    iters: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut x = vec![0.0; domain.dim()];
    for _ in 0..iters {
        let g = f.gradient(s, &x);
        let fx = f.value(s, &x);
        let mut step = 1.0;
        let mut next = step_project(domain, &x, &g, step)?;
        while f.value(s, &next) < fx && step > 1e-12 {
            step *= 0.5;
            next = step_project(domain, &x, &g, step)?;
        }
        let moved = distance(&x, &next);
        x = next;
        if moved < tol {
            break;
        }
    }
    Ok(x)
}

fn step_project(domain: &ConvexDomain, x: &[f64], g: &[f64], step: f64) -> Result<Vec<f64>> {
    let raw: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + step * b).collect();
    domain.project(0.0, &raw)
}

/// Subsets of `{0, .., n-1}` with at most `h` elements, in lexicographic order.
pub fn subsets_up_to(n: usize, h: usize) -> Vec<Subset> {
    fn extend(start: usize, n: usize, h: usize, cur: Subset, out: &mut Vec<Subset>) {
        out.push(cur);
        if cur.len() == h {
            return;
        }
        for i in start..n {
            extend(i + 1, n, h, cur.with(i), out);
        }
    }
    let mut out = Vec::new();
    extend(0, n, h, Subset::EMPTY, &mut out);
    out
}

/// Best `(S, x)` with `|S| <= h`: subsets are enumerated exhaustively and ties
/// go to the lexicographically smallest set.
///
/// On a box every family separates over coordinates, so the point maximizes
/// each element's term independently and is shared by all subsets. On a ball
/// only [`OracleMethod::Pga`] is available and it runs per subset.
pub fn round_optimum(
    f: &RewardFunction,
    h: usize,
    domain: &ConvexDomain,
    method: OracleMethod,
) -> Result<RoundOptimum> {
    let n = f.elements();
    if domain.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: domain.dim(),
        });
    }
    if n > MAX_ENUMERATION {
        return Err(Error::Unsupported(format!(
            "exhaustive enumeration is capped at {MAX_ENUMERATION} elements, got {n}"
        )));
    }
    let candidates = subsets_up_to(n, h);
    match domain.kind() {
        DomainKind::Box { .. } => {
            let point = (0..n)
                .map(|i| {
                    let (lo, hi) = domain.coordinate_bounds(i);
                    coordinate_argmax(f, i, lo, hi, method)
                })
                .collect::<Result<Vec<_>>>()?;
            let terms: Vec<f64> = (0..n).map(|i| f.element_term(i, point[i])).collect();
            let outer = f.outer();
            let mut best: Option<(Subset, f64)> = None;
            for s in candidates {
                let v = outer.apply(s.iter().map(|i| terms[i]).sum());
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((s, v));
                }
            }
            let (set, _) = best.expect("the empty set is always a candidate");
            let value = f.value(set, &point);
            Ok(RoundOptimum { set, point, value })
        }
        DomainKind::Ball { .. } => {
            let OracleMethod::Pga { iters, tol } = method else {
                return Err(Error::Unsupported(
                    "ball domains need the gradient-ascent oracle".into(),
                ));
            };
            let mut best: Option<RoundOptimum> = None;
            for s in candidates {
                let point = ball_argmax(f, s, domain, iters, tol)?;
                let value = f.value(s, &point);
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(RoundOptimum {
                        set: s,
                        point,
                        value,
                    });
                }
            }
            Ok(best.expect("the empty set is always a candidate"))
        }
    }
}

/// A set function on `{0, .., n-1}` tabulated over all `2^n` subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunctionTable {
    n: usize,
    values: Vec<f64>,
}

impl SetFunctionTable {
    pub fn from_fn(n: usize, g: impl Fn(Subset) -> f64) -> Result<Self> {
        if n > MAX_SCAN {
            return Err(Error::Unsupported(format!(
                "set-function scans are capped at {MAX_SCAN} elements"
            )));
        }
        let values = (0..1u64 << n)
            .map(|bits| g(Subset::from_bits(bits)))
            .collect();
        Ok(Self { n, values })
    }

    /// `S -> f(S, x)` at a fixed point.
    pub fn from_reward(f: &RewardFunction, x: &[f64]) -> Result<Self> {
        Self::from_fn(f.elements(), |s| f.value(s, x))
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn value(&self, s: Subset) -> f64 {
        self.values[s.bits() as usize]
    }

    fn gain(&self, s: Subset, i: usize) -> f64 {
        self.value(s.with(i)) - self.value(s)
    }

    /// Absolute tolerance scaled to the function's magnitude.
    pub fn tolerance(&self) -> f64 {
        GAIN_TOL * self.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }

    /// Checks `g(empty) = 0` and monotonicity under single-element additions.
    pub fn check_monotone(&self) -> Result<()> {
        let tol = self.tolerance();
        if self.value(Subset::EMPTY).abs() > tol {
            return Err(Error::NotNormalized(self.value(Subset::EMPTY)));
        }
        for s in Subset::full(self.n).subsets() {
            for i in 0..self.n {
                if !s.contains(i) && self.gain(s, i) < -tol {
                    return Err(Error::NotMonotone {
                        smaller: s.to_vec(),
                        smaller_value: self.value(s),
                        larger: s.with(i).to_vec(),
                        larger_value: self.value(s.with(i)),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Largest `k <= 1` with `sum_{w in O \ S} gain(S, w) >= k (g(S u O) - g(S))`
/// for every pair; pairs whose joint gain is not above tolerance impose no
/// constraint.
pub fn submodularity_ratio(g: &SetFunctionTable) -> Result<f64> {
    g.check_monotone()?;
    let tol = g.tolerance();
    let full = Subset::full(g.n);
    let mut kappa = 1.0_f64;
    let mut singles = vec![0.0; 1 << g.n];
    for s in full.subsets() {
        let rest = full.difference(s);
        // singles[O] = sum of singleton gains over O, built from smaller subsets
        for o in rest.subsets().skip(1) {
            let low = o.bits().trailing_zeros() as usize;
            let prev = o.difference(Subset::singleton(low));
            singles[o.bits() as usize] = singles[prev.bits() as usize] + g.gain(s, low);
            let joint = g.value(s.union(o)) - g.value(s);
            if joint > tol {
                let num = singles[o.bits() as usize];
                if num < joint - tol {
                    kappa = kappa.min(num / joint);
                }
            }
        }
    }
    Ok(kappa.clamp(0.0, 1.0))
}

/// Smallest `c >= 0` with `gain(O, w) >= (1 - c) gain(S, w)` for all
/// `S ⊆ O`, `w ∉ O`; triples whose gain at `S` is not above tolerance impose
/// no constraint.
pub fn curvature(g: &SetFunctionTable) -> Result<f64> {
    g.check_monotone()?;
    let tol = g.tolerance();
    let full = Subset::full(g.n);
    let mut c = 0.0_f64;
    for omega_set in full.subsets() {
        for w in 0..g.n {
            if omega_set.contains(w) {
                continue;
            }
            let big = g.gain(omega_set, w);
            for s in omega_set.subsets() {
                let small = g.gain(s, w);
                if small > tol && big < small - tol {
                    c = c.max(1.0 - big / small);
                }
            }
        }
    }
    Ok(c.clamp(0.0, 1.0))
}

/// True when every pair satisfies the ratio inequality at `kappa` up to
/// the table tolerance.
pub fn satisfies_ratio(g: &SetFunctionTable, kappa: f64) -> bool {
    let tol = g.tolerance();
    let full = Subset::full(g.n);
    full.subsets().all(|s| {
        full.difference(s).subsets().all(|o| {
            let num: f64 = o.iter().map(|w| g.gain(s, w)).sum();
            let joint = g.value(s.union(o)) - g.value(s);
            num >= kappa * joint - tol * (1 + o.len()) as f64
        })
    })
}

/// True when every triple satisfies the curvature inequality at `c` up to the
/// table tolerance.
pub fn satisfies_curvature(g: &SetFunctionTable, c: f64) -> bool {
    let tol = g.tolerance();
    let full = Subset::full(g.n);
    full.subsets().all(|omega_set| {
        (0..g.n).filter(|w| !omega_set.contains(*w)).all(|w| {
            let big = g.gain(omega_set, w);
            omega_set
                .subsets()
                .all(|s| big >= (1.0 - c) * g.gain(s, w) - 2.0 * tol)
        })
    })
}

/// `(1 - exp(-c k)) / c`, continuous at `c = 0` where it equals `k`.
pub fn alpha_factor(kappa: f64, c: f64) -> f64 {
    if c <= 1e-12 {
        kappa
    } else {
        -(-c * kappa).exp_m1() / c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetFunctionProfile {
    pub kappa: f64,
    pub curvature: f64,
    pub alpha: f64,
}

pub fn profile(g: &SetFunctionTable) -> Result<SetFunctionProfile> {
    let kappa = submodularity_ratio(g)?;
    let c = curvature(g)?;
    Ok(SetFunctionProfile {
        kappa,
        curvature: c,
        alpha: alpha_factor(kappa, c),
    })
}

/// Ratio lower bound `mu / sigma` for smooth strongly concave rewards.
pub fn strong_concavity_ratio(mu: f64, sigma: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= sigma && sigma.is_finite()) {
        return Err(invalid(format!(
            "need 0 < mu <= sigma, got mu = {mu}, sigma = {sigma}"
        )));
    }
    Ok(mu / sigma)
}

/// Ratio lower bound `min_w min_x |df/dx_w| / max_x |df/dx_w|` with the
/// extrema taken over a grid of the coordinate's range. A coordinate whose
/// derivative vanishes everywhere imposes no constraint.
pub fn gradient_ratio_bound(
    f: &RewardFunction,
    domain: &ConvexDomain,
    resolution: f64,
) -> Result<f64> {
    if f.outer() != Outer::Identity {
        return Err(Error::Unsupported(
            "gradient ratio bound needs an identity outer function".into(),
        ));
    }
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(invalid("grid resolution must be positive"));
    }
    let mut bound = 1.0_f64;
    for i in 0..f.elements() {
        let (lo, hi) = domain.coordinate_bounds(i);
        let (mut min, mut max) = (f64::INFINITY, 0.0_f64);
        for x in grid_points(lo, hi, resolution) {
            let d = f.element_derivative(i, x).abs();
            min = min.min(d);
            max = max.max(d);
        }
        if max > 0.0 {
            bound = bound.min(min / max);
        }
    }
    Ok(bound)
}

/// Outcome of [`greedy_bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyReport {
    pub greedy_set: Subset,
    pub greedy_value: f64,
    pub optimum_set: Subset,
    pub optimum_value: f64,
    pub profile: SetFunctionProfile,
    pub slack: f64,
    pub holds: bool,
}

/// Runs the tolerance-`tau` greedy that, at step `l`, picks the worst element
/// whose gain is within `tau[l]` of the best, then compares its value with
/// `alpha g(S*) - sum tau` (slack `1e-9`).
pub fn greedy_bound_report(g: &SetFunctionTable, h: usize, tau: &[f64]) -> Result<GreedyReport> {
    if tau.len() != h {
        return Err(Error::DimensionMismatch {
            expected: h,
            got: tau.len(),
        });
    }
    if tau.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(invalid("tolerances must be nonnegative"));
    }
    let profile = profile(g)?;
    let mut set = Subset::EMPTY;
    for &t in tau {
        let gains: Vec<(usize, f64)> = (0..g.n)
            .filter(|i| !set.contains(*i))
            .map(|i| (i, g.gain(set, i)))
            .collect();
        let Some(best) = gains.iter().map(|p| p.1).reduce(f64::max) else {
            break;
        };
        let (worst, _) = gains.iter().filter(|p| p.1 >= best - t).fold(
            (usize::MAX, f64::INFINITY),
            |acc, &(i, v)| if v < acc.1 { (i, v) } else { acc },
        );
        set.insert(worst);
    }
    let (optimum_set, optimum_value) = subsets_up_to(g.n, h)
        .into_iter()
        .map(|s| (s, g.value(s)))
        .fold((Subset::EMPTY, f64::NEG_INFINITY), |acc, p| {
            if p.1 > acc.1 {
                p
            } else {
                acc
            }
        });
    let slack: f64 = tau.iter().sum();
    let greedy_value = g.value(set);
    let holds = greedy_value >= profile.alpha * optimum_value - slack - 1e-9;
    Ok(GreedyReport {
        greedy_set: set,
        greedy_value,
        optimum_set,
        optimum_value,
        profile,
        slack,
        holds,
    })
}

pub fn greedy_bound_check(g: &SetFunctionTable, h: usize, tau: &[f64]) -> Result<bool> {
    Ok(greedy_bound_report(g, h, tau)?.holds)
}

/// Weighted coverage: element `i` covers `sets[i]`, a subset of a universe
/// with the given item weights, and `g(S)` is the weight of the union.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub sets: Vec<Subset>,
    pub weights: Vec<f64>,
}

impl Coverage {
    pub fn value(&self, s: Subset) -> f64 {
        let covered = s
            .iter()
            .fold(Subset::EMPTY, |acc, i| acc.union(self.sets[i]));
        covered.iter().map(|k| self.weights[k]).sum()
    }

    pub fn table(&self) -> Result<SetFunctionTable> {
        SetFunctionTable::from_fn(self.sets.len(), |s| self.value(s))
    }
}

/// Variation of a comparator trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationStats {
    /// One plus the number of rounds where the chosen element changes.
    pub elements: usize,
    /// One plus the number of rounds where the chosen set changes.
    pub sets: usize,
    /// Euclidean path length of the points.
    pub path: f64,
}

/// Variation of a trajectory of sets and points. Element and set counts are
/// both taken from `sets`; for single-element trajectories they coincide.
pub fn variation_stats(sets: &[Subset], points: &[Vec<f64>]) -> Result<VariationStats> {
    if sets.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: sets.len(),
            got: points.len(),
        });
    }
    if sets.is_empty() {
        return Err(invalid("trajectory must have at least one round"));
    }
    let switches = sets.windows(2).filter(|w| w[0] != w[1]).count();
    let path = points.windows(2).map(|w| distance(&w[0], &w[1])).sum();
    Ok(VariationStats {
        elements: 1 + switches,
        sets: 1 + switches,
        path,
    })
}
