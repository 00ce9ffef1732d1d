//! Reward families and adversary schedules.
//!
//! Every family here has the shape `f(S, x) = outer(sum_{i in S} term_i(x_i))`
//! with a monotone concave `outer` and concave per-element terms that are
//! nonnegative on the domain. The oracles rely on that separable shape.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::ConvexDomain;
use crate::error::{invalid, Error, Result};
use crate::oco::FEASIBILITY_TOL;
use crate::subset::Subset;

/// Maximum of `-p x^2 + q x + s` over `[lo, hi]`, `p >= 0`.
pub fn concave_quadratic_max(p: f64, q: f64, s: f64, lo: f64, hi: f64) -> (f64, f64) {
    let x = if p > 0.0 {
        (q / (2.0 * p)).clamp(lo, hi)
    } else if q > 0.0 {
        hi
    } else if q < 0.0 {
        lo
    } else {
        0.0_f64.clamp(lo, hi)
    };
    (x, -p * x * x + q * x + s)
}

/// `max(0, -p x^2 + q x + s)` with `p >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClippedQuadratic {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl ClippedQuadratic {
    pub fn value(&self, x: f64) -> f64 {
        (-self.p * x * x + self.q * x + self.s).max(0.0)
    }

    fn raw(&self, x: f64) -> f64 {
        -self.p * x * x + self.q * x + self.s
    }

    fn derivative(&self, x: f64) -> f64 {
        if self.raw(x) < 0.0 {
            0.0
        } else {
            -2.0 * self.p * x + self.q
        }
    }

    /// Rejects components that are not concave or that the clip would bend
    /// somewhere in `[lo, hi]`.
    fn validate(&self, lo: f64, hi: f64) -> Result<()> {
        if !(self.p >= 0.0 && self.p.is_finite() && self.q.is_finite() && self.s.is_finite()) {
            return Err(invalid(format!("bad quadratic component {self:?}")));
        }
        if self.raw(lo) < 0.0 || self.raw(hi) < 0.0 {
            return Err(invalid(format!(
                "component {self:?} is negative somewhere on [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Monotone concave outer function with `outer(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outer {
    #[default]
    Identity,
    Sqrt,
}

impl Outer {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Outer::Identity => v,
            Outer::Sqrt => v.max(0.0).sqrt(),
        }
    }

    pub fn derivative(self, v: f64) -> f64 {
        match self {
            Outer::Identity => 1.0,
            Outer::Sqrt => 0.5 / v.max(0.0).sqrt(),
        }
    }
}

/// `f(S, x) = sum_{i in S} (-a_i x_i^2 + b_i x_i + c_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl SeparableQuadratic {
    /// Checks `a_i > 0`, `c_i >= 0` and nonnegativity of every element term at
    /// the interval endpoints, which makes `f` monotone in `S` on `domain`.
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, domain: &ConvexDomain) -> Result<Self> {
        let n = a.len();
        for len in [b.len(), c.len(), domain.dim()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        for i in 0..n {
            if !(a[i] > 0.0 && a[i].is_finite()) {
                return Err(invalid(format!("a[{i}] = {} must be positive", a[i])));
            }
            if c[i].is_nan() || c[i] < 0.0 {
                return Err(invalid(format!("c[{i}] = {} must be nonnegative", c[i])));
            }
            let (lo, hi) = domain.coordinate_bounds(i);
            ClippedQuadratic {
                p: a[i],
                q: b[i],
                s: c[i],
            }
            .validate(lo, hi)?;
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// `f(S, x) = sum_{i in S} (w_i x_i + o_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularLinear {
    w: Vec<f64>,
    o: Vec<f64>,
}

impl ModularLinear {
    /// Requires `w_i, o_i >= 0` and `w_i lo_i + o_i >= 0` so every element
    /// term is nonnegative on the domain.
    pub fn new(w: Vec<f64>, o: Vec<f64>, domain: &ConvexDomain) -> Result<Self> {
        let n = w.len();
        for len in [o.len(), domain.dim()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        for i in 0..n {
            if !(w[i] >= 0.0 && o[i] >= 0.0 && w[i].is_finite() && o[i].is_finite()) {
                return Err(invalid(format!("w[{i}], o[{i}] must be nonnegative")));
            }
            let (lo, _) = domain.coordinate_bounds(i);
            if w[i] * lo + o[i] < 0.0 {
                return Err(invalid(format!(
                    "element {i} term w x + o is negative at x = {lo}"
                )));
            }
        }
        Ok(Self { w, o })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn offsets(&self) -> &[f64] {
        &self.o
    }
}

/// `f(S, x) = sum_i sum_{j in S} h_ij(x_j)`: customer `i` draws utility
/// `h_ij` from every open facility `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FacilityLocation {
    /// `components[i][j]` for customer `i`, facility `j`.
    components: Vec<Vec<ClippedQuadratic>>,
}

impl FacilityLocation {
    pub fn new(components: Vec<Vec<ClippedQuadratic>>, domain: &ConvexDomain) -> Result<Self> {
        let n = domain.dim();
        for row in &components {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, h) in row.iter().enumerate() {
                let (lo, hi) = domain.coordinate_bounds(j);
                h.validate(lo, hi)?;
            }
        }
        if components.is_empty() {
            return Err(invalid("facility location needs at least one customer"));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Vec<ClippedQuadratic>] {
        &self.components
    }
}

/// `f(S, x) = outer(sum_{i in S} h_i(x_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeMonotone {
    outer: Outer,
    inner: Vec<ClippedQuadratic>,
}

impl CompositeMonotone {
    pub fn new(outer: Outer, inner: Vec<ClippedQuadratic>, domain: &ConvexDomain) -> Result<Self> {
        if inner.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: inner.len(),
            });
        }
        for (i, h) in inner.iter().enumerate() {
            let (lo, hi) = domain.coordinate_bounds(i);
            h.validate(lo, hi)?;
        }
        Ok(Self { outer, inner })
    }

    pub fn inner(&self) -> &[ClippedQuadratic] {
        &self.inner
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardFunction {
    Quadratic(SeparableQuadratic),
    Modular(ModularLinear),
    Facility(FacilityLocation),
    Composite(CompositeMonotone),
}

/// Closed-form constants of a reward function over a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConstants {
    /// Upper bound on `f(S, x)` over `|S| <= H`.
    pub bound: f64,
    /// Lipschitz constant of `x -> f(S, x)` over `|S| <= H`.
    pub lipschitz: f64,
    /// Strong-concavity modulus, 0 when not strongly concave.
    pub strong_concavity: f64,
}

impl RewardFunction {
    /// Number of ground elements, which equals the point dimension.
    pub fn elements(&self) -> usize {
        match self {
            RewardFunction::Quadratic(f) => f.a.len(),
            RewardFunction::Modular(f) => f.w.len(),
            RewardFunction::Facility(f) => f.components[0].len(),
            RewardFunction::Composite(f) => f.inner.len(),
        }
    }

    pub fn outer(&self) -> Outer {
        match self {
            RewardFunction::Composite(f) => f.outer,
            _ => Outer::Identity,
        }
    }

    /// Contribution of element `i` at coordinate value `xi`, before `outer`.
    pub fn element_term(&self, i: usize, xi: f64) -> f64 {
        match self {
            RewardFunction::Quadratic(f) => -f.a[i] * xi * xi + f.b[i] * xi + f.c[i],
            RewardFunction::Modular(f) => f.w[i] * xi + f.o[i],
            RewardFunction::Facility(f) => f.components.iter().map(|row| row[i].value(xi)).sum(),
            RewardFunction::Composite(f) => f.inner[i].value(xi),
        }
    }

    /// Derivative of [`Self::element_term`] in `xi`.
    pub fn element_derivative(&self, i: usize, xi: f64) -> f64 {
        match self {
            RewardFunction::Quadratic(f) => -2.0 * f.a[i] * xi + f.b[i],
            RewardFunction::Modular(f) => f.w[i],
            RewardFunction::Facility(f) => {
                f.components.iter().map(|row| row[i].derivative(xi)).sum()
            }
            RewardFunction::Composite(f) => f.inner[i].derivative(xi),
        }
    }

    /// Curvature bound of element `i`'s term, `sup |term''|`, when known.
    pub fn element_smoothness(&self, i: usize) -> Option<f64> {
        match self {
            RewardFunction::Quadratic(f) => Some(2.0 * f.a[i]),
            RewardFunction::Modular(_) => Some(0.0),
            RewardFunction::Facility(f) => {
                Some(f.components.iter().map(|row| 2.0 * row[i].p).sum())
            }
            RewardFunction::Composite(f) => Some(2.0 * f.inner[i].p),
        }
    }

    /// Unchecked evaluation.
    pub fn value(&self, s: Subset, x: &[f64]) -> f64 {
        let inner: f64 = s.iter().map(|i| self.element_term(i, x[i])).sum();
        self.outer().apply(inner)
    }

    /// `f(S, x)`, rejecting points outside `domain` and elements outside the
    /// ground set.
    pub fn eval(&self, s: Subset, x: &[f64], domain: &ConvexDomain) -> Result<f64> {
        let n = self.elements();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if !s.within(n) {
            return Err(invalid(format!(
                "subset {s:?} outside the ground set of size {n}"
            )));
        }
        if !domain.contains(x, FEASIBILITY_TOL) {
            return Err(Error::OutsideDomain);
        }
        Ok(self.value(s, x))
    }

    /// Gradient of `x -> f(S, x)`.
    pub fn gradient(&self, s: Subset, x: &[f64]) -> Vec<f64> {
        let outer_slope = match self.outer() {
            Outer::Identity => 1.0,
            outer => outer.derivative(s.iter().map(|i| self.element_term(i, x[i])).sum()),
        };
        (0..x.len())
            .map(|i| {
                if s.contains(i) {
                    outer_slope * self.element_derivative(i, x[i])
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `(C, G, mu)` for cardinality cap `h`. Closed form only for the
    /// quadratic and modular families; use the oracle estimates otherwise.
    pub fn constants(&self, domain: &ConvexDomain, h: usize) -> Result<RewardConstants> {
        let n = self.elements();
        if domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: domain.dim(),
            });
        }
        let (maxima, slopes, mu): (Vec<f64>, Vec<f64>, f64) =
            match self {
                RewardFunction::Quadratic(f) => {
                    let mut maxima = Vec::with_capacity(n);
                    let mut slopes = Vec::with_capacity(n);
                    for i in 0..n {
                        let (lo, hi) = domain.coordinate_bounds(i);
                        maxima.push(concave_quadratic_max(f.a[i], f.b[i], f.c[i], lo, hi).1);
                        let d = self
                            .element_derivative(i, lo)
                            .abs()
                            .max(self.element_derivative(i, hi).abs());
                        slopes.push(d * d);
                    }
                    let mu = 2.0 * f.a.iter().copied().fold(f64::INFINITY, f64::min);
                    (maxima, slopes, mu)
                }
                RewardFunction::Modular(f) => {
                    let maxima = (0..n)
                        .map(|i| f.w[i] * domain.coordinate_bounds(i).1 + f.o[i])
                        .collect();
                    let slopes = f.w.iter().map(|w| w * w).collect();
                    (maxima, slopes, 0.0)
                }
                _ => return Err(Error::Unsupported(
                    "no closed-form constants for this family; estimate them with the grid oracle"
                        .into(),
                )),
            };
        Ok(RewardConstants {
            bound: top_sum(maxima, h),
            lipschitz: top_sum(slopes, h).sqrt(),
            strong_concavity: mu,
        })
    }
}

fn top_sum(mut v: Vec<f64>, k: usize) -> f64 {
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().take(k).sum()
}

/// Reward family selector used in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Quadratic,
    Modular,
    Facility,
    Composite,
}

/// Closed interval a coefficient is drawn from uniformly.
pub type Range = [f64; 2];

fn draw<R: Rng + ?Sized>(range: Range, rng: &mut R) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Coefficient ranges. Every element term is `-p x^2 + q x + s` with
/// `p` from `curvature`, `q` from `slope` and `s` from `offset`; the modular
/// family ignores `curvature`. Facility components are the same quadratics,
/// one per customer and facility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRanges {
    pub curvature: Range,
    pub slope: Range,
    pub offset: Range,
    #[serde(default)]
    pub outer: Outer,
}

impl CoefficientRanges {
    /// `a, b ~ U[1, 4]`, `c = 70`.
    pub fn benchmark() -> Self {
        Self {
            curvature: [1.0, 4.0],
            slope: [1.0, 4.0],
            offset: [70.0, 70.0],
            outer: Outer::Identity,
        }
    }

    pub fn default_for(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::Quadratic => Self::benchmark(),
            FamilyKind::Modular => Self {
                curvature: [0.0, 0.0],
                slope: [0.0, 1.0],
                offset: [1.0, 2.0],
                outer: Outer::Identity,
            },
            FamilyKind::Facility => Self {
                curvature: [0.1, 0.5],
                slope: [0.0, 1.0],
                offset: [8.0, 10.0],
                outer: Outer::Identity,
            },
            FamilyKind::Composite => Self {
                curvature: [1.0, 4.0],
                slope: [1.0, 4.0],
                offset: [70.0, 70.0],
                outer: Outer::Sqrt,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("curvature", self.curvature),
            ("slope", self.slope),
            ("offset", self.offset),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(invalid(format!("{name} range {r:?} is not an interval")));
            }
        }
        if self.curvature[0] < 0.0 || self.offset[0] < 0.0 {
            return Err(invalid("curvature and offset ranges must be nonnegative"));
        }
        Ok(())
    }

    /// Largest element term any coefficient draw can produce on `[lo, hi]`.
    fn term_bound(&self, lo: f64, hi: f64) -> f64 {
        // the term is linear in the coefficients, so at a fixed x the worst case
        // sits at a corner of the coefficient box
        let p = self.curvature[0];
        let s = self.offset[1];
        let right = concave_quadratic_max(p, self.slope[1], s, 0.0, hi).1;
        let left = concave_quadratic_max(p, self.slope[0], s, lo, 0.0).1;
        right.max(left)
    }
}

/// Draws reward functions of one family over a fixed domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSampler {
    kind: FamilyKind,
    ranges: CoefficientRanges,
    domain: ConvexDomain,
}

impl CoefficientSampler {
    pub fn new(kind: FamilyKind, ranges: CoefficientRanges, domain: ConvexDomain) -> Result<Self> {
        ranges.validate()?;
        if kind == FamilyKind::Quadratic && ranges.curvature[0] <= 0.0 {
            return Err(invalid("quadratic family needs a positive curvature range"));
        }
        if kind == FamilyKind::Modular && ranges.slope[0] < 0.0 {
            return Err(invalid("modular family needs nonnegative weights"));
        }
        Ok(Self {
            kind,
            ranges,
            domain,
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn ranges(&self) -> &CoefficientRanges {
        &self.ranges
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    /// Upper bound on `f(S, x)` over every draw, `|S| <= h` and `x` in the
    /// domain.
    pub fn reward_bound(&self, h: usize) -> f64 {
        let n = self.domain.dim();
        let per_element: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = self.domain.coordinate_bounds(i);
                let t = self.ranges.term_bound(lo, hi);
                if self.kind == FamilyKind::Facility {
                    t * n as f64
                } else {
                    t
                }
            })
            .collect();
        self.ranges
            .outer
            .apply(top_sum(per_element, h))
            .max(f64::MIN_POSITIVE)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RewardFunction> {
        let n = self.domain.dim();
        let r = &self.ranges;
        let mut quad = || ClippedQuadratic {
            p: draw(r.curvature, rng),
            q: draw(r.slope, rng),
            s: draw(r.offset, rng),
        };
        Ok(match self.kind {
            FamilyKind::Quadratic => {
                let terms: Vec<_> = (0..n).map(|_| quad()).collect();
                RewardFunction::Quadratic(SeparableQuadratic::new(
                    terms.iter().map(|t| t.p).collect(),
                    terms.iter().map(|t| t.q).collect(),
                    terms.iter().map(|t| t.s).collect(),
                    &self.domain,
                )?)
            }
            FamilyKind::Modular => {
                let terms: Vec<_> = (0..n).map(|_| quad()).collect();
                RewardFunction::Modular(ModularLinear::new(
                    terms.iter().map(|t| t.q).collect(),
                    terms.iter().map(|t| t.s).collect(),
                    &self.domain,
                )?)
            }
            FamilyKind::Facility => {
                let rows = (0..n).map(|_| (0..n).map(|_| quad()).collect()).collect();
                RewardFunction::Facility(FacilityLocation::new(rows, &self.domain)?)
            }
            FamilyKind::Composite => {
                let inner = (0..n).map(|_| quad()).collect();
                RewardFunction::Composite(CompositeMonotone::new(r.outer, inner, &self.domain)?)
            }
        })
    }
}

/// The experimental instance: `n` elements, `a, b ~ U[1, 4]`, `c = 70` over
/// `[-1, 4]^n`.
pub fn benchmark_instance<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<(RewardFunction, ConvexDomain)> {
    let domain = ConvexDomain::cube(n, -1.0, 4.0)?;
    let sampler = CoefficientSampler::new(
        FamilyKind::Quadratic,
        CoefficientRanges::benchmark(),
        domain.clone(),
    )?;
    Ok((sampler.sample(rng)?, domain))
}

/// How often the adversary changes the reward function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryMode {
    /// A fresh function every round.
    Redraw,
    /// At most `lambda` changes, evenly spaced.
    LimitedSwitch { lambda: usize },
}

/// Deterministic sequence of reward functions keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct AdversarySchedule {
    mode: AdversaryMode,
    sampler: CoefficientSampler,
    horizon: usize,
    seed: u64,
    stream: u64,
}

impl AdversarySchedule {
    pub fn new(
        mode: AdversaryMode,
        sampler: CoefficientSampler,
        horizon: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        Ok(Self {
            mode,
            sampler,
            horizon,
            seed,
            stream,
        })
    }

    pub fn mode(&self) -> AdversaryMode {
        self.mode
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn sampler(&self) -> &CoefficientSampler {
        &self.sampler
    }

    /// Rounds per segment in limited-switch mode: `ceil(T / (lambda + 1))`.
    pub fn spacing(&self) -> usize {
        match self.mode {
            AdversaryMode::Redraw => 1,
            AdversaryMode::LimitedSwitch { lambda } => self.horizon.div_ceil(lambda + 1),
        }
    }

    /// Index of the segment holding round `t` (one-based); rounds in one
    /// segment share a function.
    pub fn segment(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.horizon {
            return Err(Error::OutOfRange {
                value: t as f64,
                lower: 1.0,
                upper: self.horizon as f64,
            });
        }
        Ok((t - 1) / self.spacing())
    }

    pub fn function_for_segment(&self, segment: usize) -> Result<RewardFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ self.stream.rotate_left(32));
        rng.set_stream(segment as u64);
        self.sampler.sample(&mut rng)
    }

    /// The reward function of round `t`; pure in `(seed, stream, t)`.
    pub fn function_at(&self, t: usize) -> Result<RewardFunction> {
        self.function_for_segment(self.segment(t)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_n(n: usize, lo: f64, hi: f64) -> ConvexDomain {
        ConvexDomain::cube(n, lo, hi).unwrap()
    }

    #[test]
    fn quadratic_hand_value() {
        let d = box_n(1, -1.0, 4.0);
        let f = RewardFunction::Quadratic(
            SeparableQuadratic::new(vec![1.0], vec![2.0], vec![70.0], &d).unwrap(),
        );
        assert_eq!(f.eval(Subset::singleton(0), &[1.0], &d).unwrap(), 71.0);
        assert_eq!(f.eval(Subset::EMPTY, &[1.0], &d).unwrap(), 0.0);
    }

    #[test]
    fn modular_hand_value() {
        let d = box_n(2, -1.0, 5.0);
        let f = RewardFunction::Modular(
            ModularLinear::new(vec![1.0, 2.0], vec![1.0, 2.0], &d).unwrap(),
        );
        let f0 = RewardFunction::Modular(ModularLinear {
            w: vec![1.0, 2.0],
            o: vec![0.0, 0.0],
        });
        assert_eq!(f0.value(Subset::singleton(1), &[3.0, 4.0]), 8.0);
        assert_eq!(f.eval(Subset::singleton(1), &[3.0, 4.0], &d).unwrap(), 10.0);
        // offsets must cover the negative part of the box
        assert!(ModularLinear::new(vec![1.0, 2.0], vec![0.0, 0.0], &d).is_err());
    }

    #[test]
    fn eval_rejects_outside_points() {
        let d = box_n(1, -1.0, 4.0);
        let f = RewardFunction::Quadratic(
            SeparableQuadratic::new(vec![1.0], vec![2.0], vec![70.0], &d).unwrap(),
        );
        assert!(matches!(
            f.eval(Subset::singleton(0), &[4.5], &d),
            Err(Error::OutsideDomain)
        ));
        assert!(f.eval(Subset::singleton(1), &[0.0], &d).is_err());
        assert!(f.eval(Subset::singleton(0), &[0.0, 0.0], &d).is_err());
    }

    #[test]
    fn quadratic_rejects_non_monotone() {
        let d = box_n(1, -1.0, 4.0);
        // -16 + 4 + 1 < 0 at the right endpoint
        assert!(SeparableQuadratic::new(vec![1.0], vec![1.0], vec![1.0], &d).is_err());
        assert!(SeparableQuadratic::new(vec![0.0], vec![1.0], vec![70.0], &d).is_err());
    }

    #[test]
    fn benchmark_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (f, d) = benchmark_instance(5, &mut rng).unwrap();
            let RewardFunction::Quadratic(q) = &f else {
                panic!()
            };
            assert!(q.c().iter().all(|c| *c == 70.0));
            assert!(q.a().iter().chain(q.b()).all(|v| (1.0..=4.0).contains(v)));
            for i in 0..5 {
                for x in [-1.0, 4.0] {
                    assert!(f.element_term(i, x) >= 2.0);
                }
            }
            let k = f.constants(&d, 3).unwrap();
            assert!(k.strong_concavity >= 2.0);
        }
    }

    #[test]
    fn quadratic_constants() {
        let d = box_n(5, -1.0, 4.0);
        let f = RewardFunction::Quadratic(
            SeparableQuadratic::new(vec![1.0; 5], vec![1.0; 5], vec![70.0; 5], &d).unwrap(),
        );
        let k = f.constants(&d, 3).unwrap();
        assert!((k.bound - 210.75).abs() < 1e-12);
        // grid cross-check of the per-element maximum
        let grid_max = (0..=5000)
            .map(|k| f.element_term(0, -1.0 + k as f64 * 1e-3))
            .fold(f64::MIN, f64::max);
        assert!((3.0 * grid_max - k.bound).abs() < 1e-5);
        assert_eq!(k.strong_concavity, 2.0);
        // |d/dx| peaks at x = 4: |-8 + 1| = 7
        assert!((k.lipschitz - (3.0f64 * 49.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn modular_constants() {
        let d = box_n(2, -1.0, 1.0);
        let f = RewardFunction::Modular(
            ModularLinear::new(vec![1.0, 2.0], vec![2.0, 2.0], &d).unwrap(),
        );
        let k = f.constants(&d, 2).unwrap();
        assert!((k.lipschitz - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(k.bound, 7.0);
        assert_eq!(k.strong_concavity, 0.0);
    }

    #[test]
    fn other_families_have_no_closed_form() {
        let d = box_n(2, -1.0, 1.0);
        let h = ClippedQuadratic {
            p: 1.0,
            q: 0.0,
            s: 1.0,
        };
        let f =
            RewardFunction::Composite(CompositeMonotone::new(Outer::Sqrt, vec![h, h], &d).unwrap());
        assert!(matches!(f.constants(&d, 1), Err(Error::Unsupported(_))));
        let g = RewardFunction::Facility(FacilityLocation::new(vec![vec![h, h]], &d).unwrap());
        assert!(g.constants(&d, 1).is_err());
    }

    #[test]
    fn composite_and_facility_values() {
        let d = box_n(2, -1.0, 1.0);
        let h = ClippedQuadratic {
            p: 1.0,
            q: 0.0,
            s: 3.0,
        };
        let f =
            RewardFunction::Composite(CompositeMonotone::new(Outer::Sqrt, vec![h, h], &d).unwrap());
        let both = Subset::full(2);
        assert!((f.value(both, &[1.0, 1.0]) - 2.0).abs() < 1e-15);
        let g = RewardFunction::Facility(
            FacilityLocation::new(vec![vec![h, h], vec![h, h]], &d).unwrap(),
        );
        assert_eq!(g.value(Subset::singleton(0), &[0.0, 1.0]), 6.0);
        assert_eq!(g.value(both, &[0.0, 1.0]), 10.0);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let d = box_n(3, -1.0, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [
            FamilyKind::Quadratic,
            FamilyKind::Modular,
            FamilyKind::Facility,
            FamilyKind::Composite,
        ] {
            let sampler =
                CoefficientSampler::new(kind, CoefficientRanges::default_for(kind), d.clone())
                    .unwrap();
            let f = sampler.sample(&mut rng).unwrap();
            let s = Subset::singleton(0).with(2);
            let x = [0.3, -0.2, 1.1];
            let g = f.gradient(s, &x);
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += 1e-6;
                xm[i] -= 1e-6;
                let fd = (f.value(s, &xp) - f.value(s, &xm)) / 2e-6;
                assert!((fd - g[i]).abs() < 1e-5, "{kind:?} {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn sampler_bound_covers_draws() {
        let d = box_n(5, -1.0, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sampler = CoefficientSampler::new(
            FamilyKind::Quadratic,
            CoefficientRanges::benchmark(),
            d.clone(),
        )
        .unwrap();
        assert!((sampler.reward_bound(3) - 222.0).abs() < 1e-12);
        for _ in 0..100 {
            let f = sampler.sample(&mut rng).unwrap();
            assert!(f.constants(&d, 3).unwrap().bound <= 222.0);
        }
    }

    fn schedule(mode: AdversaryMode, horizon: usize) -> AdversarySchedule {
        let d = box_n(5, -1.0, 4.0);
        let sampler =
            CoefficientSampler::new(FamilyKind::Quadratic, CoefficientRanges::benchmark(), d)
                .unwrap();
        AdversarySchedule::new(mode, sampler, horizon, 42, 7).unwrap()
    }

    #[test]
    fn limited_switch_single_switch() {
        let s = schedule(AdversaryMode::LimitedSwitch { lambda: 1 }, 100);
        let first = s.function_at(1).unwrap();
        let second = s.function_at(51).unwrap();
        assert_ne!(first, second);
        for t in 1..=50 {
            assert_eq!(s.function_at(t).unwrap(), first);
        }
        for t in 51..=100 {
            assert_eq!(s.function_at(t).unwrap(), second);
        }
        assert!(s.function_at(0).is_err());
        assert!(s.function_at(101).is_err());
    }

    #[test]
    fn limited_switch_counts() {
        for (lambda, horizon) in [(0, 10), (3, 10), (2, 7), (6, 500), (9, 8000)] {
            let s = schedule(AdversaryMode::LimitedSwitch { lambda }, horizon);
            let segments: Vec<usize> = (1..=horizon).map(|t| s.segment(t).unwrap()).collect();
            let switches = segments.windows(2).filter(|w| w[0] != w[1]).count();
            assert!(
                switches <= lambda,
                "lambda {lambda} T {horizon}: {switches}"
            );
        }
        let s = schedule(AdversaryMode::LimitedSwitch { lambda: 0 }, 10);
        assert!((1..=10).all(|t| s.function_at(t).unwrap() == s.function_at(1).unwrap()));
    }

    #[test]
    fn redraw_is_pure() {
        let s = schedule(AdversaryMode::Redraw, 10);
        assert_eq!(s.function_at(3).unwrap(), s.function_at(3).unwrap());
        assert_ne!(s.function_at(3).unwrap(), s.function_at(4).unwrap());
        let other =
            AdversarySchedule::new(AdversaryMode::Redraw, s.sampler().clone(), 10, 42, 8).unwrap();
        assert_ne!(s.function_at(3).unwrap(), other.function_at(3).unwrap());
    }
}
