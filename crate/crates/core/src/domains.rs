//! Continuous action sets.
//!
//! A [`ConvexDomain`] is either an axis-aligned box or an origin-centred
//! Euclidean ball. Both contain a ball of radius `r` around the origin and are
//! contained in a ball of radius `D`; the two radii are derived from the
//! geometry. Projection onto the shrunk set `(1 - xi) X` is closed form for
//! both kinds.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// Product of closed intervals `[lo_i, hi_i]` with `lo_i < 0 < hi_i`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Ball of the given radius centred at the origin.
    Ball { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    kind: DomainKind,
    dim: usize,
    inner_radius: f64,
    outer_radius: f64,
}

impl ConvexDomain {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(invalid("box must have at least one coordinate"));
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite()) {
                return Err(invalid(format!("coordinate {i} has a non-finite bound")));
            }
            if !(l < 0.0 && 0.0 < h) {
                return Err(invalid(format!(
                    "coordinate {i}: interval [{l}, {h}] must contain the origin in its interior"
                )));
            }
        }
        let inner_radius = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| l.abs().min(*h))
            .fold(f64::INFINITY, f64::min);
        let outer_radius = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| l.abs().max(*h).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(Self {
            dim: lo.len(),
            kind: DomainKind::Box { lo, hi },
            inner_radius,
            outer_radius,
        })
    }

    /// The box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ball dimension must be positive"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            kind: DomainKind::Ball { radius },
            dim,
            inner_radius: radius,
            outer_radius: radius,
        })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius `r` of the largest origin-centred ball inside the domain.
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// Radius `D` of the smallest origin-centred ball containing the domain.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Range of coordinate `i` over the domain.
    pub fn coordinate_bounds(&self, i: usize) -> (f64, f64) {
        match &self.kind {
            DomainKind::Box { lo, hi } => (lo[i], hi[i]),
            DomainKind::Ball { radius } => (-radius, *radius),
        }
    }

    fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Euclidean projection onto `(1 - shrink) X`.
    pub fn project(&self, shrink: f64, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point)?;
        if !(0.0..1.0).contains(&shrink) {
            return Err(invalid(format!(
                "shrink factor must lie in [0, 1), got {shrink}"
            )));
        }
        let scale = 1.0 - shrink;
        Ok(match &self.kind {
            DomainKind::Box { lo, hi } => point
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&p, (&l, &h))| p.clamp(scale * l, scale * h))
                .collect(),
            DomainKind::Ball { radius } => {
                let limit = scale * radius;
                let norm = norm(point);
                if norm > limit {
                    point.iter().map(|p| p * (limit / norm)).collect()
                } else {
                    point.to_vec()
                }
            }
        })
    }

    /// Membership up to an additive tolerance per constraint. Points of the
    /// wrong dimension are never contained.
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.dim || point.iter().any(|p| !p.is_finite()) {
            return false;
        }
        match &self.kind {
            DomainKind::Box { lo, hi } => point
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&p, (&l, &h))| p >= l - tol && p <= h + tol),
            DomainKind::Ball { radius } => norm(point) <= radius + tol,
        }
    }

    /// A point drawn uniformly from the domain.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.kind {
            DomainKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| rng.random_range(l..=h))
                .collect(),
            DomainKind::Ball { radius } => {
                let dir = sample_unit_sphere(self.dim, rng).expect("dim is positive");
                let rho = radius * rng.random::<f64>().powf(1.0 / self.dim as f64);
                dir.as_slice().iter().map(|u| u * rho).collect()
            }
        }
    }
}

/// JSON form of a domain: `{"kind":"box","lo":[..],"hi":[..]}` or
/// `{"kind":"ball","radius":R,"dim":d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { radius: f64, dim: usize },
}

impl TryFrom<DomainSpec> for ConvexDomain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        match spec {
            DomainSpec::Box { lo, hi } => ConvexDomain::new_box(lo, hi),
            DomainSpec::Ball { radius, dim } => ConvexDomain::ball(dim, radius),
        }
    }
}

impl From<&ConvexDomain> for DomainSpec {
    fn from(domain: &ConvexDomain) -> Self {
        match &domain.kind {
            DomainKind::Box { lo, hi } => DomainSpec::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            DomainKind::Ball { radius } => DomainSpec::Ball {
                radius: *radius,
                dim: domain.dim,
            },
        }
    }
}

/// A vector of Euclidean norm one.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self(v.into_iter().map(|x| x / n).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Uniform draw from the unit sphere in `R^d` via normalized Gaussians.
pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return Err(invalid("sphere dimension must be positive"));
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        // all-zero draws have probability zero but are rejected anyway
        if norm(&v) > 1e-300 {
            return UnitVector::new(v);
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force nearest point of a 2-d box on a grid of the given step.
    fn grid_nearest_box(lo: f64, hi: f64, p: [f64; 2], step: f64) -> [f64; 2] {
        let steps = ((hi - lo) / step).round() as usize;
        let mut best = [lo, lo];
        let mut best_d = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let q = [lo + i as f64 * step, lo + j as f64 * step];
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d < best_d {
                    best_d = d;
                    best = q;
                }
            }
        }
        best
    }

    #[test]
    fn box_projection_examples() {
        let dom = ConvexDomain::cube(2, -1.0, 4.0).unwrap();
        assert_eq!(dom.project(0.0, &[0.5, 2.0]).unwrap(), vec![0.5, 2.0]);

        let oracle = grid_nearest_box(-1.0, 4.0, [-3.0, 10.0], 1e-3);
        assert!((oracle[0] + 1.0).abs() < 1e-9 && (oracle[1] - 4.0).abs() < 1e-9);
        assert_eq!(dom.project(0.0, &[-3.0, 10.0]).unwrap(), vec![-1.0, 4.0]);
    }

    #[test]
    fn ball_projection_example() {
        let dom = ConvexDomain::ball(2, 2.0).unwrap();
        // oracle: scan the boundary circle of radius 1 for the closest point
        let target = [3.0, 4.0];
        let (mut best, mut best_d) = ([0.0, 0.0], f64::INFINITY);
        for k in 0..200_000 {
            let th = k as f64 * std::f64::consts::TAU / 200_000.0;
            let q = [th.cos(), th.sin()];
            let d = distance(&q, &target);
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        let p = dom.project(0.5, &target).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
        assert!((best[0] - 0.6).abs() < 1e-4 && (best[1] - 0.8).abs() < 1e-4);
    }

    #[test]
    fn radii_from_geometry() {
        let dom = ConvexDomain::cube(5, -1.0, 4.0).unwrap();
        assert_eq!(dom.inner_radius(), 1.0);
        assert!((dom.outer_radius() - 4.0 * 5f64.sqrt()).abs() < 1e-12);
        let ball = ConvexDomain::ball(3, 2.5).unwrap();
        assert_eq!((ball.inner_radius(), ball.outer_radius()), (2.5, 2.5));
    }

    #[test]
    fn rejects_domains_without_interior_origin() {
        assert!(ConvexDomain::new_box(vec![0.0], vec![1.0]).is_err());
        assert!(ConvexDomain::new_box(vec![-1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(ConvexDomain::new_box(vec![-1.0], vec![1.0, 2.0]).is_err());
        assert!(ConvexDomain::ball(0, 1.0).is_err());
        assert!(ConvexDomain::ball(2, 0.0).is_err());
    }

    #[test]
    fn contains_examples() {
        let dom = ConvexDomain::new_box(vec![-1.0], vec![4.0]).unwrap();
        assert!(dom.contains(&[4.0], 0.0));
        assert!(!dom.contains(&[4.001], 1e-6));
        let ball = ConvexDomain::ball(2, 1.0).unwrap();
        assert!(ball.contains(&[0.6, 0.8], 0.0));
        assert!(!ball.contains(&[0.6], 0.0));
    }

    #[test]
    fn projection_dimension_mismatch() {
        let dom = ConvexDomain::cube(2, -1.0, 1.0).unwrap();
        assert!(matches!(
            dom.project(0.0, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(dom.project(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(sample_unit_sphere(0, &mut rng).is_err());
        for _ in 0..100 {
            let u = sample_unit_sphere(1, &mut rng).unwrap();
            assert!(u.as_slice()[0] == 1.0 || u.as_slice()[0] == -1.0);
            let u = sample_unit_sphere(3, &mut rng).unwrap();
            assert!((norm(u.as_slice()) - 1.0).abs() < 1e-12);
        }
        let n = 100_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let u = sample_unit_sphere(2, &mut rng).unwrap();
            mean[0] += u.as_slice()[0] / n as f64;
            mean[1] += u.as_slice()[1] / n as f64;
        }
        assert!(mean[0].abs() < 0.02 && mean[1].abs() < 0.02, "{mean:?}");
    }

    #[test]
    fn domain_json_forms() {
        let b: DomainSpec =
            serde_json::from_str(r#"{"kind":"box","lo":[-1,-1],"hi":[4,4]}"#).unwrap();
        let dom = ConvexDomain::try_from(b).unwrap();
        assert_eq!(dom.dim(), 2);
        let s: DomainSpec =
            serde_json::from_str(r#"{"kind":"ball","radius":2.0,"dim":3}"#).unwrap();
        let ball = ConvexDomain::try_from(s.clone()).unwrap();
        assert_eq!(DomainSpec::from(&ball), s);
    }
}
