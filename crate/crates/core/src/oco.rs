//! Online concave optimization with one- or two-point bandit feedback.
//!
//! The learner keeps a centre `z` inside the shrunk domain `(1 - xi) X`,
//! plays `x = z + delta u` for a fresh uniform direction `u`, and moves `z`
//! along a zeroth-order gradient estimate. With `xi = delta / r` both probe
//! points `z +- delta u` stay inside `X`.

use rand::Rng;

use crate::domains::{distance, sample_unit_sphere, ConvexDomain, UnitVector};
use crate::error::{invalid, Error, Result};

/// Tolerance used when asserting that probe points are feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    SinglePoint,
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `eta_t = 1 / (t mu)` for a strong-concavity modulus `mu`.
    InverseStrong(f64),
}

impl LearningRate {
    /// Step size at the one-based round `t`.
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LearningRate::Constant(eta) => eta,
            LearningRate::InverseStrong(mu) => 1.0 / (t as f64 * mu),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            LearningRate::Constant(eta) => eta,
            LearningRate::InverseStrong(mu) => mu,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!(
                "learning-rate parameter must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

/// Step-size and perturbation presets for known horizons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OcoPreset {
    /// Single point: `eta = T^(-3/4)`, `delta = r T^(-1/4)`.
    SinglePointConstant,
    /// Two point: `eta = T^(-1/2)`, `delta = r T^(-1/2)`.
    TwoPointConstant,
    /// Two point, `mu`-strongly concave rewards: `eta_t = 1/(t mu)`, `delta = r / T`.
    TwoPointStrong { mu: f64 },
}

impl OcoPreset {
    pub fn mode(&self) -> FeedbackMode {
        match self {
            OcoPreset::SinglePointConstant => FeedbackMode::SinglePoint,
            _ => FeedbackMode::TwoPoint,
        }
    }

    pub fn params(&self, inner_radius: f64, horizon: usize) -> OcoParams {
        let t = horizon as f64;
        match *self {
            OcoPreset::SinglePointConstant => OcoParams {
                delta: inner_radius / t.powf(0.25),
                rate: LearningRate::Constant(t.powf(-0.75)),
            },
            OcoPreset::TwoPointConstant => OcoParams {
                delta: inner_radius / t.sqrt(),
                rate: LearningRate::Constant(1.0 / t.sqrt()),
            },
            OcoPreset::TwoPointStrong { mu } => OcoParams {
                delta: inner_radius / t,
                rate: LearningRate::InverseStrong(mu),
            },
        }
    }
}

/// Perturbation radius and step-size rule. The shrink factor is always
/// `delta / r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcoParams {
    pub delta: f64,
    pub rate: LearningRate,
}

/// The points to evaluate in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    /// Point to play.
    pub x: Vec<f64>,
    /// Mirror point `z - delta u`; only evaluated in two-point mode.
    pub x_alt: Vec<f64>,
    pub u: UnitVector,
}

#[derive(Debug, Clone)]
pub struct OcoState {
    domain: ConvexDomain,
    mode: FeedbackMode,
    delta: f64,
    shrink: f64,
    rate: LearningRate,
    z: Vec<f64>,
    round: usize,
    pending: Option<Probe>,
    last_gradient: Vec<f64>,
}

impl OcoState {
    /// Builds a learner from a preset. The preset fixes the feedback mode;
    /// `horizon` must be at least 2 so that `xi < 1`.
    pub fn new(
        domain: ConvexDomain,
        mode: FeedbackMode,
        preset: OcoPreset,
        horizon: usize,
        z_init: Option<&[f64]>,
    ) -> Result<Self> {
        if preset.mode() != mode {
            return Err(invalid(format!(
                "preset {preset:?} requires {:?} feedback",
                preset.mode()
            )));
        }
        if horizon < 2 {
            return Err(invalid("horizon must be at least 2"));
        }
        let params = preset.params(domain.inner_radius(), horizon);
        Self::with_params(domain, mode, params, z_init)
    }

    /// Builds a learner from explicit parameters.
    pub fn with_params(
        domain: ConvexDomain,
        mode: FeedbackMode,
        params: OcoParams,
        z_init: Option<&[f64]>,
    ) -> Result<Self> {
        params.rate.validate()?;
        if !(params.delta.is_finite() && params.delta > 0.0) {
            return Err(invalid(format!(
                "delta must be positive, got {}",
                params.delta
            )));
        }
        let shrink = params.delta / domain.inner_radius();
        if shrink >= 1.0 {
            return Err(invalid(format!(
                "delta = {} is not smaller than the inner radius {}",
                params.delta,
                domain.inner_radius()
            )));
        }
        let z = match z_init {
            Some(z) => domain.project(shrink, z)?,
            None => vec![0.0; domain.dim()],
        };
        let d = domain.dim();
        Ok(Self {
            domain,
            mode,
            delta: params.delta,
            shrink,
            rate: params.rate,
            z,
            round: 1,
            pending: None,
            last_gradient: vec![0.0; d],
        })
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn shrink(&self) -> f64 {
        self.shrink
    }

    pub fn rate(&self) -> LearningRate {
        self.rate
    }

    /// Step size that the next update will use.
    pub fn current_step(&self) -> f64 {
        self.rate.at(self.round)
    }

    pub fn center(&self) -> &[f64] {
        &self.z
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn pending(&self) -> Option<&Probe> {
        self.pending.as_ref()
    }

    pub fn last_gradient(&self) -> &[f64] {
        &self.last_gradient
    }

    pub fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Probe> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "propose called twice without an update".into(),
            ));
        }
        let u = sample_unit_sphere(self.domain.dim(), rng)?;
        self.propose_along(u)
    }

    /// Probes along a caller-chosen direction.
    pub fn propose_along(&mut self, u: UnitVector) -> Result<Probe> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "propose called twice without an update".into(),
            ));
        }
        if u.dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: u.dim(),
            });
        }
        let x: Vec<f64> = self
            .z
            .iter()
            .zip(u.as_slice())
            .map(|(z, u)| z + self.delta * u)
            .collect();
        let x_alt: Vec<f64> = self
            .z
            .iter()
            .zip(u.as_slice())
            .map(|(z, u)| z - self.delta * u)
            .collect();
        assert!(
            self.domain.contains(&x, FEASIBILITY_TOL)
                && self.domain.contains(&x_alt, FEASIBILITY_TOL),
            "probe left the domain: z = {:?}, delta = {}",
            self.z,
            self.delta
        );
        let probe = Probe { x, x_alt, u };
        self.pending = Some(probe.clone());
        Ok(probe)
    }

    /// Applies the gradient step for the pending probe. `value_at_alt` must be
    /// present exactly in two-point mode.
    pub fn update(&mut self, value_at_x: f64, value_at_alt: Option<f64>) -> Result<()> {
        let probe = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::Protocol("update called without a pending probe".into()))?;
        if !value_at_x.is_finite() || value_at_alt.is_some_and(|v| !v.is_finite()) {
            return Err(invalid("reward values must be finite"));
        }
        let d = self.domain.dim() as f64;
        let scale = match (self.mode, value_at_alt) {
            (FeedbackMode::SinglePoint, None) => d / self.delta * value_at_x,
            (FeedbackMode::TwoPoint, Some(alt)) => d / (2.0 * self.delta) * (value_at_x - alt),
            (FeedbackMode::SinglePoint, Some(_)) => {
                return Err(invalid("single-point feedback takes exactly one value"))
            }
            (FeedbackMode::TwoPoint, None) => {
                return Err(invalid("two-point feedback needs the mirror-point value"))
            }
        };
        self.last_gradient = probe.u.as_slice().iter().map(|u| scale * u).collect();
        let eta = self.rate.at(self.round);
        let stepped: Vec<f64> = self
            .z
            .iter()
            .zip(&self.last_gradient)
            .map(|(z, g)| z + eta * g)
            .collect();
        self.z = self.domain.project(self.shrink, &stepped)?;
        self.pending = None;
        self.round += 1;
        Ok(())
    }
}

/// Monte-Carlo mean and per-coordinate standard error of a gradient estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// Averages the two-point estimator `d/(2 delta) (h(z + delta u) - h(z - delta u)) u`
/// over `samples` fresh directions. Its expectation is the gradient of the
/// `delta`-ball smoothing of `h` at `z`.
pub fn gradient_estimator_mean<F, R>(
    h: F,
    z: &[f64],
    delta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<GradientEstimate>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let d = z.len();
    if samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for _ in 0..samples {
        let u = sample_unit_sphere(d, rng)?;
        for i in 0..d {
            plus[i] = z[i] + delta * u.as_slice()[i];
            minus[i] = z[i] - delta * u.as_slice()[i];
        }
        let scale = d as f64 / (2.0 * delta) * (h(&plus) - h(&minus));
        for (i, ui) in u.as_slice().iter().enumerate() {
            let g = scale * ui;
            sum[i] += g;
            sum_sq[i] += g * g;
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(GradientEstimate { mean, std_error })
}

/// Half the distance between the two probe points, for invariant checks.
pub fn probe_radius(probe: &Probe) -> f64 {
    distance(&probe.x, &probe.x_alt) / 2.0
}
