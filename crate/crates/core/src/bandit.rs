//! Exp3.S with error feedback.
//!
//! The learner keeps one positive weight per arm. Each round it mixes the
//! normalized weights with a uniform distribution, draws an arm, and after the
//! environment reveals a (possibly gated) scalar it applies an
//! importance-weighted exponential update plus an additive share of the total
//! weight that lets it track a switching comparator.
//!
//! The Bernoulli gate that decides whether a reward is revealed lives with the
//! caller; the learner only sees the realized `(value, observed)` pair through
//! [`BanditFeedback`]. Bounds `[a, b]` arrive with every feed because the two
//! composite algorithms use different reward ranges.

use std::f64::consts::E;

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Total weight above which all weights are divided by their sum. Mixing
/// probabilities and the additive share are both scale covariant, so this does
/// not change the probability sequence.
const RENORMALIZE_ABOVE: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditFeedback {
    pub value: f64,
    /// Whether the gated reveal fired this round.
    pub observed: bool,
    pub lower: f64,
    pub upper: f64,
}

impl BanditFeedback {
    /// Exact, always-observed feedback.
    pub fn observed(value: f64, lower: f64, upper: f64) -> Self {
        Self {
            value,
            observed: true,
            lower,
            upper,
        }
    }

    pub fn hidden(lower: f64, upper: f64) -> Self {
        Self {
            value: lower,
            observed: false,
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingDraw {
    arm: usize,
    probability: f64,
}

#[derive(Debug, Clone)]
pub struct Exp3S {
    gamma: f64,
    horizon: usize,
    weights: Vec<f64>,
    round: usize,
    pending: Option<PendingDraw>,
    last_estimate: Vec<f64>,
}

impl Exp3S {
    /// A learner over `n` arms with all weights equal to one.
    pub fn new(n: usize, gamma: f64, horizon: usize) -> Result<Self> {
        Self::with_weights(vec![1.0; n], gamma, horizon)
    }

    /// A learner starting from explicit weights.
    pub fn with_weights(weights: Vec<f64>, gamma: f64, horizon: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("Exp3.S needs at least one arm"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("weights must be finite and strictly positive"));
        }
        let n = weights.len();
        Ok(Self {
            gamma,
            horizon,
            weights,
            round: 1,
            pending: None,
            last_estimate: vec![0.0; n],
        })
    }

    pub fn arms(&self) -> usize {
        self.weights.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One-based index of the round the next draw belongs to.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn has_pending_draw(&self) -> bool {
        self.pending.is_some()
    }

    /// Arm and probability cached by the last draw, if it has not been fed yet.
    pub fn pending_draw(&self) -> Option<(usize, f64)> {
        self.pending.map(|p| (p.arm, p.probability))
    }

    /// Reward estimates used by the most recent feed.
    pub fn last_estimate(&self) -> &[f64] {
        &self.last_estimate
    }

    /// The mixed sampling distribution `(1 - gamma) w / sum(w) + gamma / n`.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.arms() as f64;
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * (w / total) + self.gamma / n)
            .collect()
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let u = rng.random::<f64>();
        self.draw_from_uniform(u)
    }

    /// Draws by inverting the cumulative distribution at `u` in `[0, 1)`.
    pub fn draw_from_uniform(&mut self, u: f64) -> Result<usize> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "draw called twice without an intervening feed".into(),
            ));
        }
        if !(0.0..1.0).contains(&u) {
            return Err(invalid(format!(
                "uniform variate must lie in [0, 1), got {u}"
            )));
        }
        let probs = self.probabilities();
        let mut acc = 0.0;
        let mut arm = probs.len() - 1;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                arm = j;
                break;
            }
        }
        self.pending = Some(PendingDraw {
            arm,
            probability: probs[arm],
        });
        Ok(arm)
    }

    pub fn feed(&mut self, fb: BanditFeedback) -> Result<()> {
        let pending = self
            .pending
            .ok_or_else(|| Error::Protocol("feed called without a pending draw".into()))?;
        if !fb.lower.is_finite() || !fb.upper.is_finite() || fb.lower >= fb.upper {
            return Err(invalid(format!(
                "feedback bounds must satisfy a < b, got [{}, {}]",
                fb.lower, fb.upper
            )));
        }
        if fb.observed && !(fb.value >= fb.lower && fb.value <= fb.upper) {
            return Err(Error::OutOfRange {
                value: fb.value,
                lower: fb.lower,
                upper: fb.upper,
            });
        }

        let n = self.arms() as f64;
        self.last_estimate.iter_mut().for_each(|r| *r = 0.0);
        if fb.observed {
            let estimate = (fb.value - fb.lower) / (pending.probability * (fb.upper - fb.lower));
            debug_assert!(estimate >= 0.0);
            self.last_estimate[pending.arm] = estimate;
        }

        let total: f64 = self.weights.iter().sum();
        let share = E / (n * self.horizon as f64) * total;
        for (w, r) in self.weights.iter_mut().zip(&self.last_estimate) {
            *w = *w * (self.gamma * r / n).exp() + share;
        }
        let total: f64 = self.weights.iter().sum();
        if total > RENORMALIZE_ABOVE {
            self.weights.iter_mut().for_each(|w| *w /= total);
        }

        self.pending = None;
        self.round += 1;
        Ok(())
    }
}
