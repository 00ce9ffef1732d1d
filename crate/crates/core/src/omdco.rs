//! Composite learners for mixed discrete and continuous decisions.
//!
//! [`SingleLearner`] picks one element per round with an Exp3.S learner and a
//! point with the OCO learner, feeding the realized reward to both.
//!
//! [`MatroidLearner`] picks up to `H` elements. It runs `H` Exp3.S copies, each
//! proposing one slate position. With probability `rho` a round explores: it
//! plays the slate prefix before a uniformly chosen position plus a uniformly
//! chosen element, and only the copy owning that position is credited, and only
//! if its own proposal matches the explored element. Otherwise the whole slate
//! is played and no copy observes anything.
//!
//! Random draws in [`MatroidLearner::decide`] happen in a fixed order: explore
//! flag, position, element, then the sphere direction.

use rand::Rng;

use crate::bandit::{BanditFeedback, Exp3S};
use crate::domains::{sample_unit_sphere, ConvexDomain, UnitVector};
use crate::error::{invalid, Error, Result};
use crate::oco::{FeedbackMode, LearningRate, OcoParams, OcoPreset, OcoState};
use crate::subset::Subset;

/// One round's action.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub discrete: Subset,
    pub x: Vec<f64>,
    /// Mirror point for two-point feedback.
    pub x_alt: Option<Vec<f64>>,
}

fn check_reward(value: f64, bound: f64) -> Result<()> {
    if !(bound.is_finite() && bound > 0.0) {
        return Err(invalid(format!(
            "reward bound must be positive, got {bound}"
        )));
    }
    if !(0.0..=bound).contains(&value) {
        return Err(Error::OutOfRange {
            value,
            lower: 0.0,
            upper: bound,
        });
    }
    Ok(())
}

/// Parameter presets for the single-element learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinglePreset {
    /// Single-point feedback: `eta = T^(-3/4)`, `delta = r T^(-1/4)`,
    /// `gamma = min(1, sqrt(n / T^(1/4)))`.
    SinglePoint,
    /// Two-point feedback: `eta = T^(-1/2)`, `delta = r T^(-1/2)`,
    /// `gamma = min(1, sqrt(n / T^(1/2)))`.
    TwoPoint,
    /// Two-point feedback with `mu`-strongly concave rewards: `eta_t = 1/(t mu)`,
    /// `delta = r T^(-1/4)`, `gamma = min(1, sqrt(n / T))`.
    TwoPointStrong { mu: f64 },
}

impl SinglePreset {
    pub fn mode(&self) -> FeedbackMode {
        match self {
            SinglePreset::SinglePoint => FeedbackMode::SinglePoint,
            _ => FeedbackMode::TwoPoint,
        }
    }

    pub fn gamma(&self, n: usize, horizon: usize) -> f64 {
        let (n, t) = (n as f64, horizon as f64);
        let ratio = match self {
            SinglePreset::SinglePoint => n / t.powf(0.25),
            SinglePreset::TwoPoint => n / t.sqrt(),
            SinglePreset::TwoPointStrong { .. } => n / t,
        };
        ratio.sqrt().min(1.0)
    }

    pub fn oco_params(&self, inner_radius: f64, horizon: usize) -> OcoParams {
        let t = horizon as f64;
        match *self {
            SinglePreset::SinglePoint => {
                OcoPreset::SinglePointConstant.params(inner_radius, horizon)
            }
            SinglePreset::TwoPoint => OcoPreset::TwoPointConstant.params(inner_radius, horizon),
            SinglePreset::TwoPointStrong { mu } => OcoParams {
                delta: inner_radius / t.powf(0.25),
                rate: LearningRate::InverseStrong(mu),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingleLearner {
    bandit: Exp3S,
    oco: OcoState,
    round: usize,
    pending: Option<usize>,
}

impl SingleLearner {
    pub fn new(
        n: usize,
        domain: ConvexDomain,
        preset: SinglePreset,
        horizon: usize,
    ) -> Result<Self> {
        if horizon < 2 {
            return Err(invalid("horizon must be at least 2"));
        }
        if let SinglePreset::TwoPointStrong { mu } = preset {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(invalid(format!("mu must be positive, got {mu}")));
            }
        }
        let params = preset.oco_params(domain.inner_radius(), horizon);
        let oco = OcoState::with_params(domain, preset.mode(), params, None)?;
        let bandit = Exp3S::new(n, preset.gamma(n, horizon), horizon)?;
        Ok(Self {
            bandit,
            oco,
            round: 1,
            pending: None,
        })
    }

    pub fn bandit(&self) -> &Exp3S {
        &self.bandit
    }

    pub fn oco(&self) -> &OcoState {
        &self.oco
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn decide<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Decision> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "decide called twice without feedback".into(),
            ));
        }
        let arm = self.bandit.draw(rng)?;
        let probe = self.oco.propose(rng)?;
        self.pending = Some(arm);
        Ok(Decision {
            discrete: Subset::singleton(arm),
            x: probe.x,
            x_alt: (self.oco.mode() == FeedbackMode::TwoPoint).then_some(probe.x_alt),
        })
    }

    /// Feeds `f(i_t, x_t)` (and `f(i_t, x_alt_t)` in two-point mode), both in
    /// `[0, bound]`.
    pub fn feedback(&mut self, f_at_x: f64, f_at_alt: Option<f64>, bound: f64) -> Result<()> {
        if self.pending.is_none() {
            return Err(Error::Protocol(
                "feedback without a pending decision".into(),
            ));
        }
        check_reward(f_at_x, bound)?;
        if let Some(alt) = f_at_alt {
            check_reward(alt, bound)?;
        }
        self.oco.update(f_at_x, f_at_alt)?;
        self.bandit
            .feed(BanditFeedback::observed(f_at_x, 0.0, bound))?;
        self.pending = None;
        self.round += 1;
        Ok(())
    }
}

/// Parameter presets for the cardinality-constrained learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatroidPreset {
    /// `eta = T^(-1/2)`, `delta = r T^(-1/2)`, `gamma = min(1, n / T^(1/6))`,
    /// `rho = min(1, sqrt(H / T^(1/3)))`.
    Constant,
    /// `eta_t = 1/(t mu)`, `delta = r ln T / T`, `gamma = min(1, n / T^(1/3))`,
    /// `rho = min(1, sqrt(H) / T^(1/3))`.
    Strong { mu: f64 },
}

/// Fully resolved parameters of a [`MatroidLearner`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatroidParams {
    pub gamma: f64,
    /// Exploration probability `rho~`.
    pub rho: f64,
    pub oco: OcoParams,
}

impl MatroidParams {
    pub fn from_preset(
        preset: MatroidPreset,
        n: usize,
        h: usize,
        inner_radius: f64,
        horizon: usize,
    ) -> Self {
        let (n, h, t) = (n as f64, h as f64, horizon as f64);
        match preset {
            MatroidPreset::Constant => Self {
                gamma: (n / t.powf(1.0 / 6.0)).min(1.0),
                rho: (h / t.cbrt()).sqrt().min(1.0),
                oco: OcoParams {
                    delta: inner_radius / t.sqrt(),
                    rate: LearningRate::Constant(1.0 / t.sqrt()),
                },
            },
            MatroidPreset::Strong { mu } => Self {
                gamma: (n / t.cbrt()).min(1.0),
                rho: (h.sqrt() / t.cbrt()).min(1.0),
                oco: OcoParams {
                    delta: inner_radius * t.ln() / t,
                    rate: LearningRate::InverseStrong(mu),
                },
            },
        }
    }

    /// Exploration rate tuned for an adversary limited to about `T^(1/6)`
    /// switches: `gamma = min(1, n T^(1/12) / T^(1/3))`.
    pub fn with_switching_gamma(mut self, n: usize, horizon: usize) -> Self {
        let t = horizon as f64;
        self.gamma = (n as f64 * t.powf(1.0 / 12.0) / t.cbrt()).min(1.0);
        self
    }
}

/// The random choices of one round of [`MatroidLearner`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDraws {
    pub explore: bool,
    /// Zero-based slate position `l_t`.
    pub position: usize,
    /// Zero-based explored element `i_t`.
    pub element: usize,
    pub direction: UnitVector,
}

#[derive(Debug, Clone)]
struct PendingRound {
    draws: RoundDraws,
}

#[derive(Debug, Clone)]
pub struct MatroidLearner {
    n: usize,
    bandits: Vec<Exp3S>,
    oco: OcoState,
    rho: f64,
    slate: Vec<usize>,
    round: usize,
    pending: Option<PendingRound>,
    last_observers: Vec<bool>,
}

impl MatroidLearner {
    /// Builds the learner and draws the first slate, one element per copy.
    pub fn new<R: Rng + ?Sized>(
        n: usize,
        h: usize,
        domain: ConvexDomain,
        preset: MatroidPreset,
        horizon: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if let MatroidPreset::Strong { mu } = preset {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(invalid(format!("mu must be positive, got {mu}")));
            }
        }
        let params = MatroidParams::from_preset(preset, n, h, domain.inner_radius(), horizon);
        Self::with_params(n, h, domain, params, horizon, rng)
    }

    pub fn with_params<R: Rng + ?Sized>(
        n: usize,
        h: usize,
        domain: ConvexDomain,
        params: MatroidParams,
        horizon: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if h < 2 {
            return Err(invalid(
                "cardinality cap must be at least 2; use the single-element learner",
            ));
        }
        if horizon < 2 {
            return Err(invalid("horizon must be at least 2"));
        }
        if !(params.rho > 0.0 && params.rho <= 1.0) {
            return Err(invalid(format!(
                "rho must lie in (0, 1], got {}",
                params.rho
            )));
        }
        let oco = OcoState::with_params(domain, FeedbackMode::TwoPoint, params.oco, None)?;
        let mut bandits = (0..h)
            .map(|_| Exp3S::new(n, params.gamma, horizon))
            .collect::<Result<Vec<_>>>()?;
        let slate = bandits
            .iter_mut()
            .map(|b| b.draw(rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            bandits,
            oco,
            rho: params.rho,
            slate,
            round: 1,
            pending: None,
            last_observers: vec![false; h],
        })
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.bandits.len()
    }

    pub fn gamma(&self) -> f64 {
        self.bandits[0].gamma()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Per-copy probability that a round credits that copy, `rho / (H n)`.
    pub fn effective_rho(&self) -> f64 {
        self.rho / (self.cap() * self.n) as f64
    }

    pub fn slate(&self) -> &[usize] {
        &self.slate
    }

    pub fn slate_set(&self) -> Subset {
        self.slate.iter().copied().collect()
    }

    pub fn bandits(&self) -> &[Exp3S] {
        &self.bandits
    }

    pub fn oco(&self) -> &OcoState {
        &self.oco
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Which copies observed a reward in the most recent feedback.
    pub fn last_observers(&self) -> &[bool] {
        &self.last_observers
    }

    pub fn pending_draws(&self) -> Option<&RoundDraws> {
        self.pending.as_ref().map(|p| &p.draws)
    }

    /// Samples this round's draws in the fixed order (explore, position,
    /// element, direction).
    pub fn sample_draws<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RoundDraws> {
        let explore = rng.random::<f64>() < self.rho;
        let position = rng.random_range(0..self.cap());
        let element = rng.random_range(0..self.n);
        let direction = sample_unit_sphere(self.oco.domain().dim(), rng)?;
        Ok(RoundDraws {
            explore,
            position,
            element,
            direction,
        })
    }

    pub fn decide<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Decision> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "decide called twice without feedback".into(),
            ));
        }
        let draws = self.sample_draws(rng)?;
        self.decide_with(draws)
    }

    /// Builds the round's decision from explicit draws.
    pub fn decide_with(&mut self, draws: RoundDraws) -> Result<Decision> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "decide called twice without feedback".into(),
            ));
        }
        if draws.position >= self.cap() || draws.element >= self.n {
            return Err(invalid("draws index outside the slate or ground set"));
        }
        let discrete = if draws.explore {
            self.slate[..draws.position]
                .iter()
                .copied()
                .collect::<Subset>()
                .with(draws.element)
        } else {
            self.slate_set()
        };
        let probe = self.oco.propose_along(draws.direction.clone())?;
        self.pending = Some(PendingRound { draws });
        Ok(Decision {
            discrete,
            x: probe.x,
            x_alt: Some(probe.x_alt),
        })
    }

    /// Feeds `f(S_t, x_t)` and `f(S_t, x_alt_t)`, both in `[0, bound]`, then
    /// redraws the slate from every copy.
    pub fn feedback<R: Rng + ?Sized>(
        &mut self,
        f_at_x: f64,
        f_at_alt: f64,
        bound: f64,
        rng: &mut R,
    ) -> Result<()> {
        let pending = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::Protocol("feedback without a pending decision".into()))?;
        check_reward(f_at_x, bound)?;
        check_reward(f_at_alt, bound)?;
        let draws = pending.draws.clone();
        self.oco.update(f_at_x, Some(f_at_alt))?;
        for (l, bandit) in self.bandits.iter_mut().enumerate() {
            let observed = draws.explore && draws.position == l && draws.element == self.slate[l];
            self.last_observers[l] = observed;
            bandit.feed(BanditFeedback {
                value: f_at_x,
                observed,
                lower: -bound,
                upper: bound,
            })?;
        }
        for (l, bandit) in self.bandits.iter_mut().enumerate() {
            self.slate[l] = bandit.draw(rng)?;
        }
        self.pending = None;
        self.round += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube(d: usize) -> ConvexDomain {
        ConvexDomain::cube(d, -1.0, 4.0).unwrap()
    }

    #[test]
    fn single_preset_gammas() {
        assert!((SinglePreset::TwoPoint.gamma(4, 10_000) - 0.2).abs() < 1e-12);
        assert_eq!(SinglePreset::SinglePoint.gamma(100, 16), 1.0);
        let g = SinglePreset::TwoPointStrong { mu: 2.0 }.gamma(5, 10_000);
        assert!((g - (5.0f64 / 10_000.0).sqrt()).abs() < 1e-15);
        assert!((g - 0.02236).abs() < 1e-5);
    }

    #[test]
    fn single_strong_preset_overrides_delta() {
        let s =
            SingleLearner::new(3, cube(2), SinglePreset::TwoPointStrong { mu: 2.0 }, 16).unwrap();
        assert!((s.oco().delta() - 0.5).abs() < 1e-15);
        assert!((s.oco().rate().at(2) - 0.25).abs() < 1e-15);
        assert!(SingleLearner::new(3, cube(2), SinglePreset::TwoPoint, 1).is_err());
        assert!(
            SingleLearner::new(3, cube(2), SinglePreset::TwoPointStrong { mu: -1.0 }, 10).is_err()
        );
    }

    #[test]
    fn single_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = SingleLearner::new(1, cube(1), SinglePreset::SinglePoint, 100).unwrap();
        for _ in 0..100 {
            let d = s.decide(&mut rng).unwrap();
            assert_eq!(d.discrete, Subset::singleton(0));
            assert!(d.x_alt.is_none());
            assert!(cube(1).contains(&d.x, 1e-9));
            s.feedback(0.5, None, 1.0).unwrap();
        }
    }

    #[test]
    fn single_protocol_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = SingleLearner::new(3, cube(3), SinglePreset::TwoPoint, 100).unwrap();
        assert!(s.feedback(0.5, Some(0.5), 1.0).is_err());
        s.decide(&mut rng).unwrap();
        assert!(s.decide(&mut rng).is_err());
        assert!(matches!(
            s.feedback(1.5, Some(0.5), 1.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(s.feedback(-0.1, Some(0.5), 1.0).is_err());
        let z = s.oco().center().to_vec();
        s.feedback(0.7, Some(0.7), 1.0).unwrap();
        assert_eq!(s.oco().center(), z.as_slice());
        assert_eq!(s.bandit().round(), 2);
    }

    #[test]
    fn single_zero_reward_single_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = SingleLearner::new(3, cube(2), SinglePreset::SinglePoint, 100).unwrap();
        s.decide(&mut rng).unwrap();
        s.feedback(0.0, None, 1.0).unwrap();
        assert!(s.bandit().last_estimate().iter().all(|r| *r == 0.0));
        assert_eq!(s.oco().center(), &[0.0, 0.0]);
    }

    #[test]
    fn single_fresh_state_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let fresh = SingleLearner::new(5, cube(5), SinglePreset::TwoPoint, 1000).unwrap();
        let mut counts = [0usize; 5];
        for _ in 0..100_000 {
            let mut s = fresh.clone();
            let d = s.decide(&mut rng).unwrap();
            counts[d.discrete.iter().next().unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.2).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn matroid_preset_values() {
        let p = MatroidParams::from_preset(MatroidPreset::Constant, 5, 3, 1.0, 1_000_000);
        assert!((p.gamma - 0.5).abs() < 1e-12);
        assert!((p.rho - 0.03f64.sqrt()).abs() < 1e-12);
        assert!((p.rho - 0.1732).abs() < 1e-4);
        let p = MatroidParams::from_preset(MatroidPreset::Strong { mu: 2.0 }, 2, 2, 1.0, 8);
        assert!((p.gamma - 1.0).abs() < 1e-12);
        assert!((p.rho - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((p.oco.delta - 8f64.ln() / 8.0).abs() < 1e-15);
        let p = MatroidParams::from_preset(MatroidPreset::Strong { mu: 2.0 }, 5, 3, 1.0, 2000)
            .with_switching_gamma(5, 2000);
        assert!((p.gamma - 5.0 * 2000f64.powf(-0.25)).abs() < 1e-12);
        let p = p.with_switching_gamma(5, 500);
        assert_eq!(p.gamma, 1.0);
    }

    #[test]
    fn matroid_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(
            MatroidLearner::new(5, 1, cube(5), MatroidPreset::Constant, 100, &mut rng).is_err()
        );
        let m = MatroidLearner::new(5, 3, cube(5), MatroidPreset::Constant, 100, &mut rng).unwrap();
        assert_eq!(m.slate().len(), 3);
        assert!(m.bandits().iter().all(|b| b.has_pending_draw()));
        let mut p = MatroidParams::from_preset(MatroidPreset::Constant, 5, 3, 1.0, 100);
        p.rho = 0.0;
        assert!(MatroidLearner::with_params(5, 3, cube(5), p, 100, &mut rng).is_err());
    }

    fn learner_with_slate(slate: Vec<usize>, rng: &mut ChaCha8Rng) -> MatroidLearner {
        let mut m =
            MatroidLearner::new(5, slate.len(), cube(5), MatroidPreset::Constant, 1000, rng)
                .unwrap();
        m.slate = slate;
        m
    }

    fn draws(explore: bool, position: usize, element: usize) -> RoundDraws {
        RoundDraws {
            explore,
            position,
            element,
            direction: UnitVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
        }
    }

    #[test]
    fn exploit_branch_plays_slate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = learner_with_slate(vec![1, 3, 1], &mut rng);
        let d = m.decide_with(draws(false, 2, 4)).unwrap();
        assert_eq!(d.discrete.to_vec(), vec![1, 3]);
        m.feedback(1.0, 1.0, 2.0, &mut rng).unwrap();
        assert!(m.last_observers().iter().all(|o| !o));
        for b in m.bandits() {
            assert!(b.last_estimate().iter().all(|r| *r == 0.0));
        }
    }

    #[test]
    fn explore_branch_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // slate (2, 4, 1) in one-based terms
        let mut m = learner_with_slate(vec![1, 3, 0], &mut rng);
        let d = m.decide_with(draws(true, 0, 2)).unwrap();
        assert_eq!(d.discrete, Subset::singleton(2));
        assert!(m.decide_with(draws(true, 0, 2)).is_err());
        m.feedback(0.5, 0.5, 1.0, &mut rng).unwrap();

        let mut m = learner_with_slate(vec![1, 3, 0], &mut rng);
        let d = m.decide_with(draws(true, 2, 4)).unwrap();
        assert_eq!(d.discrete.to_vec(), vec![1, 3, 4]);
    }

    #[test]
    fn only_matching_copy_observes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut m = learner_with_slate(vec![0, 2, 4], &mut rng);
        m.decide_with(draws(true, 1, 2)).unwrap();
        m.feedback(0.8, 0.7, 1.0, &mut rng).unwrap();
        assert_eq!(m.last_observers(), &[false, true, false]);
        assert!(m.bandits()[1].last_estimate()[2] > 0.0);

        // explored element differs from the copy's proposal: nobody observes
        let mut m = learner_with_slate(vec![0, 2, 4], &mut rng);
        m.decide_with(draws(true, 1, 3)).unwrap();
        m.feedback(0.8, 0.7, 1.0, &mut rng).unwrap();
        assert!(m.last_observers().iter().all(|o| !o));
    }

    #[test]
    fn feedback_range_and_protocol() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = MatroidLearner::new(
            5,
            3,
            cube(5),
            MatroidPreset::Strong { mu: 2.0 },
            100,
            &mut rng,
        )
        .unwrap();
        assert!(m.feedback(0.5, 0.5, 1.0, &mut rng).is_err());
        m.decide(&mut rng).unwrap();
        assert!(m.feedback(1.2, 0.5, 1.0, &mut rng).is_err());
        m.feedback(0.5, 0.5, 1.0, &mut rng).unwrap();
        assert_eq!(m.round(), 2);
        assert!(m
            .bandits()
            .iter()
            .all(|b| b.has_pending_draw() && b.round() == 2));
    }

    #[test]
    fn effective_rho_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = MatroidParams::from_preset(MatroidPreset::Constant, 5, 2, 1.0, 100);
        p.rho = 1.0;
        let m = MatroidLearner::with_params(5, 2, cube(5), p, 100, &mut rng).unwrap();
        assert!((m.effective_rho() - 0.1).abs() < 1e-15);
        p.rho = 0.5;
        let m = MatroidLearner::with_params(2, 2, cube(2), p, 100, &mut rng).unwrap();
        assert!((m.effective_rho() - 0.125).abs() < 1e-15);
    }
}
