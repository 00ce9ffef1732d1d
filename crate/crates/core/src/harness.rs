//! Seeded regret experiments.
//!
//! A trial runs one learner against one adversary for `T` rounds, records the
//! reward it collected at the played point and the clairvoyant value of every
//! round, and tracks the clairvoyant trajectory's variation. Trials of an
//! experiment run in parallel and are aggregated into per-horizon quantiles.
//!
//! Two random streams are used per trial, both keyed by `(seed, T, trial)`:
//! one drives the learner and one the adversary, so the adversary never sees
//! the learner's randomness.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{ConvexDomain, DomainSpec};
use crate::error::{Error, Result};
use crate::omdco::{
    Decision, MatroidLearner, MatroidParams, MatroidPreset, SingleLearner, SinglePreset,
};
use crate::oracle::{
    self, OracleMethod, RoundOptimum, SetFunctionProfile, SetFunctionTable, VariationStats,
};
use crate::rewards::{
    AdversaryMode, AdversarySchedule, CoefficientRanges, CoefficientSampler, FamilyKind,
    RewardFunction,
};
use crate::subset::Subset;

const ADVERSARY_TAG: u64 = 0x6164_7665_7273_6172;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    /// One element per round.
    Single,
    /// Up to `H` elements per round.
    Matroid,
}

/// Step-size and smoothing preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    SinglePoint,
    TwoPoint,
    /// Two-point feedback tuned for strongly concave rewards; needs `mu`.
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    #[default]
    Preset,
    /// Exploration tuned for an adversary limited to about `T^(1/6)` changes.
    LimitedSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum AdversaryConfig {
    Redraw,
    /// Either a fixed `lambda` or `lambda = ceil(T^(1/lambda_root))`.
    Limited {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_root: Option<u32>,
    },
}

impl AdversaryConfig {
    pub fn mode(&self, horizon: usize) -> Result<AdversaryMode> {
        match *self {
            AdversaryConfig::Redraw => Ok(AdversaryMode::Redraw),
            AdversaryConfig::Limited {
                lambda: Some(lambda),
                lambda_root: None,
            } => Ok(AdversaryMode::LimitedSwitch { lambda }),
            AdversaryConfig::Limited {
                lambda: None,
                lambda_root: Some(root),
            } if root >= 1 => {
                let lambda = (horizon as f64).powf(1.0 / root as f64).ceil() as usize;
                Ok(AdversaryMode::LimitedSwitch { lambda })
            }
            _ => Err(Error::Config(
                "limited adversary needs exactly one of lambda or a positive lambda_root".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// `alpha = 1`.
    #[default]
    Fixed,
    /// `alpha` from the worst ratio and curvature of the induced set functions
    /// `S -> f_t(S, x*_t)` over the trial.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    #[default]
    ClosedForm,
    Grid,
    Pga,
}

impl OracleChoice {
    pub fn method(self) -> OracleMethod {
        match self {
            OracleChoice::ClosedForm => OracleMethod::ClosedForm,
            OracleChoice::Grid => OracleMethod::GRID,
            OracleChoice::Pga => OracleMethod::PGA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(rename = "H")]
    pub cap: usize,
    /// Point dimension; must equal `n` for the shipped families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(rename = "T_list")]
    pub horizons: Vec<usize>,
    pub trials: usize,
    pub algorithm: AlgorithmKind,
    pub preset: PresetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default)]
    pub gamma_rule: GammaRule,
    pub reward: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientRanges>,
    pub adversary: AdversaryConfig,
    pub domain: DomainSpec,
    #[serde(default)]
    pub alpha: AlphaMode,
    #[serde(default)]
    pub oracle: OracleChoice,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Quadratic rewards with `a, b ~ U[1, 4]`, `c = 70` on `[-1, 4]^5`, a fresh
    /// function every round, `H = 3` and the strongly concave preset.
    pub fn quadratic_redraw(seed: u64) -> Self {
        Self {
            n: 5,
            cap: 3,
            d: None,
            horizons: vec![500, 2000, 8000],
            trials: 50,
            algorithm: AlgorithmKind::Matroid,
            preset: PresetKind::Strong,
            mu: Some(2.0),
            gamma_rule: GammaRule::Preset,
            reward: FamilyKind::Quadratic,
            coefficients: None,
            adversary: AdversaryConfig::Redraw,
            domain: DomainSpec::Box {
                lo: vec![-1.0; 5],
                hi: vec![4.0; 5],
            },
            alpha: AlphaMode::Fixed,
            oracle: OracleChoice::ClosedForm,
            seed,
            output: None,
        }
    }

    /// As [`Self::quadratic_redraw`] but the function changes only
    /// `ceil(T^(1/6))` times and exploration follows the limited-switch rule.
    pub fn quadratic_limited_switch(seed: u64) -> Self {
        Self {
            adversary: AdversaryConfig::Limited {
                lambda: None,
                lambda_root: Some(6),
            },
            gamma_rule: GammaRule::LimitedSwitch,
            ..Self::quadratic_redraw(seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        ConvexDomain::try_from(self.domain.clone())
    }

    pub fn sampler(&self) -> Result<CoefficientSampler> {
        let ranges = self
            .coefficients
            .unwrap_or_else(|| CoefficientRanges::default_for(self.reward));
        CoefficientSampler::new(self.reward, ranges, self.domain()?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.horizons.iter().any(|t| *t < 2) {
            return fail("every horizon must be at least 2");
        }
        if self.n == 0 || self.n > oracle::MAX_ENUMERATION {
            return fail("n must lie in 1..=20");
        }
        if self.cap == 0 || self.cap > self.n {
            return fail("H must lie in 1..=n");
        }
        match (self.cap, self.algorithm) {
            (1, AlgorithmKind::Single) => {}
            (1, _) => return fail("H = 1 requires the single algorithm"),
            (_, AlgorithmKind::Matroid) => {}
            _ => return fail("H >= 2 requires the matroid algorithm"),
        }
        if self.algorithm == AlgorithmKind::Matroid && self.preset == PresetKind::SinglePoint {
            return fail("the matroid algorithm uses two-point feedback");
        }
        if self.algorithm == AlgorithmKind::Single && self.gamma_rule == GammaRule::LimitedSwitch {
            return fail("the limited-switch gamma rule applies to the matroid algorithm");
        }
        match (self.preset, self.mu) {
            (PresetKind::Strong, Some(mu)) if mu > 0.0 && mu.is_finite() => {}
            (PresetKind::Strong, _) => return fail("the strong preset needs a positive mu"),
            _ => {}
        }
        if let Some(d) = self.d {
            if d != self.n {
                return fail("d must equal n");
            }
        }
        let domain = self.domain()?;
        if domain.dim() != self.n {
            return fail("domain dimension must equal n");
        }
        if let Some(t) = self.horizons.first() {
            self.adversary.mode(*t)?;
        }
        self.sampler()?;
        Ok(())
    }
}

/// Source of reward functions. `history` holds the decisions of the rounds
/// before `t`; the shipped adversaries ignore it.
pub trait Adversary {
    fn reward_at(&mut self, t: usize, history: &[Decision]) -> Result<RewardFunction>;

    /// Upper bound on any reward the adversary can hand out for sets of at
    /// most `h` elements.
    fn reward_bound(&self, h: usize) -> f64;
}

/// An [`AdversarySchedule`] that reuses the function within a segment.
#[derive(Debug, Clone)]
pub struct ScheduledAdversary {
    schedule: AdversarySchedule,
    cached: Option<(usize, RewardFunction)>,
}

impl ScheduledAdversary {
    pub fn new(schedule: AdversarySchedule) -> Self {
        Self {
            schedule,
            cached: None,
        }
    }
}

impl Adversary for ScheduledAdversary {
    fn reward_at(&mut self, t: usize, _history: &[Decision]) -> Result<RewardFunction> {
        let segment = self.schedule.segment(t)?;
        match &self.cached {
            Some((s, f)) if *s == segment => Ok(f.clone()),
            _ => {
                let f = self.schedule.function_for_segment(segment)?;
                self.cached = Some((segment, f.clone()));
                Ok(f)
            }
        }
    }

    fn reward_bound(&self, h: usize) -> f64 {
        self.schedule.sampler().reward_bound(h)
    }
}

/// The same function every round.
#[derive(Debug, Clone)]
pub struct FixedAdversary {
    function: RewardFunction,
    bound: f64,
}

impl FixedAdversary {
    pub fn new(function: RewardFunction, bound: f64) -> Self {
        Self { function, bound }
    }
}

impl Adversary for FixedAdversary {
    fn reward_at(&mut self, _t: usize, _history: &[Decision]) -> Result<RewardFunction> {
        Ok(self.function.clone())
    }

    fn reward_bound(&self, _h: usize) -> f64 {
        self.bound
    }
}

enum Learner {
    Single(SingleLearner),
    Matroid(MatroidLearner),
}

fn stream_id(horizon: usize, trial: usize) -> u64 {
    ((horizon as u64) << 32) | trial as u64
}

fn algorithm_rng(config: &ExperimentConfig, horizon: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream_id(horizon, trial));
    rng
}

fn build_learner(
    config: &ExperimentConfig,
    domain: &ConvexDomain,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Learner> {
    let mu = config.mu.unwrap_or(0.0);
    Ok(match config.algorithm {
        AlgorithmKind::Single => {
            let preset = match config.preset {
                PresetKind::SinglePoint => SinglePreset::SinglePoint,
                PresetKind::TwoPoint => SinglePreset::TwoPoint,
                PresetKind::Strong => SinglePreset::TwoPointStrong { mu },
            };
            Learner::Single(SingleLearner::new(
                config.n,
                domain.clone(),
                preset,
                horizon,
            )?)
        }
        AlgorithmKind::Matroid => {
            let preset = match config.preset {
                PresetKind::Strong => MatroidPreset::Strong { mu },
                _ => MatroidPreset::Constant,
            };
            let mut params = MatroidParams::from_preset(
                preset,
                config.n,
                config.cap,
                domain.inner_radius(),
                horizon,
            );
            if config.gamma_rule == GammaRule::LimitedSwitch {
                params = params.with_switching_gamma(config.n, horizon);
            }
            Learner::Matroid(MatroidLearner::with_params(
                config.n,
                config.cap,
                domain.clone(),
                params,
                horizon,
                rng,
            )?)
        }
    })
}

/// Per-round record of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub horizon: usize,
    /// Reward at the played point `x_t`.
    pub algorithm: Vec<f64>,
    /// Clairvoyant value `f_t(S*_t, x*_t)`.
    pub oracle: Vec<f64>,
    pub played: Vec<Subset>,
    pub variation: VariationStats,
    /// Worst ratio and curvature over the trial, when requested.
    pub profile: Option<SetFunctionProfile>,
}

impl RegretTrace {
    /// `alpha` for this trace under `mode`.
    pub fn alpha(&self, mode: AlphaMode) -> f64 {
        match (mode, self.profile) {
            (AlphaMode::Profile, Some(p)) => p.alpha,
            _ => 1.0,
        }
    }

    pub fn cumulative_regret(&self, alpha: f64) -> Vec<f64> {
        let mut acc = 0.0;
        self.oracle
            .iter()
            .zip(&self.algorithm)
            .map(|(o, a)| {
                acc += alpha * o - a;
                acc
            })
            .collect()
    }
}

/// `alpha * sum oracle - sum algorithm`.
pub fn compute_regret(trace: &RegretTrace, alpha: f64) -> f64 {
    alpha * trace.oracle.iter().sum::<f64>() - trace.algorithm.iter().sum::<f64>()
}

/// Runs trial `trial` at horizon `horizon` against the configured adversary.
pub fn run_trial(config: &ExperimentConfig, horizon: usize, trial: usize) -> Result<RegretTrace> {
    let mode = config.adversary.mode(horizon)?;
    let schedule = AdversarySchedule::new(
        mode,
        config.sampler()?,
        horizon,
        config.seed ^ ADVERSARY_TAG,
        stream_id(horizon, trial),
    )?;
    run_trial_with(
        config,
        horizon,
        trial,
        &mut ScheduledAdversary::new(schedule),
    )
}

/// Runs one trial against an arbitrary adversary.
pub fn run_trial_with(
    config: &ExperimentConfig,
    horizon: usize,
    trial: usize,
    adversary: &mut dyn Adversary,
) -> Result<RegretTrace> {
    let domain = config.domain()?;
    let method = config.oracle.method();
    let bound = adversary.reward_bound(config.cap);
    let mut rng = algorithm_rng(config, horizon, trial);
    let mut learner = build_learner(config, &domain, horizon, &mut rng)?;

    let mut history: Vec<Decision> = Vec::with_capacity(horizon);
    let mut algorithm = Vec::with_capacity(horizon);
    let mut oracle_values = Vec::with_capacity(horizon);
    let mut played = Vec::with_capacity(horizon);
    let mut best_sets = Vec::with_capacity(horizon);
    let mut best_points = Vec::with_capacity(horizon);
    let mut last: Option<(RewardFunction, RoundOptimum)> = None;
    let mut worst: Option<(f64, f64)> = None;

    for t in 1..=horizon {
        let f = adversary.reward_at(t, &history)?;
        let decision = match &mut learner {
            Learner::Single(l) => l.decide(&mut rng)?,
            Learner::Matroid(l) => l.decide(&mut rng)?,
        };
        let value = f.eval(decision.discrete, &decision.x, &domain)?;
        let alt = decision
            .x_alt
            .as_ref()
            .map(|x| f.eval(decision.discrete, x, &domain))
            .transpose()?;
        match &mut learner {
            Learner::Single(l) => l.feedback(value, alt, bound)?,
            Learner::Matroid(l) => {
                let alt = alt.expect("matroid decisions carry a mirror point");
                l.feedback(value, alt, bound, &mut rng)?
            }
        }

        let fresh = !matches!(&last, Some((g, _)) if *g == f);
        if fresh {
            let opt = oracle::round_optimum(&f, config.cap, &domain, method)?;
            if config.alpha == AlphaMode::Profile {
                let p = oracle::profile(&SetFunctionTable::from_reward(&f, &opt.point)?)?;
                worst = Some(match worst {
                    None => (p.kappa, p.curvature),
                    Some((k, c)) => (k.min(p.kappa), c.max(p.curvature)),
                });
            }
            last = Some((f, opt));
        }
        let opt = &last.as_ref().expect("optimum computed above").1;
        algorithm.push(value);
        oracle_values.push(opt.value);
        played.push(decision.discrete);
        best_sets.push(opt.set);
        best_points.push(opt.point.clone());
        history.push(decision);
    }

    let variation = oracle::variation_stats(&best_sets, &best_points)?;
    let profile = worst.map(|(kappa, curvature)| SetFunctionProfile {
        kappa,
        curvature,
        alpha: oracle::alpha_factor(kappa, curvature),
    });
    Ok(RegretTrace {
        horizon,
        algorithm,
        oracle: oracle_values,
        played,
        variation,
        profile,
    })
}

/// Summary statistics reported per horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// `R`.
    Regret,
    /// `R / (T (V_S + V_x))`.
    PerVariation,
    /// `R / (T^(2/3) (V_S + V_x))`.
    PerVariationTwoThirds,
    /// `R / (T ln T)`.
    PerTLogT,
    /// `R / (T^(3/4) ln T)`.
    PerT34LogT,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Regret,
        Metric::PerVariation,
        Metric::PerVariationTwoThirds,
        Metric::PerTLogT,
        Metric::PerT34LogT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Regret => "regret",
            Metric::PerVariation => "regret_per_t_variation",
            Metric::PerVariationTwoThirds => "regret_per_t23_variation",
            Metric::PerTLogT => "regret_per_t_log_t",
            Metric::PerT34LogT => "regret_per_t34_log_t",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Normalizes regret `r` of a horizon-`horizon` trace with the given
    /// variation.
    pub fn apply(self, r: f64, horizon: usize, variation: &VariationStats) -> f64 {
        let t = horizon as f64;
        let v = variation.sets as f64 + variation.path;
        match self {
            Metric::Regret => r,
            Metric::PerVariation => r / (t * v),
            Metric::PerVariationTwoThirds => r / (t.powf(2.0 / 3.0) * v),
            Metric::PerTLogT => r / (t * t.ln()),
            Metric::PerT34LogT => r / (t.powf(0.75) * t.ln()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub mean: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quantiles {
    /// Order-independent: values are sorted before any arithmetic.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q10: quantile(&v, 0.1),
            q50: quantile(&v, 0.5),
            q90: quantile(&v, 0.9),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub horizon: usize,
    pub metric: Metric,
    pub stats: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    /// Aggregates the traces of one horizon.
    pub fn push_horizon(&mut self, horizon: usize, traces: &[RegretTrace], alpha: AlphaMode) {
        for metric in Metric::ALL {
            let values: Vec<f64> = traces
                .iter()
                .map(|tr| metric.apply(compute_regret(tr, tr.alpha(alpha)), horizon, &tr.variation))
                .collect();
            if let Some(stats) = Quantiles::of(&values) {
                self.rows.push(SummaryRow {
                    horizon,
                    metric,
                    stats,
                });
            }
        }
    }

    pub fn get(&self, horizon: usize, metric: Metric) -> Option<&Quantiles> {
        self.rows
            .iter()
            .find(|r| r.horizon == horizon && r.metric == metric)
            .map(|r| &r.stats)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,metric,mean,q10,q50,q90\n");
        for r in &self.rows {
            let s = &r.stats;
            writeln!(
                out,
                "{},{},{:.11e},{:.11e},{:.11e},{:.11e}",
                r.horizon,
                r.metric.name(),
                s.mean,
                s.q10,
                s.q50,
                s.q90
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("T,metric,mean,q10,q50,q90") => {}
            other => return Err(Error::Csv(format!("unexpected header {other:?}"))),
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| Error::Csv(format!("line {}: {what}", k + 2));
            if fields.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let horizon = fields[0].parse().map_err(|_| bad("bad horizon"))?;
            let metric = Metric::from_name(fields[1]).ok_or_else(|| bad("unknown metric"))?;
            let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad("bad number"));
            rows.push(SummaryRow {
                horizon,
                metric,
                stats: Quantiles {
                    mean: num(2)?,
                    q10: num(3)?,
                    q50: num(4)?,
                    q90: num(5)?,
                },
            });
        }
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per round: `t,algorithm_reward,oracle_value,cumulative_regret`.
pub fn trace_to_csv(trace: &RegretTrace, alpha: f64) -> String {
    let mut out = String::from("t,algorithm_reward,oracle_value,cumulative_regret\n");
    for (k, r) in trace.cumulative_regret(alpha).iter().enumerate() {
        writeln!(
            out,
            "{},{:.11e},{:.11e},{:.11e}",
            k + 1,
            trace.algorithm[k],
            trace.oracle[k],
            r
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_trace_csv(trace: &RegretTrace, alpha: f64, path: &Path) -> Result<()> {
    write_file(path, &trace_to_csv(trace, alpha))
}

/// Runs every trial at one horizon, in parallel, returned in trial order.
pub fn run_horizon(config: &ExperimentConfig, horizon: usize) -> Result<Vec<RegretTrace>> {
    (0..config.trials)
        .into_par_iter()
        .map(|k| run_trial(config, horizon, k))
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary> {
    config.validate()?;
    let mut summary = Summary::default();
    for &horizon in &config.horizons {
        let traces = run_horizon(config, horizon)?;
        summary.push_horizon(horizon, &traces, config.alpha);
    }
    Ok(summary)
}

/// Worst ratio and curvature of the induced set functions over the first
/// `rounds` rounds of trial 0 at the first horizon.
pub fn profile_config(config: &ExperimentConfig, rounds: usize) -> Result<SetFunctionProfile> {
    config.validate()?;
    let horizon = config.horizons[0];
    let domain = config.domain()?;
    let schedule = AdversarySchedule::new(
        config.adversary.mode(horizon)?,
        config.sampler()?,
        horizon,
        config.seed ^ ADVERSARY_TAG,
        stream_id(horizon, 0),
    )?;
    let (mut kappa, mut c) = (1.0_f64, 0.0_f64);
    for t in 1..=rounds.min(horizon) {
        let f = schedule.function_at(t)?;
        let opt = oracle::round_optimum(&f, config.cap, &domain, config.oracle.method())?;
        let p = oracle::profile(&SetFunctionTable::from_reward(&f, &opt.point)?)?;
        kappa = kappa.min(p.kappa);
        c = c.max(p.curvature);
    }
    Ok(SetFunctionProfile {
        kappa,
        curvature: c,
        alpha: oracle::alpha_factor(kappa, c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::ModularLinear;

    fn small(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            horizons: vec![50, 100],
            trials: 4,
            ..ExperimentConfig::quadratic_redraw(seed)
        }
    }

    #[test]
    fn regret_arithmetic() {
        let trace = RegretTrace {
            horizon: 10,
            algorithm: vec![1.0; 10],
            oracle: vec![2.0; 10],
            played: vec![Subset::EMPTY; 10],
            variation: VariationStats {
                elements: 1,
                sets: 1,
                path: 0.0,
            },
            profile: None,
        };
        assert_eq!(compute_regret(&trace, 1.0), 10.0);
        assert_eq!(compute_regret(&trace, 0.5), 0.0);
        assert_eq!(trace.cumulative_regret(1.0)[4], 5.0);
    }

    #[test]
    fn config_round_trip_and_validation() {
        let c = ExperimentConfig::quadratic_limited_switch(3);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        let json = r#"{"n":5,"H":3,"T_list":[100],"trials":2,"algorithm":"matroid","preset":"strong","mu":2,
            "reward":"quadratic","adversary":{"mode":"limited","lambda":2},
            "domain":{"kind":"box","lo":[-1,-1,-1,-1,-1],"hi":[4,4,4,4,4]},"seed":1}"#;
        let c = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(
            c.adversary.mode(100).unwrap(),
            AdversaryMode::LimitedSwitch { lambda: 2 }
        );
        assert_eq!(c.alpha, AlphaMode::Fixed);

        let bad = |edit: fn(&mut ExperimentConfig)| {
            let mut c = small(1);
            edit(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.trials = 0));
        assert!(bad(|c| c.horizons = vec![1]));
        assert!(bad(|c| c.algorithm = AlgorithmKind::Single));
        assert!(bad(|c| c.mu = None));
        assert!(bad(|c| c.d = Some(4)));
        assert!(bad(|c| c.preset = PresetKind::SinglePoint));
        assert!(bad(|c| c.adversary = AdversaryConfig::Limited {
            lambda: Some(1),
            lambda_root: Some(6)
        }));
        assert!(ExperimentConfig::from_json(r#"{"n":5}"#).is_err());
    }

    #[test]
    fn lambda_root_rule() {
        let a = AdversaryConfig::Limited {
            lambda: None,
            lambda_root: Some(6),
        };
        assert_eq!(
            a.mode(500).unwrap(),
            AdversaryMode::LimitedSwitch { lambda: 3 }
        );
        assert_eq!(
            a.mode(8000).unwrap(),
            AdversaryMode::LimitedSwitch { lambda: 5 }
        );
        assert_eq!(
            a.mode(64).unwrap(),
            AdversaryMode::LimitedSwitch { lambda: 2 }
        );
    }

    #[test]
    fn oracle_dominates_per_round() {
        let c = small(5);
        let tr = run_trial(&c, 100, 0).unwrap();
        assert_eq!(tr.algorithm.len(), 100);
        for (o, a) in tr.oracle.iter().zip(&tr.algorithm) {
            assert!(o - a >= -1e-9);
        }
        let cum = tr.cumulative_regret(1.0);
        assert!(cum.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(tr.played.iter().all(|s| s.len() <= 3 && !s.is_empty()));
    }

    #[test]
    fn trials_are_deterministic() {
        let c = small(9);
        assert_eq!(run_trial(&c, 50, 2).unwrap(), run_trial(&c, 50, 2).unwrap());
        assert_ne!(run_trial(&c, 50, 2).unwrap(), run_trial(&c, 50, 3).unwrap());
    }

    #[test]
    fn zero_reward_gives_zero_regret() {
        let mut c = small(2);
        c.domain = DomainSpec::Box {
            lo: vec![-1.0; 5],
            hi: vec![1.0; 5],
        };
        c.preset = PresetKind::TwoPoint;
        c.mu = None;
        let d = c.domain().unwrap();
        let f =
            RewardFunction::Modular(ModularLinear::new(vec![0.0; 5], vec![0.0; 5], &d).unwrap());
        let tr = run_trial_with(&c, 30, 0, &mut FixedAdversary::new(f, 1.0)).unwrap();
        assert!(tr.algorithm.iter().chain(&tr.oracle).all(|v| *v == 0.0));
        assert_eq!(compute_regret(&tr, 1.0), 0.0);
        assert_eq!(tr.variation.sets, 1);
    }

    #[test]
    fn single_algorithm_runs() {
        let mut c = small(4);
        c.cap = 1;
        c.algorithm = AlgorithmKind::Single;
        c.preset = PresetKind::SinglePoint;
        let tr = run_trial(&c, 60, 1).unwrap();
        assert!(tr.played.iter().all(|s| s.len() == 1));
        assert!(compute_regret(&tr, 1.0) >= 0.0);
    }

    #[test]
    fn profile_alpha_is_one_for_quadratics() {
        let mut c = small(6);
        c.alpha = AlphaMode::Profile;
        let tr = run_trial(&c, 50, 0).unwrap();
        let p = tr.profile.unwrap();
        assert_eq!((p.kappa, p.curvature, p.alpha), (1.0, 0.0, 1.0));
        assert_eq!(tr.alpha(AlphaMode::Profile), 1.0);
        assert_eq!(profile_config(&c, 20).unwrap().alpha, 1.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let q = Quantiles::of(&[3.0, 1.0, 2.0, 4.0, 5.0]).unwrap();
        assert_eq!(q.q50, 3.0);
        assert!((q.q10 - 1.4).abs() < 1e-12);
        assert!((q.q90 - 4.6).abs() < 1e-12);
        assert_eq!(q.mean, 3.0);
        let one = Quantiles::of(&[7.5]).unwrap();
        assert_eq!((one.q10, one.q50, one.q90, one.mean), (7.5, 7.5, 7.5, 7.5));
        assert!(Quantiles::of(&[]).is_none());
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(Summary::default().to_csv(), "T,metric,mean,q10,q50,q90\n");
        let c = ExperimentConfig {
            horizons: vec![40],
            trials: 2,
            ..small(1)
        };
        let s = run_experiment(&c).unwrap();
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(!csv.contains('\r'));
        assert_eq!(Summary::from_csv(&csv).unwrap().to_csv(), csv);
        assert!(Summary::from_csv("T,metric\n").is_err());
        let tr = run_trial(&c, 40, 0).unwrap();
        assert_eq!(trace_to_csv(&tr, 1.0).lines().count(), 41);
    }

    #[test]
    fn write_reports_path_on_failure() {
        let err = Summary::default()
            .write_csv(Path::new("/nonexistent-dir/x.csv"))
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
