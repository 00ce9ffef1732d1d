//! Quick invariant suite behind `omdco selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bandit::{BanditFeedback, Exp3S};
use crate::domains::ConvexDomain;
use crate::error::Result;
use crate::harness::{self, ExperimentConfig, Summary};
use crate::oco::{FeedbackMode, OcoPreset, OcoState, FEASIBILITY_TOL};
use crate::oracle::{self, OracleMethod, SetFunctionTable};
use crate::rewards;
use crate::subset::Subset;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn bandit_probabilities(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut b = Exp3S::new(10, 0.1, 10_000)?;
    let mut ok = true;
    for _ in 0..10_000 {
        b.draw(rng)?;
        b.feed(BanditFeedback::observed(
            rng.random_range(0.0..=1.0),
            0.0,
            1.0,
        ))?;
        let p = b.probabilities();
        ok &= (p.iter().sum::<f64>() - 1.0).abs() <= 1e-12 && p.iter().all(|q| *q >= 0.01);
    }
    Ok(Check {
        name: "bandit probabilities",
        passed: ok,
        detail: "sum to one and stay above gamma/n".into(),
    })
}

fn oco_feasibility(rng: &mut ChaCha8Rng) -> Result<Check> {
    let domain = ConvexDomain::cube(3, -1.0, 4.0)?;
    let mut s = OcoState::new(
        domain.clone(),
        FeedbackMode::TwoPoint,
        OcoPreset::TwoPointConstant,
        5000,
        None,
    )?;
    let mut outside = 0;
    for _ in 0..5000 {
        let p = s.propose(rng)?;
        outside += [&p.x, &p.x_alt]
            .iter()
            .filter(|x| !domain.contains(x, FEASIBILITY_TOL))
            .count();
        s.update(
            rng.random_range(-1.0..1.0),
            Some(rng.random_range(-1.0..1.0)),
        )?;
    }
    Ok(Check {
        name: "oco feasibility",
        passed: outside == 0,
        detail: format!("{outside} probes outside the domain"),
    })
}

fn oracle_agreement(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut sets_agree = true;
    for _ in 0..20 {
        let (f, d) = rewards::benchmark_instance(5, rng)?;
        let a = oracle::round_optimum(&f, 3, &d, OracleMethod::ClosedForm)?;
        let b = oracle::round_optimum(&f, 3, &d, OracleMethod::GRID)?;
        worst = worst.max((a.value - b.value).abs());
        sets_agree &= a.set == b.set;
    }
    Ok(Check {
        name: "oracle agreement",
        passed: worst <= 1e-2 && sets_agree,
        detail: format!("closed form vs grid, worst gap {worst:.2e}"),
    })
}

fn modular_profile(rng: &mut ChaCha8Rng) -> Result<Check> {
    let v: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..5.0)).collect();
    let p = oracle::profile(&SetFunctionTable::from_fn(6, |s| {
        s.iter().map(|i| v[i]).sum()
    })?)?;
    Ok(Check {
        name: "modular profile",
        passed: p.kappa == 1.0 && p.curvature == 0.0 && p.alpha == 1.0,
        detail: format!(
            "kappa {}, curvature {}, alpha {}",
            p.kappa, p.curvature, p.alpha
        ),
    })
}

fn greedy_bound(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut violations = 0;
    for _ in 0..20 {
        let v: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..5.0)).collect();
        let g = SetFunctionTable::from_fn(8, |s| s.iter().map(|i| v[i]).sum::<f64>().powf(1.3))?;
        let top = g.value(Subset::full(8));
        let tau: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..=0.1 * top)).collect();
        if !oracle::greedy_bound_check(&g, 3, &tau)? {
            violations += 1;
        }
    }
    Ok(Check {
        name: "noisy greedy bound",
        passed: violations == 0,
        detail: format!("{violations} violations"),
    })
}

fn harness_round_trip() -> Result<Check> {
    let config = ExperimentConfig {
        horizons: vec![100],
        trials: 3,
        ..ExperimentConfig::quadratic_redraw(7)
    };
    let a = harness::run_experiment(&config)?.to_csv();
    let b = harness::run_experiment(&config)?.to_csv();
    let reparsed = Summary::from_csv(&a)?.to_csv();
    Ok(Check {
        name: "harness determinism",
        passed: a == b && a == reparsed,
        detail: "identical CSV across runs and after reparsing".into(),
    })
}

pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        bandit_probabilities(&mut rng)?,
        oco_feasibility(&mut rng)?,
        oracle_agreement(&mut rng)?,
        modular_profile(&mut rng)?,
        greedy_bound(&mut rng)?,
        harness_round_trip()?,
    ])
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all(1).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
