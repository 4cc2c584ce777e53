//! Monte Carlo generalization risk `E ∫ (f̂ - f*)² dπ^Q`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::FittedNw;
use crate::num::{compensated_sum, pairwise_sum};
use crate::points::PointSet;
use crate::rng::{stream, Streams};
use crate::stats::MeanSe;

use super::bound::{bound_inputs, theoretical_upper_bound, BoundBudget, TheoreticalBound};
use super::model::{Chain, Resolved, ShiftModel};

pub const DEFAULT_REPS: usize = 32;
/// Test draws per replication when `π^Q` must be sampled.
pub const DEFAULT_TEST_N: usize = 4096;
pub const TEST_BURN_IN: usize = 1000;
pub const TEST_THIN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub h: f64,
    pub n_p: usize,
    pub n_q: usize,
    pub reps: usize,
    pub test_n: usize,
    /// Whether the `π^Q` integral is an exact finite sum.
    pub exact_integration: bool,
    pub empirical_risk: MeanSe,
    pub theoretical_bound: Option<TheoreticalBound>,
}

impl RiskReport {
    /// `risk - slack·SE ≤ bound`.
    pub fn within_bound(&self, slack: f64) -> Option<bool> {
        self.theoretical_bound
            .as_ref()
            .map(|b| self.empirical_risk.mean - slack * self.empirical_risk.se <= b.value)
    }
}

/// Squared error of `fit` integrated against `π^Q`, exactly for finite targets
/// and on a fresh long-run sample otherwise.
pub(crate) fn integrated_error(
    resolved: &Resolved,
    fit: &FittedNw<f64>,
    test_n: usize,
    streams: &Streams,
) -> Result<f64> {
    match &resolved.target {
        Chain::Finite { kernel, pi, .. } => Ok(compensated_sum(
            kernel.states().iter().zip(pi).map(|(x, w)| {
                let e = fit.predict(x) - resolved.f_star(x);
                w * e * e
            }),
        )),
        Chain::Continuous { spec, .. } => {
            let mut rng = streams.rng(stream::TEST);
            let test = spec.stationary_sample(test_n, TEST_BURN_IN, TEST_THIN, &mut rng);
            Ok(mean_squared_error(resolved, fit, &test))
        }
    }
}

pub(crate) fn mean_squared_error(
    resolved: &Resolved,
    fit: &FittedNw<f64>,
    points: &PointSet<f64>,
) -> f64 {
    let sq: Vec<f64> = points
        .iter()
        .map(|x| {
            let e = fit.predict(x) - resolved.f_star(x);
            e * e
        })
        .collect();
    pairwise_sum(&sq) / sq.len().max(1) as f64
}

/// Per-replication risks; replication `r` uses `Streams::new(seed).replication(r)`.
pub fn replicate_risk(
    model: &ShiftModel,
    h: f64,
    test_n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::validation("reps", "need at least one replication"));
    }
    if test_n == 0 {
        return Err(Error::validation("test_n", "need at least one test point"));
    }
    let resolved = model.resolve()?;
    let root = Streams::new(seed);
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let streams = root.replication(r);
            let training = resolved.training(&streams)?;
            let fit = resolved.fit(&training, h)?;
            integrated_error(&resolved, &fit, test_n, &streams)
        })
        .collect()
}

/// Empirical part of the risk report.
pub fn generalization_risk(
    model: &ShiftModel,
    h: f64,
    test_n: usize,
    reps: usize,
    seed: u64,
) -> Result<RiskReport> {
    let risks = replicate_risk(model, h, test_n, reps, seed)?;
    Ok(RiskReport {
        h,
        n_p: model.n_p,
        n_q: model.n_q,
        reps,
        test_n,
        exact_integration: model.target.is_finite(),
        empirical_risk: MeanSe::from_samples(&risks),
        theoretical_bound: None,
    })
}

/// Empirical risk together with the explicit upper bound.
pub fn risk_report(
    model: &ShiftModel,
    h: f64,
    test_n: usize,
    reps: usize,
    seed: u64,
    budget: &BoundBudget,
) -> Result<RiskReport> {
    let mut report = generalization_risk(model, h, test_n, reps, seed)?;
    let inputs = bound_inputs(model, h, budget, Streams::new(seed).child("bound").seed())?;
    report.theoretical_bound = Some(theoretical_upper_bound(model, h, &inputs)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{ContinuousKernelSpec, FiniteKernelSpec, KernelSpec, NoiseSpec, WarmStart};
    use crate::estimator::{HolderFunction, HolderSpec};
    use crate::points::Metric;

    fn model(function: HolderFunction, sigma: f64) -> ShiftModel {
        let chain = ContinuousKernelSpec::ProductBetaChain {
            gammas: vec![1.0],
            floor: 0.8,
            modulation: Default::default(),
            ambient_dim: 1,
        };
        ShiftModel {
            source: KernelSpec::Continuous(chain.clone()),
            target: KernelSpec::Continuous(ContinuousKernelSpec::BetaChain { gamma: 0.5 }),
            n_p: 300,
            n_q: 100,
            warm_p: WarmStart::stationary(),
            warm_q: WarmStart::stationary(),
            regression: HolderSpec::new(function, 1.0, 1.0).unwrap(),
            noise: NoiseSpec::gaussian(sigma),
            metric: Metric::SupNorm,
        }
    }

    #[test]
    fn zero_signal_zero_noise_has_zero_risk() {
        let r = generalization_risk(&model(HolderFunction::Zero, 0.0), 0.05, 256, 4, 1).unwrap();
        assert_eq!(r.empirical_risk.mean, 0.0);
        assert_eq!(r.empirical_risk.se, 0.0);
    }

    #[test]
    fn constant_signal_wide_bandwidth_is_exact() {
        let r = generalization_risk(
            &model(HolderFunction::Constant { value: 2.5 }, 0.0),
            1.0,
            256,
            4,
            1,
        )
        .unwrap();
        assert_eq!(r.empirical_risk.mean, 0.0);
    }

    #[test]
    fn parallel_equals_sequential() {
        let m = model(HolderFunction::Sine { w: None }, 0.3);
        let par = replicate_risk(&m, 0.1, 128, 6, 9).unwrap();
        let seq: Vec<f64> = (0..6)
            .map(|r| {
                let res = m.resolve().unwrap();
                let s = Streams::new(9).replication(r);
                let fit = res.fit(&res.training(&s).unwrap(), 0.1).unwrap();
                integrated_error(&res, &fit, 128, &s).unwrap()
            })
            .collect();
        assert_eq!(par, seq);
    }

    #[test]
    fn finite_target_uses_exact_integral() {
        let m = ShiftModel {
            source: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.3, b: 0.1 }),
            target: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.2, b: 0.2 }),
            n_p: 50,
            n_q: 50,
            warm_p: WarmStart::stationary(),
            warm_q: WarmStart::stationary(),
            regression: HolderSpec::new(HolderFunction::Power, 1.0, 1.0).unwrap(),
            noise: NoiseSpec::gaussian(0.5),
            metric: Metric::SupNorm,
        };
        let r = generalization_risk(&m, 0.5, 1, 8, 3).unwrap();
        assert!(r.exact_integration);
        assert!(r.empirical_risk.mean > 0.0 && r.empirical_risk.mean < 0.1);
    }

    #[test]
    fn more_target_data_does_not_hurt() {
        let m = model(HolderFunction::Sine { w: None }, 0.5);
        let a = generalization_risk(&m.with_sizes(300, 50), 0.05, 512, 32, 2)
            .unwrap()
            .empirical_risk;
        let b = generalization_risk(&m.with_sizes(300, 400), 0.05, 512, 32, 2)
            .unwrap()
            .empirical_risk;
        assert!(b.mean <= a.mean + 3.0 * (a.se * a.se + b.se * b.se).sqrt());
    }
}
