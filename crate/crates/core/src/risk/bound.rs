//! The explicit MSE upper bound `L² h^{2β} + 𝔠 (π^Q(|f*|²) + σ²)/n · ρ_h(μ_n, π^Q)`.

use serde::{Deserialize, Serialize};

use crate::chains::conjugate_exponent;
use crate::error::{Error, Result};
use crate::num::compensated_sum;
use crate::points::PointSet;
use crate::rng::{derive, rng_from_seed};
use crate::similarity::{
    rho_exact_finite, rho_mc, McBudget, Mixture, PointSampler, SimilarityEstimate,
};
use crate::spectral::gamma_ps_of;
use crate::stats::MeanSe;

use super::generalization::{TEST_BURN_IN, TEST_THIN};
use super::model::{Chain, Resolved, ShiftModel};

/// Gap and warm-start constants of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConstants {
    pub gamma_ps: f64,
    /// `‖dμ/dπ‖_{L^p(π)}`.
    pub warm_norm: f64,
    /// `p̄ = p/(p-1)`.
    pub conjugate: f64,
}

/// `𝔠 = 12 max{3 N_P N_Q (p̄/γ^P ∨ q̄/γ^Q), 28 (N_P p̄/γ^P ∨ N_Q q̄/γ^Q)}`.
/// An absent block drops out of both maxima.
pub fn frak_c(p: Option<BlockConstants>, q: Option<BlockConstants>) -> f64 {
    let blocks: Vec<BlockConstants> = [p, q].into_iter().flatten().collect();
    let inv = |b: &BlockConstants| b.conjugate / b.gamma_ps;
    let a = blocks.iter().map(inv).fold(0.0, f64::max);
    let prod: f64 = blocks.iter().map(|b| b.warm_norm).product();
    let weighted = blocks
        .iter()
        .map(|b| b.warm_norm * inv(b))
        .fold(0.0, f64::max);
    12.0 * (3.0 * prod * a).max(28.0 * weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBudget {
    /// Sample sizes for Monte Carlo `ρ_h` when a kernel is continuous.
    pub rho: McBudget,
    /// Draws for `π^Q(|f*|²)` when the target is continuous.
    pub moment_draws: usize,
}

impl Default for BoundBudget {
    fn default() -> Self {
        BoundBudget {
            rho: McBudget::default(),
            moment_draws: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub rho: SimilarityEstimate,
    pub source: Option<BlockConstants>,
    pub target: Option<BlockConstants>,
    /// `π^Q(|f*|²)` with its Monte Carlo standard error (0 when exact).
    pub second_moment: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalBound {
    #[serde(with = "crate::serde_inf")]
    pub value: f64,
    /// `L² h^{2β}`.
    pub bias: f64,
    #[serde(with = "crate::serde_inf")]
    pub stochastic: f64,
    /// `𝔠`.
    pub constant: f64,
    #[serde(with = "crate::serde_inf")]
    pub rho: f64,
    pub rho_std_error: Option<f64>,
    pub second_moment: f64,
    pub second_moment_se: f64,
    pub sigma: f64,
    pub n: usize,
}

/// Evaluates the bound, checking `n_R γ^R_ps ≥ 1` for each nonempty block.
pub fn theoretical_upper_bound(
    model: &ShiftModel,
    h: f64,
    inputs: &BoundInputs,
) -> Result<TheoreticalBound> {
    if !(h > 0.0) {
        return Err(Error::validation("h", "bandwidth must be positive"));
    }
    for (block, n, c) in [
        ("P", model.n_p, inputs.source),
        ("Q", model.n_q, inputs.target),
    ] {
        if n == 0 {
            continue;
        }
        let c = c.ok_or_else(|| Error::Precondition {
            block: block.into(),
            message: "missing gap constants".into(),
        })?;
        if !(c.gamma_ps > 0.0) || (n as f64) * c.gamma_ps < 1.0 {
            return Err(Error::Precondition {
                block: block.into(),
                message: format!("n_{block} = {n} is below 1/gamma_ps = {}", 1.0 / c.gamma_ps),
            });
        }
    }
    let reg = &model.regression;
    let bias = reg.l * reg.l * h.powf(2.0 * reg.beta);
    let constant = frak_c(
        inputs.source.filter(|_| model.n_p > 0),
        inputs.target.filter(|_| model.n_q > 0),
    );
    let sigma = model.noise.sigma;
    let n = model.n();
    let rho = inputs.rho.value;
    let stochastic = constant * (inputs.second_moment.mean + sigma * sigma) / n as f64 * rho;
    Ok(TheoreticalBound {
        value: bias + stochastic,
        bias,
        stochastic,
        constant,
        rho,
        rho_std_error: inputs.rho.std_error,
        second_moment: inputs.second_moment.mean,
        second_moment_se: inputs.second_moment.se,
        sigma,
        n,
    })
}

fn block_constants(model: &ShiftModel, chain: &Chain, source: bool) -> Result<BlockConstants> {
    let spec = if source { &model.source } else { &model.target };
    Ok(BlockConstants {
        gamma_ps: gamma_ps_of(spec)?,
        warm_norm: chain.warm_norm()?,
        conjugate: conjugate_exponent(chain.warm().exponent),
    })
}

/// Gathers everything the bound needs: pseudo-gaps, warm-start norms,
/// `ρ_h(μ_n, π^Q)` and `π^Q(|f*|²)`.
pub fn bound_inputs(
    model: &ShiftModel,
    h: f64,
    budget: &BoundBudget,
    seed: u64,
) -> Result<BoundInputs> {
    let resolved = model.resolve()?;
    let source = if model.n_p > 0 {
        Some(block_constants(model, &resolved.source, true)?)
    } else {
        None
    };
    let target = if model.n_q > 0 {
        Some(block_constants(model, &resolved.target, false)?)
    } else {
        None
    };
    let rho = rho_training_target(&resolved, h, budget.rho, derive(seed, "rho"))?;
    let second_moment =
        target_second_moment(&resolved, budget.moment_draws, derive(seed, "moment"))?;
    Ok(BoundInputs {
        rho,
        source,
        target,
        second_moment,
    })
}

/// `π^Q(|f*|²)`: exact for finite targets, long-run average otherwise.
pub fn target_second_moment(resolved: &Resolved, draws: usize, seed: u64) -> Result<MeanSe> {
    match &resolved.target {
        Chain::Finite { kernel, pi, .. } => {
            let m = compensated_sum(
                kernel
                    .states()
                    .iter()
                    .zip(pi)
                    .map(|(x, w)| w * resolved.f_star(x).powi(2)),
            );
            Ok(MeanSe {
                mean: m,
                se: 0.0,
                count: kernel.len(),
            })
        }
        Chain::Continuous { spec, .. } => {
            if draws < 2 {
                return Err(Error::validation("moment_draws", "need at least two draws"));
            }
            let mut rng = rng_from_seed(seed);
            let xs = spec.stationary_sample(draws, TEST_BURN_IN, TEST_THIN, &mut rng);
            let v: Vec<f64> = xs.iter().map(|x| resolved.f_star(x).powi(2)).collect();
            Ok(MeanSe::from_samples(&v))
        }
    }
}

/// `ρ_h(μ_n, π^Q)` with `μ_n = (n_P π^P + n_Q π^Q)/n`: exact when both kernels are finite.
pub fn rho_training_target(
    resolved: &Resolved,
    h: f64,
    budget: McBudget,
    seed: u64,
) -> Result<SimilarityEstimate> {
    let m = &resolved.model;
    let n = m.n() as f64;
    let (wp, wq) = (m.n_p as f64 / n, m.n_q as f64 / n);
    if let (
        Chain::Finite {
            kernel: kp, pi: pp, ..
        },
        Chain::Finite {
            kernel: kq, pi: pq, ..
        },
    ) = (&resolved.source, &resolved.target)
    {
        let (coords, ia, ib) = union_states(kp.states(), kq.states());
        let mut mixture = vec![0.0; coords.len()];
        let mut target = vec![0.0; coords.len()];
        for (i, &j) in ia.iter().enumerate() {
            mixture[j] += wp * pp[i];
        }
        for (i, &j) in ib.iter().enumerate() {
            mixture[j] += wq * pq[i];
            target[j] += pq[i];
        }
        return rho_exact_finite(&mixture, &target, &coords, m.metric, h);
    }
    let parts: Vec<(f64, Box<dyn PointSampler>)> = vec![
        (wp, resolved.source.invariant_sampler()?),
        (wq, resolved.target.invariant_sampler()?),
    ];
    let mixture = Mixture::new(parts)?;
    let target = resolved.target.invariant_sampler()?;
    rho_mc(&mixture, target.as_ref(), h, budget, m.metric, seed)
}

/// Union of two state lists, with the position of each input state in the union.
pub(crate) fn union_states(
    a: &PointSet<f64>,
    b: &PointSet<f64>,
) -> (PointSet<f64>, Vec<usize>, Vec<usize>) {
    let mut out = PointSet::new(a.dim());
    let place = |p: &[f64], out: &mut PointSet<f64>| {
        let found = out.iter().position(|q| q == p);
        found.unwrap_or_else(|| {
            out.push(p);
            out.len() - 1
        })
    };
    let ia: Vec<usize> = a.iter().map(|p| place(p, &mut out)).collect();
    let ib: Vec<usize> = b.iter().map(|p| place(p, &mut out)).collect();
    (out, ia, ib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{FiniteKernelSpec, KernelSpec, NoiseSpec, WarmStart};
    use crate::estimator::{HolderFunction, HolderSpec};
    use crate::points::Metric;

    fn unit(gamma: f64) -> BlockConstants {
        BlockConstants {
            gamma_ps: gamma,
            warm_norm: 1.0,
            conjugate: 1.0,
        }
    }

    #[test]
    fn stationary_unit_gaps_give_336() {
        assert_eq!(frak_c(Some(unit(1.0)), Some(unit(1.0))), 336.0);
        assert_eq!(frak_c(Some(unit(1.0)), None), 336.0);
    }

    #[test]
    fn halving_target_gap_doubles_constant() {
        let a = frak_c(Some(unit(0.5)), Some(unit(0.25)));
        let b = frak_c(Some(unit(0.5)), Some(unit(0.125)));
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn product_branch_wins_for_large_norms() {
        let p = BlockConstants {
            gamma_ps: 1.0,
            warm_norm: 20.0,
            conjugate: 1.0,
        };
        let q = BlockConstants {
            gamma_ps: 1.0,
            warm_norm: 20.0,
            conjugate: 1.0,
        };
        assert_eq!(frak_c(Some(p), Some(q)), 12.0 * 3.0 * 400.0);
    }

    fn model(n_p: usize, n_q: usize) -> ShiftModel {
        ShiftModel {
            source: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.3, b: 0.1 }),
            target: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.2, b: 0.2 }),
            n_p,
            n_q,
            warm_p: WarmStart::stationary(),
            warm_q: WarmStart::stationary(),
            regression: HolderSpec::new(HolderFunction::Power, 1.0, 2.0).unwrap(),
            noise: NoiseSpec::gaussian(0.5),
            metric: Metric::SupNorm,
        }
    }

    #[test]
    fn finite_inputs_are_exact() {
        let m = model(600, 400);
        let inputs = bound_inputs(&m, 0.5, &BoundBudget::default(), 1).unwrap();
        // μ_n = 0.6 (0.25, 0.75) + 0.4 (0.5, 0.5) = (0.35, 0.65); ρ = 0.5/0.35 + 0.5/0.65
        assert!((inputs.rho.value - (0.5 / 0.35 + 0.5 / 0.65)).abs() < 1e-12);
        // f* = 2|x| on {0, 1}, π^Q uniform
        assert!((inputs.second_moment.mean - 2.0).abs() < 1e-15);
        let b = theoretical_upper_bound(&m, 0.5, &inputs).unwrap();
        assert!(b.value >= b.bias);
        assert!((b.bias - 4.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn precondition_names_block() {
        let m = model(600, 1);
        let inputs = bound_inputs(&m, 0.5, &BoundBudget::default(), 1).unwrap();
        match theoretical_upper_bound(&m, 0.5, &inputs) {
            Err(Error::Precondition { block, .. }) => assert_eq!(block, "Q"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn union_merges_shared_states() {
        let a = PointSet::from_scalars(&[0.0, 1.0]);
        let b = PointSet::from_scalars(&[1.0, 0.5]);
        let (u, ia, ib) = union_states(&a, &b);
        assert_eq!(u.len(), 3);
        assert_eq!((ia, ib), (vec![0, 1], vec![1, 2]));
    }
}
