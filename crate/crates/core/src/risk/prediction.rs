//! Prediction error at a future state of the target chain and its gap to the
//! generalization risk.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::num::compensated_sum;
use crate::rng::{derive, rng_from_seed, Streams};
use crate::stats::{fit_line, LineFit, MeanSe};

use super::generalization::{integrated_error, mean_squared_error};
use super::model::{Chain, ShiftModel};

/// One row of the decay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub m: usize,
    pub prediction_error: MeanSe,
    /// Paired replication mean of prediction error minus generalization risk.
    pub gap: MeanSe,
    /// `sup_x ‖dQ^m(x,·)/dπ^Q‖_∞`, for finite targets.
    pub m_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub h: f64,
    pub reps: usize,
    pub test_n: usize,
    /// Conditional expectations over the future state are exact for finite targets.
    pub exact: bool,
    pub generalization_risk: MeanSe,
    pub rows: Vec<DecayRow>,
    /// Least-squares line of `log |gap(m)|` against `m`, over rows with a nonzero gap.
    pub decay_fit: Option<LineFit<f64>>,
}

/// `max_{x,j} Q^m(x,j) / π_j`.
pub fn rn_bound(q_m: &Matrix<f64>, pi: &[f64]) -> f64 {
    let k = q_m.dim();
    let mut m = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if pi[j] > 0.0 {
                m = m.max(q_m[(i, j)] / pi[j]);
            }
        }
    }
    m
}

struct RepOutcome {
    generalization: f64,
    predictions: Vec<f64>,
}

/// Prediction error at `X^Q_{n_Q+m-1}` for each `m` in `m_list`, next to the
/// generalization risk of the same fits.
pub fn gap_vs_generalization(
    model: &ShiftModel,
    h: f64,
    m_list: &[usize],
    test_n: usize,
    reps: usize,
    seed: u64,
) -> Result<PredictionReport> {
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::validation(
            "m",
            "need a nonempty list of horizons m >= 1",
        ));
    }
    if reps == 0 || test_n == 0 {
        return Err(Error::validation("reps", "need reps >= 1 and test_n >= 1"));
    }
    let resolved = model.resolve()?;
    let powers: Option<Vec<Matrix<f64>>> = match &resolved.target {
        Chain::Finite { kernel, .. } => Some(
            m_list
                .iter()
                .map(|&m| kernel.transition().pow(m as u64))
                .collect(),
        ),
        Chain::Continuous { .. } => None,
    };
    let root = Streams::new(seed);
    let outcomes: Vec<RepOutcome> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<RepOutcome> {
            let streams = root.replication(r);
            let training = resolved.training(&streams)?;
            let fit = resolved.fit(&training, h)?;
            let generalization = integrated_error(&resolved, &fit, test_n, &streams)?;
            let predictions = match &resolved.target {
                Chain::Finite { kernel, init, .. } => {
                    let errs: Vec<f64> = kernel
                        .states()
                        .iter()
                        .map(|x| {
                            let e = fit.predict(x) - resolved.f_star(x);
                            e * e
                        })
                        .collect();
                    let powers = powers.as_ref().expect("finite target has matrix powers");
                    m_list
                        .iter()
                        .zip(powers)
                        .map(|(&m, qm)| {
                            // law of X_{n_Q+m-1} given the Q block
                            let law: Vec<f64> =
                                match training.target_path.indices().and_then(|ix| ix.last()) {
                                    Some(&last) => qm.row(last).to_vec(),
                                    None => kernel.transition().pow(m as u64 - 1).left_mul(init),
                                };
                            compensated_sum(law.iter().zip(&errs).map(|(w, e)| w * e))
                        })
                        .collect()
                }
                Chain::Continuous { spec, warm } => {
                    let mut rng = rng_from_seed(derive(streams.seed(), "future"));
                    let start = match training.target_path.last() {
                        Some(x) => x.to_vec(),
                        None => spec.initial_state(&warm.law, &mut rng)?,
                    };
                    let offset = usize::from(training.target_path.is_empty());
                    let horizon = m_list.iter().max().copied().unwrap_or(1);
                    let mut futures: Vec<crate::points::PointSet<f64>> = m_list
                        .iter()
                        .map(|_| crate::points::PointSet::with_capacity(spec.dim(), test_n))
                        .collect();
                    for _ in 0..test_n {
                        let path = spec.run_from(&start, horizon + 1, &mut rng);
                        for (k, &m) in m_list.iter().enumerate() {
                            futures[k].push(path.point(m - offset));
                        }
                    }
                    futures
                        .iter()
                        .map(|pts| mean_squared_error(&resolved, &fit, pts))
                        .collect()
                }
            };
            Ok(RepOutcome {
                generalization,
                predictions,
            })
        })
        .collect::<Result<_>>()?;
    let gen: Vec<f64> = outcomes.iter().map(|o| o.generalization).collect();
    let pi_q = match &resolved.target {
        Chain::Finite { pi, .. } => Some(pi.clone()),
        Chain::Continuous { .. } => None,
    };
    let rows: Vec<DecayRow> = m_list
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let pred: Vec<f64> = outcomes.iter().map(|o| o.predictions[k]).collect();
            let diff: Vec<f64> = outcomes
                .iter()
                .map(|o| o.predictions[k] - o.generalization)
                .collect();
            let m_bound = powers
                .as_ref()
                .zip(pi_q.as_ref())
                .map(|(p, pi)| rn_bound(&p[k], pi));
            DecayRow {
                m,
                prediction_error: MeanSe::from_samples(&pred),
                gap: MeanSe::from_samples(&diff),
                m_bound,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.gap.mean != 0.0 && r.gap.mean.is_finite())
        .map(|r| (r.m as f64, r.gap.mean.abs().ln()))
        .unzip();
    let decay_fit = if xs.len() >= 2 {
        fit_line(&xs, &ys).ok()
    } else {
        None
    };
    Ok(PredictionReport {
        h,
        reps,
        test_n,
        exact: pi_q.is_some(),
        generalization_risk: MeanSe::from_samples(&gen),
        rows,
        decay_fit,
    })
}

/// Prediction error at a single horizon `m`.
pub fn prediction_error(
    model: &ShiftModel,
    h: f64,
    m: usize,
    test_n: usize,
    reps: usize,
    seed: u64,
) -> Result<MeanSe> {
    Ok(gap_vs_generalization(model, h, &[m], test_n, reps, seed)?.rows[0].prediction_error)
}
