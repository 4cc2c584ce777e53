//! Sample-size sweeps and log-log rate fits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chains::path::fmt_num;
use crate::error::{Error, Result};
use crate::estimator::{bandwidth_alpha, bandwidth_finite, effective_sample_size};
use crate::rng::Streams;
use crate::stats::fit_line;

use super::bound::{bound_inputs, theoretical_upper_bound, BoundBudget};
use super::generalization::generalization_risk;
use super::model::{Chain, ShiftModel};

/// How the bandwidth follows the sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum BandwidthRule {
    Fixed {
        h: f64,
    },
    /// `h = scale · n^{-exponent}`.
    Power {
        #[serde(default = "one")]
        scale: f64,
        exponent: f64,
    },
    /// The α-family rule with exponent `ζ(α, d)`.
    Alpha {
        beta: f64,
        alpha: f64,
        alpha_prime: Option<f64>,
        d: f64,
    },
    /// `c · min(n_eff^{-1/2}, δ)`, for finite source and target.
    Finite {
        delta: f64,
        c: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl BandwidthRule {
    pub fn bandwidth(&self, model: &ShiftModel) -> Result<f64> {
        let n = model.n();
        let h = match self {
            BandwidthRule::Fixed { h } => *h,
            BandwidthRule::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
            BandwidthRule::Alpha {
                beta,
                alpha,
                alpha_prime,
                d,
            } => bandwidth_alpha(model.n_p, model.n_q, *beta, *alpha, *alpha_prime, *d)?,
            BandwidthRule::Finite { delta, c } => {
                let r = model.resolve()?;
                let (Chain::Finite { pi: pp, .. }, Chain::Finite { pi: pq, .. }) =
                    (&r.source, &r.target)
                else {
                    return Err(Error::validation(
                        "rule",
                        "the finite rule needs finite source and target kernels",
                    ));
                };
                let e = effective_sample_size(model.n_p, model.n_q, pp, pq)?;
                bandwidth_finite(e.n_eff, *delta, *c)?
            }
        };
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::validation(
                "rule",
                format!("bandwidth {h} is not positive"),
            ));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub n_p: usize,
    pub n_q: usize,
    pub h: f64,
    pub risk: f64,
    pub se: f64,
    #[serde(default, with = "crate::serde_inf::option")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    /// Slope of `log risk` against `log n`.
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub target_exponent: Option<f64>,
    pub warnings: Vec<String>,
}

impl RateFit {
    /// Fits the log-log slope over points with positive finite risk.
    pub fn from_points(points: Vec<RatePoint>, target_exponent: Option<f64>) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.risk > 0.0 && p.risk.is_finite())
            .map(|p| ((p.n as f64).ln(), p.risk.ln()))
            .unzip();
        let fit = fit_line(&xs, &ys)?;
        Ok(RateFit {
            points,
            slope: fit.slope,
            stderr: fit.slope_se,
            intercept: fit.intercept,
            target_exponent,
            warnings: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub n_list: Vec<usize>,
    /// Share of each `n` given to the target block.
    #[serde(default)]
    pub q_fraction: f64,
    pub rule: BandwidthRule,
    #[serde(default = "default_test_n")]
    pub test_n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub target_exponent: Option<f64>,
    /// Evaluate the upper bound at each point with this budget.
    #[serde(default)]
    pub bound: Option<BoundBudget>,
}

fn default_test_n() -> usize {
    super::generalization::DEFAULT_TEST_N
}

fn default_reps() -> usize {
    super::generalization::DEFAULT_REPS
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        let ns = &self.n_list;
        if ns.len() < 4 {
            return Err(Error::validation("n_list", "need at least 4 sample sizes"));
        }
        if ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
            return Err(Error::validation(
                "n_list",
                "sample sizes must be positive and increasing",
            ));
        }
        let ratios: Vec<f64> = ns.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
        let r0 = ratios[0];
        if ratios.iter().any(|r| (r / r0 - 1.0).abs() > 0.05) {
            return Err(Error::validation(
                "n_list",
                "sample sizes must form a geometric sequence",
            ));
        }
        if !(0.0..=1.0).contains(&self.q_fraction) {
            return Err(Error::validation("q_fraction", "must lie in [0, 1]"));
        }
        if self.reps == 0 || self.test_n == 0 {
            return Err(Error::validation("reps", "need reps >= 1 and test_n >= 1"));
        }
        Ok(())
    }
}

/// Runs the risk at each sample size with the rule's bandwidth and fits the log-log slope.
pub fn rate_sweep(template: &ShiftModel, options: &SweepOptions, seed: u64) -> Result<RateFit> {
    options.validate()?;
    let root = Streams::new(seed);
    let mut points = Vec::with_capacity(options.n_list.len());
    let mut warnings = Vec::new();
    for &n in &options.n_list {
        let n_q = (n as f64 * options.q_fraction).round() as usize;
        let model = template.with_sizes(n - n_q, n_q);
        let h = options.rule.bandwidth(&model)?;
        if let Some(check) = model.resolve()?.explosion(h)? {
            if check.explodes {
                let w = check
                    .witness
                    .map(|b| format!("{:?} x {:?}", b.lo, b.hi))
                    .unwrap_or_default();
                return Err(Error::Explosion {
                    h,
                    reason: format!("target mass on {w} lies farther than h from the source support, so rho_h is infinite at n = {n}"),
                });
            }
        }
        let streams = root.child(&format!("n={n}"));
        let report = generalization_risk(&model, h, options.test_n, options.reps, streams.seed())?;
        let bound = match &options.bound {
            None => None,
            Some(budget) => {
                let inputs = bound_inputs(&model, h, budget, streams.child("bound").seed())?;
                match theoretical_upper_bound(&model, h, &inputs) {
                    Ok(b) => Some(b.value),
                    Err(Error::Precondition { block, message }) => {
                        warnings.push(format!("n = {n}: bound skipped, block {block}: {message}"));
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        points.push(RatePoint {
            n,
            n_p: model.n_p,
            n_q,
            h,
            risk: report.empirical_risk.mean,
            se: report.empirical_risk.se,
            bound,
        });
    }
    let mut fit = RateFit::from_points(points, options.target_exponent)?;
    fit.warnings = warnings;
    Ok(fit)
}

/// CSV `n,n_P,n_Q,h,risk,se,bound`.
pub fn write_rate_csv<W: Write>(out: &mut W, fit: &RateFit) -> Result<()> {
    writeln!(out, "n,n_P,n_Q,h,risk,se,bound")?;
    for p in &fit.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.n,
            p.n_p,
            p.n_q,
            fmt_num(p.h),
            fmt_num(p.risk),
            fmt_num(p.se),
            p.bound.map(fmt_num).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Two-column plot series `log_n,log_risk`, skipping nonpositive risks.
pub fn write_rate_plot<W: Write>(out: &mut W, fit: &RateFit) -> Result<()> {
    writeln!(out, "log_n,log_risk")?;
    for p in fit
        .points
        .iter()
        .filter(|p| p.risk > 0.0 && p.risk.is_finite())
    {
        writeln!(
            out,
            "{},{}",
            fmt_num((p.n as f64).ln()),
            fmt_num(p.risk.ln())
        )?;
    }
    Ok(())
}
