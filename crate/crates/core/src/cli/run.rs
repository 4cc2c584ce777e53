//! Experiment runners: each turns a resolved config into in-memory artifacts.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::chains::path::fmt_num;
use crate::chains::{ContinuousKernelSpec, Distribution, KernelSpec, WarmStart};
use crate::error::{Error, Result};
use crate::points::{Metric, PointSet};
use crate::risk::bound::union_states;
use crate::risk::{
    gap_vs_generalization, generalization_risk, rate_sweep, risk_report, write_rate_csv,
    write_rate_plot, Chain, RateFit, RatePoint,
};
use crate::similarity::{
    alpha_family_check, alpha_index_fit_lower, explosion_check, minorizing_law, rho_exact_curve,
    rho_mc_curve, rho_uniform_cube, step_law, transfer_to_alpha, verify_transfer_exponent,
    write_rho_csv, ExplosionCheck, McBudget, SimilarityEstimate,
};
use crate::spectral::{continuous_report, finite_report, SpectralReport};
use crate::stats::{geometric_grid, linspace};

use super::config::{
    AlphaCheckConfig, Experiment, ExperimentConfig, PredictConfig, RateSweepConfig, RhoConfig,
    RhoMethod, RiskConfig, SpectralConfig, TransferCheckConfig,
};

/// How a run ended, short of an error.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Success,
    CheckFailed(String),
    Explosion(String),
}

impl Status {
    pub fn code(&self) -> i32 {
        match self {
            Status::Success => 0,
            Status::CheckFailed(_) => 2,
            Status::Explosion(_) => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Success => "ok",
            Status::CheckFailed(_) => "check-failed",
            Status::Explosion(_) => "explosion",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Vec<Artifact>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

impl Outcome {
    fn new(status: Status, summary: String) -> Self {
        Outcome {
            status,
            artifacts: Vec::new(),
            summary,
        }
    }

    fn push(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes,
        });
    }

    fn push_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.push(name, bytes);
        Ok(())
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Runs a resolved config without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let seed = config.seed;
    match &config.experiment {
        Experiment::Spectral(c) => spectral(c),
        Experiment::Rho(c) => rho(c, seed),
        Experiment::AlphaCheck(c) => alpha_check(c, seed),
        Experiment::TransferCheck(c) => transfer_check(c),
        Experiment::Risk(c) => risk(c, seed),
        Experiment::RateSweep(c) => sweep(c, seed),
        Experiment::Predict(c) => predict(c, seed),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn spectral(c: &SpectralConfig) -> Result<Outcome> {
    let reports: Vec<SpectralReport> = c
        .kernels
        .iter()
        .map(|k| match &k.kernel {
            KernelSpec::Finite(f) => finite_report(&k.name, &f.build()?, c.k_max),
            KernelSpec::Continuous(s) => continuous_report(&k.name, s),
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("kernel,absolute_gap,pseudo_gap,pseudo_gap_k,mixing_time,gamma_ps_lower,doeblin_epsilon,doeblin_m\n");
    let mut table = format!(
        "{:<12} {:>10} {:>10} {:>4} {:>8} {:>10} {:>10} {:>4}\n",
        "kernel", "gamma*", "gamma_ps", "k", "tau", "gps_lower", "eps", "m"
    );
    let short = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    for r in &reports {
        let (eps, m) = (r.doeblin.map(|d| d.epsilon), r.doeblin.map(|d| d.m));
        let tau = r.mixing_time.or(r.doeblin.map(|d| d.tau_bound));
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.kernel,
            opt_num(r.absolute_gap),
            opt_num(r.pseudo_gap),
            opt(r.pseudo_gap_k),
            opt(r.mixing_time),
            opt_num(r.gamma_ps_lower),
            opt_num(eps),
            opt(m)
        )
        .unwrap();
        writeln!(
            table,
            "{:<12} {:>10} {:>10} {:>4} {:>8} {:>10} {:>10} {:>4}",
            r.kernel,
            short(r.absolute_gap),
            short(r.pseudo_gap),
            r.pseudo_gap_k
                .map(|k| k.to_string())
                .unwrap_or_else(|| "-".into()),
            tau.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            short(r.gamma_ps_lower),
            short(eps),
            m.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
        )
        .unwrap();
    }
    let mut out = Outcome::new(Status::Success, table);
    out.push_json(
        "report.json",
        &json!({ "kind": "spectral", "kernels": reports }),
    )?;
    out.push("spectral.csv", csv.into_bytes());
    Ok(out)
}

/// A `ρ_h` curve plus the support-level explosion check when both laws are continuous.
pub struct RhoCurve {
    pub curve: Vec<SimilarityEstimate>,
    pub support_check: Option<ExplosionCheck>,
}

impl RhoCurve {
    pub fn explodes(&self) -> bool {
        self.curve.iter().any(|e| !e.is_finite())
            || self.support_check.as_ref().is_some_and(|c| c.explodes)
    }

    fn witness_h(&self) -> Option<f64> {
        self.curve
            .iter()
            .filter(|e| !e.is_finite())
            .map(|e| e.h)
            .reduce(f64::max)
            .or(self
                .support_check
                .as_ref()
                .filter(|c| c.explodes)
                .map(|c| c.h))
    }
}

fn unit_uniform(spec: &KernelSpec) -> Option<usize> {
    match spec {
        KernelSpec::Continuous(ContinuousKernelSpec::Independence {
            distribution: Distribution::Uniform { lo, hi },
        }) if lo.iter().all(|&v| v == 0.0) && hi.iter().all(|&v| v == 1.0) => Some(lo.len()),
        _ => None,
    }
}

/// `ρ_h(π^source, π^target)` at each bandwidth of `grid`.
pub fn rho_between(
    source: &KernelSpec,
    target: &KernelSpec,
    grid: &[f64],
    budget: McBudget,
    metric: Metric,
    method: RhoMethod,
    seed: u64,
) -> Result<RhoCurve> {
    let stationary = WarmStart::stationary();
    let p = Chain::new(source, &stationary, "source")?;
    let q = Chain::new(target, &stationary, "target")?;
    if method == RhoMethod::Auto {
        if let (
            Chain::Finite {
                kernel: kp, pi: pp, ..
            },
            Chain::Finite {
                kernel: kq, pi: pq, ..
            },
        ) = (&p, &q)
        {
            let (coords, ia, ib) = union_states(kp.states(), kq.states());
            let mut mixture = vec![0.0; coords.len()];
            let mut tgt = vec![0.0; coords.len()];
            for (i, &j) in ia.iter().enumerate() {
                mixture[j] += pp[i];
            }
            for (i, &j) in ib.iter().enumerate() {
                tgt[j] += pq[i];
            }
            return Ok(RhoCurve {
                curve: rho_exact_curve(&mixture, &tgt, &coords, metric, grid)?,
                support_check: None,
            });
        }
        if let (Some(a), Some(b)) = (unit_uniform(source), unit_uniform(target)) {
            if a == b && metric == Metric::SupNorm {
                let curve = grid
                    .iter()
                    .map(|&h| SimilarityEstimate::closed_form(h, rho_uniform_cube(h, a)))
                    .collect();
                return Ok(RhoCurve {
                    curve,
                    support_check: None,
                });
            }
        }
    }
    let support_check = match (&p, &q) {
        (Chain::Continuous { .. }, Chain::Continuous { .. }) => {
            let h = grid.iter().copied().fold(f64::INFINITY, f64::min);
            Some(explosion_check(&p.support(), &q.support(), h)?)
        }
        _ => None,
    };
    let curve = rho_mc_curve(
        p.invariant_sampler()?.as_ref(),
        q.invariant_sampler()?.as_ref(),
        grid,
        budget,
        metric,
        seed,
    )?;
    Ok(RhoCurve {
        curve,
        support_check,
    })
}

fn rho_fit_series(curve: &[SimilarityEstimate]) -> Vec<u8> {
    let mut s = String::from("log_inv_h,log_rho\n");
    for e in curve.iter().filter(|e| e.is_finite() && e.value > 0.0) {
        writeln!(s, "{},{}", fmt_num((1.0 / e.h).ln()), fmt_num(e.value.ln())).unwrap();
    }
    s.into_bytes()
}

fn rho_csv(curve: &[SimilarityEstimate]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rho_csv(&mut buf, curve)?;
    Ok(buf)
}

fn rho(c: &RhoConfig, seed: u64) -> Result<Outcome> {
    let grid = c
        .grid
        .as_ref()
        .ok_or_else(|| Error::validation("grid", "unresolved"))?
        .values()?;
    let r = rho_between(
        &c.source, &c.target, &grid, c.budget, c.metric, c.method, seed,
    )?;
    let fit = alpha_index_fit_lower(&r.curve).ok();
    let mut summary = String::new();
    for e in &r.curve {
        writeln!(summary, "h = {:<12.6e} rho = {}", e.h, fmt_num(e.value)).unwrap();
    }
    let status = match r.witness_h() {
        Some(h) if c.require_finite => Status::Explosion(format!(
            "rho_h is infinite at h = {h}: some target mass has no source mass within h"
        )),
        _ => Status::Success,
    };
    let mut out = Outcome::new(status, summary);
    out.push_json(
        "report.json",
        &json!({
            "kind": "rho",
            "explosion": r.explodes(),
            "support_check": r.support_check,
            "alpha_fit": fit,
            "curve": r.curve,
        }),
    )?;
    out.push("rho.csv", rho_csv(&r.curve)?);
    out.push("rho_fit.csv", rho_fit_series(&r.curve));
    Ok(out)
}

fn alpha_check(c: &AlphaCheckConfig, seed: u64) -> Result<Outcome> {
    let grid = c
        .grid
        .as_ref()
        .ok_or_else(|| Error::validation("grid", "unresolved"))?
        .values()?;
    let diameter = c
        .diameter
        .ok_or_else(|| Error::validation("diameter", "unresolved"))?;
    let pq = rho_between(
        &c.source,
        &c.target,
        &grid,
        c.budget,
        c.metric,
        RhoMethod::Auto,
        seed,
    )?;
    let qq = match c.alpha_prime {
        Some(_) => Some(rho_between(
            &c.target,
            &c.target,
            &grid,
            c.budget,
            c.metric,
            RhoMethod::Auto,
            crate::rng::derive(seed, "target"),
        )?),
        None => None,
    };
    let prime = c.alpha_prime.zip(qq.as_ref().map(|r| r.curve.as_slice()));
    let check = alpha_family_check(&pq.curve, c.alpha, prime, c.constant, diameter)?;
    let status = if check.pass {
        Status::Success
    } else {
        Status::CheckFailed(format!(
            "alpha-family check fails at h = {}",
            opt(check.witness_h)
        ))
    };
    let summary = format!(
        "alpha = {} constant = {} sup = {} at h = {} -> {}\n",
        c.alpha,
        c.constant,
        fmt_num(check.sup_value),
        fmt_num(check.sup_h),
        if check.pass { "pass" } else { "FAIL" }
    );
    let mut out = Outcome::new(status, summary);
    out.push_json(
        "report.json",
        &json!({
            "kind": "alpha-check",
            "check": check,
            "curve": pq.curve,
            "target_curve": qq.as_ref().map(|r| &r.curve),
        }),
    )?;
    out.push("rho.csv", rho_csv(&pq.curve)?);
    out.push("rho_fit.csv", rho_fit_series(&pq.curve));
    if let Some(r) = &qq {
        out.push("rho_target.csv", rho_csv(&r.curve)?);
    }
    Ok(out)
}

fn cube_grid(d: usize, per_axis: usize) -> PointSet<f64> {
    let axis = linspace(0.0, 1.0, per_axis);
    let total = per_axis.pow(d as u32);
    let mut out = PointSet::with_capacity(d, total);
    let mut p = vec![0.0; d];
    for mut k in 0..total {
        for v in p.iter_mut() {
            *v = axis[k % per_axis];
            k /= per_axis;
        }
        out.push(&p);
    }
    out
}

fn transfer_check(c: &TransferCheckConfig) -> Result<Outcome> {
    let gamma = c
        .gamma
        .ok_or_else(|| Error::validation("gamma", "unresolved"))?;
    let constant = c
        .constant
        .ok_or_else(|| Error::validation("constant", "unresolved"))?;
    let d = c.source.dim();
    let nu = minorizing_law(&c.source)?;
    let xs = cube_grid(d, c.x_points);
    let ys = cube_grid(d, c.y_points);
    let steps: Vec<_> = ys
        .iter()
        .map(|y| step_law(&c.target, y))
        .collect::<Result<_>>()?;
    let hs = if c.h_points == 1 {
        vec![c.radius]
    } else {
        geometric_grid(c.radius, c.h_min, c.h_points)
    };
    let mut extra = Vec::new();
    let mut extra_laws = Vec::new();
    if let (ContinuousKernelSpec::BetaChain { .. }, ContinuousKernelSpec::BetaChain { .. }) =
        (&c.source, &c.target)
    {
        extra.push((vec![0.0], vec![0.0]));
        extra_laws.push((vec![0.0], step_law(&c.target, &[0.0])?));
    }
    let law_of = |y: &[f64]| {
        extra_laws
            .iter()
            .find(|(e, _)| e.as_slice() == y)
            .map(|(_, l)| l)
            .or_else(|| ys.iter().position(|p| p == y).map(|i| &steps[i]))
            .expect("y is a grid point")
    };
    let check = verify_transfer_exponent(
        |x, h| nu.ball(x, h),
        |y, x, h| law_of(y).ball(x, h),
        gamma,
        constant,
        c.radius,
        1,
        &xs,
        &ys,
        &hs,
        &extra,
    )?;
    let (eps_p, _) = c.source.doeblin();
    let alpha = transfer_to_alpha(
        gamma,
        c.target.active_dim() as f64,
        1.0,
        constant,
        eps_p,
        d as f64,
    )
    .ok();
    let status = if check.pass {
        Status::Success
    } else {
        let w = &check.witness;
        Status::CheckFailed(format!(
            "transfer inequality fails at x = {:?}, y = {:?}, h = {}",
            w.x, w.y, w.h
        ))
    };
    let summary = format!(
        "gamma = {gamma} C = {constant} worst margin = {} worst ratio = {} over {} evaluations -> {}\n",
        fmt_num(check.worst_margin),
        fmt_num(check.worst_ratio),
        check.evaluations,
        if check.pass { "pass" } else { "FAIL" }
    );
    let mut out = Outcome::new(status, summary);
    out.push_json(
        "report.json",
        &json!({ "kind": "transfer-check", "check": check, "alpha": alpha }),
    )?;
    Ok(out)
}

fn point_csv(points: &[RatePoint]) -> Result<Vec<u8>> {
    let fit = RateFit {
        points: points.to_vec(),
        slope: f64::NAN,
        stderr: f64::NAN,
        intercept: f64::NAN,
        target_exponent: None,
        warnings: Vec::new(),
    };
    let mut buf = Vec::new();
    write_rate_csv(&mut buf, &fit)?;
    Ok(buf)
}

fn explosion_outcome(kind: &str, h: f64, reason: String) -> Result<Outcome> {
    let mut out = Outcome::new(
        Status::Explosion(format!("h = {h}: {reason}")),
        String::new(),
    );
    out.push_json(
        "report.json",
        &json!({ "kind": kind, "explosion": { "h": h, "reason": reason } }),
    )?;
    Ok(out)
}

fn risk(c: &RiskConfig, seed: u64) -> Result<Outcome> {
    let h = c.bandwidth.bandwidth(&c.model)?;
    let resolved = c.model.resolve()?;
    if let Some(check) = resolved.explosion(h)?.filter(|e| e.explodes) {
        let w = check
            .witness
            .map(|b| format!("{:?} x {:?}", b.lo, b.hi))
            .unwrap_or_default();
        return explosion_outcome(
            "risk",
            h,
            format!("target mass on {w} has no source mass within h and n_Q = 0"),
        );
    }
    let mut warnings = Vec::new();
    let report = if c.with_bound {
        match risk_report(&c.model, h, c.test_n, c.reps, seed, &c.budget) {
            Err(Error::Precondition { block, message }) => {
                warnings.push(format!("bound skipped: {block} block: {message}"));
                generalization_risk(&c.model, h, c.test_n, c.reps, seed)?
            }
            r => r?,
        }
    } else {
        generalization_risk(&c.model, h, c.test_n, c.reps, seed)?
    };
    let bound = report.theoretical_bound.as_ref().map(|b| b.value);
    let status = match report.within_bound(3.0) {
        Some(false) if c.require_bound => Status::CheckFailed(format!(
            "risk {} exceeds the bound {} by more than 3 standard errors",
            fmt_num(report.empirical_risk.mean),
            opt_num(bound)
        )),
        _ => Status::Success,
    };
    let summary = format!(
        "h = {} risk = {} (se {}) bound = {}\n",
        fmt_num(h),
        fmt_num(report.empirical_risk.mean),
        fmt_num(report.empirical_risk.se),
        bound.map(fmt_num).unwrap_or_else(|| "-".into())
    );
    let point = RatePoint {
        n: c.model.n(),
        n_p: c.model.n_p,
        n_q: c.model.n_q,
        h,
        risk: report.empirical_risk.mean,
        se: report.empirical_risk.se,
        bound,
    };
    let mut out = Outcome::new(status, summary);
    out.push_json(
        "report.json",
        &json!({ "kind": "risk", "report": report, "warnings": warnings }),
    )?;
    out.push("risk.csv", point_csv(&[point])?);
    Ok(out)
}

fn sweep(c: &RateSweepConfig, seed: u64) -> Result<Outcome> {
    let fit = match rate_sweep(&c.model, &c.sweep, seed) {
        Err(Error::Explosion { h, reason }) => return explosion_outcome("rate-sweep", h, reason),
        r => r?,
    };
    let status = match (c.tolerance, fit.target_exponent) {
        (Some(tol), Some(t)) if (fit.slope - t).abs() > tol => Status::CheckFailed(format!(
            "fitted slope {} is farther than {tol} from {t}",
            fmt_num(fit.slope)
        )),
        _ => Status::Success,
    };
    let mut summary = String::new();
    for p in &fit.points {
        writeln!(
            summary,
            "n = {:<8} h = {:<12.6e} risk = {:.6e} (se {:.2e})",
            p.n, p.h, p.risk, p.se
        )
        .unwrap();
    }
    writeln!(
        summary,
        "slope = {:.4} (se {:.4}) target = {}",
        fit.slope,
        fit.stderr,
        opt(fit.target_exponent)
    )
    .unwrap();
    let mut out = Outcome::new(status, summary);
    out.push_json("report.json", &json!({ "kind": "rate-sweep", "fit": fit }))?;
    let mut csv = Vec::new();
    write_rate_csv(&mut csv, &fit)?;
    out.push("rate.csv", csv);
    let mut plot = Vec::new();
    write_rate_plot(&mut plot, &fit)?;
    out.push("rate_plot.csv", plot);
    Ok(out)
}

fn predict(c: &PredictConfig, seed: u64) -> Result<Outcome> {
    let h = c.bandwidth.bandwidth(&c.model)?;
    let report = gap_vs_generalization(&c.model, h, &c.m_list, c.test_n, c.reps, seed)?;
    let mut csv = String::from("m,prediction_error,prediction_se,gap,gap_se,m_bound\n");
    let mut summary = format!(
        "h = {} generalization risk = {}\n",
        fmt_num(h),
        fmt_num(report.generalization_risk.mean)
    );
    for r in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.m,
            fmt_num(r.prediction_error.mean),
            fmt_num(r.prediction_error.se),
            fmt_num(r.gap.mean),
            fmt_num(r.gap.se),
            opt_num(r.m_bound)
        )
        .unwrap();
        writeln!(
            summary,
            "m = {:<4} prediction = {:.6e} gap = {:+.3e} (se {:.2e})",
            r.m, r.prediction_error.mean, r.gap.mean, r.gap.se
        )
        .unwrap();
    }
    let mut out = Outcome::new(Status::Success, summary);
    out.push_json(
        "report.json",
        &json!({ "kind": "predict", "report": report }),
    )?;
    out.push("decay.csv", csv.into_bytes());
    Ok(out)
}
