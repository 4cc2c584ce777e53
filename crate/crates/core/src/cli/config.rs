//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chains::{ContinuousKernelSpec, KernelSpec};
use crate::error::{Error, Result};
use crate::points::Metric;
use crate::risk::{
    BandwidthRule, BoundBudget, ShiftModel, SweepOptions, DEFAULT_REPS, DEFAULT_TEST_N,
};
use crate::similarity::McBudget;
use crate::spectral::DEFAULT_K_MAX;
use crate::stats::geometric_grid;

pub const DEFAULT_OUTPUT: &str = "shiftlab-out";

/// A complete experiment: shared settings plus one kind-specific section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Spectral(SpectralConfig),
    Rho(RhoConfig),
    AlphaCheck(AlphaCheckConfig),
    TransferCheck(TransferCheckConfig),
    Risk(RiskConfig),
    RateSweep(RateSweepConfig),
    Predict(PredictConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Spectral(_) => "spectral",
            Experiment::Rho(_) => "rho",
            Experiment::AlphaCheck(_) => "alpha-check",
            Experiment::TransferCheck(_) => "transfer-check",
            Experiment::Risk(_) => "risk",
            Experiment::RateSweep(_) => "rate-sweep",
            Experiment::Predict(_) => "predict",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedKernel {
    pub name: String,
    #[serde(flatten)]
    pub kernel: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub kernels: Vec<NamedKernel>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

/// Bandwidth grid: an explicit list or a geometric sequence from `hi` down to `lo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List { h: Vec<f64> },
    Geometric { hi: f64, lo: f64, points: usize },
}

impl Grid {
    /// 20 points from `D` down to `D/200`.
    pub fn default_for(diameter: f64) -> Self {
        Grid::Geometric {
            hi: diameter,
            lo: diameter / 200.0,
            points: 20,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List { h } => h.clone(),
            Grid::Geometric { hi, lo, points } => {
                if !(*hi >= *lo && *lo > 0.0) || *points == 0 {
                    return Err(Error::validation(
                        "grid",
                        "need hi >= lo > 0 and at least one point",
                    ));
                }
                if *points == 1 {
                    vec![*hi]
                } else {
                    geometric_grid(*hi, *lo, *points)
                }
            }
        };
        if v.is_empty() || v.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::validation(
                "grid",
                "bandwidths must be positive and finite",
            ));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMethod {
    /// Exact for finite pairs, closed form for matching uniform cubes, Monte Carlo otherwise.
    #[default]
    Auto,
    MonteCarlo,
}

/// `ρ_h(π^source, π^target)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoConfig {
    pub source: KernelSpec,
    pub target: KernelSpec,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub budget: McBudget,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub method: RhoMethod,
    /// Exit with the explosion status when some `ρ_h` is infinite.
    #[serde(default = "yes")]
    pub require_finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCheckConfig {
    pub source: KernelSpec,
    pub target: KernelSpec,
    pub alpha: f64,
    #[serde(default)]
    pub alpha_prime: Option<f64>,
    pub constant: f64,
    #[serde(default)]
    pub diameter: Option<f64>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub budget: McBudget,
    #[serde(default)]
    pub metric: Metric,
}

/// Grid verification of the transfer-exponent inequality between the
/// minorizing law of `source` and one step of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCheckConfig {
    pub source: ContinuousKernelSpec,
    pub target: ContinuousKernelSpec,
    /// Defaults to the closed-form exponent for a pair of beta chains.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    /// Points per axis of the `x` and `y` grids.
    #[serde(default = "fifty")]
    pub x_points: usize,
    #[serde(default = "fifty")]
    pub y_points: usize,
    #[serde(default = "fifty")]
    pub h_points: usize,
    #[serde(default = "h_min")]
    pub h_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub model: ShiftModel,
    pub bandwidth: BandwidthRule,
    #[serde(default = "test_n")]
    pub test_n: usize,
    #[serde(default = "reps")]
    pub reps: usize,
    #[serde(default = "yes")]
    pub with_bound: bool,
    #[serde(default)]
    pub budget: BoundBudget,
    /// Fail the run when the risk exceeds the bound by more than 3 standard errors.
    #[serde(default)]
    pub require_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweepConfig {
    pub model: ShiftModel,
    pub sweep: SweepOptions,
    /// Fail the run when `|slope - target_exponent|` exceeds this.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictConfig {
    pub model: ShiftModel,
    pub bandwidth: BandwidthRule,
    pub m_list: Vec<usize>,
    #[serde(default = "test_n")]
    pub test_n: usize,
    #[serde(default = "reps")]
    pub reps: usize,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn fifty() -> usize {
    50
}

fn h_min() -> f64 {
    1e-3
}

fn test_n() -> usize {
    DEFAULT_TEST_N
}

fn reps() -> usize {
    DEFAULT_REPS
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn runs(field: &str, test_n: usize, reps: usize) -> Result<()> {
    if test_n == 0 || reps == 0 {
        return Err(Error::validation(field, "need test_n >= 1 and reps >= 1"));
    }
    Ok(())
}

fn budget(b: &McBudget) -> Result<()> {
    if b.inner == 0 || b.outer == 0 {
        return Err(Error::validation(
            "budget",
            "inner and outer budgets must be at least 1",
        ));
    }
    Ok(())
}

fn same_dim(source: &KernelSpec, target: &KernelSpec) -> Result<usize> {
    source.validate()?;
    target.validate()?;
    let (a, b) = (source.dim()?, target.dim()?);
    if a != b {
        return Err(Error::validation(
            "target",
            format!("source has dimension {a} but target has {b}"),
        ));
    }
    Ok(a)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every field and fills defaults that depend on other fields.
    pub fn resolve(mut self) -> Result<Self> {
        match &mut self.experiment {
            Experiment::Spectral(c) => {
                if c.kernels.is_empty() {
                    return Err(Error::validation("kernels", "need at least one kernel"));
                }
                if c.k_max == 0 {
                    return Err(Error::validation("k_max", "must be at least 1"));
                }
                for k in &c.kernels {
                    k.kernel.validate().map_err(|e| {
                        Error::validation(format!("kernels.{}", k.name), e.to_string())
                    })?;
                }
            }
            Experiment::Rho(c) => {
                let d = same_dim(&c.source, &c.target)?;
                budget(&c.budget)?;
                let g = c
                    .grid
                    .take()
                    .unwrap_or_else(|| Grid::default_for(c.metric.unit_cube_diameter(d)));
                g.values()?;
                c.grid = Some(g);
            }
            Experiment::AlphaCheck(c) => {
                let d = same_dim(&c.source, &c.target)?;
                budget(&c.budget)?;
                positive("alpha", c.alpha)?;
                positive("constant", c.constant)?;
                if let Some(a) = c.alpha_prime {
                    positive("alpha_prime", a)?;
                }
                let diam = *c.diameter.get_or_insert(c.metric.unit_cube_diameter(d));
                positive("diameter", diam)?;
                let g = c.grid.take().unwrap_or_else(|| Grid::default_for(diam));
                g.values()?;
                c.grid = Some(g);
            }
            Experiment::TransferCheck(c) => {
                c.source.validate()?;
                c.target.validate()?;
                if c.source.dim() != c.target.dim() {
                    return Err(Error::validation(
                        "target",
                        "source and target dimensions differ",
                    ));
                }
                if let (
                    ContinuousKernelSpec::BetaChain { gamma: gp },
                    ContinuousKernelSpec::BetaChain { gamma: gq },
                ) = (&c.source, &c.target)
                {
                    let (g, k) = crate::similarity::beta_chain_transfer(*gp, *gq);
                    c.gamma.get_or_insert(g);
                    c.constant.get_or_insert(k);
                }
                let gamma = c.gamma.ok_or_else(|| {
                    Error::validation("gamma", "required unless both kernels are beta chains")
                })?;
                let constant = c.constant.ok_or_else(|| {
                    Error::validation("constant", "required unless both kernels are beta chains")
                })?;
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::validation("gamma", "must be finite and >= 0"));
                }
                positive("constant", constant)?;
                positive("radius", c.radius)?;
                positive("h_min", c.h_min)?;
                if c.h_min > c.radius {
                    return Err(Error::validation("h_min", "must not exceed the radius"));
                }
                if c.x_points < 2 || c.y_points < 2 || c.h_points == 0 {
                    return Err(Error::validation(
                        "x_points",
                        "need at least 2 points per axis and 1 bandwidth",
                    ));
                }
                let d = c.source.dim() as u32;
                let evals = (c.x_points as f64).powi(d as i32)
                    * (c.y_points as f64).powi(d as i32)
                    * c.h_points as f64;
                if evals > 1e9 {
                    return Err(Error::validation(
                        "x_points",
                        format!("grid needs {evals:e} evaluations; reduce the points per axis"),
                    ));
                }
            }
            Experiment::Risk(c) => {
                c.model.validate()?;
                c.bandwidth.bandwidth(&c.model)?;
                runs("risk", c.test_n, c.reps)?;
                budget(&c.budget.rho)?;
            }
            Experiment::RateSweep(c) => {
                c.model.validate()?;
                c.sweep.validate()?;
                if let Some(t) = c.tolerance {
                    positive("tolerance", t)?;
                }
            }
            Experiment::Predict(c) => {
                c.model.validate()?;
                c.bandwidth.bandwidth(&c.model)?;
                runs("predict", c.test_n, c.reps)?;
                if c.m_list.is_empty() || c.m_list.contains(&0) {
                    return Err(Error::validation(
                        "m_list",
                        "need at least one horizon, each >= 1",
                    ));
                }
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPECTRAL: &str = r#"
        kind = "spectral"
        seed = 3

        [[kernels]]
        name = "P"
        family = "two-state"
        a = 0.3
        b = 0.1
    "#;

    const RISK: &str = r#"
        kind = "risk"
        seed = 11
        test_n = 256
        reps = 4

        [bandwidth]
        rule = "power"
        exponent = 0.3333333333333333

        [model]
        n_p = 200
        n_q = 50
        source = { family = "beta-chain", gamma = 1.0 }
        target = { family = "beta-chain", gamma = 0.5 }
        regression = { beta = 1.0, L = 1.0, function = { name = "sine" } }
        noise = { sigma = 0.1 }
    "#;

    #[test]
    fn round_trips() {
        for text in [SPECTRAL, RISK] {
            let c = ExperimentConfig::from_toml(text).unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
            assert_eq!(back, c);
            let c = c.resolve().unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn negative_sigma_names_field() {
        let text = RISK.replace("sigma = 0.1", "sigma = -0.5");
        let err = ExperimentConfig::from_toml(&text)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("noise.sigma"), "{err}");
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(ExperimentConfig::from_toml("kind = \"nope\"").is_err());
    }

    #[test]
    fn rho_grid_defaults_to_diameter() {
        let text = r#"
            kind = "rho"
            source = { family = "independence", distribution = { law = "uniform", lo = [0.0, 0.0], hi = [1.0, 1.0] } }
            target = { family = "independence", distribution = { law = "uniform", lo = [0.0, 0.0], hi = [1.0, 1.0] } }
            metric = "euclidean"
        "#;
        let c = ExperimentConfig::from_toml(text)
            .unwrap()
            .resolve()
            .unwrap();
        let Experiment::Rho(r) = c.experiment else {
            panic!()
        };
        let g = r.grid.unwrap().values().unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((g[19] - 2f64.sqrt() / 200.0).abs() < 1e-15);
    }

    #[test]
    fn transfer_defaults_for_beta_chains() {
        let text = r#"
            kind = "transfer-check"
            source = { family = "beta-chain", gamma = 1.0 }
            target = { family = "beta-chain", gamma = 0.5 }
        "#;
        let c = ExperimentConfig::from_toml(text)
            .unwrap()
            .resolve()
            .unwrap();
        let Experiment::TransferCheck(t) = c.experiment else {
            panic!()
        };
        assert_eq!(t.gamma, Some(1.5));
        assert_eq!(t.constant, Some(0.6));
    }
}
