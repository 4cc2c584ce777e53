//! Continuous-state kernel families on the unit cube and their samplers.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::rng::{rng_from_seed, Rng};

use super::path::StatePath;
use super::warm::{InitialLaw, WarmStart};

/// Burn-in used when a stationary start is requested.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Inverse CDF of Beta(1+γ+x, 1) at `u`.
#[inline]
pub fn beta_chain_step(x: f64, gamma: f64, u: f64) -> f64 {
    u.powf(1.0 / (1.0 + gamma + x))
}

/// Inverse CDF of Beta(a, 1) at `u`.
#[inline]
pub fn beta_one_quantile(a: f64, u: f64) -> f64 {
    u.powf(1.0 / a)
}

/// Modulation `ι_i` of the product-beta chain, with range in `[floor, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulation {
    /// `ι_i(x) = ε + (1-ε) x_i`
    #[default]
    Linear,
    /// `ι_i(x) = value`
    Constant { value: f64 },
}

/// Law of an independent draw on the unit cube (or a face of it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum Distribution {
    /// Uniform on the box `[lo_i, hi_i]`; `lo_i == hi_i` pins the coordinate.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    /// Independent Beta(a_i, 1) coordinates on `[0,1]`.
    ProductBeta { shapes: Vec<f64> },
    /// `inner` on the leading coordinates, zeros after.
    Embedded {
        inner: Box<Distribution>,
        ambient_dim: usize,
    },
}

impl Distribution {
    pub fn unit_cube(d: usize) -> Self {
        Distribution::Uniform {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Uniform { lo, .. } => lo.len(),
            Distribution::ProductBeta { shapes } => shapes.len(),
            Distribution::Embedded { ambient_dim, .. } => *ambient_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Uniform { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::validation(
                        "uniform",
                        "lo and hi must be nonempty and of equal length",
                    ));
                }
                if lo
                    .iter()
                    .zip(hi)
                    .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
                {
                    return Err(Error::validation(
                        "uniform",
                        "need finite lo <= hi in every coordinate",
                    ));
                }
            }
            Distribution::ProductBeta { shapes } => {
                if shapes.is_empty() || shapes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                    return Err(Error::validation(
                        "product-beta.shapes",
                        "shapes must be positive and finite",
                    ));
                }
            }
            Distribution::Embedded { inner, ambient_dim } => {
                inner.validate()?;
                if inner.dim() > *ambient_dim {
                    return Err(Error::validation(
                        "embedded.ambient_dim",
                        "inner dimension exceeds ambient dimension",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Writes one draw into `out` (length `dim()`).
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        match self {
            Distribution::Uniform { lo, hi } => {
                for ((o, &a), &b) in out.iter_mut().zip(lo).zip(hi) {
                    *o = if a == b {
                        a
                    } else {
                        a + (b - a) * rng.random::<f64>()
                    };
                }
            }
            Distribution::ProductBeta { shapes } => {
                for (o, &a) in out.iter_mut().zip(shapes) {
                    *o = beta_one_quantile(a, rng.random::<f64>());
                }
            }
            Distribution::Embedded { inner, .. } => {
                let k = inner.dim();
                inner.sample_into(rng, &mut out[..k]);
                out[k..].fill(0.0);
            }
        }
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> PointSet<f64> {
        let d = self.dim();
        let mut out = PointSet::with_capacity(d, n);
        let mut buf = vec![0.0; d];
        for _ in 0..n {
            self.sample_into(rng, &mut buf);
            out.push(&buf);
        }
        out
    }

    /// Smallest box containing the support.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Distribution::Uniform { lo, hi } => (lo.clone(), hi.clone()),
            Distribution::ProductBeta { shapes } => {
                (vec![0.0; shapes.len()], vec![1.0; shapes.len()])
            }
            Distribution::Embedded { inner, ambient_dim } => {
                let (mut lo, mut hi) = inner.support_box();
                lo.resize(*ambient_dim, 0.0);
                hi.resize(*ambient_dim, 0.0);
                (lo, hi)
            }
        }
    }
}

/// Parametric continuous-state kernels on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ContinuousKernelSpec {
    /// `X_{n+1} | X_n = x ~ Beta(1+γ+x, 1)` on `[0,1]`.
    BetaChain { gamma: f64 },
    /// Coordinates `i < m` drawn from Beta(γ_i ι_i(x), 1); coordinates `m..d` are zero.
    ProductBetaChain {
        gammas: Vec<f64>,
        floor: f64,
        #[serde(default)]
        modulation: Modulation,
        ambient_dim: usize,
    },
    /// Every row equal to `distribution`.
    Independence { distribution: Distribution },
    /// `inner` on `[0,1]^{d_Q}` padded with zeros to dimension `ambient_dim`.
    EmbeddedTarget {
        inner: Box<ContinuousKernelSpec>,
        ambient_dim: usize,
    },
}

impl ContinuousKernelSpec {
    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ContinuousKernelSpec::BetaChain { .. } => 1,
            ContinuousKernelSpec::ProductBetaChain { ambient_dim, .. } => *ambient_dim,
            ContinuousKernelSpec::Independence { distribution } => distribution.dim(),
            ContinuousKernelSpec::EmbeddedTarget { ambient_dim, .. } => *ambient_dim,
        }
    }

    /// Dimension of the coordinates that actually move.
    pub fn active_dim(&self) -> usize {
        match self {
            ContinuousKernelSpec::BetaChain { .. } => 1,
            ContinuousKernelSpec::ProductBetaChain { gammas, .. } => gammas.len(),
            ContinuousKernelSpec::Independence { distribution } => {
                let (lo, hi) = distribution.support_box();
                lo.iter().zip(&hi).filter(|(a, b)| a < b).count()
            }
            ContinuousKernelSpec::EmbeddedTarget { inner, .. } => inner.active_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ContinuousKernelSpec::BetaChain { gamma } => {
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::validation(
                        "beta-chain.gamma",
                        "must be finite and >= 0",
                    ));
                }
            }
            ContinuousKernelSpec::ProductBetaChain {
                gammas,
                floor,
                modulation,
                ambient_dim,
            } => {
                if gammas.is_empty() {
                    return Err(Error::validation(
                        "product-beta-chain.gammas",
                        "need at least one coordinate",
                    ));
                }
                if gammas.iter().any(|&g| !(g > 0.0 && g <= 1.0)) {
                    return Err(Error::validation(
                        "product-beta-chain.gammas",
                        "entries must lie in (0,1]",
                    ));
                }
                if !(*floor > 0.0 && *floor <= 1.0) {
                    return Err(Error::validation(
                        "product-beta-chain.floor",
                        "must lie in (0,1]",
                    ));
                }
                if let Modulation::Constant { value } = modulation {
                    if !(*value >= *floor && *value <= 1.0) {
                        return Err(Error::validation(
                            "product-beta-chain.modulation",
                            "constant must lie in [floor,1]",
                        ));
                    }
                }
                if gammas.len() > *ambient_dim {
                    return Err(Error::validation(
                        "product-beta-chain.ambient_dim",
                        "fewer ambient than active coordinates",
                    ));
                }
            }
            ContinuousKernelSpec::Independence { distribution } => distribution.validate()?,
            ContinuousKernelSpec::EmbeddedTarget { inner, ambient_dim } => {
                inner.validate()?;
                if inner.dim() > *ambient_dim {
                    return Err(Error::validation(
                        "embedded-target.ambient_dim",
                        "inner dimension exceeds ambient dimension",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Whether `x` is a valid state.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ContinuousKernelSpec::Independence { .. } => true,
            _ => x.iter().all(|&v| (0.0..=1.0).contains(&v)),
        }
    }

    /// Doeblin pair `(ε, m)` with `P^m(x,·) ≥ ε ν` from the family's closed form.
    pub fn doeblin(&self) -> (f64, usize) {
        match self {
            ContinuousKernelSpec::BetaChain { gamma } => ((1.0 + gamma) / (2.0 + gamma), 1),
            ContinuousKernelSpec::ProductBetaChain { gammas, floor, .. } => {
                (floor.powi(gammas.len() as i32), 1)
            }
            ContinuousKernelSpec::Independence { .. } => (1.0, 1),
            ContinuousKernelSpec::EmbeddedTarget { inner, .. } => inner.doeblin(),
        }
    }

    /// Smallest box containing every reachable state after one step.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ContinuousKernelSpec::BetaChain { .. } => (vec![0.0], vec![1.0]),
            ContinuousKernelSpec::ProductBetaChain {
                gammas,
                ambient_dim,
                ..
            } => {
                let mut hi = vec![1.0; gammas.len()];
                hi.resize(*ambient_dim, 0.0);
                (vec![0.0; *ambient_dim], hi)
            }
            ContinuousKernelSpec::Independence { distribution } => distribution.support_box(),
            ContinuousKernelSpec::EmbeddedTarget { inner, ambient_dim } => {
                let (mut lo, mut hi) = inner.support_box();
                lo.resize(*ambient_dim, 0.0);
                hi.resize(*ambient_dim, 0.0);
                (lo, hi)
            }
        }
    }

    /// One transition from `x`, written into `out`.
    pub fn step(&self, x: &[f64], rng: &mut Rng, out: &mut [f64]) {
        match self {
            ContinuousKernelSpec::BetaChain { gamma } => {
                out[0] = beta_chain_step(x[0], *gamma, rng.random::<f64>());
            }
            ContinuousKernelSpec::ProductBetaChain {
                gammas,
                floor,
                modulation,
                ..
            } => {
                for (i, &g) in gammas.iter().enumerate() {
                    let iota = match modulation {
                        Modulation::Linear => floor + (1.0 - floor) * x[i],
                        Modulation::Constant { value } => *value,
                    };
                    out[i] = beta_one_quantile(g * iota, rng.random::<f64>());
                }
                out[gammas.len()..].fill(0.0);
            }
            ContinuousKernelSpec::Independence { distribution } => {
                distribution.sample_into(rng, out)
            }
            ContinuousKernelSpec::EmbeddedTarget { inner, .. } => {
                let k = inner.dim();
                inner.step(&x[..k], rng, &mut out[..k]);
                out[k..].fill(0.0);
            }
        }
    }

    /// A fixed reference state used to start burn-in.
    pub fn reference_state(&self) -> Vec<f64> {
        let (lo, hi) = self.support_box();
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Resolves an initial law to a starting point.
    pub fn initial_state(&self, law: &InitialLaw, rng: &mut Rng) -> Result<Vec<f64>> {
        let d = self.dim();
        let x = match law {
            InitialLaw::Point { x } => x.clone(),
            InitialLaw::Distribution { distribution } => {
                distribution.validate()?;
                if distribution.dim() != d {
                    return Err(Error::validation(
                        "init",
                        format!(
                            "distribution has dimension {} but kernel has {d}",
                            distribution.dim()
                        ),
                    ));
                }
                let mut buf = vec![0.0; d];
                distribution.sample_into(rng, &mut buf);
                buf
            }
            InitialLaw::Stationary { burn_in } => {
                let mut x = self.reference_state();
                let mut next = vec![0.0; d];
                for _ in 0..burn_in.unwrap_or(DEFAULT_BURN_IN) {
                    self.step(&x, rng, &mut next);
                    std::mem::swap(&mut x, &mut next);
                }
                x
            }
            InitialLaw::Weights { .. } => {
                return Err(Error::validation(
                    "init",
                    "probability vectors apply to finite kernels only",
                ));
            }
        };
        if !self.contains(&x) {
            return Err(Error::validation(
                "init",
                format!("starting point {x:?} is outside the state space"),
            ));
        }
        Ok(x)
    }

    /// Continues the chain from `x` for `n` states (the first is `x` itself).
    pub fn run_from(&self, x: &[f64], n: usize, rng: &mut Rng) -> PointSet<f64> {
        let d = self.dim();
        let mut out = PointSet::with_capacity(d, n);
        let mut cur = x.to_vec();
        let mut next = vec![0.0; d];
        for i in 0..n {
            if i > 0 {
                self.step(&cur, rng, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            out.push(&cur);
        }
        out
    }

    /// Long-run sample approximating the invariant law: burn-in, then every
    /// `thin`-th state.
    pub fn stationary_sample(
        &self,
        n: usize,
        burn_in: usize,
        thin: usize,
        rng: &mut Rng,
    ) -> PointSet<f64> {
        let d = self.dim();
        let mut cur = self.reference_state();
        let mut next = vec![0.0; d];
        for _ in 0..burn_in {
            self.step(&cur, rng, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        let mut out = PointSet::with_capacity(d, n);
        for _ in 0..n {
            for _ in 0..thin.max(1) {
                self.step(&cur, rng, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            out.push(&cur);
        }
        out
    }
}

/// Simulates `n` states from the warm start's initial law.
pub fn sample_continuous_path(
    spec: &ContinuousKernelSpec,
    init: &WarmStart,
    n: usize,
    seed: u64,
) -> Result<StatePath> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::validation("n", "path length must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let x0 = spec.initial_state(&init.law, &mut rng)?;
    Ok(StatePath::new(spec.run_from(&x0, n, &mut rng), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{
        ks_critical_1pct, ks_statistic, ks_two_sample, ks_two_sample_critical_1pct,
    };

    #[test]
    fn step_examples() {
        assert_eq!(beta_chain_step(0.3, 2.0, 1.0), 1.0);
        assert_eq!(beta_chain_step(0.0, 0.0, 0.25), 0.25);
        // inverse of F(y) = y^3 at 0.5, by bisection
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) < 0.5 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((beta_chain_step(1.0, 1.0, 0.5) - lo).abs() < 1e-14);
        assert!((lo - 0.79370).abs() < 1e-5);
    }

    #[test]
    fn embedded_target_pads_with_zero() {
        let spec = ContinuousKernelSpec::EmbeddedTarget {
            inner: Box::new(ContinuousKernelSpec::BetaChain { gamma: 0.5 }),
            ambient_dim: 2,
        };
        let path =
            sample_continuous_path(&spec, &WarmStart::point(vec![0.2, 0.0]), 1000, 5).unwrap();
        assert!(path.states().iter().all(|p| p[1] == 0.0));
    }

    #[test]
    fn unit_shape_product_beta_is_uniform() {
        let spec = ContinuousKernelSpec::ProductBetaChain {
            gammas: vec![1.0, 1.0],
            floor: 1.0,
            modulation: Modulation::Constant { value: 1.0 },
            ambient_dim: 2,
        };
        let mut rng = rng_from_seed(17);
        let x = [0.3, 0.8];
        let mut out = [0.0; 2];
        let mut first = Vec::new();
        for _ in 0..10_000 {
            spec.step(&x, &mut rng, &mut out);
            first.push(out[0]);
        }
        assert!(ks_statistic(&first, |t| t.clamp(0.0, 1.0)) < ks_critical_1pct(10_000));
    }

    #[test]
    fn beta_chain_first_step_mean() {
        let spec = ContinuousKernelSpec::BetaChain { gamma: 0.0 };
        let mut rng = rng_from_seed(23);
        let mut out = [0.0];
        let mut sum = 0.0;
        for _ in 0..100_000 {
            spec.step(&[0.0], &mut rng, &mut out);
            sum += out[0];
        }
        assert!((sum / 1e5 - 0.5).abs() < 0.005);
    }

    #[test]
    fn beta_chain_long_run_invariance() {
        let spec = ContinuousKernelSpec::BetaChain { gamma: 1.0 };
        let mut rng = rng_from_seed(29);
        let a: Vec<f64> = spec
            .stationary_sample(4000, 1000, 1, &mut rng)
            .as_flat()
            .to_vec();
        let mut rng = rng_from_seed(31);
        let b: Vec<f64> = spec
            .stationary_sample(4000, 1000 + 10_000, 1, &mut rng)
            .as_flat()
            .to_vec();
        assert!(ks_two_sample(&a, &b) < ks_two_sample_critical_1pct(a.len(), b.len()));
    }

    #[test]
    fn reproducible() {
        let spec = ContinuousKernelSpec::BetaChain { gamma: 0.7 };
        let a = sample_continuous_path(&spec, &WarmStart::point(vec![0.5]), 200, 3).unwrap();
        let b = sample_continuous_path(&spec, &WarmStart::point(vec![0.5]), 200, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation() {
        assert!(ContinuousKernelSpec::BetaChain { gamma: -1.0 }
            .validate()
            .is_err());
        let bad = ContinuousKernelSpec::ProductBetaChain {
            gammas: vec![0.5],
            floor: 0.0,
            modulation: Modulation::Linear,
            ambient_dim: 1,
        };
        assert!(bad.validate().is_err());
        let spec = ContinuousKernelSpec::BetaChain { gamma: 0.0 };
        assert!(sample_continuous_path(&spec, &WarmStart::point(vec![0.5, 0.5]), 3, 1).is_err());
        assert!(sample_continuous_path(&spec, &WarmStart::point(vec![1.5]), 3, 1).is_err());
    }

    #[test]
    fn doeblin_closed_forms() {
        assert_eq!(
            ContinuousKernelSpec::BetaChain { gamma: 1.0 }.doeblin(),
            (2.0 / 3.0, 1)
        );
        let pb = ContinuousKernelSpec::ProductBetaChain {
            gammas: vec![0.5, 0.5],
            floor: 0.5,
            modulation: Modulation::Linear,
            ambient_dim: 2,
        };
        assert_eq!(pb.doeblin(), (0.25, 1));
    }
}
