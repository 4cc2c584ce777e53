//! The two-block Markov covariate shift regression model.

use serde::{Deserialize, Serialize};

use crate::chains::{
    attach_responses, density_ratio_norm, sample_continuous_path, sample_finite_path,
};
use crate::chains::{
    ContinuousKernelSpec, FiniteKernel, InitialLaw, KernelSpec, NoiseSpec, StatePath, WarmStart,
};
use crate::error::{Error, Result};
use crate::estimator::{BoundHolder, FittedNw, HolderSpec};
use crate::points::{Metric, PointSet};
use crate::rng::{stream, Streams};
use crate::similarity::{
    explosion_check, ChainSampler, ExplosionCheck, FiniteLaw, PointSampler, SupportBox,
};

/// Source block of `n_P` states from `P`, target block of `n_Q` states from `Q`,
/// responses `f*(X) + ξ` on both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftModel {
    pub source: KernelSpec,
    pub target: KernelSpec,
    pub n_p: usize,
    pub n_q: usize,
    #[serde(default)]
    pub warm_p: WarmStart,
    #[serde(default)]
    pub warm_q: WarmStart,
    pub regression: HolderSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub metric: Metric,
}

impl ShiftModel {
    pub fn n(&self) -> usize {
        self.n_p + self.n_q
    }

    pub fn with_sizes(&self, n_p: usize, n_q: usize) -> Self {
        ShiftModel {
            n_p,
            n_q,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.n() == 0 {
            return Err(Error::validation("n", "need n_P + n_Q >= 1"));
        }
        self.noise.validate()?;
        let source = Chain::new(&self.source, &self.warm_p, "source")?;
        let target = Chain::new(&self.target, &self.warm_q, "target")?;
        if source.dim() != target.dim() {
            return Err(Error::validation(
                "target",
                format!(
                    "source has dimension {} but target has {}",
                    source.dim(),
                    target.dim()
                ),
            ));
        }
        let f_star = self.regression.bind(source.dim(), self.metric)?;
        Ok(Resolved {
            model: self.clone(),
            source,
            target,
            f_star,
        })
    }
}

/// A kernel made ready for simulation.
#[derive(Debug, Clone)]
pub enum Chain {
    Finite {
        kernel: FiniteKernel<f64>,
        init: Vec<f64>,
        pi: Vec<f64>,
        warm: WarmStart,
    },
    Continuous {
        spec: ContinuousKernelSpec,
        warm: WarmStart,
    },
}

impl Chain {
    pub fn new(spec: &KernelSpec, warm: &WarmStart, block: &str) -> Result<Self> {
        warm.validate()?;
        match spec {
            KernelSpec::Finite(f) => {
                let kernel = f.build()?;
                let pi = kernel.invariant_law()?;
                let init = finite_initial(&kernel, &pi, &warm.law).map_err(|e| match e {
                    Error::Validation { field, message } => Error::Validation {
                        field: format!("{block}.{field}"),
                        message,
                    },
                    e => e,
                })?;
                Ok(Chain::Finite {
                    kernel,
                    init,
                    pi,
                    warm: warm.clone(),
                })
            }
            KernelSpec::Continuous(c) => {
                c.validate()?;
                if let InitialLaw::Weights { .. } = warm.law {
                    return Err(Error::validation(
                        format!("{block}.warm"),
                        "probability vectors apply to finite kernels only",
                    ));
                }
                Ok(Chain::Continuous {
                    spec: c.clone(),
                    warm: warm.clone(),
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Chain::Finite { kernel, .. } => kernel.dimension(),
            Chain::Continuous { spec, .. } => spec.dim(),
        }
    }

    /// `n` states; empty when `n = 0`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<StatePath> {
        if n == 0 {
            return Ok(StatePath::new(PointSet::new(self.dim()), seed));
        }
        match self {
            Chain::Finite { kernel, init, .. } => sample_finite_path(kernel, init, n, seed),
            Chain::Continuous { spec, warm } => sample_continuous_path(spec, warm, n, seed),
        }
    }

    /// `‖dμ/dπ‖_{L^p(π)}`: exact for finite kernels, the stored value otherwise.
    pub fn warm_norm(&self) -> Result<f64> {
        match self {
            Chain::Finite { init, pi, warm, .. } => {
                if warm.is_stationary() {
                    Ok(1.0)
                } else {
                    density_ratio_norm(init, pi, warm.exponent)
                }
            }
            Chain::Continuous { warm, .. } => warm.norm(),
        }
    }

    pub fn warm(&self) -> &WarmStart {
        match self {
            Chain::Finite { warm, .. } | Chain::Continuous { warm, .. } => warm,
        }
    }

    /// Sampler for the invariant law.
    pub fn invariant_sampler(&self) -> Result<Box<dyn PointSampler>> {
        Ok(match self {
            Chain::Finite { kernel, pi, .. } => {
                Box::new(FiniteLaw::new(kernel.states().clone(), pi)?)
            }
            Chain::Continuous {
                spec: ContinuousKernelSpec::Independence { distribution },
                ..
            } => Box::new(distribution.clone()),
            Chain::Continuous { spec, .. } => Box::new(ChainSampler::new(spec.clone())),
        })
    }

    pub fn support(&self) -> SupportBox {
        match self {
            Chain::Finite { kernel, .. } => {
                let d = kernel.dimension();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in kernel.states().iter() {
                    for i in 0..d {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                SupportBox { lo, hi }
            }
            Chain::Continuous { spec, .. } => spec.support_box().into(),
        }
    }
}

fn finite_initial(kernel: &FiniteKernel<f64>, pi: &[f64], law: &InitialLaw) -> Result<Vec<f64>> {
    match law {
        InitialLaw::Stationary { .. } => Ok(pi.to_vec()),
        InitialLaw::Weights { weights } => {
            if weights.len() != kernel.len() {
                return Err(Error::validation(
                    "warm.weights",
                    format!("{} weights for {} states", weights.len(), kernel.len()),
                ));
            }
            crate::chains::finite::check_probability(weights, "warm.weights")?;
            Ok(weights.clone())
        }
        InitialLaw::Point { x } => {
            let i = kernel
                .states()
                .iter()
                .position(|s| s == x.as_slice())
                .ok_or_else(|| {
                    Error::validation("warm.x", format!("{x:?} is not a state of the kernel"))
                })?;
            let mut v = vec![0.0; kernel.len()];
            v[i] = 1.0;
            Ok(v)
        }
        InitialLaw::Distribution { .. } => Err(Error::validation(
            "warm",
            "parametric start laws apply to continuous kernels only",
        )),
    }
}

/// One training sample: P block first, then Q block.
#[derive(Debug, Clone)]
pub struct Training {
    pub covariates: PointSet<f64>,
    pub responses: Vec<f64>,
    pub source_path: StatePath,
    pub target_path: StatePath,
}

/// A validated [`ShiftModel`] with kernels built and `f*` bound.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ShiftModel,
    pub source: Chain,
    pub target: Chain,
    pub f_star: BoundHolder,
}

impl Resolved {
    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn f_star(&self, x: &[f64]) -> f64 {
        self.f_star.eval_f64(x)
    }

    /// Simulates both blocks and their responses from the replication's streams.
    pub fn training(&self, streams: &Streams) -> Result<Training> {
        let m = &self.model;
        let f = |x: &[f64]| self.f_star(x);
        let p = self
            .source
            .simulate(m.n_p, streams.seed_of(stream::PATH_P))?;
        let p = attach_responses(p, f, &m.noise, streams.seed_of(stream::NOISE_P))?;
        let q = self
            .target
            .simulate(m.n_q, streams.seed_of(stream::PATH_Q))?;
        let q = attach_responses(q, f, &m.noise, streams.seed_of(stream::NOISE_Q))?;
        let mut covariates = p.states().clone();
        covariates.extend(q.states());
        let mut responses = p.responses().unwrap_or(&[]).to_vec();
        responses.extend_from_slice(q.responses().unwrap_or(&[]));
        Ok(Training {
            covariates,
            responses,
            source_path: p,
            target_path: q,
        })
    }

    pub fn fit(&self, training: &Training, h: f64) -> Result<FittedNw<f64>> {
        FittedNw::new(
            training.covariates.clone(),
            training.responses.clone(),
            h,
            self.model.metric,
        )
    }

    /// Sup-norm support test for `ρ_h(μ_n, π^Q) = ∞`. A target block in the
    /// training mixture keeps `ρ_h ≤ n/n_Q`, so only `n_Q = 0` can explode.
    pub fn explosion(&self, h: f64) -> Result<Option<ExplosionCheck>> {
        if self.model.n_q > 0 {
            return Ok(None);
        }
        match (&self.source, &self.target) {
            (
                Chain::Finite { kernel: kp, .. },
                Chain::Finite {
                    kernel: kq,
                    pi: pi_q,
                    ..
                },
            ) => {
                let index = crate::points::BallIndex::new(kp.states(), Metric::SupNorm);
                for (j, x) in kq.states().iter().enumerate() {
                    if pi_q[j] > 0.0 && index.count(x, h) == 0 {
                        let point = SupportBox {
                            lo: x.to_vec(),
                            hi: x.to_vec(),
                        };
                        return Ok(Some(ExplosionCheck {
                            h,
                            explodes: true,
                            witness: Some(point),
                            coordinate: None,
                        }));
                    }
                }
                Ok(Some(ExplosionCheck {
                    h,
                    explodes: false,
                    witness: None,
                    coordinate: None,
                }))
            }
            (Chain::Continuous { .. }, _) => {
                explosion_check(&self.source.support(), &self.target.support(), h).map(Some)
            }
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::FiniteKernelSpec;
    use crate::estimator::HolderFunction;

    fn two_state_model(n_p: usize, n_q: usize) -> ShiftModel {
        ShiftModel {
            source: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.3, b: 0.1 }),
            target: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.2, b: 0.2 }),
            n_p,
            n_q,
            warm_p: WarmStart::stationary(),
            warm_q: WarmStart::stationary(),
            regression: HolderSpec::new(HolderFunction::Power, 1.0, 1.0).unwrap(),
            noise: NoiseSpec::gaussian(0.5),
            metric: Metric::SupNorm,
        }
    }

    #[test]
    fn training_layout_and_reproducibility() {
        let r = two_state_model(30, 20).resolve().unwrap();
        let t = r.training(&Streams::new(4)).unwrap();
        assert_eq!(t.covariates.len(), 50);
        assert_eq!(t.responses.len(), 50);
        assert_eq!(t.source_path.len(), 30);
        let again = r.training(&Streams::new(4)).unwrap();
        assert_eq!(t.responses, again.responses);
    }

    #[test]
    fn warm_start_norms() {
        let mut m = two_state_model(10, 10);
        m.warm_p = WarmStart::point(vec![0.0]);
        let r = m.resolve().unwrap();
        // π^P = (0.25, 0.75): dμ/dπ = 4 at state 0
        assert!((r.source.warm_norm().unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(r.target.warm_norm().unwrap(), 1.0);
        m.warm_p = WarmStart::point(vec![0.5]);
        assert!(m.resolve().is_err());
    }

    #[test]
    fn rejects_dimension_mismatch_and_empty() {
        let mut m = two_state_model(10, 10);
        m.target = KernelSpec::Continuous(ContinuousKernelSpec::ProductBetaChain {
            gammas: vec![1.0],
            floor: 1.0,
            modulation: Default::default(),
            ambient_dim: 2,
        });
        assert!(m.validate().is_err());
        assert!(two_state_model(0, 0).validate().is_err());
    }

    #[test]
    fn explosion_only_without_target_block() {
        let segment = ContinuousKernelSpec::EmbeddedTarget {
            inner: Box::new(ContinuousKernelSpec::BetaChain { gamma: 0.0 }),
            ambient_dim: 2,
        };
        let square = ContinuousKernelSpec::ProductBetaChain {
            gammas: vec![1.0, 1.0],
            floor: 1.0,
            modulation: Default::default(),
            ambient_dim: 2,
        };
        let mut m = two_state_model(100, 0);
        m.source = KernelSpec::Continuous(segment);
        m.target = KernelSpec::Continuous(square);
        let r = m.resolve().unwrap();
        assert!(r.explosion(0.1).unwrap().unwrap().explodes);
        assert!(m
            .with_sizes(100, 5)
            .resolve()
            .unwrap()
            .explosion(0.1)
            .unwrap()
            .is_none());
    }
}
