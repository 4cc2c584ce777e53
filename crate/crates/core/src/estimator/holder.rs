//! Hölder test functions and a random-pair audit of their constants.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real};
use crate::points::Metric;
use crate::rng::rng_from_seed;

/// Named regression functions on `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum HolderFunction {
    /// `L ‖x‖^β`.
    Power,
    /// `L |⟨w, x⟩|^β`; `w` is rescaled to unit dual norm. Defaults to the all-ones direction.
    Ridge {
        #[serde(default)]
        w: Option<Vec<f64>>,
    },
    /// `(L / 2π) sin(2π ⟨w, x⟩)`, Lipschitz with constant `L`.
    Sine {
        #[serde(default)]
        w: Option<Vec<f64>>,
    },
    /// Truncated Weierstrass sum `Σ_{k<K} b^{-βk} cos(b^k π ⟨w, x⟩)`, scaled to constant `L`.
    Weierstrass {
        #[serde(default = "default_base")]
        base: f64,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default)]
        w: Option<Vec<f64>>,
    },
    Constant {
        value: f64,
    },
    Zero,
}

fn default_base() -> f64 {
    2.0
}

fn default_terms() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderSpec {
    pub beta: f64,
    #[serde(rename = "L", alias = "l")]
    pub l: f64,
    pub function: HolderFunction,
}

impl HolderSpec {
    pub fn new(function: HolderFunction, beta: f64, l: f64) -> Result<Self> {
        let s = HolderSpec { beta, l, function };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::validation("beta", "smoothness must lie in (0, 1]"));
        }
        if !(self.l > 0.0) || !self.l.is_finite() {
            return Err(Error::validation("L", "Hölder constant must be positive"));
        }
        match &self.function {
            HolderFunction::Sine { .. } if self.beta != 1.0 => Err(Error::validation(
                "function",
                "sine is registered for beta = 1 only",
            )),
            HolderFunction::Weierstrass { base, terms, .. } if !(*base > 1.0) || *terms == 0 => {
                Err(Error::validation(
                    "function",
                    "weierstrass needs base > 1 and at least one term",
                ))
            }
            HolderFunction::Ridge { w: Some(w) }
            | HolderFunction::Sine { w: Some(w) }
            | HolderFunction::Weierstrass { w: Some(w), .. }
                if w.iter().all(|v| *v == 0.0) || w.iter().any(|v| !v.is_finite()) =>
            {
                Err(Error::validation(
                    "w",
                    "direction must be finite and nonzero",
                ))
            }
            HolderFunction::Constant { value } if !value.is_finite() => {
                Err(Error::validation("value", "constant must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the function for inputs of dimension `d` under `metric`.
    pub fn bind(&self, d: usize, metric: Metric) -> Result<BoundHolder> {
        self.validate()?;
        let direction = |w: &Option<Vec<f64>>| -> Result<Vec<f64>> {
            let mut w = w.clone().unwrap_or_else(|| vec![1.0; d]);
            if w.len() != d {
                return Err(Error::validation(
                    "w",
                    format!("direction has length {}, expected {d}", w.len()),
                ));
            }
            let n = metric.dual_norm(&w);
            w.iter_mut().for_each(|v| *v /= n);
            Ok(w)
        };
        let w = match &self.function {
            HolderFunction::Ridge { w }
            | HolderFunction::Sine { w }
            | HolderFunction::Weierstrass { w, .. } => direction(w)?,
            _ => Vec::new(),
        };
        Ok(BoundHolder {
            spec: self.clone(),
            metric,
            dim: d,
            w,
        })
    }
}

/// A [`HolderSpec`] resolved against a dimension and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundHolder {
    spec: HolderSpec,
    metric: Metric,
    dim: usize,
    w: Vec<f64>,
}

impl BoundHolder {
    pub fn spec(&self) -> &HolderSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        let beta = lit::<T>(self.spec.beta);
        let l = lit::<T>(self.spec.l);
        let dot = || {
            self.w
                .iter()
                .zip(x)
                .map(|(&w, &v)| lit::<T>(w) * v)
                .sum::<T>()
        };
        match &self.spec.function {
            HolderFunction::Power => l * self.metric.norm(x).powf(beta),
            HolderFunction::Ridge { .. } => l * dot().abs().powf(beta),
            HolderFunction::Sine { .. } => {
                let tau = lit::<T>(2.0) * T::PI();
                l / tau * (tau * dot()).sin()
            }
            HolderFunction::Weierstrass { base, terms, .. } => {
                let t = dot() * T::PI();
                let b = lit::<T>(*base);
                let mut freq = T::one();
                let mut sum = T::zero();
                for _ in 0..*terms {
                    sum += freq.powf(-beta) * (freq * t).cos();
                    freq *= b;
                }
                l * sum / lit::<T>(weierstrass_norm(self.spec.beta, *terms))
            }
            HolderFunction::Constant { value } => lit(*value),
            HolderFunction::Zero => T::zero(),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    /// Upper bound on `sup |f|` over `[0,1]^d`.
    pub fn sup_bound(&self) -> f64 {
        let l = self.spec.l;
        match &self.spec.function {
            HolderFunction::Power => {
                l * self
                    .metric
                    .unit_cube_diameter(self.dim)
                    .powf(self.spec.beta)
            }
            // |⟨w,x⟩| ≤ ‖w‖_* ‖x‖ ≤ diam on the cube
            HolderFunction::Ridge { .. } => {
                l * self
                    .metric
                    .unit_cube_diameter(self.dim)
                    .powf(self.spec.beta)
            }
            HolderFunction::Sine { .. } => l / (2.0 * std::f64::consts::PI),
            HolderFunction::Weierstrass { base, terms, .. } => {
                let s: f64 = (0..*terms)
                    .map(|k| base.powf(-self.spec.beta * k as f64))
                    .sum();
                l * s / weierstrass_norm(self.spec.beta, *terms)
            }
            HolderFunction::Constant { value } => value.abs(),
            HolderFunction::Zero => 0.0,
        }
    }
}

/// `K 2^{1-β} π^β`: each term `b^{-βk} cos(b^k π t)` is β-Hölder with constant `2^{1-β} π^β`.
fn weierstrass_norm(beta: f64, terms: usize) -> f64 {
    terms as f64 * 2f64.powf(1.0 - beta) * std::f64::consts::PI.powf(beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderAudit {
    pub pass: bool,
    pub pairs: usize,
    /// Largest `|f(x) - f(y)| / d(x,y)^β` seen.
    pub worst_ratio: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Slack added to `L d^β` before a pair counts as a violation.
pub const AUDIT_SLACK: f64 = 1e-9;

/// Checks `|f(x) - f(y)| ≤ L d(x,y)^β + 1e-9` on random pairs in `[0,1]^d`.
/// Half the pairs are uniform, half are close pairs at log-uniform separations,
/// and a few involve the origin.
pub fn holder_audit(
    f: impl Fn(&[f64]) -> f64,
    beta: f64,
    l: f64,
    d: usize,
    metric: Metric,
    pairs: usize,
    seed: u64,
) -> HolderAudit {
    let mut rng = rng_from_seed(seed);
    let mut worst_ratio = 0.0f64;
    let mut witness = None;
    let mut fail = None;
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for k in 0..pairs {
        x.iter_mut().for_each(|v| *v = rng.random());
        match k % 8 {
            0 => y.iter_mut().for_each(|v| *v = 0.0),
            1..=4 => y.iter_mut().for_each(|v| *v = rng.random()),
            _ => {
                let scale = 10f64.powf(-6.0 * rng.random::<f64>());
                for (yv, xv) in y.iter_mut().zip(&x) {
                    *yv = (xv + scale * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0);
                }
            }
        }
        let dist = metric.distance(&x, &y);
        if dist == 0.0 {
            continue;
        }
        let diff = (f(&x) - f(&y)).abs();
        let ratio = diff / dist.powf(beta);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            witness = Some((x.clone(), y.clone()));
        }
        if fail.is_none() && diff > l * dist.powf(beta) + AUDIT_SLACK {
            fail = Some((x.clone(), y.clone()));
        }
    }
    let pass = fail.is_none();
    HolderAudit {
        pass,
        pairs,
        worst_ratio,
        witness: fail.or(witness),
    }
}

impl BoundHolder {
    pub fn audit(&self, pairs: usize, seed: u64) -> HolderAudit {
        holder_audit(
            |x| self.eval_f64(x),
            self.spec.beta,
            self.spec.l,
            self.dim,
            self.metric,
            pairs,
            seed,
        )
    }
}
