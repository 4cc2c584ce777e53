//! Conditional noise `ξ = ς(x) ε` and response generation.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

use super::path::StatePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseShape {
    #[default]
    Gaussian,
    /// Uniform on `[-√3, √3]`, unit variance.
    BoundedUniform,
}

/// Conditional scale `ς(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScale {
    /// `ς(x) = σ`
    #[default]
    Constant,
    /// `ς(x) = σ x_1`, for states in the unit cube.
    Heteroskedastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    #[serde(default)]
    pub shape: NoiseShape,
    #[serde(default)]
    pub scale: NoiseScale,
    /// Sub-Gaussian constant ζ with `P(|ξ| ≥ t) ≤ 2 exp(-t²/ζ²)`; derived from the shape when unset.
    #[serde(default)]
    pub subgaussian_constant: Option<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::none()
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            sigma: 0.0,
            shape: NoiseShape::Gaussian,
            scale: NoiseScale::Constant,
            subgaussian_constant: None,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        NoiseSpec {
            sigma,
            ..NoiseSpec::none()
        }
    }

    pub fn uniform(sigma: f64) -> Self {
        NoiseSpec {
            sigma,
            shape: NoiseShape::BoundedUniform,
            ..NoiseSpec::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::validation(
                "noise.sigma",
                format!("must be finite and >= 0, got {}", self.sigma),
            ));
        }
        if let Some(z) = self.subgaussian_constant {
            if !(z > 0.0) {
                return Err(Error::validation(
                    "noise.subgaussian_constant",
                    "must be positive",
                ));
            }
        }
        Ok(())
    }

    /// ζ: `√2 σ` for Gaussian noise, `σ √(3/ln 2)` for the bounded shape.
    pub fn zeta(&self) -> f64 {
        self.subgaussian_constant.unwrap_or(match self.shape {
            NoiseShape::Gaussian => std::f64::consts::SQRT_2 * self.sigma,
            NoiseShape::BoundedUniform => self.sigma * (3.0 / std::f64::consts::LN_2).sqrt(),
        })
    }

    #[inline]
    pub fn scale_at(&self, x: &[f64]) -> f64 {
        match self.scale {
            NoiseScale::Constant => self.sigma,
            NoiseScale::Heteroskedastic => self.sigma * x[0],
        }
    }

    /// Standardized innovation ε with mean 0 and variance 1.
    #[inline]
    pub fn innovation(&self, rng: &mut Rng) -> f64 {
        match self.shape {
            NoiseShape::Gaussian => rng.sample(StandardNormal),
            NoiseShape::BoundedUniform => {
                let s3 = 3f64.sqrt();
                -s3 + 2.0 * s3 * rng.random::<f64>()
            }
        }
    }

    #[inline]
    pub fn draw(&self, x: &[f64], rng: &mut Rng) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        self.scale_at(x) * self.innovation(rng)
    }
}

/// Responses `f*(X_i) + ξ_i`; the noise stream is seeded by `seed` alone,
/// so P and Q blocks get independent noise when given different seeds.
pub fn attach_responses(
    path: StatePath,
    f_star: impl Fn(&[f64]) -> f64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<StatePath> {
    noise.validate()?;
    let mut rng = rng_from_seed(seed);
    let y: Vec<f64> = path
        .states()
        .iter()
        .map(|x| f_star(x) + noise.draw(x, &mut rng))
        .collect();
    path.with_responses(y)
}
