//! Markov chain families, initial laws, noise, and path sampling.

pub mod continuous;
pub mod finite;
pub mod noise;
pub mod path;
pub mod warm;

use serde::{Deserialize, Deserializer, Serialize};

pub use continuous::{
    beta_chain_step, sample_continuous_path, ContinuousKernelSpec, Distribution, Modulation,
    DEFAULT_BURN_IN,
};
pub use finite::{sample_finite_path, stationary_finite, FiniteKernel};
pub use noise::{attach_responses, NoiseScale, NoiseShape, NoiseSpec};
pub use path::{write_paths_csv, StatePath};
pub use warm::{conjugate_exponent, density_ratio_norm, InitialLaw, WarmStart};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::points::{Metric, PointSet};

/// Serializable description of a finite kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FiniteKernelSpec {
    /// Explicit matrix; states default to equispaced points of `[0,1]`.
    Matrix {
        transition: Vec<Vec<f64>>,
        #[serde(default)]
        states: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        metric: Metric,
    },
    /// `[[1-a, a], [b, 1-b]]` on the points 0 and 1.
    TwoState { a: f64, b: f64 },
    /// Every row equals `weights`.
    IndependenceFinite {
        weights: Vec<f64>,
        #[serde(default)]
        states: Option<Vec<Vec<f64>>>,
    },
}

impl FiniteKernelSpec {
    pub fn build(&self) -> Result<FiniteKernel<f64>> {
        match self {
            FiniteKernelSpec::Matrix {
                transition,
                states,
                metric,
            } => {
                let m = Matrix::from_rows(transition)?;
                match states {
                    Some(s) => FiniteKernel::new(rows_to_points(s)?, m, *metric),
                    None => FiniteKernel::on_unit_interval(m),
                }
            }
            FiniteKernelSpec::TwoState { a, b } => FiniteKernel::two_state(*a, *b),
            FiniteKernelSpec::IndependenceFinite { weights, states } => {
                let m = Matrix::repeated_row(weights);
                match states {
                    Some(s) => FiniteKernel::new(rows_to_points(s)?, m, Metric::SupNorm),
                    None => FiniteKernel::on_unit_interval(m),
                }
            }
        }
    }
}

fn rows_to_points(rows: &[Vec<f64>]) -> Result<PointSet<f64>> {
    let d = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::validation("states", "empty state list"))?;
    PointSet::from_rows(d, rows)
}

/// Any kernel the toolkit can simulate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Finite(FiniteKernelSpec),
    Continuous(ContinuousKernelSpec),
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(d)?;
        let family = value
            .get("family")
            .and_then(|f| f.as_str())
            .ok_or_else(|| D::Error::missing_field("family"))?;
        match family {
            "matrix" | "two-state" | "independence-finite" => FiniteKernelSpec::deserialize(value)
                .map(KernelSpec::Finite)
                .map_err(D::Error::custom),
            _ => ContinuousKernelSpec::deserialize(value)
                .map(KernelSpec::Continuous)
                .map_err(D::Error::custom),
        }
    }
}

impl KernelSpec {
    pub fn is_finite(&self) -> bool {
        matches!(self, KernelSpec::Finite(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Finite(f) => f.build().map(|_| ()),
            KernelSpec::Continuous(c) => c.validate(),
        }
    }

    pub fn dim(&self) -> Result<usize> {
        match self {
            KernelSpec::Finite(f) => Ok(f.build()?.dimension()),
            KernelSpec::Continuous(c) => Ok(c.dim()),
        }
    }
}
