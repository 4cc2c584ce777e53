//! Exact ball probabilities under the sup-norm for the parametric laws used
//! by the kernel families.

use serde::{Deserialize, Serialize};

use crate::chains::{ContinuousKernelSpec, Distribution, Modulation};
use crate::error::{Error, Result};
use crate::num::{lit, Real};
use crate::points::Metric;

/// A law whose closed balls have closed-form mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum BallLaw {
    /// Beta(a, 1) on `[0,1]`, CDF `t^a`.
    Beta { a: f64 },
    /// Independent Beta(a_i, 1) coordinates.
    ProductBeta { shapes: Vec<f64> },
    /// Uniform on a box; degenerate sides are point masses.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    /// One step of the beta chain from `y`: Beta(1+γ+y, 1).
    BetaStep { gamma: f64, y: f64 },
    /// `inner` on the leading coordinates, zeros after.
    Embedded {
        inner: Box<BallLaw>,
        ambient_dim: usize,
    },
}

/// `F(t) = t^a` clamped to `[0,1]`.
#[inline]
fn beta_cdf<T: Real>(a: T, t: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else if t >= T::one() {
        T::one()
    } else {
        t.powf(a)
    }
}

#[inline]
fn beta_interval<T: Real>(a: T, x: T, h: T) -> T {
    (beta_cdf(a, x + h) - beta_cdf(a, x - h)).max(T::zero())
}

#[inline]
fn uniform_interval<T: Real>(lo: T, hi: T, x: T, h: T) -> T {
    if lo == hi {
        return if (x - lo).abs() <= h {
            T::one()
        } else {
            T::zero()
        };
    }
    let a = (x - h).max(lo);
    let b = (x + h).min(hi);
    ((b - a) / (hi - lo)).max(T::zero())
}

impl BallLaw {
    pub fn dim(&self) -> usize {
        match self {
            BallLaw::Beta { .. } | BallLaw::BetaStep { .. } => 1,
            BallLaw::ProductBeta { shapes } => shapes.len(),
            BallLaw::Uniform { lo, .. } => lo.len(),
            BallLaw::Embedded { ambient_dim, .. } => *ambient_dim,
        }
    }

    /// Mass of the closed sup-norm ball `B(x, h)`.
    pub fn ball<T: Real>(&self, x: &[T], h: T) -> T {
        match self {
            BallLaw::Beta { a } => beta_interval(lit(*a), x[0], h),
            BallLaw::BetaStep { gamma, y } => beta_interval(lit(1.0 + gamma + y), x[0], h),
            BallLaw::ProductBeta { shapes } => shapes
                .iter()
                .zip(x)
                .map(|(&a, &xi)| beta_interval(lit(a), xi, h))
                .fold(T::one(), |p, v| p * v),
            BallLaw::Uniform { lo, hi } => lo
                .iter()
                .zip(hi)
                .zip(x)
                .map(|((&a, &b), &xi)| uniform_interval(lit(a), lit(b), xi, h))
                .fold(T::one(), |p, v| p * v),
            BallLaw::Embedded { inner, .. } => {
                let k = inner.dim();
                if x[k..].iter().any(|v| v.abs() > h) {
                    T::zero()
                } else {
                    inner.ball(&x[..k], h)
                }
            }
        }
    }
}

/// `P(B(x,h))` for a supported law; Euclidean balls only in one dimension.
pub fn ball_prob_closed_form<T: Real>(law: &BallLaw, x: &[T], h: T, metric: Metric) -> Result<T> {
    if x.len() != law.dim() {
        return Err(Error::validation(
            "x",
            format!("dimension {} for a law of dimension {}", x.len(), law.dim()),
        ));
    }
    if metric == Metric::Euclidean && law.dim() > 1 {
        return Err(Error::Unsupported(
            "closed-form Euclidean balls in more than one dimension".into(),
        ));
    }
    Ok(law.ball(x, h))
}

impl TryFrom<&Distribution> for BallLaw {
    type Error = Error;

    fn try_from(d: &Distribution) -> Result<Self> {
        Ok(match d {
            Distribution::Uniform { lo, hi } => BallLaw::Uniform {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            Distribution::ProductBeta { shapes } => BallLaw::ProductBeta {
                shapes: shapes.clone(),
            },
            Distribution::Embedded { inner, ambient_dim } => BallLaw::Embedded {
                inner: Box::new(BallLaw::try_from(inner.as_ref())?),
                ambient_dim: *ambient_dim,
            },
        })
    }
}

/// One-step law `K(y, ·)` of a kernel family.
pub fn step_law(spec: &ContinuousKernelSpec, y: &[f64]) -> Result<BallLaw> {
    Ok(match spec {
        ContinuousKernelSpec::BetaChain { gamma } => BallLaw::BetaStep {
            gamma: *gamma,
            y: y[0],
        },
        ContinuousKernelSpec::ProductBetaChain {
            gammas,
            floor,
            modulation,
            ambient_dim,
        } => {
            let shapes = gammas
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    g * match modulation {
                        Modulation::Linear => floor + (1.0 - floor) * y[i],
                        Modulation::Constant { value } => *value,
                    }
                })
                .collect();
            embed(BallLaw::ProductBeta { shapes }, *ambient_dim)
        }
        ContinuousKernelSpec::Independence { distribution } => BallLaw::try_from(distribution)?,
        ContinuousKernelSpec::EmbeddedTarget { inner, ambient_dim } => {
            let k = inner.dim();
            embed(step_law(inner, &y[..k])?, *ambient_dim)
        }
    })
}

/// Minorizing measure `ν` with `K(x, ·) ≥ ε ν` for every `x`, `ε` from [`ContinuousKernelSpec::doeblin`].
pub fn minorizing_law(spec: &ContinuousKernelSpec) -> Result<BallLaw> {
    Ok(match spec {
        ContinuousKernelSpec::BetaChain { gamma } => BallLaw::Beta { a: 2.0 + gamma },
        ContinuousKernelSpec::ProductBetaChain {
            gammas,
            ambient_dim,
            ..
        } => embed(
            BallLaw::ProductBeta {
                shapes: gammas.clone(),
            },
            *ambient_dim,
        ),
        ContinuousKernelSpec::Independence { distribution } => BallLaw::try_from(distribution)?,
        ContinuousKernelSpec::EmbeddedTarget { inner, ambient_dim } => {
            embed(minorizing_law(inner)?, *ambient_dim)
        }
    })
}

fn embed(law: BallLaw, ambient_dim: usize) -> BallLaw {
    if law.dim() == ambient_dim {
        law
    } else {
        BallLaw::Embedded {
            inner: Box::new(law),
            ambient_dim,
        }
    }
}

/// `ρ_h(U, U)` for the uniform law on `[0,1]` under `|·|`.
pub fn rho_uniform_interval<T: Real>(h: T) -> T {
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    if h >= T::one() {
        T::one()
    } else if h < half {
        T::one() / (two * h) - T::one() + two * T::LN_2()
    } else {
        two * (T::one() / h).ln() + two * h - T::one()
    }
}

/// `ρ_h(U, U)` for the uniform law on `[0,1]^d` under the sup-norm.
pub fn rho_uniform_cube<T: Real>(h: T, d: usize) -> T {
    rho_uniform_interval(h).powi(d as i32)
}
