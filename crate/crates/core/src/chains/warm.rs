//! Initial laws and warm-start density-ratio norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real};

use super::continuous::Distribution;

/// How `X_0` is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "start", rename_all = "kebab-case")]
pub enum InitialLaw {
    /// Deterministic start.
    Point { x: Vec<f64> },
    /// Independent draw from a parametric law.
    Distribution { distribution: Distribution },
    /// Approximately stationary start after a burn-in (exactly stationary for finite kernels).
    Stationary {
        #[serde(default)]
        burn_in: Option<usize>,
    },
    /// Probability vector over the states of a finite kernel.
    Weights { weights: Vec<f64> },
}

/// Initial law together with its `L^p(π)` density-ratio norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    #[serde(flatten)]
    pub law: InitialLaw,
    /// `‖dμ/dπ‖_{L^p(π)}`; computed for finite kernels, user-supplied otherwise.
    #[serde(default)]
    pub density_ratio_norm: Option<f64>,
    #[serde(default = "infinite", with = "crate::serde_inf")]
    pub exponent: f64,
    /// Set when the norm was supplied rather than computed.
    #[serde(default)]
    pub asserted: bool,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl Default for WarmStart {
    fn default() -> Self {
        WarmStart::stationary()
    }
}

impl WarmStart {
    pub fn stationary() -> Self {
        WarmStart {
            law: InitialLaw::Stationary { burn_in: None },
            density_ratio_norm: Some(1.0),
            exponent: f64::INFINITY,
            asserted: false,
        }
    }

    /// Deterministic start; its norm is unknown until asserted.
    pub fn point(x: Vec<f64>) -> Self {
        WarmStart {
            law: InitialLaw::Point { x },
            density_ratio_norm: None,
            exponent: f64::INFINITY,
            asserted: false,
        }
    }

    /// Start from a law whose density-ratio norm the caller vouches for.
    pub fn asserted(law: InitialLaw, norm: f64, exponent: f64) -> Self {
        WarmStart {
            law,
            density_ratio_norm: Some(norm),
            exponent,
            asserted: true,
        }
    }

    /// Finite start `mu` against invariant law `pi`, with the norm computed exactly.
    pub fn finite(mu: &[f64], pi: &[f64], exponent: f64) -> Result<Self> {
        let norm = density_ratio_norm(mu, pi, exponent)?;
        Ok(WarmStart {
            law: InitialLaw::Weights {
                weights: mu.to_vec(),
            },
            density_ratio_norm: Some(norm),
            exponent,
            asserted: false,
        })
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.law, InitialLaw::Stationary { .. })
    }

    /// The norm to use in bounds: 1 for a stationary start, the stored value otherwise.
    pub fn norm(&self) -> Result<f64> {
        if self.is_stationary() {
            return Ok(1.0);
        }
        self.density_ratio_norm.ok_or_else(|| {
            Error::validation(
                "warm_start.density_ratio_norm",
                "required for a non-stationary start",
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 1.0) {
            return Err(Error::validation(
                "warm_start.exponent",
                "must lie in (1, inf]",
            ));
        }
        if let Some(n) = self.density_ratio_norm {
            if !(n >= 1.0 - 1e-12) {
                return Err(Error::validation(
                    "warm_start.density_ratio_norm",
                    format!("{n} < 1 is impossible for a probability density"),
                ));
            }
        }
        if self.is_stationary()
            && self
                .density_ratio_norm
                .is_some_and(|n| (n - 1.0).abs() > 1e-12)
        {
            return Err(Error::validation(
                "warm_start.density_ratio_norm",
                "a stationary start has norm 1",
            ));
        }
        Ok(())
    }
}

/// `‖dμ/dπ‖_{L^p(π)}` for probability vectors; `p = ∞` gives `max μ_i/π_i`.
pub fn density_ratio_norm<T: Real>(mu: &[T], pi: &[T], p: T) -> Result<T> {
    if mu.len() != pi.len() {
        return Err(Error::validation("mu", "length differs from pi"));
    }
    if !(p > T::one()) {
        return Err(Error::validation("exponent", "must lie in (1, inf]"));
    }
    let mut acc = T::zero();
    for (&m, &q) in mu.iter().zip(pi) {
        if q <= T::zero() {
            if m > T::zero() {
                return Err(Error::validation(
                    "mu",
                    "not absolutely continuous with respect to pi",
                ));
            }
            continue;
        }
        let r = m / q;
        acc = if p.is_infinite() {
            acc.max(r)
        } else {
            acc + q * r.powf(p)
        };
    }
    let norm = if p.is_infinite() {
        acc
    } else {
        acc.powf(T::one() / p)
    };
    // Jensen: rounding can only push a true value of 1 slightly below
    Ok(norm.max(T::one() - lit::<T>(1e-12)))
}

/// `p / (p - 1)`, and 1 for `p = ∞`.
pub fn conjugate_exponent<T: Real>(p: T) -> T {
    if p.is_infinite() {
        T::one()
    } else {
        p / (p - T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_norm_is_one() {
        let pi = [0.25, 0.75];
        assert!((density_ratio_norm(&pi, &pi, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert!((density_ratio_norm(&pi, &pi, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(WarmStart::stationary().norm().unwrap(), 1.0);
    }

    #[test]
    fn dirac_start_norms() {
        // δ_0 against (1/4, 3/4): ratio (4, 0)
        let pi = [0.25, 0.75];
        assert_eq!(
            density_ratio_norm(&[1.0, 0.0], &pi, f64::INFINITY).unwrap(),
            4.0
        );
        assert!((density_ratio_norm(&[1.0, 0.0], &pi, 2.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn norm_at_least_one() {
        let pi = [0.2, 0.3, 0.5];
        for mu in [[0.1, 0.1, 0.8], [0.3, 0.3, 0.4], [0.0, 0.5, 0.5]] {
            for p in [1.5, 2.0, 4.0, f64::INFINITY] {
                assert!(density_ratio_norm(&mu, &pi, p).unwrap() >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(f64::INFINITY), 1.0);
        assert_eq!(conjugate_exponent(2.0), 2.0);
        assert_eq!(conjugate_exponent(3.0), 1.5);
    }

    #[test]
    fn validation_rules() {
        let mut w = WarmStart::stationary();
        w.exponent = 1.0;
        assert!(w.validate().is_err());
        let w = WarmStart::asserted(InitialLaw::Point { x: vec![0.0] }, 0.5, 2.0);
        assert!(w.validate().is_err());
        assert!(WarmStart::point(vec![0.1]).norm().is_err());
    }
}
