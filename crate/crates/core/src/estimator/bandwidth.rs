//! Bandwidth rules for the α-family and finite-state settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cnt, to_f64, Real};

/// `ζ(α, d) = d` when `α ≥ d`, else `α'`.
pub fn zeta<T: Real>(alpha: T, alpha_prime: Option<T>, d: T) -> Result<T> {
    if alpha >= d {
        return Ok(d);
    }
    let ap =
        alpha_prime.ok_or_else(|| Error::validation("alpha_prime", "required when alpha < d"))?;
    if !(ap > T::zero()) || ap > alpha {
        return Err(Error::validation("alpha_prime", "need 0 < alpha' <= alpha"));
    }
    Ok(ap)
}

/// `h = (n_Q + n_P^{(2β+ζ)/(2β+α)})^{-1/(2β+ζ)}`.
pub fn bandwidth_alpha<T: Real>(
    n_p: usize,
    n_q: usize,
    beta: T,
    alpha: T,
    alpha_prime: Option<T>,
    d: T,
) -> Result<T> {
    if n_p == 0 && n_q == 0 {
        return Err(Error::validation("n", "need n_P >= 1 or n_Q >= 1"));
    }
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::validation("beta", "smoothness must lie in (0, 1]"));
    }
    if !(alpha > T::zero()) || !(d > T::zero()) {
        return Err(Error::validation("alpha", "alpha and d must be positive"));
    }
    let z = zeta(alpha, alpha_prime, d)?;
    let two_beta = beta + beta;
    let source = if n_p == 0 {
        T::zero()
    } else {
        cnt::<T>(n_p).powf((two_beta + z) / (two_beta + alpha))
    };
    Ok((cnt::<T>(n_q) + source).powf(-T::one() / (two_beta + z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSampleSize {
    pub n_eff: f64,
    /// `max_i π^Q_i / π^P_i`; infinite when `π^Q` charges a state `π^P` misses.
    #[serde(with = "crate::serde_inf")]
    pub max_ratio: f64,
    /// The source block contributes nothing because the ratio is infinite.
    pub source_dropped: bool,
}

/// `n_eff = n_P / max_i(π^Q_i / π^P_i) + n_Q`.
pub fn effective_sample_size<T: Real>(
    n_p: usize,
    n_q: usize,
    pi_p: &[T],
    pi_q: &[T],
) -> Result<EffectiveSampleSize> {
    if pi_p.len() != pi_q.len() || pi_p.is_empty() {
        return Err(Error::GridMismatch(format!(
            "π^P has {} states, π^Q has {}",
            pi_p.len(),
            pi_q.len()
        )));
    }
    if pi_p
        .iter()
        .chain(pi_q)
        .any(|&v| !(v >= T::zero()) || !v.is_finite())
    {
        return Err(Error::validation(
            "pi",
            "invariant laws must be nonnegative",
        ));
    }
    let mut max_ratio = T::zero();
    for (&p, &q) in pi_p.iter().zip(pi_q) {
        if q > T::zero() {
            max_ratio = max_ratio.max(if p > T::zero() { q / p } else { T::infinity() });
        }
    }
    let source_dropped = max_ratio.is_infinite();
    let from_p = if source_dropped || max_ratio == T::zero() {
        T::zero()
    } else {
        cnt::<T>(n_p) / max_ratio
    };
    Ok(EffectiveSampleSize {
        n_eff: to_f64(from_p + cnt::<T>(n_q)),
        max_ratio: to_f64(max_ratio),
        source_dropped,
    })
}

/// `h = c · min(n_eff^{-1/2}, δ)`, where `δ` is below the minimal distance between states.
pub fn bandwidth_finite<T: Real>(n_eff: T, delta: T, c: T) -> Result<T> {
    if !(c > T::zero() && c < T::one()) {
        return Err(Error::validation("c", "must lie in (0, 1)"));
    }
    if !(n_eff > T::zero()) || !(delta > T::zero()) {
        return Err(Error::validation(
            "n_eff",
            "n_eff and delta must be positive",
        ));
    }
    Ok(c * n_eff.powf(-T::one() / (T::one() + T::one())).min(delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_shift_reduction() {
        let h = bandwidth_alpha(1000, 0, 1.0, 1.0, None, 1.0).unwrap();
        assert!((h - 1000f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn worked_value() {
        let h: f64 = bandwidth_alpha(10_000, 0, 1.0, 2.0, None, 1.0).unwrap();
        assert!((h - 0.1).abs() < 1e-14);
    }

    #[test]
    fn prime_required_below_d() {
        assert!(bandwidth_alpha(100, 0, 1.0, 1.0, None, 2.0).is_err());
        assert!(bandwidth_alpha(100, 0, 1.0, 1.0, Some(1.5), 2.0).is_err());
        assert!(bandwidth_alpha(100, 0, 1.0, 1.5, Some(1.0), 2.0).is_ok());
        assert!(bandwidth_alpha::<f64>(0, 0, 1.0, 1.0, None, 1.0).is_err());
    }

    #[test]
    fn cases_agree_at_boundary() {
        let a = bandwidth_alpha(500, 70, 0.7, 2.0, None, 2.0).unwrap();
        let b: f64 = {
            let z = 2.0;
            (70.0 + 500f64.powf((1.4 + z) / (1.4 + 2.0))).powf(-1.0 / (1.4 + z))
        };
        assert_eq!(a, b);
    }

    #[test]
    fn effective_sizes() {
        let e = effective_sample_size(100, 7, &[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert!((e.n_eff - 107.0).abs() < 1e-12);
        let e = effective_sample_size(100, 7, &[0.25, 0.75], &[0.5, 0.5]).unwrap();
        assert_eq!((e.max_ratio, e.n_eff), (2.0, 57.0));
        let e = effective_sample_size(100, 7, &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!(e.source_dropped && e.n_eff == 7.0 && e.max_ratio.is_infinite());
        let h: f64 = bandwidth_finite(1e4, 0.5, 0.5).unwrap();
        assert!((h - 0.005).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn more_target_data_shrinks_h(np in 1usize..100_000, nq in 0usize..100_000, beta in 0.1f64..1.0, alpha in 1.0f64..4.0) {
            let a = bandwidth_alpha(np, nq, beta, alpha, None, 1.0).unwrap();
            let b = bandwidth_alpha(np, nq + 1, beta, alpha, None, 1.0).unwrap();
            prop_assert!(b < a);
        }
    }
}
