//! Kernel transfer exponents: grid verification and the induced α-family
//! parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cnt, lit, to_f64, Real};
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferExponentCheck {
    pub gamma: f64,
    pub constant: f64,
    pub radius: f64,
    pub m_q: usize,
    /// `min ν(B(x,h)) - C (h/h̄)^γ Q^{m_Q}(y, B(x,h))` over the grid.
    pub worst_margin: f64,
    pub margin_witness: TransferWitness,
    /// `min ν(B(x,h)) / (C (h/h̄)^γ Q^{m_Q}(y, B(x,h)))` over triples with positive target mass.
    #[serde(with = "crate::serde_inf")]
    pub worst_ratio: f64,
    /// Minimizer of the ratio: where the inequality is tightest in relative terms.
    pub witness: TransferWitness,
    pub pass: bool,
    pub evaluations: usize,
}

/// Tolerance on the margin below which the check fails.
pub const MARGIN_TOL: f64 = 1e-12;

fn to_vec<T: Real>(p: &[T]) -> Vec<f64> {
    p.iter().map(|&v| to_f64(v)).collect()
}

/// Checks `ν(B(x,h)) ≥ C (h/h̄)^γ Q^{m_Q}(y, B(x,h))` on `x_grid × y_grid × h_grid`,
/// plus every bandwidth at the `extra` `(x, y)` pairs.
///
/// `nu_ball(x, h)` and `q_ball(y, x, h)` are the two ball masses.
#[allow(clippy::too_many_arguments)]
pub fn verify_transfer_exponent<T: Real>(
    nu_ball: impl Fn(&[T], T) -> T,
    q_ball: impl Fn(&[T], &[T], T) -> T,
    gamma: T,
    constant: T,
    radius: T,
    m_q: usize,
    x_grid: &PointSet<T>,
    y_grid: &PointSet<T>,
    h_grid: &[T],
    extra: &[(Vec<T>, Vec<T>)],
) -> Result<TransferExponentCheck> {
    if x_grid.is_empty() || y_grid.is_empty() || h_grid.is_empty() {
        return Err(Error::validation(
            "grid",
            "x, y and h grids must be nonempty",
        ));
    }
    if h_grid.iter().any(|&h| !(h > T::zero() && h <= radius)) {
        return Err(Error::validation(
            "h_grid",
            "bandwidths must lie in (0, h_bar]",
        ));
    }
    let mut worst_margin = T::infinity();
    let mut margin_at = (Vec::new(), Vec::new(), T::zero());
    let mut worst_ratio = T::infinity();
    let mut ratio_at = (Vec::new(), Vec::new(), T::zero());
    let mut evaluations = 0usize;
    let mut visit = |x: &[T], y: &[T], h: T| {
        let nu = nu_ball(x, h);
        let q = q_ball(y, x, h);
        let scale = constant * (h / radius).powf(gamma);
        let margin = nu - scale * q;
        evaluations += 1;
        if margin < worst_margin {
            worst_margin = margin;
            margin_at = (x.to_vec(), y.to_vec(), h);
        }
        if q > T::zero() {
            let ratio = nu / (scale * q);
            if ratio < worst_ratio {
                worst_ratio = ratio;
                ratio_at = (x.to_vec(), y.to_vec(), h);
            }
        }
    };
    for (x, y) in extra {
        for &h in h_grid {
            visit(x, y, h);
        }
    }
    for x in x_grid.iter() {
        for y in y_grid.iter() {
            for &h in h_grid {
                visit(x, y, h);
            }
        }
    }
    let w = |(x, y, h): &(Vec<T>, Vec<T>, T)| TransferWitness {
        x: to_vec(x),
        y: to_vec(y),
        h: to_f64(*h),
    };
    let margin_witness = w(&margin_at);
    // with no positive target mass anywhere the ratio is vacuous; fall back to the margin witness
    let witness = if ratio_at.0.is_empty() {
        margin_witness.clone()
    } else {
        w(&ratio_at)
    };
    let worst_margin = to_f64(worst_margin);
    Ok(TransferExponentCheck {
        gamma: to_f64(gamma),
        constant: to_f64(constant),
        radius: to_f64(radius),
        m_q,
        worst_margin,
        margin_witness,
        worst_ratio: to_f64(worst_ratio),
        witness,
        pass: worst_margin >= -MARGIN_TOL,
        evaluations,
    })
}

/// Which α-family the transfer exponent lands in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyCase {
    /// `D(α, C')`, when `α ≥ d`.
    D,
    /// `D'(α, α', C')`, when `α < d`.
    DPrime { alpha_prime: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferAlpha {
    pub alpha: f64,
    pub constant: f64,
    pub case: FamilyCase,
    /// Membership that holds regardless of the target dimension: `D(γ + d, 9^d/(C ε_P))`.
    pub fallback_alpha: f64,
    pub fallback_constant: f64,
}

/// α-family parameters implied by `(P,Q) ∈ T(γ, C, D)` when the target
/// support has covering numbers at most `(1 + k_Q D/ε)^{d_Q}`.
pub fn transfer_to_alpha<T: Real>(
    gamma: T,
    d_q: T,
    k_q: T,
    constant: T,
    eps_p: T,
    d: T,
) -> Result<TransferAlpha> {
    if !(gamma >= T::zero())
        || !(d_q > T::zero())
        || !(k_q >= T::one())
        || !(constant > T::zero())
        || !(eps_p > T::zero())
    {
        return Err(Error::validation(
            "transfer_to_alpha",
            "need γ ≥ 0, d_Q > 0, k_Q ≥ 1, C > 0, ε_P > 0",
        ));
    }
    if d_q > d {
        return Err(Error::validation(
            "d_q",
            "target dimension exceeds ambient dimension",
        ));
    }
    let two = lit::<T>(2.0);
    let alpha = gamma + d_q;
    let num = (two * k_q + T::one()).powf(d_q);
    let ce = constant * eps_p;
    let (c_alpha, case) = if alpha >= d {
        (num / ce, FamilyCase::D)
    } else {
        (
            num / ce.min(T::one()),
            FamilyCase::DPrime {
                alpha_prime: to_f64(d_q),
            },
        )
    };
    Ok(TransferAlpha {
        alpha: to_f64(alpha),
        constant: to_f64(c_alpha),
        case,
        fallback_alpha: to_f64(gamma + d),
        fallback_constant: to_f64(lit::<T>(9.0).powf(d) / ce),
    })
}

/// α for a target on a `β`-Hölder image of `[0,1]^{d_Q}` whose inverse is
/// `β'`-Hölder: `d + ((1-ββ')/β') d_Q` when `d_Q/β' ≤ d`, else `2d - β d_Q`.
pub fn example4_alpha<T: Real>(d: T, d_q: T, beta: T, beta_prime: T) -> T {
    let gamma = d - beta * d_q;
    let cover = d_q / beta_prime;
    if cover <= d {
        gamma + cover
    } else {
        gamma + d
    }
}

/// Product-beta source on `[0,1]^d` and target on `[0,1]^{d_Q} × {0}`
/// with modulation floor `ε`: transfer exponent `Σγ^P - ε Σγ^Q`, constant `ε^{d_Q}`,
/// Doeblin mass `ε^d`, covering constant `k_Q = 1`.
pub fn appendix_a_alpha<T: Real>(gammas_p: &[T], gammas_q: &[T], eps: T) -> Result<TransferAlpha> {
    if gammas_q.len() > gammas_p.len() {
        return Err(Error::validation(
            "gammas_q",
            "target has more coordinates than source",
        ));
    }
    if gammas_q.iter().zip(gammas_p).any(|(q, p)| q > p) {
        return Err(Error::validation("gammas_q", "need γ^P_i ≥ γ^Q_i"));
    }
    let d = gammas_p.len();
    let d_q = gammas_q.len();
    let gamma = gammas_p.iter().copied().sum::<T>() - eps * gammas_q.iter().copied().sum::<T>();
    transfer_to_alpha(
        gamma,
        cnt(d_q),
        T::one(),
        eps.powi(d_q as i32),
        eps.powi(d as i32),
        cnt(d),
    )
}

/// Transfer exponent and constant of the beta-chain pair: `(1 + γ_P - γ_Q, (1+γ_Q)/(2+γ_Q))`.
pub fn beta_chain_transfer<T: Real>(gamma_p: T, gamma_q: T) -> (T, T) {
    let two = lit::<T>(2.0);
    (
        T::one() + gamma_p - gamma_q,
        (T::one() + gamma_q) / (two + gamma_q),
    )
}
