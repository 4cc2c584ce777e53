//! α-family membership on a bandwidth grid, α-index fits, and the plug-in
//! covering bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cnt, to_f64, Real};
use crate::stats::fit_line;

use super::SimilarityEstimate;

/// `n min{ρ_P/n_P, ρ_Q/n_Q}` pointwise, `n = n_P + n_Q`.
pub fn rho_mixture<T: Real>(
    n_p: usize,
    n_q: usize,
    grid_p: &[T],
    rho_p: &[T],
    grid_q: &[T],
    rho_q: &[T],
) -> Result<Vec<T>> {
    if grid_p.len() != rho_p.len() || grid_q.len() != rho_q.len() {
        return Err(Error::GridMismatch(
            "curve values and grid differ in length".into(),
        ));
    }
    if grid_p != grid_q {
        return Err(Error::GridMismatch(
            "source and target curves use different bandwidth grids".into(),
        ));
    }
    if n_p + n_q == 0 {
        return Err(Error::validation("n", "n_P + n_Q must be positive"));
    }
    let n = cnt::<T>(n_p + n_q);
    Ok(rho_p
        .iter()
        .zip(rho_q)
        .map(|(&a, &b)| match (n_p, n_q) {
            (_, 0) => a,
            (0, _) => b,
            _ => n * (a / cnt::<T>(n_p)).min(b / cnt::<T>(n_q)),
        })
        .collect())
}

/// `(1 + 2D/ε)^d`.
pub fn covering_bound<T: Real>(diameter: T, eps: T, d: usize) -> T {
    (T::one() + (diameter + diameter) / eps).powi(d as i32)
}

/// `(1 + 4D/h)^d ≥ N(h/2) ≥ ρ_h(π, π)`.
pub fn rho_self_upper<T: Real>(h: T, diameter: T, d: usize) -> T {
    covering_bound(diameter, h / (T::one() + T::one()), d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFamilyCheck {
    pub alpha: f64,
    pub alpha_prime: Option<f64>,
    pub constant: f64,
    pub diameter: f64,
    /// `sup_h (h/D)^α ρ_h(P,Q)` over the grid.
    #[serde(with = "crate::serde_inf")]
    pub sup_value: f64,
    pub sup_h: f64,
    /// `sup_h (h/D)^{α'} ρ_h(Q,Q)` for the primed family.
    #[serde(with = "crate::serde_inf::option")]
    pub prime_sup_value: Option<f64>,
    pub pass: bool,
    /// Bandwidth of an infinite entry or of the largest violation.
    pub witness_h: Option<f64>,
    pub grid: Vec<f64>,
}

/// Relative slack on `C` absorbing rounding in `(h/D)^α ρ_h`.
pub const SUP_RTOL: f64 = 1e-12;

fn scaled_sup(
    curve: &[SimilarityEstimate],
    alpha: f64,
    diameter: f64,
) -> Result<(f64, f64, Option<f64>)> {
    let mut sup = f64::NEG_INFINITY;
    let mut arg = f64::NAN;
    let mut infinite = None;
    for e in curve {
        if !(e.h > 0.0 && e.h <= diameter * (1.0 + 1e-12)) {
            return Err(Error::validation(
                "grid",
                format!("bandwidth {} outside (0, D = {diameter}]", e.h),
            ));
        }
        if e.value.is_infinite() && infinite.is_none() {
            infinite = Some(e.h);
        }
        let v = (e.h / diameter).powf(alpha) * e.value;
        if v > sup {
            sup = v;
            arg = e.h;
        }
    }
    Ok((sup, arg, infinite))
}

/// Grid evidence for `(h/D)^α ρ_h(P,Q) ≤ C` and, when `prime` is given,
/// `(h/D)^{α'} ρ_h(Q,Q) ≤ C`.
pub fn alpha_family_check(
    curve: &[SimilarityEstimate],
    alpha: f64,
    prime: Option<(f64, &[SimilarityEstimate])>,
    constant: f64,
    diameter: f64,
) -> Result<AlphaFamilyCheck> {
    if curve.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if !(diameter > 0.0) || !(constant > 0.0) {
        return Err(Error::validation(
            "alpha_family_check",
            "D and C must be positive",
        ));
    }
    let (sup, arg, inf_h) = scaled_sup(curve, alpha, diameter)?;
    let limit = constant * (1.0 + SUP_RTOL);
    let mut pass = inf_h.is_none() && sup <= limit;
    let mut witness_h = inf_h.or((sup > limit).then_some(arg));
    let mut prime_sup = None;
    if let Some((ap, qq)) = prime {
        let (s, a, inf) = scaled_sup(qq, ap, diameter)?;
        prime_sup = Some(s);
        if inf.is_some() || s > limit {
            pass = false;
            witness_h = witness_h.or(inf).or(Some(a));
        }
    }
    Ok(AlphaFamilyCheck {
        alpha,
        alpha_prime: prime.map(|p| p.0),
        constant,
        diameter,
        sup_value: sup,
        sup_h: arg,
        prime_sup_value: prime_sup,
        pass,
        witness_h,
        grid: curve.iter().map(|e| e.h).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit<T> {
    /// Slope of `log ρ_h` against `log(1/h)`.
    pub alpha: T,
    pub std_error: T,
    pub residual: T,
    pub points: usize,
}

/// Least-squares slope of `log ρ_h` on `log(1/h)` over the finite points.
pub fn alpha_index_fit<T: Real>(hs: &[T], values: &[T]) -> Result<AlphaFit<T>> {
    if hs.len() != values.len() {
        return Err(Error::GridMismatch(
            "bandwidths and values differ in length".into(),
        ));
    }
    let (xs, ys): (Vec<T>, Vec<T>) = hs
        .iter()
        .zip(values)
        .filter(|(h, v)| v.is_finite() && **v > T::zero() && **h > T::zero())
        .map(|(&h, &v)| (-h.ln(), v.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    let fit = fit_line(&xs, &ys)?;
    Ok(AlphaFit {
        alpha: fit.slope,
        std_error: fit.slope_se,
        residual: fit.residual,
        points: fit.points,
    })
}

/// [`alpha_index_fit`] on the half of the grid with the smallest bandwidths.
pub fn alpha_index_fit_lower(curve: &[SimilarityEstimate]) -> Result<AlphaFit<f64>> {
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|e| (e.h, e.value)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = &pts[..pts.len().div_ceil(2)];
    let (hs, vs): (Vec<f64>, Vec<f64>) = half.iter().copied().unzip();
    alpha_index_fit(&hs, &vs)
}

/// Convenience for reports: fit summary in `f64`.
pub fn fit_to_f64<T: Real>(f: AlphaFit<T>) -> AlphaFit<f64> {
    AlphaFit {
        alpha: to_f64(f.alpha),
        std_error: to_f64(f.std_error),
        residual: to_f64(f.residual),
        points: f.points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::closed_form::rho_uniform_interval;
    use crate::stats::geometric_grid;

    fn curve(grid: &[f64], f: impl Fn(f64) -> f64) -> Vec<SimilarityEstimate> {
        grid.iter()
            .map(|&h| SimilarityEstimate::closed_form(h, f(h)))
            .collect()
    }

    #[test]
    fn mixture_examples() {
        let g = [0.1, 0.2];
        assert_eq!(
            rho_mixture(10, 0, &g, &[4.0, 3.0], &g, &[1.0, 1.0]).unwrap(),
            vec![4.0, 3.0]
        );
        let inf = f64::INFINITY;
        assert_eq!(
            rho_mixture(10, 5, &g, &[inf, inf], &g, &[2.0, 4.0]).unwrap(),
            vec![6.0, 12.0]
        );
        assert_eq!(
            rho_mixture(7, 7, &[0.1], &[4.0], &[0.1], &[8.0]).unwrap(),
            vec![8.0]
        );
        assert!(matches!(
            rho_mixture(1, 1, &g, &[1.0, 1.0], &[0.1, 0.3], &[1.0, 1.0]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn covering_examples() {
        assert_eq!(covering_bound(1.0, 2.0, 3), 8.0);
        assert_eq!(covering_bound(1.0, 0.5, 1), 5.0);
        assert_eq!(rho_self_upper(1.0, 1.0, 2), 25.0);
    }

    #[test]
    fn synthetic_power_law_passes_at_c() {
        let grid = geometric_grid(1.0, 0.005, 20);
        let c = 2.5;
        let k = alpha_family_check(&curve(&grid, |h| c * h.powf(-1.5)), 1.5, None, c, 1.0).unwrap();
        assert!((k.sup_value - c).abs() < 1e-12);
        assert!(k.pass);
    }

    #[test]
    fn uniform_curve_membership() {
        let grid = geometric_grid(1.0, 1e-3, 20);
        let c = curve(&grid, rho_uniform_interval);
        assert!(alpha_family_check(&c, 1.0, None, 3.0, 1.0).unwrap().pass);
        let k = alpha_family_check(&c, 0.5, None, 3.0, 1.0).unwrap();
        assert!(!k.pass);
        assert!(k.witness_h.unwrap() < 0.01);
    }

    #[test]
    fn infinite_entry_fails_with_witness() {
        let grid = [1.0, 0.5, 0.1];
        let c = curve(&grid, |h| if h < 0.2 { f64::INFINITY } else { 2.0 });
        let k = alpha_family_check(&c, 1.0, None, 100.0, 1.0).unwrap();
        assert!(!k.pass);
        assert_eq!(k.witness_h, Some(0.1));
    }

    #[test]
    fn primed_family_checks_second_curve() {
        let grid = [1.0, 0.5, 0.1];
        let pq = curve(&grid, |_| 1.0);
        let qq = curve(&grid, |h| 1.0 / h);
        assert!(
            alpha_family_check(&pq, 0.0, Some((1.0, &qq)), 1.0, 1.0)
                .unwrap()
                .pass
        );
        assert!(
            !alpha_family_check(&pq, 0.0, Some((0.5, &qq)), 1.0, 1.0)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn grid_outside_diameter_rejected() {
        assert!(alpha_family_check(&curve(&[2.0], |_| 1.0), 1.0, None, 1.0, 1.0).is_err());
    }

    #[test]
    fn fit_recovers_exact_power() {
        let grid = geometric_grid(1.0, 0.01, 10);
        let vals: Vec<f64> = grid.iter().map(|h| h.powi(-2)).collect();
        let f = alpha_index_fit(&grid, &vals).unwrap();
        assert!((f.alpha - 2.0).abs() < 1e-9);
        assert!(matches!(
            alpha_index_fit(&grid[..2], &vals[..2]),
            Err(Error::InsufficientPoints { .. })
        ));
        let f32fit = alpha_index_fit(&[1.0f32, 0.5, 0.25], &[1.0, 4.0, 16.0]).unwrap();
        assert!((f32fit.alpha - 2.0).abs() < 1e-5);
    }

    #[test]
    fn lower_half_fit_on_uniform_curve() {
        let grid = geometric_grid(1.0, 0.005, 20);
        let f = alpha_index_fit_lower(&curve(&grid, rho_uniform_interval)).unwrap();
        assert_eq!(f.points, 10);
        assert!((f.alpha - 1.0).abs() < 0.1);
    }
}
