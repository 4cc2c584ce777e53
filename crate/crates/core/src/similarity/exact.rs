//! `ρ_h` between probability vectors on a common finite set of points.

use crate::chains::finite::check_probability;
use crate::error::{Error, Result};
use crate::num::{compensated_sum, to_f64, Real};
use crate::points::{Metric, PointSet};

use super::SimilarityEstimate;

/// Value of `Σ_j target_j / Σ_i mixture_i 1{d(x_i,x_j) ≤ h}` and, when
/// infinite, the first target atom with an empty ball.
pub fn rho_exact_value<T: Real>(
    mixture: &[T],
    target: &[T],
    coords: &PointSet<T>,
    metric: Metric,
    h: T,
) -> Result<(T, Option<usize>)> {
    let k = coords.len();
    if mixture.len() != k || target.len() != k {
        return Err(Error::validation(
            "mixture",
            format!("vectors must have one entry per state ({k})"),
        ));
    }
    check_probability(mixture, "mixture")?;
    check_probability(target, "target")?;
    let mut terms = Vec::with_capacity(k);
    for j in 0..k {
        if target[j] == T::zero() {
            continue;
        }
        let mass = compensated_sum(
            (0..k)
                .filter(|&i| metric.distance(coords.point(i), coords.point(j)) <= h)
                .map(|i| mixture[i]),
        );
        if mass <= T::zero() {
            return Ok((T::infinity(), Some(j)));
        }
        terms.push(target[j] / mass);
    }
    Ok((compensated_sum(terms), None))
}

pub fn rho_exact_finite<T: Real>(
    mixture: &[T],
    target: &[T],
    coords: &PointSet<T>,
    metric: Metric,
    h: T,
) -> Result<SimilarityEstimate> {
    let (value, witness) = rho_exact_value(mixture, target, coords, metric, h)?;
    let witness = witness.map(|j| coords.point(j).iter().map(|&c| to_f64(c)).collect());
    Ok(SimilarityEstimate::exact(to_f64(h), to_f64(value), witness))
}

pub fn rho_exact_curve<T: Real>(
    mixture: &[T],
    target: &[T],
    coords: &PointSet<T>,
    metric: Metric,
    grid: &[T],
) -> Result<Vec<SimilarityEstimate>> {
    grid.iter()
        .map(|&h| rho_exact_finite(mixture, target, coords, metric, h))
        .collect()
}
