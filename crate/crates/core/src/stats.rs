//! Small statistical helpers: replication summaries, least-squares slopes,
//! and the Kolmogorov-Smirnov statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cnt, pairwise_sum, Real};

/// Mean and standard error of a replication sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
                count: 0,
            };
        }
        let mean = pairwise_sum(values) / n as f64;
        if n == 1 {
            return MeanSe {
                mean,
                se: 0.0,
                count: 1,
            };
        }
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        MeanSe {
            mean,
            se: (var / n as f64).sqrt(),
            count: n,
        }
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_se: T,
    /// Root mean square residual.
    pub residual: T,
    pub points: usize,
}

pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> Result<LineFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::GridMismatch(format!(
            "{} x values vs {} y values",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let nf = cnt::<T>(n);
    let mx = xs.iter().copied().sum::<T>() / nf;
    let my = ys.iter().copied().sum::<T>() / nf;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= T::zero() {
        return Err(Error::Undefined("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ssr = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - intercept - slope * x;
        ssr += r * r;
    }
    let slope_se = if n > 2 {
        (ssr / cnt::<T>(n - 2) / sxx).sqrt()
    } else {
        T::zero()
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        residual: (ssr / nf).sqrt(),
        points: n,
    })
}

/// One-sample KS statistic of `sample` against the continuous CDF `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.627_6 * ((n + m) / (n * m)).sqrt()
}

/// Geometric grid of `points` values from `hi` down to `lo` (inclusive).
pub fn geometric_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && hi > 0.0 && lo > 0.0);
    let ratio = (lo / hi).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                lo
            } else {
                hi * (ratio * i as f64).exp()
            }
        })
        .collect()
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}
