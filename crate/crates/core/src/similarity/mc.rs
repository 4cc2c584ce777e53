//! Monte Carlo `ρ_h` from source and target samplers.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::finite::CategoricalTable;
use crate::chains::{ContinuousKernelSpec, Distribution, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::num::compensated_sum;
use crate::points::{BallIndex, Metric, PointSet};
use crate::rng::{derive, rng_from_seed, Rng};

use super::{Method, SimilarityEstimate};

/// Anything that can produce `n` points of a fixed dimension.
pub trait PointSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn sample(&self, n: usize, rng: &mut Rng) -> PointSet<f64>;
}

impl PointSampler for Distribution {
    fn dim(&self) -> usize {
        Distribution::dim(self)
    }

    fn sample(&self, n: usize, rng: &mut Rng) -> PointSet<f64> {
        Distribution::sample(self, n, rng)
    }
}

/// I.i.d. draws from a probability vector over fixed points.
#[derive(Debug, Clone)]
pub struct FiniteLaw {
    states: PointSet<f64>,
    table: CategoricalTable,
}

impl FiniteLaw {
    pub fn new(states: PointSet<f64>, weights: &[f64]) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::validation(
                "weights",
                "one weight per state required",
            ));
        }
        crate::chains::finite::check_probability(weights, "weights")?;
        Ok(FiniteLaw {
            states,
            table: CategoricalTable::from_vector(weights),
        })
    }
}

impl PointSampler for FiniteLaw {
    fn dim(&self) -> usize {
        self.states.dim()
    }

    fn sample(&self, n: usize, rng: &mut Rng) -> PointSet<f64> {
        let mut out = PointSet::with_capacity(self.states.dim(), n);
        for _ in 0..n {
            out.push(self.states.point(self.table.draw(0, rng)));
        }
        out
    }
}

/// Long-run states of a continuous chain as a proxy for its invariant law.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    pub spec: ContinuousKernelSpec,
    pub burn_in: usize,
    pub thin: usize,
}

impl ChainSampler {
    pub fn new(spec: ContinuousKernelSpec) -> Self {
        ChainSampler {
            spec,
            burn_in: DEFAULT_BURN_IN,
            thin: 10,
        }
    }
}

impl PointSampler for ChainSampler {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn sample(&self, n: usize, rng: &mut Rng) -> PointSet<f64> {
        self.spec.stationary_sample(n, self.burn_in, self.thin, rng)
    }
}

/// Finite mixture of samplers, e.g. `(n_P/n) π^P + (n_Q/n) π^Q`.
pub struct Mixture {
    parts: Vec<(f64, Box<dyn PointSampler>)>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, Box<dyn PointSampler>)>) -> Result<Self> {
        let weights: Vec<f64> = parts.iter().map(|p| p.0).collect();
        crate::chains::finite::check_probability(&weights, "mixture weights")?;
        if parts.windows(2).any(|w| w[0].1.dim() != w[1].1.dim()) {
            return Err(Error::validation(
                "mixture",
                "components have different dimensions",
            ));
        }
        Ok(Mixture { parts })
    }
}

impl PointSampler for Mixture {
    fn dim(&self) -> usize {
        self.parts[0].1.dim()
    }

    fn sample(&self, n: usize, rng: &mut Rng) -> PointSet<f64> {
        let weights: Vec<f64> = self.parts.iter().map(|p| p.0).collect();
        let table = CategoricalTable::from_vector(&weights);
        let mut counts = vec![0usize; self.parts.len()];
        for _ in 0..n {
            counts[table.draw(0, rng)] += 1;
        }
        let mut out = PointSet::with_capacity(self.dim(), n);
        for ((_, s), &c) in self.parts.iter().zip(&counts) {
            if c > 0 {
                out.extend(&s.sample(c, rng));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McBudget {
    /// Source draws used for ball masses.
    pub inner: usize,
    /// Target draws integrated over.
    pub outer: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget {
            inner: 10_000,
            outer: 10_000,
        }
    }
}

/// Source and target samples shared across a bandwidth grid.
struct Samples {
    inner: BallIndex<f64>,
    /// Position of each original inner index among the merged entries.
    entry_of: Vec<usize>,
    outer: BallIndex<f64>,
    m: usize,
    n: usize,
}

impl Samples {
    fn draw(
        source: &dyn PointSampler,
        target: &dyn PointSampler,
        metric: Metric,
        budget: McBudget,
        seed: u64,
    ) -> Result<Self> {
        if budget.inner == 0 || budget.outer == 0 {
            return Err(Error::validation(
                "budget",
                "inner and outer budgets must be at least 1",
            ));
        }
        if source.dim() != target.dim() {
            return Err(Error::validation(
                "sampler",
                format!(
                    "source dimension {} differs from target {}",
                    source.dim(),
                    target.dim()
                ),
            ));
        }
        let src = source.sample(budget.inner, &mut rng_from_seed(derive(seed, "inner")));
        let tgt = target.sample(budget.outer, &mut rng_from_seed(derive(seed, "outer")));
        let inner = BallIndex::deduplicated(&src, metric);
        let mut entry_of = vec![usize::MAX; src.len()];
        for (pos, &orig) in inner.origins().iter().enumerate() {
            entry_of[orig] = pos;
        }
        let outer = BallIndex::deduplicated(&tgt, metric);
        Ok(Samples {
            inner,
            entry_of,
            outer,
            m: budget.inner,
            n: budget.outer,
        })
    }

    fn estimate(&self, h: f64) -> SimilarityEstimate {
        let m = self.m as f64;
        let n = self.n as f64;
        let mut zero_cells = 0usize;
        let mut witness = None;
        // per outer entry: (point, multiplicity, count)
        let mut rows: Vec<(&[f64], usize, usize)> = Vec::with_capacity(self.outer.entries());
        for (z, w) in self.outer.weighted_points() {
            let c = self.inner.count(z, h);
            if c == 0 {
                zero_cells += w;
                if witness.is_none() {
                    witness = Some(z.to_vec());
                }
            }
            rows.push((z, w, c));
        }
        let finite: Vec<&(&[f64], usize, usize)> = rows.iter().filter(|r| r.2 > 0).collect();
        let nf: f64 = finite.iter().map(|r| r.1 as f64).sum();
        let g = |c: usize| (m + 1.0) / (c as f64 + 1.0);
        let mean = compensated_sum(finite.iter().map(|r| r.1 as f64 * g(r.2))) / nf.max(1.0);
        let outer_var = if nf > 1.0 {
            compensated_sum(finite.iter().map(|r| r.1 as f64 * (g(r.2) - mean).powi(2)))
                / (nf - 1.0)
        } else {
            0.0
        };
        // influence of each inner point on the estimate through the counts
        let mut u = vec![0.0; self.inner.entries()];
        for &&(z, w, c) in &finite {
            let a = w as f64 * (m + 1.0) / ((c as f64 + 1.0).powi(2) * n);
            self.inner
                .for_each_in_ball(z, h, |orig, _| u[self.entry_of[orig]] += a);
        }
        let weights: Vec<usize> = self.inner.weighted_points().map(|(_, w)| w).collect();
        let u_mean = compensated_sum(u.iter().zip(&weights).map(|(&v, &w)| v * w as f64)) / m;
        let inner_var = if self.m > 1 {
            compensated_sum(
                u.iter()
                    .zip(&weights)
                    .map(|(&v, &w)| w as f64 * (v - u_mean).powi(2)),
            ) / (m - 1.0)
        } else {
            0.0
        };
        let se = (outer_var / nf.max(1.0) + m * inner_var).sqrt();
        let explosion = zero_cells > 0;
        SimilarityEstimate {
            h,
            value: if explosion { f64::INFINITY } else { mean },
            method: Method::MonteCarlo,
            std_error: Some(se),
            explosion,
            witness,
            zero_cells,
            inner_budget: Some(self.m),
            outer_budget: Some(self.n),
        }
    }
}

/// Monte Carlo `ρ_h(source, target)`.
///
/// Each target draw `z` contributes `(M+1)/(c(z)+1)` where `c(z)` counts the
/// `M` source draws in `B(z,h)`. A single empty ball makes the estimate `+∞`.
pub fn rho_mc(
    source: &dyn PointSampler,
    target: &dyn PointSampler,
    h: f64,
    budget: McBudget,
    metric: Metric,
    seed: u64,
) -> Result<SimilarityEstimate> {
    Ok(Samples::draw(source, target, metric, budget, seed)?.estimate(h))
}

/// `ρ_h` over a grid, all bandwidths sharing one pair of samples.
pub fn rho_mc_curve(
    source: &dyn PointSampler,
    target: &dyn PointSampler,
    grid: &[f64],
    budget: McBudget,
    metric: Metric,
    seed: u64,
) -> Result<Vec<SimilarityEstimate>> {
    if grid.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::validation("grid", "bandwidths must be positive"));
    }
    let s = Samples::draw(source, target, metric, budget, seed)?;
    Ok(grid.par_iter().map(|&h| s.estimate(h)).collect())
}

/// Uniform draw used by tests and examples: `n` points of `[0,1]`.
pub fn uniform_points(n: usize, rng: &mut Rng) -> PointSet<f64> {
    PointSet::from_scalars(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::closed_form::rho_uniform_interval;
    use crate::similarity::exact::rho_exact_finite;

    #[test]
    fn uniform_uniform_matches_closed_form() {
        let u = Distribution::unit_cube(1);
        let est = rho_mc(&u, &u, 0.25, McBudget::default(), Metric::SupNorm, 3).unwrap();
        let exact = rho_uniform_interval(0.25);
        assert!(
            (est.value - exact).abs() <= 3.0 * est.std_error.unwrap(),
            "{} vs {exact} (se {:?})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn segment_source_square_target_explodes() {
        let src = Distribution::Uniform {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 0.0],
        };
        let tgt = Distribution::unit_cube(2);
        let est = rho_mc(
            &src,
            &tgt,
            0.05,
            McBudget {
                inner: 2000,
                outer: 2000,
            },
            Metric::SupNorm,
            1,
        )
        .unwrap();
        assert!(est.explosion && est.value.is_infinite());
        assert!(est.zero_cells > 0);
        assert!(est.witness.unwrap()[1] > 0.05);
        let rev = rho_mc(
            &tgt,
            &src,
            0.05,
            McBudget {
                inner: 2000,
                outer: 2000,
            },
            Metric::SupNorm,
            1,
        )
        .unwrap();
        assert!(rev.value.is_finite());
    }

    #[test]
    fn finite_law_within_four_se_of_exact() {
        let pts = PointSet::from_rows(
            2,
            &[
                vec![0.1, 0.2],
                vec![0.5, 0.5],
                vec![0.9, 0.1],
                vec![0.4, 0.8],
            ],
        )
        .unwrap();
        let mu = [0.1, 0.2, 0.3, 0.4];
        let q = [0.4, 0.3, 0.2, 0.1];
        let exact = rho_exact_finite(&mu, &q, &pts, Metric::SupNorm, 0.35).unwrap();
        let src = FiniteLaw::new(pts.clone(), &mu).unwrap();
        let tgt = FiniteLaw::new(pts, &q).unwrap();
        let est = rho_mc(&src, &tgt, 0.35, McBudget::default(), Metric::SupNorm, 8).unwrap();
        assert!((est.value - exact.value).abs() <= 4.0 * est.std_error.unwrap());
    }

    #[test]
    fn curve_is_deterministic_and_parallel_safe() {
        let u = Distribution::unit_cube(1);
        let grid = [0.5, 0.25, 0.1];
        let a = rho_mc_curve(
            &u,
            &u,
            &grid,
            McBudget {
                inner: 3000,
                outer: 3000,
            },
            Metric::SupNorm,
            4,
        )
        .unwrap();
        let b = rho_mc_curve(
            &u,
            &u,
            &grid,
            McBudget {
                inner: 3000,
                outer: 3000,
            },
            Metric::SupNorm,
            4,
        )
        .unwrap();
        assert_eq!(a, b);
        let single = rho_mc(
            &u,
            &u,
            0.25,
            McBudget {
                inner: 3000,
                outer: 3000,
            },
            Metric::SupNorm,
            4,
        )
        .unwrap();
        assert_eq!(single, a[1]);
    }

    #[test]
    fn rejects_empty_budget() {
        let u = Distribution::unit_cube(1);
        assert!(rho_mc(
            &u,
            &u,
            0.1,
            McBudget {
                inner: 0,
                outer: 10
            },
            Metric::SupNorm,
            0
        )
        .is_err());
    }
}
