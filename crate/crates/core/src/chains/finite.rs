//! Finite-state kernels: validation, structural checks, invariant law,
//! and path sampling.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};
use crate::num::{cnt, lit, to_f64, Real};
use crate::points::{Metric, PointSet};
use crate::rng::{rng_from_seed, Rng};

use super::path::StatePath;

/// A row-stochastic transition matrix on `K` distinct points of R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel<T> {
    states: PointSet<T>,
    transition: Matrix<T>,
    min_gap: T,
    metric: Metric,
}

impl<T: Real> FiniteKernel<T> {
    pub fn new(states: PointSet<T>, transition: Matrix<T>, metric: Metric) -> Result<Self> {
        let k = transition.dim();
        if k == 0 {
            return Err(Error::validation(
                "transition",
                "kernel needs at least one state",
            ));
        }
        if states.len() != k {
            return Err(Error::validation(
                "states",
                format!("{} states for a {k}x{k} matrix", states.len()),
            ));
        }
        check_stochastic(&transition)?;
        let mut min_gap = T::infinity();
        for i in 0..k {
            for j in 0..i {
                min_gap = min_gap.min(metric.distance(states.point(i), states.point(j)));
            }
        }
        if min_gap <= T::zero() {
            return Err(Error::validation(
                "states",
                "states must be pairwise distinct",
            ));
        }
        Ok(FiniteKernel {
            states,
            transition,
            min_gap,
            metric,
        })
    }

    /// Kernel on the equispaced points `0, 1/(K-1), ..., 1` of the unit interval.
    pub fn on_unit_interval(transition: Matrix<T>) -> Result<Self> {
        let k = transition.dim();
        let xs: Vec<T> = if k == 1 {
            vec![T::zero()]
        } else {
            (0..k).map(|i| cnt::<T>(i) / cnt::<T>(k - 1)).collect()
        };
        Self::new(PointSet::from_scalars(&xs), transition, Metric::SupNorm)
    }

    /// Two-state chain `[[1-a, a], [b, 1-b]]` on the points 0 and 1.
    pub fn two_state(a: T, b: T) -> Result<Self> {
        let rows = vec![vec![T::one() - a, a], vec![b, T::one() - b]];
        Self::on_unit_interval(Matrix::from_rows(&rows)?)
    }

    /// Kernel whose every row is `pi`.
    pub fn independence(states: PointSet<T>, pi: &[T], metric: Metric) -> Result<Self> {
        Self::new(states, Matrix::repeated_row(pi), metric)
    }

    /// Deterministic cycle `i -> i+1 mod K`.
    pub fn cycle(k: usize) -> Result<Self> {
        let mut m = Matrix::zeros(k);
        for i in 0..k {
            m[(i, (i + 1) % k)] = T::one();
        }
        Self::on_unit_interval(m)
    }

    /// Same states, new transition matrix.
    pub fn with_transition(&self, transition: Matrix<T>) -> Result<Self> {
        Self::new(self.states.clone(), transition, self.metric)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.transition.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn states(&self) -> &PointSet<T> {
        &self.states
    }

    pub fn transition(&self) -> &Matrix<T> {
        &self.transition
    }

    pub fn min_gap(&self) -> T {
        self.min_gap
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dimension(&self) -> usize {
        self.states.dim()
    }

    /// Reachability on the positive-entry graph; returns the first pair
    /// `(from, to)` that fails, if any.
    pub fn unreachable_pair(&self) -> Option<(usize, usize)> {
        let k = self.len();
        let forward = self.reach_from(0, false);
        if let Some(j) = forward.iter().position(|&r| !r) {
            return Some((0, j));
        }
        let backward = self.reach_from(0, true);
        backward
            .iter()
            .position(|&r| !r)
            .map(|j| (j, 0))
            .filter(|_| k > 1)
    }

    pub fn is_irreducible(&self) -> bool {
        self.unreachable_pair().is_none()
    }

    fn reach_from(&self, start: usize, reverse: bool) -> Vec<bool> {
        let k = self.len();
        let mut seen = vec![false; k];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let w = if reverse {
                    self.transition[(j, i)]
                } else {
                    self.transition[(i, j)]
                };
                if w > T::zero() && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Period of state 0: gcd over edges `u -> v` of `level(u) + 1 - level(v)`
    /// where `level` is BFS depth from state 0. Meaningful for irreducible kernels.
    pub fn period(&self) -> usize {
        let k = self.len();
        let mut level = vec![usize::MAX; k];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for j in 0..k {
                if self.transition[(i, j)] > T::zero() && level[j] == usize::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let mut g = 0usize;
        for i in 0..k {
            if level[i] == usize::MAX {
                continue;
            }
            for j in 0..k {
                if self.transition[(i, j)] > T::zero() && level[j] != usize::MAX {
                    let diff = (level[i] + 1).abs_diff(level[j]);
                    g = gcd(g, diff);
                }
            }
        }
        g.max(1)
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period() == 1
    }

    /// Invariant law of an irreducible kernel (aperiodicity not required).
    pub fn invariant_law(&self) -> Result<Vec<T>> {
        if let Some((from, to)) = self.unreachable_pair() {
            return Err(Error::Reducible { from, to });
        }
        let k = self.len();
        // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
        let mut a = Matrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = self.transition[(j, i)] - if i == j { T::one() } else { T::zero() };
            }
        }
        for j in 0..k {
            a[(k - 1, j)] = T::one();
        }
        let mut b = vec![T::zero(); k];
        b[k - 1] = T::one();
        let mut pi = solve(&a, &b)?;
        // one step of refinement towards exact invariance
        for _ in 0..2 {
            let next = self.transition.left_mul(&pi);
            let s: T = next.iter().copied().sum();
            pi = next.into_iter().map(|v| v / s).collect();
        }
        Ok(pi)
    }

    /// `max_j |(pi P)_j - pi_j|`.
    pub fn invariance_residual(&self, pi: &[T]) -> T {
        let next = self.transition.left_mul(pi);
        next.iter()
            .zip(pi)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Checks `pi` is a strictly positive invariant probability vector.
    pub fn check_invariant(&self, pi: &[T]) -> Result<()> {
        check_probability(pi, "pi")?;
        if pi.iter().any(|&p| p <= T::zero()) {
            return Err(Error::validation("pi", "entries must be strictly positive"));
        }
        let r = self.invariance_residual(pi);
        let tol = lit::<T>(1e-10).max(T::stochastic_tol(self.len()) * lit::<T>(100.0));
        if r > tol {
            return Err(Error::NotInvariant {
                residual: to_f64(r),
            });
        }
        Ok(())
    }

    /// Time reversal `P*_{ij} = pi_j p_{ji} / pi_i`.
    pub fn adjoint(&self, pi: &[T]) -> Result<Self> {
        self.check_invariant(pi)?;
        let k = self.len();
        let mut m = Matrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = pi[j] * self.transition[(j, i)] / pi[i];
            }
            // rows sum to one up to rounding; renormalise to keep the
            // constructor's tolerance check tight
            let s: T = m.row(i).iter().copied().sum();
            for j in 0..k {
                m[(i, j)] /= s;
            }
        }
        self.with_transition(m)
    }

    /// Detailed balance `pi_i p_ij = pi_j p_ji` within `tol`.
    pub fn is_reversible(&self, pi: &[T], tol: T) -> bool {
        let k = self.len();
        (0..k).all(|i| {
            (0..i).all(|j| {
                (pi[i] * self.transition[(i, j)] - pi[j] * self.transition[(j, i)]).abs() <= tol
            })
        })
    }
}

/// Invariant law of an irreducible aperiodic kernel; errors name the failed property.
pub fn stationary_finite<T: Real>(kernel: &FiniteKernel<T>) -> Result<Vec<T>> {
    if let Some((from, to)) = kernel.unreachable_pair() {
        return Err(Error::Reducible { from, to });
    }
    let period = kernel.period();
    if period != 1 {
        return Err(Error::Periodic { period });
    }
    kernel.invariant_law()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn check_stochastic<T: Real>(m: &Matrix<T>) -> Result<()> {
    let tol = T::stochastic_tol(m.dim());
    for i in 0..m.dim() {
        let row = m.row(i);
        if row.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::validation(
                "transition",
                format!("row {i} has an entry outside [0,1]"),
            ));
        }
        let s = row.iter().copied().sum::<T>();
        if (s - T::one()).abs() > tol {
            return Err(Error::validation(
                "transition",
                format!("row {i} sums to {s}, not 1"),
            ));
        }
    }
    Ok(())
}

pub(crate) fn check_probability<T: Real>(v: &[T], field: &str) -> Result<()> {
    if v.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
        return Err(Error::validation(field, "entries must lie in [0,1]"));
    }
    let s: T = v.iter().copied().sum();
    if (s - T::one()).abs() > T::stochastic_tol(v.len()) {
        return Err(Error::validation(
            field,
            format!("entries sum to {s}, not 1"),
        ));
    }
    Ok(())
}

/// Draws an index from the probability vector `p`.
pub(crate) fn sample_categorical<T: Real>(p: &[T], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += to_f64(w);
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last positive entry
    p.iter()
        .rposition(|&w| w > T::zero())
        .unwrap_or(p.len() - 1)
}

/// Cumulative table for repeated categorical draws from the rows of a kernel.
#[derive(Debug, Clone)]
pub(crate) struct CategoricalTable {
    k: usize,
    cum: Vec<f64>,
}

impl CategoricalTable {
    pub fn from_kernel<T: Real>(m: &Matrix<T>) -> Self {
        let k = m.dim();
        let mut cum = Vec::with_capacity(k * k);
        for i in 0..k {
            let mut acc = 0.0;
            for &p in m.row(i) {
                acc += to_f64(p);
                cum.push(acc);
            }
        }
        CategoricalTable { k, cum }
    }

    pub fn from_vector<T: Real>(p: &[T]) -> Self {
        let mut acc = 0.0;
        let cum = p.iter().map(|&w| {
            acc += to_f64(w);
            acc
        });
        CategoricalTable {
            k: p.len(),
            cum: cum.collect(),
        }
    }

    #[inline]
    pub fn draw(&self, row: usize, rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        let c = &self.cum[row * self.k..(row + 1) * self.k];
        let total = c[self.k - 1];
        let u = u * total;
        match c.iter().position(|&x| u < x) {
            Some(i) => i,
            None => self.k - 1,
        }
    }
}

/// Index path of a finite chain started from `init`.
pub fn sample_finite_indices<T: Real>(
    kernel: &FiniteKernel<T>,
    init: &[T],
    n: usize,
    rng: &mut Rng,
) -> Vec<usize> {
    let table = CategoricalTable::from_kernel(kernel.transition());
    let mut state = sample_categorical(init, rng);
    let mut out = Vec::with_capacity(n);
    for step in 0..n {
        if step > 0 {
            state = table.draw(state, rng);
        }
        out.push(state);
    }
    out
}

/// Simulates `n` states of the chain started from the law `init`.
pub fn sample_finite_path<T: Real>(
    kernel: &FiniteKernel<T>,
    init: &[T],
    n: usize,
    seed: u64,
) -> Result<StatePath> {
    if n == 0 {
        return Err(Error::validation("n", "path length must be at least 1"));
    }
    if init.len() != kernel.len() {
        return Err(Error::validation(
            "init",
            format!("length {} for {} states", init.len(), kernel.len()),
        ));
    }
    check_probability(init, "init")?;
    let mut rng = rng_from_seed(seed);
    let idx = sample_finite_indices(kernel, init, n, &mut rng);
    let mut states = PointSet::with_capacity(kernel.dimension(), n);
    let mut buf = vec![0.0; kernel.dimension()];
    for &i in &idx {
        for (b, &c) in buf.iter_mut().zip(kernel.states().point(i)) {
            *b = to_f64(c);
        }
        states.push(&buf);
    }
    Ok(StatePath::with_indices(states, idx, seed))
}
