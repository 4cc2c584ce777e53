//! Points in R^d, the two supported metrics, and a range index for closed
//! ball queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cnt, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    SupNorm,
    Euclidean,
}

impl Metric {
    #[inline]
    pub fn distance<T: Real>(self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::SupNorm => a
                .iter()
                .zip(b)
                .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs())),
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
                .sqrt(),
        }
    }

    /// Norm of a vector under this metric.
    pub fn norm<T: Real>(self, a: &[T]) -> T {
        match self {
            Metric::SupNorm => a.iter().fold(T::zero(), |m, &x| m.max(x.abs())),
            Metric::Euclidean => a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt(),
        }
    }

    /// Norm dual to this one (l1 for the sup-norm, l2 for Euclidean).
    pub fn dual_norm<T: Real>(self, a: &[T]) -> T {
        match self {
            Metric::SupNorm => a.iter().fold(T::zero(), |s, &x| s + x.abs()),
            Metric::Euclidean => self.norm(a),
        }
    }

    /// Diameter of the unit cube [0,1]^d.
    pub fn unit_cube_diameter(self, d: usize) -> f64 {
        match self {
            Metric::SupNorm => 1.0,
            Metric::Euclidean => (d as f64).sqrt(),
        }
    }
}

/// A bounded state space: dimension, metric, diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub dimension: usize,
    #[serde(default)]
    pub metric: Metric,
    pub diameter: f64,
}

impl MetricSpace {
    pub fn new(dimension: usize, metric: Metric, diameter: f64) -> Result<Self> {
        let s = MetricSpace {
            dimension,
            metric,
            diameter,
        };
        s.validate()?;
        Ok(s)
    }

    /// [0,1]^d with the given metric.
    pub fn unit_cube(dimension: usize, metric: Metric) -> Self {
        MetricSpace {
            dimension,
            metric,
            diameter: metric.unit_cube_diameter(dimension),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::validation("dimension", "must be at least 1"));
        }
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(Error::validation("diameter", "must be positive and finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.metric.distance(a, b)
    }
}

/// Flat storage of `len` points of dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> PointSet<T> {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "point dimension must be positive");
        PointSet {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, len: usize) -> Self {
        assert!(dim >= 1, "point dimension must be positive");
        PointSet {
            dim,
            data: Vec::with_capacity(dim * len),
        }
    }

    pub fn from_flat(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::validation(
                "points",
                "flat buffer length is not a multiple of the dimension",
            ));
        }
        Ok(PointSet { dim, data })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<T>]) -> Result<Self> {
        let mut p = PointSet::with_capacity(dim, rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::validation(
                    "points",
                    format!("expected dimension {dim}, got {}", r.len()),
                ));
            }
            p.push(r);
        }
        Ok(p)
    }

    /// Scalar points on the line.
    pub fn from_scalars(xs: &[T]) -> Self {
        PointSet {
            dim: 1,
            data: xs.to_vec(),
        }
    }

    pub fn push(&mut self, p: &[T]) {
        assert_eq!(p.len(), self.dim);
        self.data.extend_from_slice(p);
    }

    pub fn extend(&mut self, other: &PointSet<T>) {
        assert_eq!(other.dim, self.dim);
        self.data.extend_from_slice(&other.data);
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.iter().map(<[T]>::to_vec).collect()
    }

    /// Keeps every `step`-th point starting at `offset`.
    pub fn thin(&self, offset: usize, step: usize) -> Self {
        let mut out = PointSet::new(self.dim);
        let mut i = offset;
        while i < self.len() {
            out.push(self.point(i));
            i += step.max(1);
        }
        out
    }
}

/// Closed-ball range index: points sorted by their first coordinate so that a
/// ball query scans only the slab `|y_1 - x_1| <= h`. Optionally stores
/// multiplicities so duplicate points are counted once.
#[derive(Debug, Clone)]
pub struct BallIndex<T> {
    dim: usize,
    metric: Metric,
    /// Original index of each sorted point (first occurrence for merged duplicates).
    order: Vec<usize>,
    /// Sorted coordinates, flat.
    coords: Vec<T>,
    /// Multiplicity of each sorted point.
    weights: Vec<usize>,
    /// Prefix sums of `weights`.
    prefix: Vec<usize>,
}

impl<T: Real> BallIndex<T> {
    pub fn new(points: &PointSet<T>, metric: Metric) -> Self {
        Self::build(points, metric, false)
    }

    /// Index that merges identical points into one weighted entry.
    pub fn deduplicated(points: &PointSet<T>, metric: Metric) -> Self {
        Self::build(points, metric, true)
    }

    fn build(points: &PointSet<T>, metric: Metric, merge: bool) -> Self {
        let dim = points.dim();
        let mut idx: Vec<usize> = (0..points.len()).collect();
        if merge {
            idx.sort_by(|&a, &b| lex_cmp(points.point(a), points.point(b)).then(a.cmp(&b)));
        } else {
            idx.sort_by(|&a, &b| {
                points.point(a)[0]
                    .partial_cmp(&points.point(b)[0])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
        }
        let mut order = Vec::with_capacity(idx.len());
        let mut coords = Vec::with_capacity(idx.len() * dim);
        let mut weights: Vec<usize> = Vec::with_capacity(idx.len());
        for &i in &idx {
            let p = points.point(i);
            if merge {
                if let Some(last) = order.last() {
                    if points.point(*last) == p {
                        *weights.last_mut().unwrap() += 1;
                        continue;
                    }
                }
            }
            order.push(i);
            coords.extend_from_slice(p);
            weights.push(1);
        }
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        prefix.push(0);
        for w in &weights {
            prefix.push(prefix.last().unwrap() + w);
        }
        BallIndex {
            dim,
            metric,
            order,
            coords,
            weights,
            prefix,
        }
    }

    #[inline]
    fn key(&self, i: usize) -> T {
        self.coords[i * self.dim]
    }

    #[inline]
    fn sorted_point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Sorted-position range whose first coordinate lies within `h` of `x_1`.
    fn slab(&self, x: &[T], h: T) -> (usize, usize) {
        let n = self.order.len();
        let c = x[0];
        let lo = partition(n, |i| self.key(i) < c && c - self.key(i) > h);
        let hi = partition(n, |i| self.key(i) <= c || self.key(i) - c <= h);
        (lo, hi.max(lo))
    }

    /// Total multiplicity of points in the closed ball `B(x, h)`.
    pub fn count(&self, x: &[T], h: T) -> usize {
        let (lo, hi) = self.slab(x, h);
        if self.dim == 1 {
            return self.prefix[hi] - self.prefix[lo];
        }
        (lo..hi)
            .filter(|&i| self.metric.distance(self.sorted_point(i), x) <= h)
            .map(|i| self.weights[i])
            .sum()
    }

    /// Calls `f(original_index, multiplicity)` for every stored point in `B(x, h)`.
    pub fn for_each_in_ball(&self, x: &[T], h: T, mut f: impl FnMut(usize, usize)) {
        let (lo, hi) = self.slab(x, h);
        for i in lo..hi {
            if self.dim == 1 || self.metric.distance(self.sorted_point(i), x) <= h {
                f(self.order[i], self.weights[i]);
            }
        }
    }

    /// Original index of each stored entry, in storage order.
    pub fn origins(&self) -> &[usize] {
        &self.order
    }

    /// Number of stored (possibly merged) entries.
    pub fn entries(&self) -> usize {
        self.order.len()
    }

    pub fn total_weight(&self) -> usize {
        *self.prefix.last().unwrap()
    }

    /// Iterates over `(point, multiplicity)` of the stored entries.
    pub fn weighted_points(&self) -> impl Iterator<Item = (&[T], usize)> + '_ {
        (0..self.order.len()).map(move |i| (self.sorted_point(i), self.weights[i]))
    }

    /// Brute-force count, used to cross-check the slab search.
    pub fn count_brute(&self, x: &[T], h: T) -> usize {
        (0..self.order.len())
            .filter(|&i| self.metric.distance(self.sorted_point(i), x) <= h)
            .map(|i| self.weights[i])
            .sum()
    }

    pub fn fraction(&self, x: &[T], h: T) -> T {
        cnt::<T>(self.count(x, h)) / cnt::<T>(self.total_weight().max(1))
    }
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// First index in `0..n` for which `pred` is false, assuming `pred` is
/// monotone (true then false).
fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
