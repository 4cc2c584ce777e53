//! Nadaraya-Watson regression with the uniform kernel on closed balls.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{cnt, compensated_sum, Compensated, Real};
use crate::points::{BallIndex, Metric, PointSet};

/// Fitted uniform-kernel estimator. Immutable after construction.
#[derive(Debug, Clone)]
pub struct FittedNw<T> {
    covariates: PointSet<T>,
    responses: Vec<T>,
    h: T,
    metric: Metric,
    index: BallIndex<T>,
}

impl<T: Real> FittedNw<T> {
    pub fn new(covariates: PointSet<T>, responses: Vec<T>, h: T, metric: Metric) -> Result<Self> {
        if covariates.is_empty() {
            return Err(Error::validation("training", "no training points"));
        }
        if covariates.len() != responses.len() {
            return Err(Error::GridMismatch(format!(
                "{} covariates vs {} responses",
                covariates.len(),
                responses.len()
            )));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::validation(
                "h",
                "bandwidth must be positive and finite",
            ));
        }
        if responses.iter().any(|y| !y.is_finite()) {
            return Err(Error::validation("responses", "non-finite response"));
        }
        let index = BallIndex::new(&covariates, metric);
        Ok(FittedNw {
            covariates,
            responses,
            h,
            metric,
            index,
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn covariates(&self) -> &PointSet<T> {
        &self.covariates
    }

    pub fn responses(&self) -> &[T] {
        &self.responses
    }

    /// Number of training points in the closed ball `B(x, h)`.
    pub fn neighbors(&self, x: &[T]) -> usize {
        self.index.count(x, self.h)
    }

    /// Whether `x` lies in the covered region (some training point within `h`).
    pub fn covers(&self, x: &[T]) -> bool {
        self.neighbors(x) > 0
    }

    pub fn predict(&self, x: &[T]) -> T {
        let mut base = None;
        let mut count = 0usize;
        let mut acc = Compensated::default();
        self.index.for_each_in_ball(x, self.h, |i, _| {
            let y = self.responses[i];
            acc.add(y - *base.get_or_insert(y));
            count += 1;
        });
        match base {
            None => T::zero(),
            Some(b) => b + acc.value() / cnt::<T>(count),
        }
    }

    /// Reference path: a plain distance scan in training order.
    pub fn predict_brute(&self, x: &[T]) -> T {
        let mut base = None;
        let mut count = 0usize;
        let sum = compensated_sum(
            self.covariates
                .iter()
                .zip(&self.responses)
                .filter(|&(p, &_y)| self.metric.distance(p, x) <= self.h)
                .map(|(_p, &y)| {
                    count += 1;
                    y - *base.get_or_insert(y)
                }),
        );
        match base {
            None => T::zero(),
            Some(b) => b + sum / cnt::<T>(count),
        }
    }

    pub fn predict_many(&self, queries: &PointSet<T>) -> Vec<T> {
        (0..queries.len())
            .into_par_iter()
            .map(|i| self.predict(queries.point(i)))
            .collect()
    }
}
