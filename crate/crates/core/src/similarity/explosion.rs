//! Detection of `ρ_h = ∞` from the supports of source and target under the sup-norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `∏ [lo_i, hi_i]`; `lo_i = hi_i` marks a point-mass coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::validation(
                "support",
                "lo and hi must be nonempty and of equal length",
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::validation("support", "need finite lo ≤ hi"));
        }
        Ok(SupportBox { lo, hi })
    }

    pub fn unit_cube(d: usize) -> Self {
        SupportBox {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| a <= v && v <= b)
    }
}

impl From<(Vec<f64>, Vec<f64>)> for SupportBox {
    fn from((lo, hi): (Vec<f64>, Vec<f64>)) -> Self {
        SupportBox { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionCheck {
    pub h: f64,
    pub explodes: bool,
    /// A box of positive target mass on which every source ball of radius `h` is empty.
    pub witness: Option<SupportBox>,
    pub coordinate: Option<usize>,
}

/// Decides whether the target puts mass on points farther than `h` (in sup-norm)
/// from the source support, assuming both laws have positive density on their boxes.
pub fn explosion_check(source: &SupportBox, target: &SupportBox, h: f64) -> Result<ExplosionCheck> {
    if source.dim() != target.dim() {
        return Err(Error::GridMismatch(format!(
            "source dimension {} vs target {}",
            source.dim(),
            target.dim()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::validation("h", "bandwidth must be positive"));
    }
    for i in 0..source.dim() {
        let (s_lo, s_hi) = (source.lo[i], source.hi[i]);
        let (t_lo, t_hi) = (target.lo[i], target.hi[i]);
        let mut lo = target.lo.clone();
        let mut hi = target.hi.clone();
        if t_hi > s_hi + h {
            // a point mass target coordinate sits wholly outside the reach
            let edge = if t_lo > s_hi + h {
                t_lo
            } else if s_hi + 2.0 * h < t_hi {
                s_hi + 2.0 * h
            } else {
                0.5 * (s_hi + h + t_hi)
            };
            lo[i] = edge;
            hi[i] = t_hi;
        } else if t_lo < s_lo - h {
            let edge = if t_hi < s_lo - h {
                t_hi
            } else if s_lo - 2.0 * h > t_lo {
                s_lo - 2.0 * h
            } else {
                0.5 * (s_lo - h + t_lo)
            };
            lo[i] = t_lo;
            hi[i] = edge;
        } else {
            continue;
        }
        return Ok(ExplosionCheck {
            h,
            explodes: true,
            witness: Some(SupportBox { lo, hi }),
            coordinate: Some(i),
        });
    }
    Ok(ExplosionCheck {
        h,
        explodes: false,
        witness: None,
        coordinate: None,
    })
}
