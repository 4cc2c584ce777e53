//! Sampled trajectories and their CSV export.

use std::io::Write;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// An ordered sample `X_0, ..., X_{n-1}` with optional responses.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    states: PointSet<f64>,
    responses: Option<Vec<f64>>,
    /// State indices, for finite chains.
    indices: Option<Vec<usize>>,
    seed: u64,
}

impl StatePath {
    pub fn new(states: PointSet<f64>, seed: u64) -> Self {
        StatePath {
            states,
            responses: None,
            indices: None,
            seed,
        }
    }

    pub fn with_indices(states: PointSet<f64>, indices: Vec<usize>, seed: u64) -> Self {
        debug_assert_eq!(states.len(), indices.len());
        StatePath {
            states,
            responses: None,
            indices: Some(indices),
            seed,
        }
    }

    pub fn with_responses(mut self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != self.states.len() {
            return Err(Error::validation(
                "responses",
                format!(
                    "{} responses for {} states",
                    responses.len(),
                    self.states.len()
                ),
            ));
        }
        self.responses = Some(responses);
        Ok(self)
    }

    pub fn states(&self) -> &PointSet<f64> {
        &self.states
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    pub fn indices(&self) -> Option<&[usize]> {
        self.indices.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.dim()
    }

    pub fn last(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.states.point(self.len() - 1))
    }
}

/// Writes the P-block then the Q-block as `index,block,x_1..x_d,y`.
/// `y` is left empty for paths without responses.
pub fn write_paths_csv<W: Write>(
    out: &mut W,
    p: Option<&StatePath>,
    q: Option<&StatePath>,
) -> Result<()> {
    let dim = p.or(q).map(StatePath::dim).unwrap_or(1);
    write!(out, "index,block")?;
    for i in 1..=dim {
        write!(out, ",x_{i}")?;
    }
    writeln!(out, ",y")?;
    for (label, path) in [("P", p), ("Q", q)] {
        let Some(path) = path else { continue };
        if path.dim() != dim {
            return Err(Error::validation(
                "path",
                "P and Q paths have different dimensions",
            ));
        }
        for (i, x) in path.states().iter().enumerate() {
            write!(out, "{i},{label}")?;
            for c in x {
                write!(out, ",{}", fmt_num(*c))?;
            }
            match path.responses() {
                Some(y) => writeln!(out, ",{}", fmt_num(y[i]))?,
                None => writeln!(out, ",")?,
            }
        }
    }
    Ok(())
}

/// Seventeen significant digits; `inf`/`-inf`/`nan` spelled out.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let s = PointSet::from_rows(2, &[vec![0.5, 0.0], vec![1.0, 0.0]]).unwrap();
        let p = StatePath::new(s, 1).with_responses(vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, Some(&p), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,block,x_1,x_2,y");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,P,5.0000000000000000e-1,"));
    }

    #[test]
    fn response_length_checked() {
        let s = PointSet::from_scalars(&[0.0, 1.0]);
        assert!(StatePath::new(s, 0).with_responses(vec![1.0]).is_err());
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.3863, 1e-300, -7.25] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }
}
