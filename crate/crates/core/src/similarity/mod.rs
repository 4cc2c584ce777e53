//! The similarity measure `ρ_h(P, Q) = ∫ 1/P(B(x,h)) Q(dx)`: exact, closed
//! form and Monte Carlo evaluation, α-family and transfer-exponent checks,
//! and explosion detection.

pub mod closed_form;
pub mod exact;
pub mod explosion;
pub mod family;
pub mod mc;
pub mod transfer;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use closed_form::{
    ball_prob_closed_form, minorizing_law, rho_uniform_cube, rho_uniform_interval, step_law,
    BallLaw,
};
pub use exact::{rho_exact_curve, rho_exact_finite, rho_exact_value};
pub use explosion::{explosion_check, ExplosionCheck, SupportBox};
pub use family::{
    alpha_family_check, alpha_index_fit, alpha_index_fit_lower, covering_bound, rho_mixture,
    rho_self_upper, AlphaFamilyCheck, AlphaFit,
};
pub use mc::{rho_mc, rho_mc_curve, ChainSampler, FiniteLaw, McBudget, Mixture, PointSampler};
pub use transfer::{
    appendix_a_alpha, beta_chain_transfer, example4_alpha, transfer_to_alpha,
    verify_transfer_exponent, FamilyCase, TransferAlpha, TransferExponentCheck,
};

use crate::chains::path::fmt_num;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
    ClosedForm,
}

/// One value of `ρ_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEstimate {
    pub h: f64,
    #[serde(with = "crate::serde_inf")]
    pub value: f64,
    pub method: Method,
    pub std_error: Option<f64>,
    pub explosion: bool,
    /// A target point whose ball carries no source mass.
    pub witness: Option<Vec<f64>>,
    /// Number of target draws with an empty source ball.
    pub zero_cells: usize,
    pub inner_budget: Option<usize>,
    pub outer_budget: Option<usize>,
}

impl SimilarityEstimate {
    pub fn exact(h: f64, value: f64, witness: Option<Vec<f64>>) -> Self {
        SimilarityEstimate {
            h,
            value,
            method: Method::Exact,
            std_error: Some(0.0),
            explosion: value.is_infinite(),
            witness,
            zero_cells: 0,
            inner_budget: None,
            outer_budget: None,
        }
    }

    pub fn closed_form(h: f64, value: f64) -> Self {
        SimilarityEstimate {
            method: Method::ClosedForm,
            ..SimilarityEstimate::exact(h, value, None)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `(h, ρ_h)` pairs of a curve.
pub fn curve_points(curve: &[SimilarityEstimate]) -> (Vec<f64>, Vec<f64>) {
    (
        curve.iter().map(|e| e.h).collect(),
        curve.iter().map(|e| e.value).collect(),
    )
}

/// Writes `h,value,std_error,explosion`; infinite values as `inf`.
pub fn write_rho_csv<W: Write>(out: &mut W, curve: &[SimilarityEstimate]) -> Result<()> {
    writeln!(out, "h,value,std_error,explosion")?;
    for e in curve {
        let se = e.std_error.map(fmt_num).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(e.h),
            fmt_num(e.value),
            se,
            e.explosion
        )?;
    }
    Ok(())
}
