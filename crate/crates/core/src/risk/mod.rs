//! Generalization risk, the explicit upper bound, prediction error and rate sweeps.

pub mod bound;
pub mod generalization;
pub mod model;
pub mod prediction;
pub mod rate;

pub use bound::{
    bound_inputs, frak_c, rho_training_target, target_second_moment, theoretical_upper_bound,
    BlockConstants, BoundBudget, BoundInputs, TheoreticalBound,
};
pub use generalization::{
    generalization_risk, replicate_risk, risk_report, RiskReport, DEFAULT_REPS, DEFAULT_TEST_N,
};
pub use model::{Chain, Resolved, ShiftModel, Training};
pub use prediction::{
    gap_vs_generalization, prediction_error, rn_bound, DecayRow, PredictionReport,
};
pub use rate::{
    rate_sweep, write_rate_csv, write_rate_plot, BandwidthRule, RateFit, RatePoint, SweepOptions,
};
