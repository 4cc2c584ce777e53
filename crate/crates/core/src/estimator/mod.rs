//! Uniform-kernel Nadaraya-Watson regression, Hölder test functions and
//! bandwidth selection.

pub mod bandwidth;
pub mod holder;
pub mod nw;

pub use bandwidth::{
    bandwidth_alpha, bandwidth_finite, effective_sample_size, zeta, EffectiveSampleSize,
};
pub use holder::{holder_audit, BoundHolder, HolderAudit, HolderFunction, HolderSpec};
pub use nw::FittedNw;
