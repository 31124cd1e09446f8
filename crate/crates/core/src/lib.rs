//! Construction, verification, optimization and use of continuous explicit
//! Runge–Kutta (4,5) pairs built from a nine-stage family with a quartic interpolant.

pub mod error;
pub mod integrate;
pub mod metrics;
pub mod optimize;
pub mod poly;
pub mod problems;
pub mod tableau;
pub mod trees;

pub use error::{Result, RkError};
pub use tableau::{builtin, builtin_names, ButcherTableau, ContinuousPair, FamilyParams, Interpolant};
