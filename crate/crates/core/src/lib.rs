//! Drawdown and drawdown-duration laws of spectrally negative Lévy processes
//! split at their extremes, evaluated through scale functions and checked
//! against a Monte Carlo path-decomposition oracle.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drawdown_laws;
pub mod error;
pub mod exit_identities;
pub mod inversion;
pub mod levy_model;
pub mod mc_oracle;
pub mod scale_functions;
pub mod verify_harness;

pub use drawdown_laws::{ConditionSpec, FormulaId, Law, LawKind, LawValue};
pub use error::{Error, Result};
pub use levy_model::{Family, LevyModel, TiltedModel};
pub use scale_functions::{invert_scale, GridSpec, Method, ScaleDump, ScaleTable};
