//! Exact operating characteristics and optimised stopping boundaries for
//! abcd multi-arm multi-stage designs with a shared control arm.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chars;
pub mod control;
pub mod design;
pub mod distribution;
mod error;
pub mod mvn;
pub mod normal;
pub mod outcomes;
pub mod rules;
pub mod search;
pub mod sim;
pub mod triangular;

pub use design::{make_delta_config, validate, Boundaries, DesignParams, EffectConfig, Ratio};
pub use distribution::{build_information, build_z_distribution, InformationMatrix, ZDistribution};
pub use error::{Error, Result};
pub use mvn::{mvn_probability, QuadratureResult, Rectangle};
