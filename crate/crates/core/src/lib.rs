//! Thermodynamic formalism on subshifts of finite type.
//!
//! Cylinder functions and measures at finite depth, Ruelle transfer
//! operators, KMS states for gauge actions, the monomial algebra, ergodic
//! optimisation with ground states, and the renewal-shift phase transition.

pub mod error;
pub mod symbolic;
pub mod transfer;
pub mod kms;
pub mod monomial;
pub mod ergopt;
pub mod renewal;

pub use error::{Error, Result};
