//! Option pricing under a lognormal equity with a correlated CIR short rate.
//!
//! The central object is the robust bivariate tree in [`acz`], which matches
//! the local means and the cross-covariance of the two factors directly on
//! the `(S, r)` lattice. Two product-form trees built on decorrelated
//! transforms live in [`legacy`] for comparison, and [`mc`] provides a Monte
//! Carlo benchmark for European payoffs.

pub mod acz;
pub mod cli;
pub mod equity;
pub mod error;
pub mod lattice;
pub mod legacy;
pub mod mc;
pub mod model;
pub mod pricer;
pub mod rate;

pub use error::{Error, Result};
pub use lattice::Method;
pub use mc::{mc_price, McConfig, McResult, McScheme};
pub use model::{ClampPolicy, ContractSpec, Exercise, LatticeConfig, ModelParams, OptionKind};
pub use pricer::{price, price_curve, PriceResult};
