//! Penalized forward selection with false-discovery-rate based penalties.
//!
//! The crate is organised bottom-up:
//!
//! - [`stats`]: standard normal quantiles and seeded Gaussian streams.
//! - [`regress`]: datasets, standardization, the greedy forward path and
//!   reference least-squares solvers.
//! - [`penalty`]: the ten penalty families (BH, MSFDR, TSFDR, fixed p-to-enter,
//!   AIC/Cp, universal threshold, Foster–Stine, Tibshirani–Knight,
//!   Birgé–Massart, George–Foster) as per-step costs and averaged factors.
//! - [`select`]: penalized traces, stopping rules, the iterative p-to-enter
//!   algorithm and the two-stage composition.
//! - [`sim`]: the Monte Carlo laboratory measuring relative loss against a
//!   random oracle, with minimax summaries.
//! - [`data`]: delimited-text ingestion, quadratic expansion and reports.
//! - [`selftest`]: brute-force cross-checks runnable from the command line.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below cover the common case.

pub mod data;
pub mod error;
pub mod penalty;
pub mod regress;
pub mod scalar;
pub mod select;
pub mod selftest;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use penalty::{CapReading, PenaltyFamily, PenaltySpec, PenaltyTable};
pub use regress::{Dataset, ForwardPath, LeastSquaresFit, Sigma2Mode};
pub use scalar::Scalar;
pub use select::{SelectionResult, StopRule};
pub use stats::RandomSource;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type ForwardPath64 = ForwardPath<f64>;
pub type ForwardPath32 = ForwardPath<f32>;
pub type PenaltyTable64 = PenaltyTable<f64>;
pub type SelectionResult64 = SelectionResult<f64>;
pub type LeastSquaresFit64 = LeastSquaresFit<f64>;
