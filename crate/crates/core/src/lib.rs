//! Jump variation measurement from noisy tick data.
//!
//! The crate is organised around the data flow of a tick-data study:
//!
//! - [`marketdata`]: ingestion, millisecond aggregation, session clipping.
//! - [`cleaning`]: quote outlier rules and backward-forward trade matching.
//! - [`preavg`]: realized and pre-averaged variation measures, truncation.
//! - [`asymptotics`]: weight-function constants, the asymptotic covariance
//!   of the pre-averaged pair, and the finite-sample bias law of bipower variation.
//! - [`jumpdetect`]: Lee–Mykland style jump location and the maxgap measure.
//! - [`simlab`]: reproducible simulation of the efficient price, noise and outliers.
//! - [`exec`]: sequential or data-parallel execution of Monte Carlo work.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod asymptotics;
pub mod cleaning;
pub mod exec;
pub mod jumpdetect;
pub mod marketdata;
pub mod preavg;
pub mod simlab;
pub mod stats;

pub use exec::Exec;
