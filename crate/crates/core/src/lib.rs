//! Worst-case timing analysis for switched networks whose output ports
//! combine non-preemptive static priority with burst limiting shapers.
//!
//! - [`minplus`]: exact curve algebra.
//! - [`traffic`]: flows, classes and ingress arrival curves.
//! - [`bls`]: shaper node service curves.
//! - [`mux`]: class partitioning and multiplexer service curves.
//! - [`netanalysis`]: end-to-end pipeline and schedulability.
//! - [`awc`]: achievable worst-case delays used as a tightness reference.
//! - [`blssim`]: frame-level simulator of one shaped output port.
//! - [`cli`]: configuration files, scenario sweeps and reports.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod awc;
pub mod bls;
pub mod blssim;
pub mod cli;
pub mod error;
pub mod minplus;
pub mod mux;
pub mod netanalysis;
pub mod par;
pub mod traffic;

pub use error::{NcError, Result};
