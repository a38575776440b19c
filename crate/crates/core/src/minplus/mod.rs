//! Min-plus algebra over concave arrival curves and convex service curves.
//!
//! Arrival curves are minima of affine pieces, service curves are maxima of
//! rate-latency pieces. Every operation here is closed form: results are
//! computed from breakpoints, never by sampling.
//!
//! Units are bits, seconds and bits per second throughout.

mod curves;
mod ops;

pub use curves::{Affine, ConcaveCurve, ConvexServiceCurve, RateLatency, RATE_MERGE_REL};
pub use ops::{convolve, deconvolve, deviation, hdev, leftover, per_piece_delay_bound, vdev, Deviation};
