//! Flow and class descriptions and their ingress arrival curves.

use serde::{Deserialize, Serialize};

use crate::bls::BlsParams;
use crate::minplus::ConcaveCurve;

/// Guarded ceiling: values within `1e-9` relative of an integer round down to
/// it, so exact multiples written in decimal do not gain a spurious unit.
#[must_use]
pub fn guarded_ceil(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

/// A periodic flow: sizes in bits, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: String,
    pub class: String,
    /// Minimum inter-arrival time.
    pub bag: f64,
    /// Maximum frame size.
    pub mfs: f64,
    pub jitter: f64,
    pub deadline: Option<f64>,
    /// Source end-system, then the traversed output ports.
    pub path: Vec<String>,
}

impl FlowSpec {
    /// Leaky bucket `MFS/BAG * t + MFS * (1 + J/BAG)`.
    #[must_use]
    pub fn arrival_curve(&self) -> ConcaveCurve {
        let rate = self.mfs / self.bag;
        ConcaveCurve::leaky_bucket(rate, self.mfs + rate * self.jitter)
    }

    #[must_use]
    pub fn rate(&self) -> f64 {
        self.mfs / self.bag
    }
}

/// A traffic class with its static priority (0 is highest) and an optional
/// shaper. A shaped class uses `bls.p_h` as its nominal priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficClassSpec {
    pub name: String,
    pub priority: u32,
    #[serde(default)]
    pub bls: Option<BlsParams>,
}

impl TrafficClassSpec {
    #[must_use]
    pub fn plain(name: &str, priority: u32) -> Self {
        Self { name: name.to_string(), priority, bls: None }
    }

    #[must_use]
    pub fn shaped(name: &str, bls: BlsParams) -> Self {
        Self { name: name.to_string(), priority: bls.p_h, bls: Some(bls) }
    }

    /// Priority while the class competes at its best level.
    #[must_use]
    pub fn high_priority(&self) -> u32 {
        self.bls.as_ref().map_or(self.priority, |b| b.p_h)
    }

    /// Priority while the class competes at its worst level.
    #[must_use]
    pub fn low_priority(&self) -> u32 {
        self.bls.as_ref().map_or(self.priority, |b| b.p_l)
    }
}

/// Aggregate leaky bucket of a set of flows: bursts and rates add.
#[must_use]
pub fn class_arrival_curve(flows: &[FlowSpec]) -> ConcaveCurve {
    let (rate, burst) = flows.iter().fold((0.0, 0.0), |(r, b), f| {
        let fr = f.rate();
        (r + fr, b + f.mfs + fr * f.jitter)
    });
    ConcaveCurve::leaky_bucket(rate, burst)
}

/// Smallest flow count whose aggregate rate reaches `target_ur * link_rate`.
#[must_use]
pub fn flows_for_utilization(target_ur: f64, link_rate: f64, mfs: f64, bag: f64) -> u64 {
    guarded_ceil(target_ur * link_rate * bag / mfs).max(0.0) as u64
}

/// `n` identical flows as one leaky bucket `n * (MFS/BAG * t + MFS)`.
#[must_use]
pub fn homogeneous_curve(n: u64, mfs: f64, bag: f64, jitter: f64) -> ConcaveCurve {
    let n = n as f64;
    let rate = n * mfs / bag;
    ConcaveCurve::leaky_bucket(rate, n * mfs + rate * jitter)
}
