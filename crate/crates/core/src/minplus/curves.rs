use serde::{Deserialize, Serialize};

use crate::error::{NcError, Result};

/// Relative tolerance under which two slopes are considered equal.
pub const RATE_MERGE_REL: f64 = 1e-12;

pub(crate) fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_MERGE_REL * a.abs().max(b.abs())
}

/// One affine piece `burst + rate * t` of an arrival curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub rate: f64,
    pub burst: f64,
}

impl Affine {
    #[must_use]
    pub fn new(rate: f64, burst: f64) -> Self {
        Self { rate, burst }
    }

    #[inline]
    #[must_use]
    pub fn eval(&self, t: f64) -> f64 {
        self.burst + self.rate * t
    }
}

/// One rate-latency piece `rate * (t - latency)^+` of a service curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLatency {
    pub rate: f64,
    pub latency: f64,
}

impl RateLatency {
    #[must_use]
    pub fn new(rate: f64, latency: f64) -> Self {
        Self { rate, latency }
    }

    #[inline]
    #[must_use]
    pub fn eval(&self, t: f64) -> f64 {
        self.rate * (t - self.latency).max(0.0)
    }
}

/// Concave piecewise-linear arrival curve, the minimum of its affine pieces.
///
/// Normalized pieces have strictly decreasing rates and strictly increasing
/// bursts, so each piece is the active one on some interval of `t >= 0`.
/// The value at `t = 0` is the smallest burst (right-limit convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcaveCurve {
    pieces: Vec<Affine>,
}

impl ConcaveCurve {
    /// Builds and normalizes a curve. Rejects empty, negative or non-finite
    /// input.
    pub fn new(pieces: Vec<Affine>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(NcError::InvalidCurve("arrival curve needs a piece".into()));
        }
        for p in &pieces {
            if !(p.rate.is_finite() && p.burst.is_finite()) || p.rate < 0.0 || p.burst < 0.0 {
                return Err(NcError::InvalidCurve(format!(
                    "arrival piece must be finite and non-negative, got rate {} burst {}",
                    p.rate, p.burst
                )));
            }
        }
        Ok(Self { pieces: lower_envelope(pieces) })
    }

    #[must_use]
    pub fn leaky_bucket(rate: f64, burst: f64) -> Self {
        Self::new(vec![Affine::new(rate, burst)]).expect("leaky bucket parameters must be non-negative")
    }

    #[must_use]
    pub fn zero() -> Self {
        Self { pieces: vec![Affine::new(0.0, 0.0)] }
    }

    #[must_use]
    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    #[must_use]
    pub fn eval(&self, t: f64) -> f64 {
        self.pieces.iter().map(|p| p.eval(t)).fold(f64::INFINITY, f64::min)
    }

    /// Slope of the curve just after `t`.
    #[must_use]
    pub fn slope_after(&self, t: f64) -> f64 {
        let bps = self.breakpoints();
        let idx = bps.iter().filter(|&&x| x <= t).count();
        self.pieces[idx].rate
    }

    /// Asymptotic rate (smallest rate).
    #[must_use]
    pub fn long_run_rate(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.rate)
    }

    /// Value at the origin.
    #[must_use]
    pub fn burst(&self) -> f64 {
        self.pieces[0].burst
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].rate == 0.0 && self.pieces[0].burst == 0.0
    }

    /// Abscissae where the active piece changes, in increasing order.
    #[must_use]
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .map(|w| (w[1].burst - w[0].burst) / (w[0].rate - w[1].rate))
            .collect()
    }

    /// Pointwise sum.
    #[must_use]
    pub fn add(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for b in &other.pieces {
                out.push(Affine::new(a.rate + b.rate, a.burst + b.burst));
            }
        }
        Self { pieces: lower_envelope(out) }
    }

    /// Pointwise minimum.
    #[must_use]
    pub fn min(&self, other: &Self) -> Self {
        let mut out = self.pieces.clone();
        out.extend_from_slice(&other.pieces);
        Self { pieces: lower_envelope(out) }
    }

    /// Multiplies the curve by a non-negative factor.
    #[must_use]
    pub fn scale(&self, k: f64) -> Self {
        assert!(k >= 0.0 && k.is_finite(), "scale factor must be finite and non-negative");
        if k == 0.0 {
            return Self::zero();
        }
        Self { pieces: self.pieces.iter().map(|p| Affine::new(p.rate * k, p.burst * k)).collect() }
    }

    /// Sum of many curves, zero for an empty iterator.
    pub fn sum<'a>(curves: impl IntoIterator<Item = &'a ConcaveCurve>) -> Self {
        curves.into_iter().fold(Self::zero(), |acc, c| acc.add(c))
    }

    /// Smallest `t` with `self(t) >= y`, or `None` if never reached.
    #[must_use]
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let mut t: f64 = 0.0;
        for p in &self.pieces {
            if p.burst >= y {
                continue;
            }
            if p.rate <= 0.0 {
                return None;
            }
            t = t.max((y - p.burst) / p.rate);
        }
        Some(t)
    }
}

/// Convex piecewise-linear service curve, the maximum of rate-latency pieces.
///
/// ```text
///   bits |            /
///        |          /   <- steeper piece, larger latency
///        |      __/
///        |   _/         <- first piece
///        |__/________________ t
///           T1
/// ```
///
/// Normalized pieces have strictly increasing rates and latencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexServiceCurve {
    pieces: Vec<RateLatency>,
}

impl ConvexServiceCurve {
    /// Builds and normalizes a curve. Pieces with zero rate are dropped;
    /// a curve left with no piece is `NullService`.
    pub fn new(pieces: Vec<RateLatency>) -> Result<Self> {
        for p in &pieces {
            if !(p.rate.is_finite() && p.latency.is_finite()) || p.rate < 0.0 || p.latency < 0.0 {
                return Err(NcError::InvalidCurve(format!(
                    "service piece must be finite and non-negative, got rate {} latency {}",
                    p.rate, p.latency
                )));
            }
        }
        let pieces = upper_envelope(pieces);
        if pieces.is_empty() {
            return Err(NcError::NullService);
        }
        Ok(Self { pieces })
    }

    pub fn rate_latency(rate: f64, latency: f64) -> Result<Self> {
        Self::new(vec![RateLatency::new(rate, latency)])
    }

    /// `rate * t`.
    pub fn constant_rate(rate: f64) -> Result<Self> {
        Self::rate_latency(rate, 0.0)
    }

    #[must_use]
    pub fn pieces(&self) -> &[RateLatency] {
        &self.pieces
    }

    #[must_use]
    pub fn eval(&self, t: f64) -> f64 {
        self.pieces.iter().map(|p| p.eval(t)).fold(0.0, f64::max)
    }

    #[must_use]
    pub fn long_run_rate(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.rate)
    }

    /// Time before any service is guaranteed.
    #[must_use]
    pub fn latency(&self) -> f64 {
        self.pieces[0].latency
    }

    /// Abscissae where the slope changes: the first latency, then the
    /// crossings of consecutive pieces.
    #[must_use]
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![self.pieces[0].latency];
        for w in self.pieces.windows(2) {
            out.push(crossing(&w[0], &w[1]));
        }
        out
    }

    /// Slope just after `t`.
    #[must_use]
    pub fn slope_after(&self, t: f64) -> f64 {
        let bps = self.breakpoints();
        let idx = bps.iter().filter(|&&x| x <= t).count();
        if idx == 0 {
            0.0
        } else {
            self.pieces[idx - 1].rate
        }
    }

    /// Pointwise maximum.
    #[must_use]
    pub fn max(&self, other: &Self) -> Self {
        let mut out = self.pieces.clone();
        out.extend_from_slice(&other.pieces);
        Self { pieces: upper_envelope(out) }
    }

    /// Smallest `s` with `self(s) >= y`; zero for `y <= 0`.
    #[must_use]
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.pieces.iter().map(|p| p.latency + y / p.rate).fold(f64::INFINITY, f64::min)
    }
}

fn crossing(a: &RateLatency, b: &RateLatency) -> f64 {
    (b.rate * b.latency - a.rate * a.latency) / (b.rate - a.rate)
}

/// Lower envelope on `t >= 0` of affine pieces, sorted by decreasing rate.
fn lower_envelope(mut pieces: Vec<Affine>) -> Vec<Affine> {
    pieces.sort_by(|a, b| b.rate.total_cmp(&a.rate).then(a.burst.total_cmp(&b.burst)));
    let mut dedup: Vec<Affine> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match dedup.last_mut() {
            Some(last) if same_rate(last.rate, p.rate) => {
                if p.burst < last.burst {
                    *last = p;
                }
            }
            _ => dedup.push(p),
        }
    }
    let mut hull: Vec<Affine> = Vec::with_capacity(dedup.len());
    for p in dedup {
        while let Some(top) = hull.last() {
            if top.burst >= p.burst {
                hull.pop();
            } else {
                break;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let top = hull[hull.len() - 1];
            let x_ap = (p.burst - a.burst) / (a.rate - p.rate);
            let x_at = (top.burst - a.burst) / (a.rate - top.rate);
            if x_ap <= x_at {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Upper envelope of `max(0, pieces)` on `t >= 0`, sorted by increasing rate.
fn upper_envelope(mut pieces: Vec<RateLatency>) -> Vec<RateLatency> {
    pieces.retain(|p| p.rate > 0.0);
    pieces.sort_by(|a, b| a.rate.total_cmp(&b.rate).then(a.latency.total_cmp(&b.latency)));
    let mut dedup: Vec<RateLatency> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match dedup.last_mut() {
            Some(last) if same_rate(last.rate, p.rate) => {
                if p.latency < last.latency {
                    *last = p;
                }
            }
            _ => dedup.push(p),
        }
    }
    // The zero line sits at the bottom of the stack and is never popped.
    let zero = RateLatency::new(0.0, 0.0);
    let mut hull: Vec<RateLatency> = vec![zero];
    for p in dedup {
        while hull.len() >= 2 && hull[hull.len() - 1].latency >= p.latency {
            hull.pop();
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let top = hull[hull.len() - 1];
            let x_ap = if a.rate == 0.0 { p.latency } else { crossing(&a, &p) };
            let x_at = if a.rate == 0.0 { top.latency } else { crossing(&a, &top) };
            if x_ap <= x_at {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.remove(0);
    hull
}
