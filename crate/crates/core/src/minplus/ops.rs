use serde::{Deserialize, Serialize};

use super::curves::{Affine, ConcaveCurve, ConvexServiceCurve, RateLatency, RATE_MERGE_REL};
use crate::error::{NcError, Result};

/// Delay and backlog bounds of an arrival curve against a service curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    /// Delay bound in seconds.
    pub horizontal: f64,
    /// Backlog bound in bits.
    pub vertical: f64,
}

fn check_stable(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> Result<()> {
    let r = alpha.long_run_rate();
    let big_r = beta.long_run_rate();
    if r > big_r * (1.0 + RATE_MERGE_REL) {
        return Err(NcError::UnstableRate { arrival: r, service: big_r });
    }
    Ok(())
}

/// Output arrival curve `sup_{s>=0} alpha(t+s) - beta(s)`.
///
/// The result is concave with slopes drawn from the rates of both operands,
/// so it is rebuilt from its tangent lines. For a slope `sigma` the tangent
/// intercept is the maximum of `alpha(t+s) - beta(s) - sigma*t` over the
/// quadrant `t, s >= 0`; that function is linear on the cells cut by
/// `t + s = x_k` and `s = s_b`, so its maximum sits on a cell vertex.
pub fn deconvolve(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> Result<ConcaveCurve> {
    check_stable(alpha, beta)?;
    let xs = alpha.breakpoints();
    let ss = beta.breakpoints();

    let mut vertices: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for &s in &ss {
        vertices.push((0.0, s));
    }
    for &x in &xs {
        vertices.push((0.0, x));
        vertices.push((x, 0.0));
        for &s in &ss {
            if x > s {
                vertices.push((x - s, s));
            }
        }
    }
    let values: Vec<(f64, f64)> =
        vertices.iter().map(|&(t, s)| (t, alpha.eval(t + s) - beta.eval(s))).collect();

    let floor_rate = alpha.long_run_rate();
    let mut slopes: Vec<f64> = alpha.pieces().iter().map(|p| p.rate).collect();
    slopes.extend(beta.pieces().iter().map(|p| p.rate));
    slopes.push(0.0);
    slopes.retain(|&s| s >= floor_rate);

    let pieces = slopes
        .into_iter()
        .map(|sigma| {
            let c = values.iter().map(|&(t, v)| v - sigma * t).fold(f64::NEG_INFINITY, f64::max);
            Affine::new(sigma, c.max(0.0))
        })
        .collect();
    ConcaveCurve::new(pieces)
}

/// One slope segment of a convex curve: starts at `(x, y)` with `slope`,
/// `len` is infinite for the final one.
#[derive(Debug, Clone, Copy)]
struct Segment {
    slope: f64,
    len: f64,
}

fn segments(beta: &ConvexServiceCurve) -> (f64, Vec<Segment>) {
    let bps = beta.breakpoints();
    let pieces = beta.pieces();
    let mut segs = Vec::with_capacity(pieces.len());
    for (i, p) in pieces.iter().enumerate() {
        let len = if i + 1 < pieces.len() { bps[i + 1] - bps[i] } else { f64::INFINITY };
        segs.push(Segment { slope: p.rate, len });
    }
    (bps[0], segs)
}

/// Min-plus convolution of two convex service curves: latencies add and the
/// slope segments are merged in ascending order, truncated at the smaller
/// long-run rate.
pub fn convolve(beta1: &ConvexServiceCurve, beta2: &ConvexServiceCurve) -> ConvexServiceCurve {
    let (t1, s1) = segments(beta1);
    let (t2, s2) = segments(beta2);
    let final_rate = beta1.long_run_rate().min(beta2.long_run_rate());
    let mut finite: Vec<Segment> =
        s1.iter().chain(s2.iter()).filter(|s| s.len.is_finite() && s.slope < final_rate).copied().collect();
    finite.sort_by(|a, b| a.slope.total_cmp(&b.slope));

    let mut x = t1 + t2;
    let mut y = 0.0;
    let mut pieces = Vec::with_capacity(finite.len() + 1);
    for seg in finite {
        pieces.push(RateLatency::new(seg.slope, (x - y / seg.slope).max(0.0)));
        x += seg.len;
        y += seg.slope * seg.len;
    }
    pieces.push(RateLatency::new(final_rate, (x - y / final_rate).max(0.0)));
    ConvexServiceCurve::new(pieces).expect("convolution of non-null curves is non-null")
}

/// Residual service `(beta - alpha - blocking)^+`, non-decreasing closure.
///
/// `beta - alpha` is convex, so the closure is its positive part and each
/// positive segment becomes one rate-latency piece.
pub fn leftover(beta: &ConvexServiceCurve, alpha: &ConcaveCurve, blocking: f64) -> Result<ConvexServiceCurve> {
    let f = |t: f64| beta.eval(t) - alpha.eval(t) - blocking;
    let slope = |t: f64| beta.slope_after(t) - alpha.slope_after(t);
    let mut xs: Vec<f64> = vec![0.0];
    xs.extend(beta.breakpoints());
    xs.extend(alpha.breakpoints());
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut pieces = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let sigma = slope(x);
        if sigma <= 0.0 {
            continue;
        }
        let end_positive = match xs.get(i + 1) {
            Some(&next) => f(next) > 0.0,
            None => true,
        };
        if end_positive {
            pieces.push(RateLatency::new(sigma, (x - f(x) / sigma).max(0.0)));
        }
    }
    let final_slope = beta.long_run_rate() - alpha.long_run_rate();
    if final_slope <= 0.0 {
        return Err(NcError::NullService);
    }
    ConvexServiceCurve::new(pieces)
}

/// Exact delay bound: `sup_t beta^{-1}(alpha(t)) - t`.
///
/// The function under the sup is concave, with kinks at the breakpoints of
/// `alpha` and where `alpha` crosses the ordinates of the breakpoints of
/// `beta`.
pub fn hdev(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> Result<f64> {
    check_stable(alpha, beta)?;
    if alpha.is_zero() {
        return Ok(0.0);
    }
    let g = |t: f64| beta.inverse(alpha.eval(t)) - t;
    let mut best = if alpha.burst() > 0.0 {
        g(0.0)
    } else if alpha.pieces()[0].rate > 0.0 {
        beta.latency()
    } else {
        0.0
    };
    for x in alpha.breakpoints() {
        best = best.max(g(x));
    }
    for s in beta.breakpoints() {
        if let Some(t) = alpha.inverse(beta.eval(s)) {
            best = best.max(g(t));
        }
    }
    Ok(best.max(0.0))
}

/// Exact backlog bound: `sup_t alpha(t) - beta(t)`.
pub fn vdev(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> Result<f64> {
    check_stable(alpha, beta)?;
    let mut best: f64 = alpha.eval(0.0);
    for t in alpha.breakpoints().into_iter().chain(beta.breakpoints()) {
        best = best.max(alpha.eval(t) - beta.eval(t));
    }
    Ok(best.max(0.0))
}

/// Both deviations at once.
pub fn deviation(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> Result<Deviation> {
    Ok(Deviation { horizontal: hdev(alpha, beta)?, vertical: vdev(alpha, beta)? })
}

/// Per-piece delay bound `min_j (y_k / R_j + T_j - x_k)` where `k` is the
/// first arrival piece with rate at most `R_j`.
///
/// Equals [`hdev`] when `beta` has one piece and upper-bounds it otherwise.
pub fn per_piece_delay_bound(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> Result<f64> {
    check_stable(alpha, beta)?;
    let pieces = alpha.pieces();
    let xs = alpha.breakpoints();
    let mut best = f64::INFINITY;
    for rl in beta.pieces() {
        let Some(k) = pieces.iter().position(|p| p.rate <= rl.rate * (1.0 + RATE_MERGE_REL)) else {
            continue;
        };
        let x_k = if k == 0 { 0.0 } else { xs[k - 1] };
        let y_k = pieces[k].burst + pieces[k].rate * x_k;
        best = best.min(y_k / rl.rate + rl.latency - x_k);
    }
    Ok(best.max(0.0))
}
