//! Achievable worst-case delays at a three-class port: one shaped class, one
//! unshaped class between its two priority levels, and a lower class that
//! only blocks for one frame.
//!
//! Each construction fixes a credit trajectory, quantizes its sending and
//! idle windows to whole frames, and solves
//!
//! ```text
//! d = MFS_low / C + blocking(d) + burst / C - burst / (n_links * C)
//! ```
//!
//! where `blocking(d)` counts the windows the other class can use while the
//! analysed burst waits. These delays are reachable scenarios, so they bound
//! the true worst case from below.

use serde::{Deserialize, Serialize};

use crate::bls::BlsParams;
use crate::error::{NcError, Result};
use crate::traffic::guarded_ceil;

pub const MAX_ITERATIONS: usize = 10_000;
pub const CONVERGENCE: f64 = 1e-9;

/// Flows of one class entering the port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwcClass {
    /// Number of flows.
    pub n_in: u64,
    /// Number of input links carrying them.
    pub n_links: u64,
    pub mfs: f64,
    pub bag: f64,
}

impl AwcClass {
    /// Bits released at once: `n * MFS`.
    #[must_use]
    pub fn burst(&self) -> f64 {
        self.n_in as f64 * self.mfs
    }

    /// Volume that can arrive within `d`: `n * MFS * (1 + d / BAG)`.
    #[must_use]
    pub fn volume(&self, d: f64) -> f64 {
        self.burst() * (1.0 + d / self.bag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwcConfig {
    pub link_rate: f64,
    pub bls: BlsParams,
    pub shaped: AwcClass,
    pub unshaped: AwcClass,
    /// Largest frame of the lowest class.
    pub lower_mfs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Shaped,
    Unshaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Both classes backlogged throughout.
    Awc1,
    /// The interfering class pauses at half credit before the analysed burst.
    Awc2,
}

/// Frame-quantized windows of one construction, in seconds. Half windows are
/// zero when the case does not use them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AwcWindows {
    pub send_real: f64,
    pub idle_real: f64,
    /// Initial sending window from zero credit (unshaped side only).
    pub send0_real: f64,
    /// Window before `t0`: idle on the shaped side, sending on the unshaped side.
    pub tit0_real: f64,
    /// Window between `t0` and `t1`: sending on the shaped side, idle on the
    /// unshaped side.
    pub t0t1_real: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwcResult {
    pub delay: f64,
    pub iterations: usize,
    pub blocking: f64,
    pub cycles_used: f64,
    /// Whether every iterate was at least the previous one.
    pub monotone: bool,
    /// Whether the blocking windows were cut to the interfering volume.
    pub capped: bool,
    pub windows: AwcWindows,
}

/// Whole frames needed to move the credit across `span` at `slope`, as a
/// duration.
fn quantize(span: f64, slope: f64, frame_time: f64) -> f64 {
    if span <= 0.0 {
        return 0.0;
    }
    guarded_ceil(span / slope / frame_time) * frame_time
}

impl AwcConfig {
    fn validate(&self) -> Result<()> {
        self.bls.validate()?;
        for (name, c) in [("shaped", &self.shaped), ("unshaped", &self.unshaped)] {
            if c.n_links == 0 || !(c.mfs > 0.0) || !(c.bag > 0.0) {
                return Err(NcError::InvalidModel(format!("{name} class: need n_links >= 1, mfs > 0, bag > 0")));
            }
        }
        if !(self.link_rate > 0.0) || self.lower_mfs < 0.0 {
            return Err(NcError::InvalidModel("need link_rate > 0 and lower_mfs >= 0".into()));
        }
        Ok(())
    }

    fn slopes(&self) -> (f64, f64) {
        let i_idle = self.bls.bw * self.link_rate;
        (i_idle, self.link_rate - i_idle)
    }
}

pub fn windows(cfg: &AwcConfig, case: Case, side: Side) -> AwcWindows {
    let c = cfg.link_rate;
    let (i_idle, i_send) = cfg.slopes();
    let (l_m, l_r) = (cfg.bls.l_m, cfg.bls.l_r);
    let fk = cfg.shaped.mfs / c;
    let fu = cfg.unshaped.mfs / c;
    let mut w = AwcWindows::default();
    match side {
        Side::Shaped => {
            let l_r_min = (l_r - i_idle * cfg.unshaped.mfs / c).max(0.0);
            w.send_real = quantize(l_m - l_r_min, i_send, fk);
            w.idle_real = quantize(l_m - l_r, i_idle, fu);
            if case == Case::Awc2 {
                w.t0t1_real = quantize(l_m / 2.0 - l_r_min, i_send, fk);
                w.tit0_real = quantize(l_m / 2.0 - l_r, i_idle, fu);
            }
        }
        Side::Unshaped => {
            w.send_real = quantize(l_m - l_r, i_send, fk);
            w.idle_real = quantize(l_m - l_r, i_idle, fu);
            match case {
                Case::Awc1 => w.send0_real = quantize(l_m, i_send, fk),
                Case::Awc2 => {
                    w.tit0_real = quantize(l_m / 2.0, i_send, fk);
                    w.t0t1_real = quantize(l_m / 2.0 - l_r, i_idle, fu);
                }
            }
        }
    }
    w
}

/// Blocking time and cycles used for a candidate delay `d`, before the
/// volume cap.
fn window_blocking(cfg: &AwcConfig, case: Case, side: Side, w: &AwcWindows, d: f64) -> (f64, f64) {
    let c = cfg.link_rate;
    // Cycle counts never go negative when a half window already absorbs
    // the whole interfering volume.
    let cycles = |vol: f64, window: f64| if window > 0.0 { (vol / (c * window)).max(0.0) } else { 0.0 };
    let whole = |vol: f64, window: f64| if window > 0.0 { guarded_ceil(vol / (c * window)).max(0.0) } else { 0.0 };
    match (side, case) {
        (Side::Shaped, Case::Awc1) => {
            let needed = cycles(cfg.unshaped.volume(d), w.idle_real);
            let used = needed.min(whole(cfg.shaped.burst(), w.send_real));
            (used * w.idle_real, used)
        }
        (Side::Shaped, Case::Awc2) => {
            let needed = cycles(cfg.unshaped.volume(d) - w.tit0_real * c, w.idle_real);
            let available = whole(cfg.shaped.burst() - w.t0t1_real * c, w.send_real);
            let used = needed.min(available);
            (w.tit0_real + used * w.idle_real, used)
        }
        (Side::Unshaped, Case::Awc1) => {
            let needed = cycles(cfg.shaped.volume(d) - w.send0_real * c, w.send_real);
            let available = (whole(cfg.unshaped.burst(), w.idle_real) - 1.0).max(0.0);
            let used = needed.min(available);
            (used * w.send_real + w.send0_real, used)
        }
        (Side::Unshaped, Case::Awc2) => {
            let needed = cycles(cfg.shaped.volume(d) - w.tit0_real * c, w.send_real);
            let available = whole(cfg.unshaped.burst() - w.t0t1_real * c, w.idle_real);
            let used = needed.min(available);
            (w.tit0_real + used * w.send_real, used)
        }
    }
}

/// The interfering class cannot occupy the link longer than it takes to send
/// what it can offer within `d`. Whole windows overshoot that volume when a
/// window is long compared to the burst (extreme reserved bandwidths).
fn blocking(cfg: &AwcConfig, case: Case, side: Side, w: &AwcWindows, d: f64) -> (f64, f64, bool) {
    let (blk, used) = window_blocking(cfg, case, side, w, d);
    let other = match side {
        Side::Shaped => cfg.unshaped,
        Side::Unshaped => cfg.shaped,
    };
    let limit = other.volume(d) / cfg.link_rate;
    if blk > limit * (1.0 + 1e-9) {
        (limit, used, true)
    } else {
        (blk, used, false)
    }
}

/// Solves the fixed point of one construction, starting from `burst / C`.
pub fn awc_delay(cfg: &AwcConfig, side: Side, case: Case) -> Result<AwcResult> {
    cfg.validate()?;
    let c = cfg.link_rate;
    let own = match side {
        Side::Shaped => cfg.shaped,
        Side::Unshaped => cfg.unshaped,
    };
    let w = windows(cfg, case, side);
    let burst = own.burst();
    let fixed = cfg.lower_mfs / c + burst / c - burst / (own.n_links as f64 * c);

    let mut d = burst / c;
    let mut monotone = true;
    for it in 1..=MAX_ITERATIONS {
        let (blk, used, capped) = blocking(cfg, case, side, &w, d);
        let next = fixed + blk;
        if !next.is_finite() {
            break;
        }
        monotone &= next >= d - 1e-15;
        if (next - d).abs() < CONVERGENCE {
            return Ok(AwcResult { delay: next, iterations: it, blocking: blk, cycles_used: used, monotone, capped, windows: w });
        }
        d = next;
    }
    Err(NcError::DivergentFixedPoint { iterations: MAX_ITERATIONS })
}

/// Larger of the two constructions; neither dominates the other in general.
pub fn awc_max(cfg: &AwcConfig, side: Side) -> Result<f64> {
    let a = awc_delay(cfg, side, Case::Awc1)?;
    let b = awc_delay(cfg, side, Case::Awc2)?;
    Ok(a.delay.max(b.delay))
}
