//! Burst limiting shaper node model: strict minimum and maximum service
//! curves of a shaped class, their fluid counterparts and the shaped output
//! arrival curve.
//!
//! The credit of a shaped class rises at `I_send = C - I_idle` while the
//! class transmits and falls at `I_idle = BW * C` otherwise, bounded by
//! `[0, L_M]`. The class drops to its low priority when the credit reaches
//! `L_M` and returns to its high priority at `L_R`.

use serde::{Deserialize, Serialize};

use crate::error::{NcError, Result};
use crate::minplus::{deconvolve, ConcaveCurve, ConvexServiceCurve};

/// Shaper configuration. Thresholds in bits, `bw` as a fraction of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlsParams {
    pub l_m: f64,
    pub l_r: f64,
    pub bw: f64,
    pub p_h: u32,
    pub p_l: u32,
}

impl BlsParams {
    /// Strict validation used for analysis inputs: `0 <= L_R < L_M`,
    /// `0 < BW < 1`, `p_L > p_H`.
    pub fn validate(&self) -> Result<()> {
        self.check_bw()?;
        if !(self.l_r >= 0.0 && self.l_r < self.l_m) {
            return Err(NcError::InvalidBls(format!(
                "need 0 <= L_R < L_M, got L_R={} L_M={}",
                self.l_r, self.l_m
            )));
        }
        if self.p_l <= self.p_h {
            return Err(NcError::InvalidBls(format!(
                "low priority {} must be numerically above high priority {}",
                self.p_l, self.p_h
            )));
        }
        Ok(())
    }

    fn check_bw(&self) -> Result<()> {
        if !(self.bw > 0.0 && self.bw < 1.0) {
            return Err(NcError::InvalidBls(format!("BW must lie in (0, 1), got {}", self.bw)));
        }
        Ok(())
    }
}

/// Constants derived from the shaper parameters and the port context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlsDerived {
    pub link_rate: f64,
    pub l_m: f64,
    pub l_r: f64,
    pub own_mfs: f64,
    pub mc_max_mfs: f64,
    pub i_idle: f64,
    pub i_send: f64,
    /// Medium-class frame volume that may slip through at saturation.
    pub mfs_sat: f64,
    /// Lowest credit at which a sending window can start.
    pub l_r_min: f64,
    pub delta_inter_beta: f64,
    pub delta_idle_beta: f64,
    pub delta_send_gamma: f64,
    pub delta_idle_gamma: f64,
    pub delta_inter_gamma: f64,
    pub b_max: f64,
}

/// Derives the window and saturation constants.
///
/// `mc_max_mfs` is the largest frame among classes whose priority lies
/// between the shaped class's two levels, zero when there is none.
pub fn derive(params: &BlsParams, link_rate: f64, mc_max_mfs: f64, own_mfs: f64) -> Result<BlsDerived> {
    params.check_bw()?;
    if params.l_r < 0.0 || params.l_r > params.l_m {
        return Err(NcError::InvalidBls(format!(
            "need 0 <= L_R <= L_M, got L_R={} L_M={}",
            params.l_r, params.l_m
        )));
    }
    let c = link_rate;
    let (l_m, l_r) = (params.l_m, params.l_r);
    let i_idle = params.bw * c;
    let i_send = c - i_idle;

    let mfs_sat = (mc_max_mfs - c / i_idle * l_r).max(0.0);
    let l_r_min = (l_r - mc_max_mfs / c * i_idle).max(0.0);
    let delta_inter_beta = (l_m - l_r_min) / i_send + (l_m - l_r) / i_idle + mc_max_mfs / c;
    let delta_idle_beta = (l_m - l_r) / i_idle + mc_max_mfs / c;

    let b_max = c / i_send * l_m + own_mfs;
    let delta_send_gamma = own_mfs / c + (l_m - l_r) / i_send;
    let delta_idle_gamma = (l_m - l_r) / i_idle;
    let delta_inter_gamma = delta_send_gamma + delta_idle_gamma;

    Ok(BlsDerived {
        link_rate: c,
        l_m,
        l_r,
        own_mfs,
        mc_max_mfs,
        i_idle,
        i_send,
        mfs_sat,
        l_r_min,
        delta_inter_beta,
        delta_idle_beta,
        delta_send_gamma,
        delta_idle_gamma,
        delta_inter_gamma,
        b_max,
    })
}

/// Strict minimum service of the shaped class at the shaper node.
///
/// Rate `(C - sum r_HC - MFS_sat / D_inter) * I_idle / C`, latency `D_idle`.
pub fn min_service(derived: &BlsDerived, hc_rate_sum: f64) -> Result<ConvexServiceCurve> {
    let c = derived.link_rate;
    let rate = (c - hc_rate_sum - derived.mfs_sat / derived.delta_inter_beta) * derived.i_idle / c;
    if !(rate > 0.0) {
        return Err(NcError::NullService);
    }
    ConvexServiceCurve::rate_latency(rate, derived.delta_idle_beta)
}

/// Maximum service of the shaped class, in its two regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxService {
    /// Leaky bucket valid while medium classes stay backlogged.
    pub shaped: ConcaveCurve,
    /// `C * t`, valid when no medium class interferes.
    pub unshaped: ConcaveCurve,
}

/// Maximum service curve: rate `D_send / D_inter * C`, burst
/// `b_max * D_idle / D_inter`.
#[must_use]
pub fn max_service(derived: &BlsDerived) -> MaxService {
    let c = derived.link_rate;
    let rate = derived.delta_send_gamma / derived.delta_inter_gamma * c;
    let burst = derived.b_max * derived.delta_idle_gamma / derived.delta_inter_gamma;
    MaxService {
        shaped: ConcaveCurve::leaky_bucket(rate, burst),
        unshaped: ConcaveCurve::leaky_bucket(c, 0.0),
    }
}

/// Bit-by-bit variants that ignore non-preemption:
/// `I_idle * (t - (L_M - L_R) / I_idle)^+` and `I_idle * t + L_M`.
pub fn fluid_curves(params: &BlsParams, link_rate: f64) -> Result<(ConvexServiceCurve, ConcaveCurve)> {
    params.check_bw()?;
    let i_idle = params.bw * link_rate;
    let beta = ConvexServiceCurve::rate_latency(i_idle, ((params.l_m - params.l_r) / i_idle).max(0.0))?;
    let gamma = ConcaveCurve::leaky_bucket(i_idle, params.l_m);
    Ok((beta, gamma))
}

/// Output arrival curve of a shaped class: `min(gamma, alpha / beta)`.
pub fn shaped_output(
    alpha: &ConcaveCurve,
    beta_bls: &ConvexServiceCurve,
    gamma_bls: &ConcaveCurve,
) -> Result<ConcaveCurve> {
    if alpha.is_zero() {
        return Ok(ConcaveCurve::zero());
    }
    Ok(gamma_bls.min(&deconvolve(alpha, beta_bls)?))
}
