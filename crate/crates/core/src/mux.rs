//! Class partitioning and strict service curves of end-system and
//! output-port multiplexers (static priority, optionally with shapers).
//!
//! A shaped class `k` oscillates between `p_H(k)` and `p_L(k)`. Relative to
//! `k`, other classes fall into:
//!
//! ```text
//!   HC(k): level < p_H(k)              always ahead of k
//!   MC(k): p_H(k) < level < p_L(k)     ahead only while k is low
//!   LC(k): level > p_L(k)              never ahead, may block once
//! ```
//!
//! A shaped class `j` is placed by `p_H(j)` for `HC`/`MC` and by `p_L(j)` for
//! `LC`, so it can sit in both `MC(k)` and `LC(k)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bls::{self, BlsDerived};
use crate::error::{NcError, Result};
use crate::minplus::{convolve, deconvolve, leftover, ConcaveCurve, ConvexServiceCurve};
use crate::traffic::TrafficClassSpec;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPartition {
    pub hc: BTreeSet<String>,
    pub mc: BTreeSet<String>,
    pub lc: BTreeSet<String>,
}

fn check_unique_levels(classes: &[TrafficClassSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for c in classes {
        let mut levels = vec![c.high_priority()];
        if c.bls.is_some() {
            levels.push(c.low_priority());
        }
        for l in levels {
            if !seen.insert(l) {
                return Err(NcError::PriorityClash(format!("priority level {l} used twice (class {})", c.name)));
            }
        }
    }
    Ok(())
}

/// Splits the other classes into higher, medium and lower sets relative to `k`.
pub fn partition(classes: &[TrafficClassSpec], k: &str) -> Result<ClassPartition> {
    check_unique_levels(classes)?;
    let kc = classes
        .iter()
        .find(|c| c.name == k)
        .ok_or_else(|| NcError::InvalidModel(format!("unknown class {k}")))?;
    let (kh, kl) = (kc.high_priority(), kc.low_priority());
    let mut out = ClassPartition::default();
    for c in classes.iter().filter(|c| c.name != k) {
        let (jh, jl) = (c.high_priority(), c.low_priority());
        if jh < kh {
            out.hc.insert(c.name.clone());
        }
        if kh < jh && jh < kl {
            out.mc.insert(c.name.clone());
        }
        if jl > kl {
            out.lc.insert(c.name.clone());
        }
    }
    Ok(out)
}

/// End-system service for a class: `(C t - sum alpha_higher - blocking)^+`.
pub fn es_curve(interfering: &ConcaveCurve, blocking_mfs: f64, link_rate: f64) -> Result<ConvexServiceCurve> {
    leftover(&ConvexServiceCurve::constant_rate(link_rate)?, interfering, blocking_mfs)
}

/// One class as seen at a multiplexer input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortClass {
    pub spec: TrafficClassSpec,
    /// Aggregate arrival curve of the class at the port input.
    pub arrival: ConcaveCurve,
    /// Largest frame of the class at this port, zero if the class is empty.
    pub mfs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortInput {
    pub link_rate: f64,
    pub classes: Vec<PortClass>,
}

/// Shaper-node curves of one shaped class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaperCurves {
    pub derived: BlsDerived,
    pub beta: ConvexServiceCurve,
    pub gamma: ConcaveCurve,
    /// Arrival curve of the class after the shaper: `min(gamma, alpha / beta)`.
    pub output: ConcaveCurve,
}

/// Service offered to one class by the multiplexer, with its two branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassService {
    pub name: String,
    /// Combined curve, `None` when both branches are null.
    pub beta: Option<ConvexServiceCurve>,
    /// Pure static-priority branch.
    pub sp_branch: Option<ConvexServiceCurve>,
    /// Branch that accounts for the shapers.
    pub bls_branch: Option<ConvexServiceCurve>,
    pub shaper: Option<ShaperCurves>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortCurves {
    pub classes: Vec<ClassService>,
}

impl PortCurves {
    #[must_use]
    pub fn get(&self, name: &str) -> Option<&ClassService> {
        self.classes.iter().find(|c| c.name == name)
    }
}

impl PortInput {
    fn class(&self, name: &str) -> &PortClass {
        self.classes.iter().find(|c| c.spec.name == name).expect("class present in port")
    }

    fn specs(&self) -> Vec<TrafficClassSpec> {
        self.classes.iter().map(|c| c.spec.clone()).collect()
    }

    fn max_mfs<'a>(&'a self, names: impl IntoIterator<Item = &'a str>) -> f64 {
        names.into_iter().map(|n| self.class(n).mfs).fold(0.0, f64::max)
    }

    fn rate_sum<'a>(&'a self, names: impl IntoIterator<Item = &'a str>) -> f64 {
        names.into_iter().map(|n| self.class(n).arrival.long_run_rate()).sum()
    }

    /// Shaper-node curves of a shaped class.
    pub fn shaper_curves(&self, k: &str) -> Result<ShaperCurves> {
        let pc = self.class(k);
        let params = pc.spec.bls.ok_or_else(|| NcError::InvalidModel(format!("class {k} has no shaper")))?;
        params.validate()?;
        let part = partition(&self.specs(), k)?;
        let mc_max = self.max_mfs(part.mc.iter().map(String::as_str));
        let hc_rate = self.rate_sum(part.hc.iter().map(String::as_str));
        let derived = bls::derive(&params, self.link_rate, mc_max, pc.mfs)?;
        let beta = bls::min_service(&derived, hc_rate)?;
        let gamma = bls::max_service(&derived).shaped;
        let output = match bls::shaped_output(&pc.arrival, &beta, &gamma) {
            Ok(o) => o,
            // alpha / beta is unbounded, so the minimum is gamma itself.
            Err(NcError::UnstableRate { .. }) => gamma.clone(),
            Err(e) => return Err(e),
        };
        Ok(ShaperCurves { derived, beta, gamma, output })
    }

    /// Arrival curve a class presents to the static-priority stage.
    fn sp_arrival(&self, name: &str, shapers: &[(String, Result<ShaperCurves>)]) -> Result<ConcaveCurve> {
        let pc = self.class(name);
        if pc.spec.bls.is_none() {
            return Ok(pc.arrival.clone());
        }
        match shapers.iter().find(|(n, _)| n == name) {
            Some((_, Ok(s))) => Ok(s.output.clone()),
            Some((_, Err(e))) => Err(e.clone()),
            None => unreachable!("shaper curves computed for every shaped class"),
        }
    }
}

fn combine(a: Result<ConvexServiceCurve>, b: Result<ConvexServiceCurve>) -> Option<ConvexServiceCurve> {
    match (a, b) {
        (Ok(x), Ok(y)) => Some(x.max(&y)),
        (Ok(x), Err(_)) | (Err(_), Ok(x)) => Some(x),
        (Err(_), Err(_)) => None,
    }
}

/// Service curve of a shaped class: the maximum of the low-priority
/// static-priority branch and the shaper convolved with the high-priority
/// branch.
pub fn mux_bls(port: &PortInput, k: &str) -> Result<ClassService> {
    let shapers = all_shapers(port);
    mux_bls_with(port, k, &shapers)
}

fn mux_bls_with(port: &PortInput, k: &str, shapers: &[(String, Result<ShaperCurves>)]) -> Result<ClassService> {
    let part = partition(&port.specs(), k)?;
    let line = ConvexServiceCurve::constant_rate(port.link_rate)?;

    let mut low_set: Vec<&str> = part.mc.iter().chain(part.hc.iter()).map(String::as_str).collect();
    low_set.sort_unstable();
    low_set.dedup();
    let low_branch = (|| {
        let mut sum = ConcaveCurve::zero();
        for n in &low_set {
            sum = sum.add(&port.sp_arrival(n, shapers)?);
        }
        let blocking = port.max_mfs(part.lc.iter().map(String::as_str).chain(std::iter::once(k)));
        leftover(&line, &sum, blocking)
    })();

    let shaper = shapers.iter().find(|(n, _)| n == k).map(|(_, s)| s.clone()).expect("k is shaped");
    let high_branch = (|| {
        let s = shaper.clone()?;
        let mut sum = ConcaveCurve::zero();
        for n in &part.hc {
            sum = sum.add(&port.sp_arrival(n, shapers)?);
        }
        let blocking = port
            .classes
            .iter()
            .filter(|c| !part.hc.contains(&c.spec.name))
            .map(|c| c.mfs)
            .fold(0.0, f64::max);
        let sp_high = leftover(&line, &sum, blocking)?;
        Ok(convolve(&s.beta, &sp_high))
    })();

    let beta = combine(low_branch.clone(), high_branch.clone());
    Ok(ClassService {
        name: k.to_string(),
        beta,
        sp_branch: low_branch.ok(),
        bls_branch: high_branch.ok(),
        shaper: shaper.ok(),
    })
}

/// Service curve of an unshaped class: the maximum of a branch that bounds
/// higher shaped classes by `alpha / beta_bls` and one that bounds them by
/// their maximum service curve.
pub fn mux_nbls(port: &PortInput, k: &str) -> Result<ClassService> {
    let shapers = all_shapers(port);
    mux_nbls_with(port, k, &shapers)
}

fn mux_nbls_with(port: &PortInput, k: &str, shapers: &[(String, Result<ShaperCurves>)]) -> Result<ClassService> {
    check_unique_levels(&port.specs())?;
    let kc = port.class(k);
    let p = kc.spec.priority;
    let line = ConvexServiceCurve::constant_rate(port.link_rate)?;

    let plain_higher: Vec<&PortClass> =
        port.classes.iter().filter(|c| c.spec.bls.is_none() && c.spec.name != k && c.spec.priority < p).collect();
    let shaped_higher: Vec<&PortClass> =
        port.classes.iter().filter(|c| c.spec.bls.is_some() && c.spec.high_priority() < p).collect();
    let blocking = port
        .classes
        .iter()
        .filter(|c| c.spec.name == k || c.spec.low_priority() > p)
        .map(|c| c.mfs)
        .fold(0.0, f64::max);
    let plain_sum = ConcaveCurve::sum(plain_higher.iter().map(|c| &c.arrival));

    let sp_branch = (|| {
        let mut sum = plain_sum.clone();
        for c in &shaped_higher {
            let s = lookup(shapers, &c.spec.name)?;
            sum = sum.add(&deconvolve(&c.arrival, &s.beta)?);
        }
        leftover(&line, &sum, blocking)
    })();
    let bls_branch = (|| {
        let mut sum = plain_sum.clone();
        for c in &shaped_higher {
            sum = sum.add(&lookup(shapers, &c.spec.name)?.gamma);
        }
        leftover(&line, &sum, blocking)
    })();

    let beta = combine(sp_branch.clone(), bls_branch.clone());
    Ok(ClassService { name: k.to_string(), beta, sp_branch: sp_branch.ok(), bls_branch: bls_branch.ok(), shaper: None })
}

fn lookup(shapers: &[(String, Result<ShaperCurves>)], name: &str) -> Result<ShaperCurves> {
    shapers.iter().find(|(n, _)| n == name).map(|(_, s)| s.clone()).expect("shaper computed")
}

fn all_shapers(port: &PortInput) -> Vec<(String, Result<ShaperCurves>)> {
    port.classes
        .iter()
        .filter(|c| c.spec.bls.is_some())
        .map(|c| (c.spec.name.clone(), port.shaper_curves(&c.spec.name)))
        .collect()
}

/// Service curves of every class at a port.
pub fn port_curves(port: &PortInput) -> Result<PortCurves> {
    check_unique_levels(&port.specs())?;
    let shapers = all_shapers(port);
    let classes = port
        .classes
        .iter()
        .map(|c| {
            if c.spec.bls.is_some() {
                mux_bls_with(port, &c.spec.name, &shapers)
            } else {
                mux_nbls_with(port, &c.spec.name, &shapers)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PortCurves { classes })
}

/// The same port with every shaper removed; a shaped class keeps its high
/// priority.
#[must_use]
pub fn without_shapers(port: &PortInput) -> PortInput {
    let classes = port
        .classes
        .iter()
        .map(|c| PortClass {
            spec: TrafficClassSpec::plain(&c.spec.name, c.spec.high_priority()),
            arrival: c.arrival.clone(),
            mfs: c.mfs,
        })
        .collect();
    PortInput { link_rate: port.link_rate, classes }
}
