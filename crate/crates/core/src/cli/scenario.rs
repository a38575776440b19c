//! Parameter sweeps over a port or network configuration.

use serde::Serialize;

use super::config::{Config, ConfigError, Output, SweptParam};
use crate::awc::{awc_max, Side};
use crate::blssim::{random_frames, simulate, validate_against_bounds, Bounds, SimFlow, SimPort};
use crate::mux::{port_curves, without_shapers, PortInput};
use crate::netanalysis::{analyze, class_delays, NetworkModel, NodeSpec};
use crate::par;
use crate::traffic::TrafficClassSpec;

/// Which branch of a shaped or shaped-over class yields its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Sp,
    Bls,
}

/// One class at one grid point. The first seven fields form the CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario_param: String,
    pub value: f64,
    pub class: String,
    pub nc_delay_s: Option<f64>,
    pub awc_delay_s: Option<f64>,
    pub gap_pct: Option<f64>,
    pub schedulable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sp_delay_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bls_delay_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ruling: Option<Branch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_violations: Option<usize>,
    /// Why no bound exists, when it does not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

pub const CSV_HEADER: &str = "scenario_param,value,class,nc_delay_s,awc_delay_s,gap_pct,schedulable";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    #[must_use]
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.scenario_param,
            self.value,
            self.class,
            cell(self.nc_delay_s),
            cell(self.awc_delay_s),
            cell(self.gap_pct),
            self.schedulable
        )
    }
}

/// Relative increase of the bound over the achievable worst case, in percent.
#[must_use]
pub fn gap_pct(nc: f64, awc: f64) -> f64 {
    (nc - awc) / awc * 100.0
}

fn ruling(sp: Option<f64>, bls: Option<f64>) -> Option<Branch> {
    match (sp, bls) {
        (Some(s), Some(b)) => Some(if s <= b { Branch::Sp } else { Branch::Bls }),
        (Some(_), None) => Some(Branch::Sp),
        (None, Some(_)) => Some(Branch::Bls),
        (None, None) => None,
    }
}

/// Rows of one grid point of a single-port configuration.
pub fn port_rows(cfg: &Config, param: &str, value: f64, outputs: &[Output]) -> Result<Vec<Row>, ConfigError> {
    let model = cfg.port_model()?;
    let rate_ok = model.input.classes.iter().map(|c| c.arrival.long_run_rate()).sum::<f64>() <= model.input.link_rate;
    let blank = |class: &str, verdict: String| Row {
        scenario_param: param.to_string(),
        value,
        class: class.to_string(),
        nc_delay_s: None,
        awc_delay_s: None,
        gap_pct: None,
        schedulable: false,
        sp_delay_s: None,
        bls_delay_s: None,
        ruling: None,
        sim_violations: None,
        verdict: Some(verdict),
    };
    let delays = match class_delays(&model.input) {
        Ok(d) => d,
        Err(e) => return Ok(model.input.classes.iter().map(|c| blank(&c.spec.name, e.to_string())).collect()),
    };

    let mut awc: Vec<Option<f64>> = vec![None; delays.len()];
    if outputs.contains(&Output::Awc) {
        for k in 0..delays.len() {
            if let Some((a, u)) = model.awc_config(k) {
                awc[k] = awc_max(&a, Side::Shaped).ok();
                awc[u] = awc_max(&a, Side::Unshaped).ok();
            }
        }
    }
    let violations = if outputs.contains(&Output::Sim) { sim_violations(cfg, &model.input, &model.counts) } else { None };

    Ok(delays
        .into_iter()
        .enumerate()
        .map(|(k, d)| match d.delay {
            Ok(nc) => {
                let a = awc[k];
                Row {
                    scenario_param: param.to_string(),
                    value,
                    class: d.name,
                    nc_delay_s: Some(nc),
                    awc_delay_s: a,
                    gap_pct: a.map(|a| gap_pct(nc, a)),
                    schedulable: rate_ok,
                    sp_delay_s: d.sp_delay,
                    bls_delay_s: d.bls_delay,
                    ruling: if model.input.classes.iter().any(|c| c.spec.bls.is_some()) { ruling(d.sp_delay, d.bls_delay) } else { None },
                    sim_violations: violations.as_ref().map(|v| v[k]),
                    verdict: None,
                }
            }
            Err(e) => blank(&d.name, e.to_string()),
        })
        .collect())
}

/// Violations per class of one randomized trace at a port.
fn sim_violations(cfg: &Config, input: &PortInput, counts: &[(u64, f64, f64)]) -> Option<Vec<usize>> {
    let sim = cfg.simulation.clone().unwrap_or(super::config::SimConfig { frames: 10_000, seed: 0 });
    let curves = port_curves(input).ok()?;
    let delays = class_delays(input).ok()?;
    let flows: Vec<SimFlow> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.0 > 0)
        .map(|(k, &(n, mfs, bag))| SimFlow { class: k, count: n, bag_ns: (bag * 1e9).round() as u64, mfs_bits: mfs.round() as u64 })
        .collect();
    let specs: Vec<TrafficClassSpec> = input.classes.iter().map(|c| c.spec.clone()).collect();
    let port = SimPort::new(input.link_rate, specs.clone());
    let trace = simulate(&port, &random_frames(&flows, sim.frames, sim.seed), u64::MAX).ok()?;
    let mut out = Vec::with_capacity(specs.len());
    for (k, cs) in curves.classes.iter().enumerate() {
        let (Some(beta), Ok(delay)) = (&cs.beta, &delays[k].delay) else {
            out.push(0);
            continue;
        };
        let mc: Vec<usize> = match crate::mux::partition(&specs, &cs.name) {
            Ok(p) if cs.shaper.is_some() => specs.iter().enumerate().filter(|(_, s)| p.mc.contains(&s.name)).map(|(i, _)| i).collect(),
            _ => Vec::new(),
        };
        let gamma = cs.shaper.as_ref().map(|s| (&s.gamma, mc.as_slice()));
        let b = Bounds { class: k, beta, gamma, delay: *delay };
        out.push(validate_against_bounds(&trace, &b).err().map_or(0, |r| r.count));
    }
    Some(out)
}

/// Rows of one grid point of a network configuration: the worst bound of
/// each class over its flows.
pub fn network_rows(cfg: &Config, param: &str, value: f64) -> Result<Vec<Row>, ConfigError> {
    let model = cfg.network_model()?;
    let report = analyze(&model).map_err(|e| ConfigError { path: "network".into(), message: e.to_string() })?;
    Ok(cfg
        .classes
        .iter()
        .map(|c| {
            let flows: Vec<_> = report.flows.iter().filter(|f| f.class == c.name).collect();
            let failed = flows.iter().find_map(|f| f.error.clone());
            let nc = if failed.is_some() { None } else { report.class_max(&c.name) };
            Row {
                scenario_param: param.to_string(),
                value,
                class: c.name.clone(),
                nc_delay_s: nc,
                awc_delay_s: None,
                gap_pct: None,
                schedulable: failed.is_none() && flows.iter().all(|f| f.schedulable) && report.ports.iter().all(|p| p.rate_ok),
                sp_delay_s: None,
                bls_delay_s: None,
                ruling: None,
                sim_violations: None,
                verdict: failed,
            }
        })
        .collect())
}

fn point_rows(cfg: &Config, param: &SweptParam, value: f64, outputs: &[Output]) -> Result<Vec<Row>, ConfigError> {
    let point = cfg.with_param(param, value);
    let name = param.to_string();
    if point.port.is_some() {
        port_rows(&point, &name, value, outputs)
    } else {
        network_rows(&point, &name, value)
    }
}

/// Runs the configured sweep. Rows follow grid order, then class order.
pub fn run_scenario(cfg: &Config) -> Result<Vec<Row>, ConfigError> {
    run_scenario_with(cfg, true)
}

/// As [`run_scenario`], with the grid dispatched to the worker pool or run
/// on the calling thread.
pub fn run_scenario_with(cfg: &Config, parallel: bool) -> Result<Vec<Row>, ConfigError> {
    let s = cfg.scenario.as_ref().ok_or_else(|| ConfigError { path: "scenario".into(), message: "missing scenario section".into() })?;
    let grid = s.grid.values();
    let f = |v: &f64| point_rows(cfg, &s.param, *v, &s.outputs);
    let results = if parallel { par::map(&grid, f) } else { par::map_sequential(&grid, f) };
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Bounds of one class with and without the shapers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub class: String,
    pub bls_delay_s: Option<f64>,
    pub sp_delay_s: Option<f64>,
    /// `sp / bls`: how many times the shapers divide the bound.
    pub ratio: Option<f64>,
}

fn compare_row(class: &str, bls: Option<f64>, sp: Option<f64>) -> CompareRow {
    let ratio = match (bls, sp) {
        (Some(b), Some(s)) if b > 0.0 => Some(s / b),
        _ => None,
    };
    CompareRow { class: class.to_string(), bls_delay_s: bls, sp_delay_s: sp, ratio }
}

fn plain_network(model: &NetworkModel) -> NetworkModel {
    let mut m = model.clone();
    m.nodes = m
        .nodes
        .iter()
        .map(|n| NodeSpec {
            classes: n.classes.iter().map(|c| TrafficClassSpec::plain(&c.name, c.high_priority())).collect(),
            ..n.clone()
        })
        .collect();
    m
}

/// Compares the shaped configuration with the same traffic under plain
/// static priority, each shaped class keeping its high priority.
pub fn compare(cfg: &Config) -> Result<Vec<CompareRow>, ConfigError> {
    let names: Vec<String> = cfg.classes.iter().map(|c| c.name.clone()).collect();
    if cfg.port.is_some() {
        let model = cfg.port_model()?;
        let get = |input: &PortInput| -> Vec<Option<f64>> {
            class_delays(input).map_or_else(|_| vec![None; names.len()], |d| d.into_iter().map(|c| c.delay.ok()).collect())
        };
        let bls = get(&model.input);
        let sp = get(&without_shapers(&model.input));
        return Ok(names.iter().enumerate().map(|(i, n)| compare_row(n, bls[i], sp[i])).collect());
    }
    let model = cfg.network_model()?;
    let infeasible = |e: crate::NcError| ConfigError { path: "network".into(), message: e.to_string() };
    let with = analyze(&model).map_err(infeasible)?;
    let without = analyze(&plain_network(&model)).map_err(infeasible)?;
    let worst = |r: &crate::netanalysis::DelayReport, n: &str| {
        if r.flows.iter().any(|f| f.class == n && f.end_to_end.is_none()) {
            None
        } else {
            r.class_max(n)
        }
    };
    Ok(names.iter().map(|n| compare_row(n, worst(&with, n), worst(&without, n))).collect())
}
