//! End-to-end delay analysis of a feed-forward network of end-systems and
//! switch output ports.
//!
//! The pipeline runs node by node in topological order:
//!
//! 1. class service curves of the node multiplexer ([`crate::mux`]);
//! 2. per-flow residual service against same-class siblings (blind
//!    multiplexing);
//! 3. per-flow output arrival curves, which become the inputs of the next
//!    node on the path.
//!
//! The end-to-end bound adds the source end-system delay, one store-and-forward
//! and one technological latency per switch, the link propagation terms and
//! the multiplexing delays. Multiplexing delays are either summed hop by hop
//! or obtained once from the concatenated residual curves.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{NcError, Result};
use crate::minplus::{convolve, deconvolve, hdev, leftover, ConcaveCurve, ConvexServiceCurve};
use crate::mux::{partition, port_curves, PortClass, PortInput};
use crate::par;
use crate::traffic::{FlowSpec, TrafficClassSpec};

pub const DEFAULT_TECH_LATENCY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    EndSystem,
    SwitchPort,
}

/// A multiplexing point and the link it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    pub link_rate: f64,
    pub classes: Vec<TrafficClassSpec>,
    /// Propagation delay of the outgoing link, overriding the network default.
    #[serde(default)]
    pub propagation: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    /// Sum of per-node horizontal deviations on propagated arrival curves.
    PerHop,
    /// One horizontal deviation against the concatenated residual curves.
    #[default]
    Pboo,
}

fn default_tech_latency() -> f64 {
    DEFAULT_TECH_LATENCY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub nodes: Vec<NodeSpec>,
    pub flows: Vec<FlowSpec>,
    #[serde(default = "default_tech_latency")]
    pub tech_latency: f64,
    #[serde(default)]
    pub propagation: f64,
    #[serde(default)]
    pub mode: DelayMode,
}

/// Contribution of one node to a flow's bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopReport {
    pub node: String,
    /// Horizontal deviation at this node on the propagated arrival curve.
    pub mux_delay: f64,
    pub store_forward: f64,
    pub tech_latency: f64,
    pub propagation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub id: String,
    pub class: String,
    pub hops: Vec<HopReport>,
    pub end_to_end: Option<f64>,
    pub deadline_margin: Option<f64>,
    pub schedulable: bool,
    pub error: Option<String>,
}

impl FlowReport {
    /// Delay inside the source end-system.
    #[must_use]
    pub fn es_delay(&self) -> Option<f64> {
        self.hops.first().map(|h| h.mux_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortVerdict {
    pub node: String,
    pub rate_sum: f64,
    pub link_rate: f64,
    pub rate_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayReport {
    pub flows: Vec<FlowReport>,
    pub ports: Vec<PortVerdict>,
    pub schedulable: bool,
}

impl DelayReport {
    #[must_use]
    pub fn flow(&self, id: &str) -> Option<&FlowReport> {
        self.flows.iter().find(|f| f.id == id)
    }

    /// Largest bound over the flows of a class, `None` if any of them failed
    /// or the class is empty.
    #[must_use]
    pub fn class_max(&self, class: &str) -> Option<f64> {
        let mut any = false;
        let mut worst: f64 = 0.0;
        for f in self.flows.iter().filter(|f| f.class == class) {
            any = true;
            worst = worst.max(f.end_to_end?);
        }
        any.then_some(worst)
    }
}

/// Residual service of one flow against the other flows of its class.
pub fn flow_residual(beta_class: &ConvexServiceCurve, same_class_others: &ConcaveCurve) -> Result<ConvexServiceCurve> {
    leftover(beta_class, same_class_others, 0.0)
}

/// Output arrival curve after a node.
pub fn propagate(alpha_in: &ConcaveCurve, beta_node: &ConvexServiceCurve) -> Result<ConcaveCurve> {
    deconvolve(alpha_in, beta_node)
}

/// Concatenation of the per-node curves along a path.
pub fn e2e_service(curves: &[ConvexServiceCurve]) -> Result<ConvexServiceCurve> {
    let (first, rest) = curves.split_first().ok_or_else(|| NcError::InvalidModel("empty path".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, c| convolve(&acc, c)))
}

/// Aggregate delay of one class at a single multiplexer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDelay {
    pub name: String,
    pub delay: std::result::Result<f64, NcError>,
    /// Delay under each branch alone, when that branch exists.
    pub sp_delay: Option<f64>,
    pub bls_delay: Option<f64>,
}

/// Horizontal deviation of every class aggregate at a port.
pub fn class_delays(port: &PortInput) -> Result<Vec<ClassDelay>> {
    let curves = port_curves(port)?;
    Ok(port
        .classes
        .iter()
        .zip(&curves.classes)
        .map(|(pc, cs)| {
            let on = |b: &Option<ConvexServiceCurve>| b.as_ref().and_then(|b| hdev(&pc.arrival, b).ok());
            let delay = match &cs.beta {
                Some(b) => hdev(&pc.arrival, b),
                None => Err(NcError::NullService),
            };
            ClassDelay { name: cs.name.clone(), delay, sp_delay: on(&cs.sp_branch), bls_delay: on(&cs.bls_branch) }
        })
        .collect())
}

type FlowCurve = std::result::Result<ConcaveCurve, String>;

/// Per-flow state after a node.
#[derive(Debug, Clone)]
struct HopState {
    output: FlowCurve,
    residual: std::result::Result<ConvexServiceCurve, String>,
    delay: std::result::Result<f64, String>,
}

impl NetworkModel {
    fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(NcError::InvalidModel(format!("duplicate node {}", n.id)));
            }
            if !(n.link_rate > 0.0) {
                return Err(NcError::InvalidModel(format!("node {}: link rate must be positive", n.id)));
            }
            for c in n.classes.iter().filter_map(|c| c.bls.as_ref()) {
                c.validate()?;
            }
        }
        for f in &self.flows {
            if !(f.bag > 0.0 && f.mfs > 0.0 && f.jitter >= 0.0) {
                return Err(NcError::InvalidModel(format!("flow {}: need bag > 0, mfs > 0, jitter >= 0", f.id)));
            }
            if f.path.is_empty() {
                return Err(NcError::InvalidModel(format!("flow {}: empty path", f.id)));
            }
            for (i, hop) in f.path.iter().enumerate() {
                let node = self
                    .node(hop)
                    .ok_or_else(|| NcError::InvalidModel(format!("flow {}: unknown node {hop}", f.id)))?;
                if (i == 0) != (node.kind == NodeKind::EndSystem) {
                    return Err(NcError::InvalidModel(format!(
                        "flow {}: path must start at an end-system followed by switch ports",
                        f.id
                    )));
                }
                if !node.classes.iter().any(|c| c.name == f.class) {
                    return Err(NcError::InvalidModel(format!("flow {}: class {} missing at {hop}", f.id, f.class)));
                }
            }
        }
        Ok(())
    }

    /// Nodes grouped by depth; every node comes after all its predecessors.
    fn levels(&self) -> Result<Vec<Vec<String>>> {
        let mut preds: BTreeMap<&str, BTreeSet<&str>> = self.nodes.iter().map(|n| (n.id.as_str(), BTreeSet::new())).collect();
        for f in &self.flows {
            for w in f.path.windows(2) {
                preds.get_mut(w[1].as_str()).expect("validated").insert(w[0].as_str());
            }
        }
        let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
        while depth.len() < preds.len() {
            let before = depth.len();
            for (n, ps) in &preds {
                if depth.contains_key(n) {
                    continue;
                }
                if ps.iter().all(|p| depth.contains_key(p)) {
                    let d = ps.iter().map(|p| depth[p] + 1).max().unwrap_or(0);
                    depth.insert(n, d);
                }
            }
            if depth.len() == before {
                return Err(NcError::InvalidModel("cyclic dependency between nodes".into()));
            }
        }
        let max = depth.values().copied().max().unwrap_or(0);
        let mut levels = vec![Vec::new(); max + 1];
        for (n, d) in depth {
            levels[d].push(n.to_string());
        }
        Ok(levels)
    }
}

/// Classes whose service depends on `j`'s arrival curve: those `j` can
/// overtake at some level.
fn overtaken_by(classes: &[TrafficClassSpec], j: &str) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for k in classes.iter().filter(|c| c.name != j) {
        let ahead = if k.bls.is_some() {
            let p = partition(classes, &k.name)?;
            p.hc.contains(j) || p.mc.contains(j)
        } else {
            classes.iter().any(|c| c.name == j && c.high_priority() < k.priority)
        };
        if ahead {
            out.insert(k.name.clone());
        }
    }
    Ok(out)
}

/// Analyses one node given the input curve of every flow crossing it.
fn analyze_node(
    node: &NodeSpec,
    flows: &[(usize, &FlowSpec, FlowCurve)],
) -> Result<(Vec<(usize, HopState)>, PortVerdict)> {
    let mut poisoned: BTreeMap<String, String> = BTreeMap::new();
    for (_, f, c) in flows {
        if let Err(e) = c {
            poisoned.entry(f.class.clone()).or_insert_with(|| e.clone());
        }
    }
    let mut failed = poisoned.clone();
    for (j, why) in &poisoned {
        for k in overtaken_by(&node.classes, j)? {
            failed.entry(k).or_insert_with(|| format!("interfering class {j}: {why}"));
        }
    }

    let classes: Vec<PortClass> = node
        .classes
        .iter()
        .map(|spec| {
            let members = flows.iter().filter(|(_, f, _)| f.class == spec.name);
            let arrival = ConcaveCurve::sum(members.clone().filter_map(|(_, _, c)| c.as_ref().ok()));
            let mfs = members.map(|(_, f, _)| f.mfs).fold(0.0, f64::max);
            PortClass { spec: spec.clone(), arrival, mfs }
        })
        .collect();
    let rate_sum: f64 = classes.iter().map(|c| c.arrival.long_run_rate()).sum();
    let port = PortInput { link_rate: node.link_rate, classes };
    let curves = port_curves(&port)?;

    let mut out = Vec::with_capacity(flows.len());
    for spec in &node.classes {
        let members: Vec<&(usize, &FlowSpec, FlowCurve)> = flows.iter().filter(|(_, f, _)| f.class == spec.name).collect();
        let class_beta = match failed.get(&spec.name) {
            Some(why) => Err(why.clone()),
            None => curves
                .get(&spec.name)
                .and_then(|c| c.beta.clone())
                .ok_or_else(|| NcError::NullService.to_string()),
        };
        let inputs: Vec<&ConcaveCurve> = members.iter().filter_map(|(_, _, c)| c.as_ref().ok()).collect();
        // prefix[i] + suffix[i + 1] is the sum of every sibling but i.
        let mut prefix = vec![ConcaveCurve::zero()];
        for c in &inputs {
            let next = prefix.last().expect("non-empty").add(c);
            prefix.push(next);
        }
        let mut suffix = vec![ConcaveCurve::zero(); inputs.len() + 1];
        for i in (0..inputs.len()).rev() {
            suffix[i] = suffix[i + 1].add(inputs[i]);
        }
        let states: Vec<HopState> = par::map(&(0..members.len()).collect::<Vec<_>>(), |&i| {
            let alpha = match (&members[i].2, &class_beta) {
                (Ok(a), Ok(_)) => a,
                (Err(e), _) | (_, Err(e)) => {
                    return HopState { output: Err(e.clone()), residual: Err(e.clone()), delay: Err(e.clone()) }
                }
            };
            let beta = class_beta.as_ref().expect("checked");
            let others = prefix[i].add(&suffix[i + 1]);
            let residual = flow_residual(beta, &others).map_err(|e| e.to_string());
            let (output, delay) = match &residual {
                Ok(r) => (
                    propagate(alpha, r).map_err(|e| e.to_string()),
                    hdev(alpha, r).map_err(|e| e.to_string()),
                ),
                Err(e) => (Err(e.clone()), Err(e.clone())),
            };
            HopState { output, residual, delay }
        });
        out.extend(members.iter().map(|(idx, _, _)| *idx).zip(states));
    }
    let verdict = PortVerdict {
        node: node.id.clone(),
        rate_sum,
        link_rate: node.link_rate,
        rate_ok: rate_sum <= node.link_rate * (1.0 + 1e-12),
    };
    Ok((out, verdict))
}

/// Runs the full pipeline. Configuration problems are errors; analysis
/// failures (instability, null service) are reported per flow.
pub fn analyze(model: &NetworkModel) -> Result<DelayReport> {
    model.validate()?;
    let levels = model.levels()?;
    // (flow index, position on path) -> state after that node
    let mut states: HashMap<(usize, usize), HopState> = HashMap::new();
    let mut verdicts: BTreeMap<String, PortVerdict> = BTreeMap::new();

    for level in &levels {
        let results = par::map(level, |id| {
            let node = model.node(id).expect("validated");
            let inputs: Vec<(usize, &FlowSpec, FlowCurve)> = model
                .flows
                .iter()
                .enumerate()
                .filter_map(|(fi, f)| {
                    let pos = f.path.iter().position(|p| p == id)?;
                    let curve = if pos == 0 {
                        Ok(f.arrival_curve())
                    } else {
                        states[&(fi, pos - 1)].output.clone()
                    };
                    Some((fi, f, curve))
                })
                .collect();
            analyze_node(node, &inputs).map(|(s, v)| (id.clone(), s, v))
        });
        for r in results {
            let (id, node_states, verdict) = r?;
            for (fi, st) in node_states {
                let pos = model.flows[fi].path.iter().position(|p| *p == id).expect("on path");
                states.insert((fi, pos), st);
            }
            verdicts.insert(id, verdict);
        }
    }

    let flows: Vec<FlowReport> = model
        .flows
        .iter()
        .enumerate()
        .map(|(fi, f)| flow_report(model, fi, f, &states))
        .collect();
    let ports: Vec<PortVerdict> = model.nodes.iter().filter_map(|n| verdicts.remove(&n.id)).collect();
    let schedulable = flows.iter().all(|f| f.schedulable) && ports.iter().all(|p| p.rate_ok);
    Ok(DelayReport { flows, ports, schedulable })
}

fn flow_report(model: &NetworkModel, fi: usize, f: &FlowSpec, states: &HashMap<(usize, usize), HopState>) -> FlowReport {
    let mut hops = Vec::new();
    let mut residuals = Vec::new();
    let mut error = None;
    for (pos, id) in f.path.iter().enumerate() {
        let node = model.node(id).expect("validated");
        let st = &states[&(fi, pos)];
        let (store_forward, tech_latency) = if pos == 0 {
            (0.0, 0.0)
        } else {
            let upstream = model.node(&f.path[pos - 1]).expect("validated");
            (f.mfs / upstream.link_rate, model.tech_latency)
        };
        let propagation = node.propagation.unwrap_or(model.propagation);
        match (&st.delay, &st.residual) {
            (Ok(d), Ok(r)) => {
                residuals.push(r.clone());
                hops.push(HopReport { node: id.clone(), mux_delay: *d, store_forward, tech_latency, propagation });
            }
            (Err(e), _) | (_, Err(e)) => {
                error.get_or_insert_with(|| format!("{id}: {e}"));
                break;
            }
        }
    }
    let end_to_end = if error.is_some() {
        None
    } else {
        let fixed: f64 = hops.iter().map(|h| h.store_forward + h.tech_latency + h.propagation).sum();
        match model.mode {
            DelayMode::PerHop => Some(fixed + hops.iter().map(|h| h.mux_delay).sum::<f64>()),
            DelayMode::Pboo => match e2e_service(&residuals).and_then(|b| hdev(&f.arrival_curve(), &b)) {
                Ok(d) => Some(fixed + d),
                Err(e) => {
                    error = Some(e.to_string());
                    None
                }
            },
        }
    };
    let deadline_margin = match (f.deadline, end_to_end) {
        (Some(dl), Some(d)) => Some(dl - d),
        _ => None,
    };
    let schedulable = end_to_end.is_some() && deadline_margin.is_none_or(|m| m >= 0.0);
    FlowReport { id: f.id.clone(), class: f.class.clone(), hops, end_to_end, deadline_margin, schedulable, error }
}

/// Rate and deadline verdicts of the whole network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedulability {
    pub ports: Vec<PortVerdict>,
    /// Flow ids missing their deadline or lacking a finite bound.
    pub failing_flows: Vec<String>,
    pub schedulable: bool,
}

pub fn check_schedulability(model: &NetworkModel) -> Result<Schedulability> {
    let report = analyze(model)?;
    Ok(Schedulability {
        failing_flows: report.flows.iter().filter(|f| !f.schedulable).map(|f| f.id.clone()).collect(),
        schedulable: report.schedulable,
        ports: report.ports,
    })
}
