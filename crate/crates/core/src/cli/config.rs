//! Versioned JSON configuration.
//!
//! Quantities carry their unit: sizes are byte counts or strings such as
//! `"64B"` or `"22118b"`, durations are seconds or strings such as `"2ms"` or
//! `"500us"`, rates are bits per second or strings such as `"1Gbps"`.
//! Everything is normalized to bits, seconds and bits per second on load.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::awc::{AwcClass, AwcConfig};
use crate::bls::BlsParams;
use crate::mux::{partition, PortClass, PortInput};
use crate::netanalysis::{DelayMode, NetworkModel, NodeKind, NodeSpec, DEFAULT_TECH_LATENCY};
use crate::traffic::{flows_for_utilization, homogeneous_curve, FlowSpec, TrafficClassSpec};

pub const CONFIG_VERSION: u32 = 1;

/// Problem with a configuration file, located by the path to the field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

fn split_unit(s: &str) -> Option<(f64, &str)> {
    let s = s.trim();
    let idx = s
        .char_indices()
        .find(|&(i, c)| c.is_alphabetic() && !(c == 'e' && s[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')) || c == 'µ')
        .map_or(s.len(), |(i, _)| i);
    let value: f64 = s[..idx].trim().parse().ok()?;
    Some((value, s[idx..].trim()))
}

macro_rules! unit_type {
    ($name:ident, $what:literal, $plain:expr, [$($unit:literal => $scale:expr),* $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        pub struct $name(pub f64);

        impl $name {
            pub fn parse(s: &str) -> std::result::Result<f64, String> {
                let (v, unit) = split_unit(s).ok_or_else(|| format!(concat!("cannot read ", $what, " {:?}"), s))?;
                let scale = match unit {
                    "" => $plain,
                    $($unit => $scale,)*
                    other => return Err(format!(concat!("unknown ", $what, " unit {:?}"), other)),
                };
                Ok(v * scale)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                #[derive(Deserialize)]
                #[serde(untagged)]
                enum Raw {
                    Num(f64),
                    Text(String),
                }
                let v = match Raw::deserialize(d)? {
                    Raw::Num(x) => x * $plain,
                    Raw::Text(s) => Self::parse(&s).map_err(de::Error::custom)?,
                };
                if !v.is_finite() || v < 0.0 {
                    return Err(de::Error::custom(concat!($what, " must be finite and non-negative")));
                }
                Ok($name(v))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_f64(self.0 / $plain)
            }
        }
    };
}

unit_type!(Size, "size", 8.0, ["B" => 8.0, "b" => 1.0, "bit" => 1.0, "bits" => 1.0, "kB" => 8e3, "kb" => 1e3]);
unit_type!(Duration, "duration", 1.0, ["s" => 1.0, "ms" => 1e-3, "us" => 1e-6, "µs" => 1e-6, "ns" => 1e-9]);
unit_type!(Rate, "rate", 1.0, ["bps" => 1.0, "kbps" => 1e3, "Mbps" => 1e6, "Gbps" => 1e9]);

/// Resume level of a shaper: a size, or `"auto"` for the largest frame of
/// the medium classes times the reserved bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResumeLevel {
    Fixed(f64),
    Auto,
}

impl<'de> Deserialize<'de> for ResumeLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) if s == "auto" => Ok(ResumeLevel::Auto),
            Raw::Text(s) => Size::parse(&s).map(ResumeLevel::Fixed).map_err(de::Error::custom),
            Raw::Num(x) => Ok(ResumeLevel::Fixed(x * 8.0)),
        }
    }
}

impl Serialize for ResumeLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ResumeLevel::Auto => s.serialize_str("auto"),
            ResumeLevel::Fixed(b) => s.serialize_str(&format!("{b}b")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlsConfig {
    pub l_m: Size,
    pub l_r: ResumeLevel,
    pub bw: f64,
    pub p_h: u32,
    pub p_l: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub name: String,
    /// Priority of an unshaped class; shaped classes use `bls.p_h`.
    #[serde(default)]
    pub priority: Option<u32>,
    #[serde(default)]
    pub bls: Option<BlsConfig>,
}

/// Offered load of one class: a flow count or a utilization of the reference
/// link rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Load {
    Count(u64),
    Ur(f64),
}

/// Identical flows of one class entering a single port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassTraffic {
    pub class: String,
    pub mfs: Size,
    pub bag: Duration,
    #[serde(default)]
    pub jitter: Duration,
    pub load: Load,
}

fn default_links() -> u64 {
    2
}

/// A single output port fed by per-class aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortConfig {
    pub traffic: Vec<ClassTraffic>,
    /// Input links over which each class's flows are spread, used by the
    /// achievable worst-case constructions.
    #[serde(default = "default_links")]
    pub awc_links: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub link_rate: Option<Rate>,
    #[serde(default)]
    pub propagation: Option<Duration>,
    /// Whether the shapers are installed on this port. Without them a
    /// shaped class is scheduled at its high priority.
    #[serde(default = "yes")]
    pub shaped: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub id: String,
    pub class: String,
    pub bag: Duration,
    pub mfs: Size,
    #[serde(default)]
    pub jitter: Duration,
    #[serde(default)]
    pub deadline: Option<Duration>,
    pub path: Vec<String>,
}

/// Identical flows replicated on several paths. With a utilization load,
/// the per-path count is the smallest one whose total reaches the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowGroup {
    pub prefix: String,
    pub class: String,
    pub bag: Duration,
    pub mfs: Size,
    #[serde(default)]
    pub jitter: Duration,
    #[serde(default)]
    pub deadline: Option<Duration>,
    pub load: Load,
    pub paths: Vec<Vec<String>>,
}

fn default_tech() -> Duration {
    Duration(DEFAULT_TECH_LATENCY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default = "default_tech")]
    pub tech_latency: Duration,
    #[serde(default)]
    pub propagation: Duration,
    #[serde(default)]
    pub mode: DelayMode,
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub flows: Vec<FlowConfig>,
    #[serde(default)]
    pub flow_groups: Vec<FlowGroup>,
}

/// Parameter varied by a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweptParam {
    Ur { class: String },
    LM { class: String },
    LR { class: String },
    Bw { class: String },
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (k, c) = match self {
            SweptParam::Ur { class } => ("ur", class),
            SweptParam::LM { class } => ("l_m", class),
            SweptParam::LR { class } => ("l_r", class),
            SweptParam::Bw { class } => ("bw", class),
        };
        write!(f, "{k}:{c}")
    }
}

/// Grid values: an explicit list, `start:step:stop` inclusive, or evenly
/// spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, step: f64, stop: f64 },
    Linspace { from: f64, to: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { start, step, stop } => {
                if *step <= 0.0 {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n < 0.0 {
                    return Vec::new();
                }
                (0..=n as usize).map(|i| start + step * i as f64).collect()
            }
            Grid::Linspace { from, to, points } => match points {
                0 => Vec::new(),
                1 => vec![*from],
                n => (0..*n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Nc,
    Awc,
    Sim,
}

fn default_outputs() -> Vec<Output> {
    vec![Output::Nc, Output::Awc]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub param: SweptParam,
    pub grid: Grid,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwcClassConfig {
    pub n_in: u64,
    pub n_links: u64,
    pub mfs: Size,
    pub bag: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwcFileConfig {
    pub l_m: Size,
    pub l_r: Size,
    pub bw: f64,
    pub shaped: AwcClassConfig,
    pub unshaped: AwcClassConfig,
    pub lower_mfs: Size,
}

fn default_frames() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub description: Option<String>,
    /// Default link rate and reference rate for utilization loads.
    pub link_rate: Rate,
    #[serde(default)]
    pub classes: Vec<ClassConfig>,
    #[serde(default)]
    pub port: Option<PortConfig>,
    #[serde(default)]
    pub network: Option<NetworkConfig>,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub awc: Option<AwcFileConfig>,
    #[serde(default)]
    pub simulation: Option<SimConfig>,
}

/// Single-port model ready for analysis.
#[derive(Debug, Clone)]
pub struct PortModel {
    pub input: PortInput,
    /// Flow count, frame size and BAG per class, in port order.
    pub counts: Vec<(u64, f64, f64)>,
    pub awc_links: u64,
}

impl PortModel {
    /// Achievable worst-case setting for shaped class `k` and its single
    /// medium class, or `None` when the port does not have that shape.
    pub fn awc_config(&self, k: usize) -> Option<(AwcConfig, usize)> {
        let specs: Vec<TrafficClassSpec> = self.input.classes.iter().map(|c| c.spec.clone()).collect();
        let bls = specs[k].bls?;
        let part = partition(&specs, &specs[k].name).ok()?;
        if part.mc.len() != 1 {
            return None;
        }
        let u = specs.iter().position(|s| part.mc.contains(&s.name))?;
        let lower = specs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.high_priority() > bls.p_l)
            .map(|(i, _)| self.input.classes[i].mfs)
            .fold(0.0, f64::max);
        let class = |i: usize| {
            let (n, mfs, bag) = self.counts[i];
            AwcClass { n_in: n, n_links: self.awc_links.max(1), mfs, bag }
        };
        Some((AwcConfig { link_rate: self.input.link_rate, bls, shaped: class(k), unshaped: class(u), lower_mfs: lower }, u))
    }
}

/// Reads a configuration, reporting the path to any offending field.
pub fn parse(text: &str) -> std::result::Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| err(e.path().to_string(), e.inner().to_string()))?;
    if cfg.version != CONFIG_VERSION {
        return Err(err("version", format!("unsupported version {}, expected {CONFIG_VERSION}", cfg.version)));
    }
    if !(cfg.link_rate.0 > 0.0) {
        return Err(err("link_rate", "must be positive"));
    }
    for (i, c) in cfg.classes.iter().enumerate() {
        match (&c.priority, &c.bls) {
            (None, None) => return Err(err(format!("classes[{i}]"), "needs a priority or a shaper")),
            (_, Some(b)) if !(b.bw > 0.0 && b.bw < 1.0) => {
                return Err(err(format!("classes[{i}].bls.bw"), "must lie in (0, 1)"))
            }
            _ => {}
        }
        if cfg.classes[..i].iter().any(|o| o.name == c.name) {
            return Err(err(format!("classes[{i}].name"), format!("duplicate class {}", c.name)));
        }
    }
    if let Some(s) = &cfg.scenario {
        let v = s.grid.values();
        if v.is_empty() {
            return Err(err("scenario.grid", "grid is empty"));
        }
        if !v.windows(2).all(|w| w[1] > w[0]) && !v.windows(2).all(|w| w[1] < w[0]) {
            return Err(err("scenario.grid", "grid must be strictly monotone"));
        }
        let class = match &s.param {
            SweptParam::Ur { class } | SweptParam::LM { class } | SweptParam::LR { class } | SweptParam::Bw { class } => class,
        };
        let known = cfg.classes.iter().find(|c| &c.name == class);
        match (&s.param, known) {
            (_, None) => return Err(err("scenario.param.class", format!("unknown class {class}"))),
            (SweptParam::Ur { .. }, _) => {}
            (_, Some(c)) if c.bls.is_none() => {
                return Err(err("scenario.param.class", format!("class {class} has no shaper")))
            }
            _ => {}
        }
    }
    Ok(cfg)
}

impl Config {
    fn class_index(&self, name: &str, path: &str) -> std::result::Result<usize, ConfigError> {
        self.classes.iter().position(|c| c.name == name).ok_or_else(|| err(path, format!("unknown class {name}")))
    }

    /// Largest frame of each class over the whole configuration.
    fn class_mfs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.classes.len()];
        let mut note = |class: &str, mfs: f64| {
            if let Some(i) = self.classes.iter().position(|c| c.name == class) {
                out[i] = f64::max(out[i], mfs);
            }
        };
        if let Some(p) = &self.port {
            for t in &p.traffic {
                note(&t.class, t.mfs.0);
            }
        }
        if let Some(n) = &self.network {
            for f in &n.flows {
                note(&f.class, f.mfs.0);
            }
            for g in &n.flow_groups {
                note(&g.class, g.mfs.0);
            }
        }
        out
    }

    /// Class specs with resolved resume levels.
    pub fn class_specs(&self) -> std::result::Result<Vec<TrafficClassSpec>, ConfigError> {
        let mfs = self.class_mfs();
        let provisional: Vec<TrafficClassSpec> = self
            .classes
            .iter()
            .map(|c| match &c.bls {
                Some(b) => TrafficClassSpec::shaped(&c.name, BlsParams { l_m: b.l_m.0, l_r: 0.0, bw: b.bw, p_h: b.p_h, p_l: b.p_l }),
                None => TrafficClassSpec::plain(&c.name, c.priority.unwrap_or(0)),
            })
            .collect();
        let mut specs = provisional.clone();
        for (i, c) in self.classes.iter().enumerate() {
            let Some(b) = &c.bls else { continue };
            let l_r = match b.l_r {
                ResumeLevel::Fixed(v) => v,
                ResumeLevel::Auto => {
                    let part = partition(&provisional, &c.name).map_err(|e| err(format!("classes[{i}].bls"), e.to_string()))?;
                    let mc = provisional
                        .iter()
                        .zip(&mfs)
                        .filter(|(s, _)| part.mc.contains(&s.name))
                        .map(|(_, m)| *m)
                        .fold(0.0, f64::max);
                    mc * b.bw
                }
            };
            let params = BlsParams { l_m: b.l_m.0, l_r, bw: b.bw, p_h: b.p_h, p_l: b.p_l };
            params.validate().map_err(|e| err(format!("classes[{i}].bls"), e.to_string()))?;
            specs[i].bls = Some(params);
        }
        Ok(specs)
    }

    fn count(&self, load: Load, mfs: f64, bag: f64, paths: usize) -> u64 {
        match load {
            Load::Count(n) => n,
            Load::Ur(ur) => {
                let total = flows_for_utilization(ur, self.link_rate.0, mfs, bag);
                total.div_ceil(paths.max(1) as u64)
            }
        }
    }

    pub fn port_model(&self) -> std::result::Result<PortModel, ConfigError> {
        let port = self.port.as_ref().ok_or_else(|| err("port", "missing port section"))?;
        let specs = self.class_specs()?;
        let mut classes: Vec<PortClass> = specs
            .iter()
            .map(|s| PortClass { spec: s.clone(), arrival: crate::minplus::ConcaveCurve::zero(), mfs: 0.0 })
            .collect();
        let mut counts = vec![(0, 0.0, 1.0); specs.len()];
        for (i, t) in port.traffic.iter().enumerate() {
            let path = format!("port.traffic[{i}]");
            let k = self.class_index(&t.class, &format!("{path}.class"))?;
            if !(t.mfs.0 > 0.0 && t.bag.0 > 0.0) {
                return Err(err(path, "mfs and bag must be positive"));
            }
            let n = self.count(t.load, t.mfs.0, t.bag.0, 1);
            let curve = homogeneous_curve(n, t.mfs.0, t.bag.0, t.jitter.0);
            classes[k].arrival = classes[k].arrival.add(&curve);
            if n > 0 {
                classes[k].mfs = classes[k].mfs.max(t.mfs.0);
            }
            counts[k] = (counts[k].0 + n, t.mfs.0, t.bag.0);
        }
        Ok(PortModel { input: PortInput { link_rate: self.link_rate.0, classes }, counts, awc_links: port.awc_links })
    }

    pub fn network_model(&self) -> std::result::Result<NetworkModel, ConfigError> {
        let net = self.network.as_ref().ok_or_else(|| err("network", "missing network section"))?;
        let specs = self.class_specs()?;
        let nodes = net
            .nodes
            .iter()
            .map(|n| NodeSpec {
                id: n.id.clone(),
                kind: n.kind,
                link_rate: n.link_rate.map_or(self.link_rate.0, |r| r.0),
                classes: if n.shaped {
                    specs.clone()
                } else {
                    specs.iter().map(|c| TrafficClassSpec::plain(&c.name, c.high_priority())).collect()
                },
                propagation: n.propagation.map(|p| p.0),
            })
            .collect();
        let mut flows: Vec<FlowSpec> = Vec::new();
        for (i, f) in net.flows.iter().enumerate() {
            self.class_index(&f.class, &format!("network.flows[{i}].class"))?;
            flows.push(FlowSpec {
                id: f.id.clone(),
                class: f.class.clone(),
                bag: f.bag.0,
                mfs: f.mfs.0,
                jitter: f.jitter.0,
                deadline: f.deadline.map(|d| d.0),
                path: f.path.clone(),
            });
        }
        for (i, g) in net.flow_groups.iter().enumerate() {
            self.class_index(&g.class, &format!("network.flow_groups[{i}].class"))?;
            if g.paths.is_empty() {
                return Err(err(format!("network.flow_groups[{i}].paths"), "no paths"));
            }
            let n = self.count(g.load, g.mfs.0, g.bag.0, g.paths.len());
            for (p, path) in g.paths.iter().enumerate() {
                for j in 0..n {
                    flows.push(FlowSpec {
                        id: format!("{}.{p}.{j}", g.prefix),
                        class: g.class.clone(),
                        bag: g.bag.0,
                        mfs: g.mfs.0,
                        jitter: g.jitter.0,
                        deadline: g.deadline.map(|d| d.0),
                        path: path.clone(),
                    });
                }
            }
        }
        Ok(NetworkModel { nodes, flows, tech_latency: net.tech_latency.0, propagation: net.propagation.0, mode: net.mode })
    }

    pub fn awc_model(&self) -> std::result::Result<AwcConfig, ConfigError> {
        let a = self.awc.as_ref().ok_or_else(|| err("awc", "missing awc section"))?;
        let class = |c: &AwcClassConfig| AwcClass { n_in: c.n_in, n_links: c.n_links, mfs: c.mfs.0, bag: c.bag.0 };
        let bls = BlsParams { l_m: a.l_m.0, l_r: a.l_r.0, bw: a.bw, p_h: 0, p_l: 2 };
        bls.validate().map_err(|e| err("awc", e.to_string()))?;
        Ok(AwcConfig { link_rate: self.link_rate.0, bls, shaped: class(&a.shaped), unshaped: class(&a.unshaped), lower_mfs: a.lower_mfs.0 })
    }

    /// Copy of the configuration with one parameter set to `value`.
    pub fn with_param(&self, param: &SweptParam, value: f64) -> Config {
        let mut cfg = self.clone();
        fn bls_of<'a>(cfg: &'a mut Config, class: &str) -> Option<&'a mut BlsConfig> {
            cfg.classes.iter_mut().find(|c| c.name == class).and_then(|c| c.bls.as_mut())
        }
        match param {
            SweptParam::Ur { class } => {
                if let Some(p) = cfg.port.as_mut() {
                    for t in p.traffic.iter_mut().filter(|t| &t.class == class) {
                        t.load = Load::Ur(value);
                    }
                }
                if let Some(n) = cfg.network.as_mut() {
                    for g in n.flow_groups.iter_mut().filter(|g| &g.class == class) {
                        g.load = Load::Ur(value);
                    }
                }
            }
            SweptParam::LM { class } => {
                if let Some(b) = bls_of(&mut cfg, class) {
                    b.l_m = Size(value);
                }
            }
            SweptParam::LR { class } => {
                if let Some(b) = bls_of(&mut cfg, class) {
                    b.l_r = ResumeLevel::Fixed(value);
                }
            }
            SweptParam::Bw { class } => {
                if let Some(b) = bls_of(&mut cfg, class) {
                    b.bw = value;
                }
            }
        }
        cfg
    }
}
