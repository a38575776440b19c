//! Frame-level simulator of one static-priority output port with burst
//! limiting shapers, and checks of simulated traces against analytical bounds.
//!
//! The clock counts integer nanoseconds. Credits are updated once per event:
//! while a frame of the shaped class is on the wire its credit rises at
//! `I_send` and freezes at `L_M`; otherwise it falls at `I_idle` and freezes
//! at zero. Priorities are read when a transmission starts, never during one.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NcError, Result};
use crate::minplus::{ConcaveCurve, ConvexServiceCurve};
use crate::traffic::TrafficClassSpec;

const NS: f64 = 1e9;

/// A port under simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPort {
    pub link_rate: f64,
    pub classes: Vec<TrafficClassSpec>,
    /// Starting credit of shaped classes, zero when absent.
    #[serde(default)]
    pub initial_credit: Vec<(String, f64)>,
}

impl SimPort {
    #[must_use]
    pub fn new(link_rate: f64, classes: Vec<TrafficClassSpec>) -> Self {
        Self { link_rate, classes, initial_credit: Vec::new() }
    }

    #[must_use]
    pub fn with_initial_credit(mut self, class: &str, credit: f64) -> Self {
        self.initial_credit.push((class.to_string(), credit));
        self
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| NcError::InvalidModel(format!("unknown class {name}")))
    }

    /// Wire time of a frame, rounded up to whole nanoseconds.
    #[must_use]
    pub fn tx_ns(&self, bits: u64) -> u64 {
        (bits as f64 * NS / self.link_rate - 1e-9).ceil().max(1.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub arrival_ns: u64,
    pub class: usize,
    pub bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Start,
    Departure,
}

impl EventKind {
    fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Start => "start",
            EventKind::Departure => "departure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time_ns: u64,
    pub class: usize,
    pub kind: EventKind,
    pub bits: u64,
    /// Credit of the event's class, for shaped classes.
    pub credit: Option<f64>,
}

/// One transmitted frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub class: usize,
    pub bits: u64,
    pub arrival_ns: u64,
    pub start_ns: u64,
    pub end_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub classes: Vec<String>,
    pub link_rate: f64,
    pub events: Vec<TraceEvent>,
    /// Transmitted frames in transmission order.
    pub frames: Vec<FrameRecord>,
}

struct Shaper {
    l_m: f64,
    l_r: f64,
    i_idle: f64,
    i_send: f64,
    credit: f64,
    low: bool,
}

impl Shaper {
    fn sending(&mut self, secs: f64) {
        self.credit = (self.credit + self.i_send * secs).min(self.l_m);
        if self.credit >= self.l_m {
            self.low = true;
        }
    }

    fn resting(&mut self, secs: f64) {
        self.credit = (self.credit - self.i_idle * secs).max(0.0);
        if self.low && self.credit <= self.l_r {
            self.low = false;
        }
    }
}

/// Runs the port until every frame arriving before `horizon_ns` has left.
pub fn simulate(port: &SimPort, arrivals: &[Frame], horizon_ns: u64) -> Result<Trace> {
    let n = port.classes.len();
    let mut shapers: Vec<Option<Shaper>> = port
        .classes
        .iter()
        .map(|c| {
            c.bls.map(|b| {
                let i_idle = b.bw * port.link_rate;
                let credit = port.initial_credit.iter().find(|(k, _)| *k == c.name).map_or(0.0, |(_, v)| *v);
                Shaper {
                    l_m: b.l_m,
                    l_r: b.l_r,
                    i_idle,
                    i_send: port.link_rate - i_idle,
                    credit: credit.clamp(0.0, b.l_m),
                    low: credit >= b.l_m,
                }
            })
        })
        .collect();
    if arrivals.iter().any(|f| f.class >= n) {
        return Err(NcError::InvalidModel("frame refers to an unknown class".into()));
    }
    let mut pending: Vec<Frame> = arrivals.iter().copied().filter(|f| f.arrival_ns < horizon_ns).collect();
    // Stable: simultaneous arrivals keep their input order.
    pending.sort_by_key(|f| f.arrival_ns);

    let credit_of = |shapers: &Vec<Option<Shaper>>, k: usize| shapers[k].as_ref().map(|s| s.credit);
    let mut queues: Vec<VecDeque<Frame>> = vec![VecDeque::new(); n];
    let mut events = Vec::with_capacity(pending.len() * 3);
    let mut frames = Vec::with_capacity(pending.len());
    let mut next = 0;
    let mut now: u64 = 0;
    loop {
        while next < pending.len() && pending[next].arrival_ns <= now {
            let f = pending[next];
            events.push(TraceEvent {
                time_ns: f.arrival_ns,
                class: f.class,
                kind: EventKind::Arrival,
                bits: f.bits,
                credit: credit_of(&shapers, f.class),
            });
            queues[f.class].push_back(f);
            next += 1;
        }
        let level = |k: usize| {
            let c = &port.classes[k];
            match (&shapers[k], c.bls) {
                (Some(s), Some(b)) if s.low => b.p_l,
                _ => c.high_priority(),
            }
        };
        let pick = (0..n).filter(|&k| !queues[k].is_empty()).min_by_key(|&k| level(k));
        match pick {
            Some(k) => {
                let f = queues[k].pop_front().expect("non-empty");
                let d = port.tx_ns(f.bits);
                events.push(TraceEvent { time_ns: now, class: k, kind: EventKind::Start, bits: f.bits, credit: credit_of(&shapers, k) });
                let secs = d as f64 / NS;
                for (j, s) in shapers.iter_mut().enumerate() {
                    if let Some(s) = s {
                        if j == k {
                            s.sending(secs);
                        } else {
                            s.resting(secs);
                        }
                    }
                }
                frames.push(FrameRecord { class: k, bits: f.bits, arrival_ns: f.arrival_ns, start_ns: now, end_ns: now + d });
                now += d;
                events.push(TraceEvent { time_ns: now, class: k, kind: EventKind::Departure, bits: f.bits, credit: credit_of(&shapers, k) });
            }
            None if next < pending.len() => {
                let t = pending[next].arrival_ns;
                let secs = (t - now) as f64 / NS;
                for s in shapers.iter_mut().flatten() {
                    s.resting(secs);
                }
                now = t;
            }
            None => break,
        }
    }
    Ok(Trace { classes: port.classes.iter().map(|c| c.name.clone()).collect(), link_rate: port.link_rate, events, frames })
}

impl Trace {
    /// CSV with columns `time_ns,class,event,bits,credit`.
    #[must_use]
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_ns,class,event,bits,credit\n");
        for e in &self.events {
            let credit = e.credit.map(|c| format!("{c:.3}")).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", e.time_ns, self.classes[e.class], e.kind.as_str(), e.bits, credit);
        }
        s
    }

    fn class_frames(&self, k: usize) -> impl Iterator<Item = &FrameRecord> {
        self.frames.iter().filter(move |f| f.class == k)
    }

    /// Cumulative bits of class `k` sent by `t_ns`, counting partial frames.
    #[must_use]
    pub fn departed(&self, k: usize, t_ns: f64) -> f64 {
        self.class_frames(k)
            .map(|f| {
                if t_ns >= f.end_ns as f64 {
                    f.bits as f64
                } else if t_ns <= f.start_ns as f64 {
                    0.0
                } else {
                    f.bits as f64 * (t_ns - f.start_ns as f64) / (f.end_ns - f.start_ns) as f64
                }
            })
            .sum()
    }

    /// Maximal intervals during which some class in `classes` holds
    /// untransmitted bits.
    fn backlogged(&self, classes: &[usize]) -> Vec<(u64, u64)> {
        let mut spans: Vec<(u64, u64)> =
            self.frames.iter().filter(|f| classes.contains(&f.class)).map(|f| (f.arrival_ns, f.end_ns)).collect();
        spans.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for (a, b) in spans {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        out
    }

    /// `(time, cumulative departures)` at `lo`, `hi` and every transmission
    /// boundary of class `k` in between.
    fn departure_points(&self, k: usize, lo: u64, hi: u64) -> Vec<(f64, f64)> {
        let base = self.departed(k, lo as f64);
        let mut pts = vec![(lo as f64, base)];
        let mut acc = base;
        for f in self.class_frames(k).filter(|f| f.end_ns > lo && f.start_ns < hi) {
            let s = f.start_ns.max(lo) as f64;
            let e = f.end_ns.min(hi) as f64;
            let rate = f.bits as f64 / (f.end_ns - f.start_ns) as f64;
            pts.push((s, acc));
            acc += rate * (e - s);
            pts.push((e, acc));
        }
        pts.push((hi as f64, acc));
        pts
    }
}

/// First bound violated by a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Service over `[from, to]` fell short of the minimum service curve.
    MinService { from_ns: f64, to_ns: f64, served: f64, bound: f64 },
    /// Service over `[from, to]` exceeded the maximum service curve.
    MaxService { from_ns: f64, to_ns: f64, served: f64, bound: f64 },
    /// A frame stayed longer than the delay bound.
    Delay { arrival_ns: u64, end_ns: u64, bound_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub first: Violation,
    pub count: usize,
}

/// What to check for one class of a trace.
#[derive(Debug, Clone)]
pub struct Bounds<'a> {
    pub class: usize,
    /// Strict minimum service, checked on every backlogged period.
    pub beta: &'a ConvexServiceCurve,
    /// Maximum service and the classes whose joint backlog enables it.
    pub gamma: Option<(&'a ConcaveCurve, &'a [usize])>,
    /// Delay bound in seconds.
    pub delay: f64,
}

const SLACK_BITS: f64 = 1.0;

pub fn validate_against_bounds(trace: &Trace, b: &Bounds<'_>) -> std::result::Result<(), ViolationReport> {
    let mut found: Vec<Violation> = Vec::new();
    let k = b.class;

    for (lo, hi) in trace.backlogged(&[k]) {
        let pts = trace.departure_points(k, lo, hi);
        'period: for (i, &(u, du)) in pts.iter().enumerate() {
            for &(t, dt) in &pts[i + 1..] {
                let bound = b.beta.eval((t - u) / NS);
                if dt - du < bound - SLACK_BITS {
                    found.push(Violation::MinService { from_ns: u, to_ns: t, served: dt - du, bound });
                    break 'period;
                }
            }
        }
    }

    if let Some((gamma, enablers)) = b.gamma {
        for (lo, hi) in trace.backlogged(enablers) {
            let pts = trace.departure_points(k, lo, hi);
            for p in gamma.pieces() {
                // max over s <= t of (D(t) - r t) - (D(s) - r s) must stay below b.
                let mut lowest = f64::INFINITY;
                let mut at = 0.0;
                for &(t, d) in &pts {
                    let v = d - p.rate * t / NS;
                    if v < lowest {
                        lowest = v;
                        at = t;
                    }
                    if v - lowest > p.burst + SLACK_BITS {
                        let served = d - trace.departed(k, at);
                        found.push(Violation::MaxService { from_ns: at, to_ns: t, served, bound: gamma.eval((t - at) / NS) });
                        break;
                    }
                }
            }
        }
    }

    let limit = b.delay * NS + 1.0;
    for f in trace.class_frames(k) {
        if (f.end_ns - f.arrival_ns) as f64 > limit {
            found.push(Violation::Delay { arrival_ns: f.arrival_ns, end_ns: f.end_ns, bound_s: b.delay });
        }
    }

    match found.first() {
        None => Ok(()),
        Some(first) => Err(ViolationReport { first: first.clone(), count: found.len() }),
    }
}

/// Periodic source used by the trace generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimFlow {
    pub class: usize,
    pub count: u64,
    pub bag_ns: u64,
    pub mfs_bits: u64,
}

/// Random traffic respecting each flow's leaky bucket: random phase, gaps of
/// at least one BAG, sizes up to the maximum frame. Keeps the `frames`
/// earliest frames.
#[must_use]
pub fn random_frames(flows: &[SimFlow], frames: usize, seed: u64) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_rate: f64 = flows.iter().map(|f| f.count as f64 / f.bag_ns as f64).sum();
    let horizon = (frames as f64 / total_rate * 1.2) as u64 + flows.iter().map(|f| f.bag_ns).max().unwrap_or(0);
    let mut out = Vec::new();
    for f in flows {
        for _ in 0..f.count {
            let mut t = rng.gen_range(0..f.bag_ns);
            while t < horizon {
                let bits = if rng.gen_bool(0.8) { f.mfs_bits } else { rng.gen_range(f.mfs_bits.min(512)..=f.mfs_bits) };
                out.push(Frame { arrival_ns: t, class: f.class, bits });
                t += f.bag_ns + rng.gen_range(0..=f.bag_ns / 4);
            }
        }
    }
    out.sort_by_key(|f| f.arrival_ns);
    out.truncate(frames);
    out
}

/// Saturating pattern for a shaped class: a lower-priority frame grabs the
/// link first, then the shaped class and its medium classes arrive with
/// enough backlog to last `span_ns`.
#[must_use]
pub fn worst_pattern(
    port: &SimPort,
    shaped: usize,
    shaped_frames: u64,
    shaped_bits: u64,
    medium: &[(usize, u64)],
    lower: Option<(usize, u64)>,
    span_ns: u64,
) -> Vec<Frame> {
    let mut out = Vec::new();
    let start = if let Some((class, bits)) = lower {
        out.push(Frame { arrival_ns: 0, class, bits });
        1
    } else {
        0
    };
    for _ in 0..shaped_frames {
        out.push(Frame { arrival_ns: start, class: shaped, bits: shaped_bits });
    }
    for &(class, bits) in medium {
        let count = span_ns / port.tx_ns(bits) + 1;
        for _ in 0..count {
            out.push(Frame { arrival_ns: start, class, bits });
        }
    }
    out
}

/// The two credit trajectories contrasted when arguing that full backlog is
/// not the worst case for a shaped class.
///
/// Both start with the credit at `L_M` and the shaped class backlogged. In
/// the first the medium class stays backlogged; in the second it only holds
/// enough frames to bring the credit down to `L_M / 2`, then returns once the
/// shaped class has pushed the credit back up to `L_M`.
#[derive(Debug, Clone)]
pub struct BacklogContrast {
    pub port: SimPort,
    pub backlogged: Vec<Frame>,
    pub interrupted: Vec<Frame>,
    pub horizon_ns: u64,
}

pub fn backlog_contrast(port: &SimPort, shaped: usize, medium: usize, shaped_bits: u64, medium_bits: u64) -> Result<BacklogContrast> {
    let bls = port.classes[shaped].bls.ok_or_else(|| NcError::InvalidModel("first class must be shaped".into()))?;
    let c = port.link_rate;
    let i_idle = bls.bw * c;
    let i_send = c - i_idle;
    let port = port.clone().with_initial_credit(&port.classes[shaped].name, bls.l_m);

    let cycle = (bls.l_m - bls.l_r) / i_idle + (bls.l_m - bls.l_r) / i_send;
    let horizon_ns = (4.0 * cycle * NS) as u64;
    let shaped_count = (horizon_ns as f64 * 1e-9 * c / shaped_bits as f64) as u64 + 1;
    let medium_count = (horizon_ns as f64 * 1e-9 * c / medium_bits as f64) as u64 + 1;

    let shaped_burst = || (0..shaped_count).map(move |_| Frame { arrival_ns: 0, class: shaped, bits: shaped_bits });
    let backlogged: Vec<Frame> = shaped_burst()
        .chain((0..medium_count).map(|_| Frame { arrival_ns: 0, class: medium, bits: medium_bits }))
        .collect();

    // Medium frames until the credit falls to L_M / 2, then silence until
    // the shaped class has refilled the credit.
    let first = ((bls.l_m / 2.0) / i_idle * c / medium_bits as f64).ceil().max(1.0) as u64;
    let t0 = first * port.tx_ns(medium_bits);
    let refill = ((bls.l_m / 2.0) / i_send * c / shaped_bits as f64).ceil() as u64 * port.tx_ns(shaped_bits);
    let t1 = t0 + refill;
    let mut interrupted: Vec<Frame> = shaped_burst().collect();
    interrupted.extend((0..first).map(|_| Frame { arrival_ns: 0, class: medium, bits: medium_bits }));
    interrupted.extend((0..medium_count).map(|_| Frame { arrival_ns: t1, class: medium, bits: medium_bits }));
    Ok(BacklogContrast { port, backlogged, interrupted, horizon_ns })
}
