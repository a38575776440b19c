//! Command-line front end: configuration loading, sweeps and reports.
//!
//! Exit codes: 0 success, 1 analysis infeasible (or a deadline missed under
//! `--strict`), 2 configuration error.

pub mod config;
pub mod scenario;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::awc::{awc_delay, Case, Side};
use crate::blssim::{random_frames, simulate as run_sim, validate_against_bounds, Bounds, SimFlow, SimPort};
use crate::mux::{partition, port_curves};
use crate::netanalysis::{analyze, class_delays};
pub use config::{parse, Config, ConfigError};
pub use scenario::{compare, run_scenario, Row, CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "blsnc", version, about = "Delay bounds for static-priority ports with burst limiting shapers")]
pub struct Cli {
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory receiving two-column plot files.
    #[arg(long, global = true, value_name = "DIR")]
    pub plotdata: Option<PathBuf>,
    /// Fail when a deadline is missed or a bound falls below its reference.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Relative tolerance for deadline and reference comparisons.
    #[arg(long, global = true, value_name = "REL", default_value_t = 1e-9)]
    pub tolerance: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Delay bounds of every flow (network) or class (port).
    Analyze { config: PathBuf },
    /// Runs the scenario sweep of a configuration.
    Sweep { config: PathBuf },
    /// Achievable worst-case delays of a three-class port.
    Awc { config: PathBuf },
    /// Simulates a port with random traffic and checks it against the bounds.
    Simulate { config: PathBuf },
    /// Bounds with shapers against plain static priority.
    Compare { config: PathBuf },
}

/// Outcome of a command: text to print and an exit code.
struct Outcome {
    text: String,
    code: i32,
}

fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { path: String::new(), message: format!("{}: {e}", path.display()) })?;
    parse(&text)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_plot(dir: &Path, name: &str, points: &[(f64, f64)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut s = String::new();
    for (x, y) in points {
        let _ = writeln!(s, "{x} {y}");
    }
    std::fs::write(dir.join(name), s)
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    if let Some(n) = cli.threads {
        crate::par::set_threads(n);
    }
    match dispatch(&cli) {
        Ok(o) => {
            let _ = out.write_all(o.text.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "config error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, ConfigError> {
    match &cli.command {
        Command::Analyze { config } => cmd_analyze(cli, &load(config)?),
        Command::Sweep { config } => cmd_sweep(cli, &load(config)?),
        Command::Awc { config } => cmd_awc(cli, &load(config)?),
        Command::Simulate { config } => cmd_simulate(cli, &load(config)?),
        Command::Compare { config } => cmd_compare(cli, &load(config)?),
    }
}

fn within(delay: f64, limit: f64, tol: f64) -> bool {
    delay <= limit * (1.0 + tol)
}

fn cmd_analyze(cli: &Cli, cfg: &Config) -> Result<Outcome, ConfigError> {
    if cfg.port.is_some() {
        let model = cfg.port_model()?;
        let delays = class_delays(&model.input).map_err(|e| ConfigError { path: "port".into(), message: e.to_string() })?;
        #[derive(Serialize)]
        struct ClassRow {
            class: String,
            nc_delay_s: Option<f64>,
            sp_delay_s: Option<f64>,
            bls_delay_s: Option<f64>,
            verdict: Option<String>,
        }
        let rows: Vec<ClassRow> = delays
            .into_iter()
            .map(|d| ClassRow {
                class: d.name,
                nc_delay_s: d.delay.as_ref().ok().copied(),
                sp_delay_s: d.sp_delay,
                bls_delay_s: d.bls_delay,
                verdict: d.delay.err().map(|e| e.to_string()),
            })
            .collect();
        let code = if rows.iter().any(|r| r.verdict.is_some()) { EXIT_INFEASIBLE } else { EXIT_OK };
        let text = if cli.json {
            json(&rows)
        } else {
            let mut s = String::from("class,nc_delay_s,sp_delay_s,bls_delay_s\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{},{}", r.class, opt(r.nc_delay_s), opt(r.sp_delay_s), opt(r.bls_delay_s));
            }
            s
        };
        return Ok(Outcome { text, code });
    }
    let model = cfg.network_model()?;
    let report = analyze(&model).map_err(|e| ConfigError { path: "network".into(), message: e.to_string() })?;
    let infeasible = report.flows.iter().any(|f| f.end_to_end.is_none()) || report.ports.iter().any(|p| !p.rate_ok);
    let missed = report
        .flows
        .iter()
        .zip(&model.flows)
        .any(|(r, f)| matches!((r.end_to_end, f.deadline), (Some(d), Some(dl)) if !within(d, dl, cli.tolerance)));
    let code = if infeasible || (cli.strict && missed) { EXIT_INFEASIBLE } else { EXIT_OK };
    let text = if cli.json {
        json(&report)
    } else {
        let mut s = String::from("flow,class,end_to_end_s,deadline_margin_s,schedulable\n");
        for f in &report.flows {
            let _ = writeln!(s, "{},{},{},{},{}", f.id, f.class, opt(f.end_to_end), opt(f.deadline_margin), f.schedulable);
        }
        s
    };
    Ok(Outcome { text, code })
}

fn cmd_sweep(cli: &Cli, cfg: &Config) -> Result<Outcome, ConfigError> {
    let rows = run_scenario(cfg)?;
    if let Some(dir) = &cli.plotdata {
        let name = &cfg.scenario.as_ref().expect("checked by run_scenario").name;
        let io = |e: std::io::Error| ConfigError { path: "--plotdata".into(), message: e.to_string() };
        for c in &cfg.classes {
            let mine = rows.iter().filter(|r| r.class == c.name);
            let nc: Vec<(f64, f64)> = mine.clone().filter_map(|r| Some((r.value, r.nc_delay_s?))).collect();
            let awc: Vec<(f64, f64)> = mine.filter_map(|r| Some((r.value, r.awc_delay_s?))).collect();
            write_plot(dir, &format!("{name}_{}_nc.dat", c.name), &nc).map_err(io)?;
            if !awc.is_empty() {
                write_plot(dir, &format!("{name}_{}_awc.dat", c.name), &awc).map_err(io)?;
            }
        }
    }
    let below_reference = rows
        .iter()
        .any(|r| matches!((r.nc_delay_s, r.awc_delay_s), (Some(nc), Some(a)) if !within(a, nc, cli.tolerance)));
    let unschedulable = rows.iter().any(|r| !r.schedulable);
    let code = if cli.strict && (below_reference || unschedulable) { EXIT_INFEASIBLE } else { EXIT_OK };
    let text = if cli.json {
        json(&rows)
    } else {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    };
    Ok(Outcome { text, code })
}

fn cmd_awc(cli: &Cli, cfg: &Config) -> Result<Outcome, ConfigError> {
    let a = cfg.awc_model()?;
    #[derive(Serialize)]
    struct AwcRow {
        side: Side,
        case: Case,
        delay_s: Option<f64>,
        iterations: Option<usize>,
        monotone: Option<bool>,
        verdict: Option<String>,
    }
    let mut rows = Vec::new();
    for side in [Side::Shaped, Side::Unshaped] {
        for case in [Case::Awc1, Case::Awc2] {
            let r = awc_delay(&a, side, case);
            rows.push(AwcRow {
                side,
                case,
                delay_s: r.as_ref().ok().map(|r| r.delay),
                iterations: r.as_ref().ok().map(|r| r.iterations),
                monotone: r.as_ref().ok().map(|r| r.monotone),
                verdict: r.err().map(|e| e.to_string()),
            });
        }
    }
    let code = if rows.iter().any(|r| r.verdict.is_some()) { EXIT_INFEASIBLE } else { EXIT_OK };
    let text = if cli.json {
        json(&rows)
    } else {
        let mut s = String::from("side,case,delay_s,iterations,monotone\n");
        for r in &rows {
            let side = if r.side == Side::Shaped { "shaped" } else { "unshaped" };
            let case = if r.case == Case::Awc1 { "awc1" } else { "awc2" };
            let it = r.iterations.map(|i| i.to_string()).unwrap_or_default();
            let mono = r.monotone.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{side},{case},{},{it},{mono}", opt(r.delay_s));
        }
        s
    };
    Ok(Outcome { text, code })
}

fn cmd_simulate(cli: &Cli, cfg: &Config) -> Result<Outcome, ConfigError> {
    let model = cfg.port_model()?;
    let sim = cfg.simulation.clone().unwrap_or(config::SimConfig { frames: 10_000, seed: 0 });
    let infeasible = |e: crate::NcError| ConfigError { path: "port".into(), message: e.to_string() };
    let curves = port_curves(&model.input).map_err(infeasible)?;
    let delays = class_delays(&model.input).map_err(infeasible)?;
    let specs: Vec<_> = model.input.classes.iter().map(|c| c.spec.clone()).collect();
    let flows: Vec<SimFlow> = model
        .counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.0 > 0)
        .map(|(k, &(n, mfs, bag))| SimFlow { class: k, count: n, bag_ns: (bag * 1e9).round() as u64, mfs_bits: mfs.round() as u64 })
        .collect();
    let port = SimPort::new(model.input.link_rate, specs.clone());
    let trace = run_sim(&port, &random_frames(&flows, sim.frames, sim.seed), u64::MAX).map_err(infeasible)?;

    #[derive(Serialize)]
    struct SimRow {
        class: String,
        frames: usize,
        max_delay_s: f64,
        nc_delay_s: Option<f64>,
        violations: usize,
        first_violation: Option<String>,
    }
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for (k, cs) in curves.classes.iter().enumerate() {
        let frames: Vec<_> = trace.frames.iter().filter(|f| f.class == k).collect();
        let max_delay = frames.iter().map(|f| (f.end_ns - f.arrival_ns) as f64 * 1e-9).fold(0.0, f64::max);
        let nc = delays[k].delay.as_ref().ok().copied();
        let (violations, first) = match (&cs.beta, nc) {
            (Some(beta), Some(delay)) => {
                let mc: Vec<usize> = match partition(&specs, &cs.name) {
                    Ok(p) if cs.shaper.is_some() => {
                        specs.iter().enumerate().filter(|(_, s)| p.mc.contains(&s.name)).map(|(i, _)| i).collect()
                    }
                    _ => Vec::new(),
                };
                let gamma = cs.shaper.as_ref().map(|s| (&s.gamma, mc.as_slice()));
                match validate_against_bounds(&trace, &Bounds { class: k, beta, gamma, delay }) {
                    Ok(()) => (0, None),
                    Err(r) => (r.count, Some(format!("{:?}", r.first))),
                }
            }
            _ if frames.is_empty() => (0, None),
            _ => {
                code = EXIT_INFEASIBLE;
                (0, Some("no finite bound".to_string()))
            }
        };
        if violations > 0 {
            code = EXIT_INFEASIBLE;
        }
        rows.push(SimRow { class: cs.name.clone(), frames: frames.len(), max_delay_s: max_delay, nc_delay_s: nc, violations, first_violation: first });
    }
    if let Some(dir) = &cli.plotdata {
        let io = |e: std::io::Error| ConfigError { path: "--plotdata".into(), message: e.to_string() };
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("trace.csv"), trace.to_csv()).map_err(io)?;
    }
    let text = if cli.json {
        json(&rows)
    } else {
        let mut s = String::from("class,frames,max_delay_s,nc_delay_s,violations\n");
        for r in &rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.class, r.frames, r.max_delay_s, opt(r.nc_delay_s), r.violations);
        }
        s
    };
    Ok(Outcome { text, code })
}

fn cmd_compare(cli: &Cli, cfg: &Config) -> Result<Outcome, ConfigError> {
    let rows = compare(cfg)?;
    let text = if cli.json {
        json(&rows)
    } else {
        let mut s = String::from("class,bls_delay_s,sp_delay_s,ratio\n");
        for r in &rows {
            let _ = writeln!(s, "{},{},{},{}", r.class, opt(r.bls_delay_s), opt(r.sp_delay_s), opt(r.ratio));
        }
        s
    };
    let code = if rows.iter().any(|r| r.bls_delay_s.is_none()) && cli.strict { EXIT_INFEASIBLE } else { EXIT_OK };
    Ok(Outcome { text, code })
}
