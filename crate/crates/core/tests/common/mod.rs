//! Brute-force reference implementations shared by the integration tests.
//!
//! Each oracle scans a uniform grid, then refines the best cell by
//! golden-section search. The functions scanned are concave or convex in the
//! search variable, so the refinement converges to the global optimum.

#![allow(dead_code)]

pub mod reduction;

use blsnc::minplus::{Affine, ConcaveCurve, ConvexServiceCurve, RateLatency};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GRID: usize = 400;
const GOLDEN_ITERS: usize = 120;

/// Maximizes `f` over `[lo, hi]` assuming it is unimodal.
pub fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = (hi - lo) / GRID as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let v = f(lo + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + h * best_i.saturating_sub(1) as f64;
    let mut b = (lo + h * (best_i + 1) as f64).min(hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..GOLDEN_ITERS {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b))).max(f(a)).max(f(b))
}

pub fn minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    -maximize(|x| -f(x), lo, hi)
}

/// Search horizon beyond every kink of both curves.
pub fn horizon(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> f64 {
    let m = alpha.breakpoints().into_iter().chain(beta.breakpoints()).fold(1e-6, f64::max);
    4.0 * m
}

pub fn deconv_at(alpha: &ConcaveCurve, beta: &ConvexServiceCurve, t: f64) -> f64 {
    let hz = horizon(alpha, beta) + t;
    maximize(|s| alpha.eval(t + s) - beta.eval(s), 0.0, hz)
}

pub fn conv_at(b1: &ConvexServiceCurve, b2: &ConvexServiceCurve, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    minimize(|s| b1.eval(s) + b2.eval(t - s), 0.0, t)
}

pub fn leftover_at(beta: &ConvexServiceCurve, alpha: &ConcaveCurve, blocking: f64, t: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=GRID {
        let s = t * i as f64 / GRID as f64;
        best = best.max(beta.eval(s) - alpha.eval(s) - blocking);
    }
    best
}

/// Pseudo-inverse of a service curve by bisection on its values.
pub fn service_inverse(beta: &ConvexServiceCurve, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let mut hi = 1e-9;
    while beta.eval(hi) < y {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // The bracket is down to adjacent doubles.
        if mid <= lo || mid >= hi {
            break;
        }
        if beta.eval(mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn hdev_oracle(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> f64 {
    let hz = horizon(alpha, beta);
    maximize(|t| service_inverse(beta, alpha.eval(t)) - t, 0.0, hz)
        .max(service_inverse(beta, alpha.eval(hz * 1e-15)) - hz * 1e-15)
        .max(0.0)
}

pub fn vdev_oracle(alpha: &ConcaveCurve, beta: &ConvexServiceCurve) -> f64 {
    let hz = horizon(alpha, beta);
    maximize(|t| alpha.eval(t) - beta.eval(t), 0.0, hz).max(0.0)
}

/// `|a - b| <= rel * max(|a|, |b|) + floor`.
pub fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random service curve with up to `max_pieces` pieces.
pub fn random_service(rng: &mut ChaCha8Rng, max_pieces: usize) -> ConvexServiceCurve {
    let n = rng.gen_range(1..=max_pieces);
    let pieces = (0..n)
        .map(|_| RateLatency::new(log_uniform(rng, 1e3, 1e9), rng.gen_range(0.0..1e-3)))
        .collect();
    ConvexServiceCurve::new(pieces).expect("positive rates")
}

/// Random arrival curve whose long-run rate stays below `max_rate`.
pub fn random_arrival(rng: &mut ChaCha8Rng, max_pieces: usize, max_rate: f64) -> ConcaveCurve {
    let n = rng.gen_range(1..=max_pieces);
    let mut pieces: Vec<Affine> =
        (0..n).map(|_| Affine::new(log_uniform(rng, 1e3, 1e9), rng.gen_range(0.0..1e5))).collect();
    let slow = log_uniform(rng, 1e3f64.min(max_rate * 0.5), max_rate.max(1e3 + 1.0) * 0.999);
    pieces.push(Affine::new(slow.min(max_rate), rng.gen_range(0.0..1e5)));
    ConcaveCurve::new(pieces).expect("valid pieces")
}

/// Sample abscissae spanning the interesting region of both curves.
pub fn sample_points(alpha: &ConcaveCurve, beta: &ConvexServiceCurve, n: usize) -> Vec<f64> {
    let hz = horizon(alpha, beta) / 2.0;
    (0..n).map(|i| hz * i as f64 / (n - 1) as f64).collect()
}

/// Outcome of a randomized oracle comparison.
#[derive(Debug, Default, Clone)]
pub struct SuiteReport {
    pub instances: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn record(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(msg());
            }
        }
    }
}

pub const ORACLE_REL: f64 = 1e-6;
const BITS_FLOOR: f64 = 1e-6;
const SECONDS_FLOOR: f64 = 1e-15;

use rand::SeedableRng;

/// Operations covered by the randomized oracle suite.
#[derive(Debug, Clone, Copy)]
pub enum Op {
    Deconvolve,
    Convolve,
    Leftover,
    Hdev,
    Vdev,
}

pub fn oracle_suite(op: Op, instances: usize, seed: u64) -> SuiteReport {
    use blsnc::minplus::{convolve, deconvolve, hdev, leftover, vdev};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    while report.instances < instances {
        let beta = random_service(&mut rng, 4);
        let alpha = random_arrival(&mut rng, 3, beta.long_run_rate());
        match op {
            Op::Deconvolve => {
                let out = deconvolve(&alpha, &beta).expect("stable by construction");
                let ok = sample_points(&alpha, &beta, 8).into_iter().all(|t| {
                    close(out.eval(t), deconv_at(&alpha, &beta, t), ORACLE_REL, BITS_FLOOR)
                });
                report.record(ok, || format!("deconvolve {alpha:?} {beta:?}"));
            }
            Op::Convolve => {
                let other = random_service(&mut rng, 4);
                let out = convolve(&beta, &other);
                let hz = horizon(&alpha, &beta).max(horizon(&alpha, &other));
                let ok = (0..8).map(|i| hz * i as f64 / 7.0).all(|t| {
                    close(out.eval(t), conv_at(&beta, &other, t), ORACLE_REL, BITS_FLOOR)
                });
                report.record(ok, || format!("convolve {beta:?} {other:?}"));
            }
            Op::Leftover => {
                let blocking = rng.gen_range(0.0..1e4);
                let Ok(out) = leftover(&beta, &alpha, blocking) else {
                    // Equal long-run rates leave nothing; the oracle must agree.
                    let far = horizon(&alpha, &beta) * 4.0;
                    let ok = leftover_at(&beta, &alpha, blocking, far) <= BITS_FLOOR
                        || alpha.long_run_rate() >= beta.long_run_rate();
                    report.record(ok, || format!("leftover null {alpha:?} {beta:?}"));
                    continue;
                };
                let ok = sample_points(&alpha, &beta, 8).into_iter().all(|t| {
                    close(out.eval(t), leftover_at(&beta, &alpha, blocking, t), ORACLE_REL, BITS_FLOOR)
                });
                report.record(ok, || format!("leftover {alpha:?} {beta:?} {blocking}"));
            }
            Op::Hdev => {
                let got = hdev(&alpha, &beta).expect("stable");
                let want = hdev_oracle(&alpha, &beta);
                report.record(close(got, want, ORACLE_REL, SECONDS_FLOOR), || {
                    format!("hdev got {got} want {want} {alpha:?} {beta:?}")
                });
            }
            Op::Vdev => {
                let got = vdev(&alpha, &beta).expect("stable");
                let want = vdev_oracle(&alpha, &beta);
                report.record(close(got, want, ORACLE_REL, BITS_FLOOR), || {
                    format!("vdev got {got} want {want} {alpha:?} {beta:?}")
                });
            }
        }
    }
    report
}
