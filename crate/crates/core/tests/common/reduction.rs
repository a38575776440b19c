//! Closed forms of the three-class port (shaped SCT at 0/2, RC at 1, BE at
//! 3, leaky-bucket inputs), written out by hand and compared with the
//! general constructions.

use blsnc::bls::{derive, fluid_curves, max_service, min_service, BlsParams};
use blsnc::minplus::ConcaveCurve;
use blsnc::mux::{mux_bls, mux_nbls, PortClass, PortInput};
use blsnc::traffic::TrafficClassSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REDUCTION_REL: f64 = 1e-12;
pub const SAMPLE_POINTS: usize = 100;

/// One random three-class port.
#[derive(Debug, Clone, Copy)]
pub struct ThreeClass {
    pub c: f64,
    pub l_m: f64,
    pub l_r: f64,
    pub bw: f64,
    pub mfs: [f64; 3],
    pub rate: [f64; 3],
    pub burst: [f64; 3],
}

impl ThreeClass {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let c = 1e9;
        let mfs = [rng.gen_range(512.0..2048.0), rng.gen_range(512.0..12_000.0), rng.gen_range(512.0..12_000.0)];
        let l_m = rng.gen_range(1000.0..60_000.0);
        let l_r = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..l_m * 0.95) };
        let bw = rng.gen_range(0.05..0.95);
        let rate = [rng.gen_range(1e6..0.3 * bw * c), rng.gen_range(1e6..0.3 * c), rng.gen_range(1e6..0.1 * c)];
        let burst = [mfs[0] * rng.gen_range(1.0..400.0), mfs[1] * rng.gen_range(1.0..200.0), mfs[2] * rng.gen_range(1.0..20.0)];
        Self { c, l_m, l_r, bw, mfs, rate, burst }
    }

    pub fn params(&self) -> BlsParams {
        BlsParams { l_m: self.l_m, l_r: self.l_r, bw: self.bw, p_h: 0, p_l: 2 }
    }

    pub fn port(&self) -> PortInput {
        let class = |i: usize, spec: TrafficClassSpec| PortClass {
            spec,
            arrival: ConcaveCurve::leaky_bucket(self.rate[i], self.burst[i]),
            mfs: self.mfs[i],
        };
        PortInput {
            link_rate: self.c,
            classes: vec![
                class(0, TrafficClassSpec::shaped("SCT", self.params())),
                class(1, TrafficClassSpec::plain("RC", 1)),
                class(2, TrafficClassSpec::plain("BE", 3)),
            ],
        }
    }

    fn i_idle(&self) -> f64 {
        self.bw * self.c
    }

    fn i_send(&self) -> f64 {
        self.c - self.i_idle()
    }

    /// Minimum shaper service: (rate, latency).
    pub fn beta_bls(&self) -> (f64, f64) {
        let (c, m_rc) = (self.c, self.mfs[1]);
        let sat = f64::max(m_rc - c / self.i_idle() * self.l_r, 0.0);
        let l_r_min = f64::max(self.l_r - m_rc / c * self.i_idle(), 0.0);
        let inter = (self.l_m - l_r_min) / self.i_send() + (self.l_m - self.l_r) / self.i_idle() + m_rc / c;
        let idle = (self.l_m - self.l_r) / self.i_idle() + m_rc / c;
        ((c - sat / inter) * self.i_idle() / c, idle)
    }

    /// Maximum shaper service while RC is backlogged: (rate, burst).
    pub fn gamma_bls(&self) -> (f64, f64) {
        let c = self.c;
        let b_max = c / self.i_send() * self.l_m + self.mfs[0];
        let send = self.mfs[0] / c + (self.l_m - self.l_r) / self.i_send();
        let idle = (self.l_m - self.l_r) / self.i_idle();
        (send / (send + idle) * c, b_max * idle / (send + idle))
    }

    /// SCT multiplexer service at `t`.
    pub fn beta_sct(&self, t: f64) -> f64 {
        let c = self.c;
        let low = (c * t - (self.burst[1] + self.rate[1] * t) - self.mfs[2].max(self.mfs[0])).max(0.0);
        let (rho, tau) = self.beta_bls();
        let all = self.mfs.iter().copied().fold(0.0, f64::max);
        let high = rho.min(c) * (t - tau - all / c).max(0.0);
        low.max(high)
    }

    /// RC multiplexer service at `t`.
    pub fn beta_rc(&self, t: f64) -> f64 {
        let c = self.c;
        let all = self.mfs.iter().copied().fold(0.0, f64::max);
        let (_, tau) = self.beta_bls();
        let out_burst = self.burst[0] + self.rate[0] * tau;
        let sp = (c * t - (out_burst + self.rate[0] * t) - all).max(0.0);
        let (gr, gb) = self.gamma_bls();
        let bls = (c * t - (gb + gr * t) - all).max(0.0);
        sp.max(bls)
    }

    /// Abscissae covering both regimes of every curve involved.
    pub fn samples(&self) -> Vec<f64> {
        let (_, tau) = self.beta_bls();
        let span = 4.0 * (tau + (self.burst[0] + self.burst[1] + self.burst[2]) / self.c);
        (0..SAMPLE_POINTS).map(|i| span * (i as f64 + 0.37) / SAMPLE_POINTS as f64).collect()
    }
}

fn rel_ok(a: f64, b: f64) -> bool {
    (a - b).abs() <= REDUCTION_REL * a.abs().max(b.abs())
}

/// Counts of mismatching sample points per construction.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ReductionReport {
    pub configs: usize,
    pub points: usize,
    pub min_service: usize,
    pub max_service: usize,
    pub mux_shaped: usize,
    pub mux_unshaped: usize,
    /// Configurations where a general construction returned an error.
    pub errors: usize,
}

impl ReductionReport {
    pub fn failures(&self) -> usize {
        self.min_service + self.max_service + self.mux_shaped + self.mux_unshaped + self.errors
    }
}

pub fn reduction_suite(configs: usize, seed: u64) -> ReductionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ReductionReport::default();
    while rep.configs < configs {
        let tc = ThreeClass::random(&mut rng);
        let port = tc.port();
        let derived = derive(&tc.params(), tc.c, tc.mfs[1], tc.mfs[0]).expect("valid parameters");
        let (Ok(beta), Ok(sct), Ok(rc)) = (min_service(&derived, 0.0), mux_bls(&port, "SCT"), mux_nbls(&port, "RC")) else {
            rep.errors += 1;
            rep.configs += 1;
            continue;
        };
        let gamma = max_service(&derived).shaped;
        let (Some(sct), Some(rc)) = (sct.beta, rc.beta) else {
            rep.errors += 1;
            rep.configs += 1;
            continue;
        };
        let (rho, tau) = tc.beta_bls();
        let (gr, gb) = tc.gamma_bls();
        for t in tc.samples() {
            rep.points += 1;
            rep.min_service += usize::from(!rel_ok(beta.eval(t), rho * (t - tau).max(0.0)));
            rep.max_service += usize::from(!rel_ok(gamma.eval(t), gr * t + gb));
            rep.mux_shaped += usize::from(!rel_ok(sct.eval(t), tc.beta_sct(t)));
            rep.mux_unshaped += usize::from(!rel_ok(rc.eval(t), tc.beta_rc(t)));
        }
        rep.configs += 1;
    }
    rep
}

/// Fluid curves checked against the packetized ones on random parameters.
#[derive(Debug, Default, Clone, Copy)]
pub struct FluidReport {
    pub sets: usize,
    pub beta_failures: usize,
    pub gamma_failures: usize,
}

pub fn fluid_suite(sets: usize, seed: u64) -> FluidReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = FluidReport::default();
    let c = 1e9;
    for _ in 0..sets {
        let l_m = rng.gen_range(100.0..200_000.0);
        let params = BlsParams {
            l_m,
            l_r: if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..l_m) },
            bw: rng.gen_range(0.01..0.99),
            p_h: 0,
            p_l: 2,
        };
        let mc = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(64.0..12_144.0) };
        let own = rng.gen_range(64.0..12_144.0);
        let hc = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5 * c) };
        let derived = derive(&params, c, mc, own).expect("valid parameters");
        let (fb, _) = fluid_curves(&params, c).expect("valid parameters");
        rep.sets += 1;
        if let Ok(beta) = min_service(&derived, hc) {
            let horizon = 4.0 * (fb.latency() + beta.latency()) + 1e-6;
            let ok = (0..=200).map(|i| horizon * f64::from(i) / 200.0).all(|t| beta.eval(t) <= fb.eval(t) * (1.0 + 1e-12));
            rep.beta_failures += usize::from(!ok);
        }
        let gamma = max_service(&derived).shaped;
        rep.gamma_failures += usize::from(gamma.long_run_rate() < params.bw * c * (1.0 - 1e-12));
    }
    rep
}
