//! End-to-end synthetic measurement: truth states through the simulated
//! chain, calibration, correction and packet statistics.

use serde::Serialize;
use serde_json::json;

use super::{finish, write_json, CommandOutcome, Finish, RunOptions};
use crate::config::RunConfig;
use crate::error::Result;
use crate::gaussian::{g2_zero, GaussianState};
use crate::measurement::{packet_seeds, run_experiment, Acquisition};

/// `(alpha, n, s, g2)` as plain numbers; also used for error bars and pulls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub alpha: [f64; 2],
    pub n: f64,
    pub s: [f64; 2],
    pub g2: f64,
}

impl StateSummary {
    fn of(g: &GaussianState, g2: f64) -> Self {
        Self { alpha: [g.alpha.re, g.alpha.im], n: g.n, s: [g.s.re, g.s.im], g2 }
    }

    fn to_vec(&self) -> [f64; 6] {
        [self.alpha[0], self.alpha[1], self.n, self.s[0], self.s[1], self.g2]
    }

    fn from_vec(v: [f64; 6]) -> Self {
        Self { alpha: [v[0], v[1]], n: v[2], s: [v[3], v[4]], g2: v[5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoResult {
    pub seed: u64,
    pub truth: StateSummary,
    pub estimate: StateSummary,
    pub stderr: StateSummary,
    /// `(estimate - truth) / stderr`.
    pub pull: StateSummary,
    /// Fourth-moment `g2` and its error, when available.
    pub g2_prime: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub seed: u64,
    pub packet_size: usize,
    pub packets: usize,
    pub acquisition: Acquisition,
    pub results: Vec<DemoResult>,
    pub warnings: Vec<String>,
}

/// Writes `measure_demo.json`: truth against recovered values with jackknife
/// errors for every configured truth state.
pub fn cmd_measure_demo(cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let dir = opts.dir(cfg);
    let m = &cfg.measurement;
    let seed = opts.seed.unwrap_or(m.seed);
    let acq = Acquisition {
        chain: m.chain()?,
        n_th: m.n_th,
        packet_size: opts.packet_size.unwrap_or(m.packet_size),
        n_packets: m.packets,
        seed,
    };
    let seeds = packet_seeds(seed, m.truth.len());
    let mut results = Vec::with_capacity(m.truth.len());
    let mut warnings = Vec::new();
    for (t, &s) in m.truth.iter().zip(&seeds) {
        let truth = t.state()?;
        let stats = run_experiment(&truth, &Acquisition { seed: s, ..acq })?;
        let truth_s = StateSummary::of(&truth, g2_zero(&truth)?);
        let est = StateSummary::of(&stats.state, stats.g2);
        let err = StateSummary {
            alpha: [stats.alpha_stderr.re, stats.alpha_stderr.im],
            n: stats.n_stderr,
            s: [stats.s_stderr.re, stats.s_stderr.im],
            g2: stats.g2_stderr,
        };
        let (tv, ev, sv) = (truth_s.to_vec(), est.to_vec(), err.to_vec());
        let pull = StateSummary::from_vec(std::array::from_fn(|k| (ev[k] - tv[k]) / sv[k]));
        for w in &stats.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        results.push(DemoResult { seed: s, truth: truth_s, estimate: est, stderr: err, pull, g2_prime: stats.g2_prime, warnings: stats.warnings });
    }
    let report = DemoReport { seed, packet_size: acq.packet_size, packets: acq.n_packets, acquisition: acq, results, warnings: warnings.clone() };
    let path = dir.join("measure_demo.json");
    write_json(&path, &report)?;
    let f = Finish {
        command: "measure-demo",
        seed: Some(seed),
        system: None,
        grids: json!({"packet_size": acq.packet_size, "packets": acq.n_packets}),
        summary: json!({"truths": m.truth.len()}),
    };
    let n = m.truth.len();
    finish(cfg, &dir, f, vec![path], n, 0, warnings)
}
