//! Seeded Monte Carlo batches and their summaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::config::SimConfig;
use crate::sim::episode::{run_episode, Arrival, Outcome};

/// Per-run seed derived from the master seed and the run index. Each seed
/// depends only on its own index, so extending a batch leaves earlier runs
/// untouched.
pub fn run_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finaliser over a Weyl sequence.
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub first: Arrival,
    pub t_av: Option<f64>,
    pub t_hv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: SimConfig,
    pub n_runs: usize,
    pub av_first_pct: f64,
    pub hv_first_pct: f64,
    pub violations: usize,
    pub collisions: usize,
    pub timeouts: usize,
    /// Mean of `t_hv - t_av` over runs where both crossed, s.
    pub mean_arrival_gap: Option<f64>,
    pub min_separation: f64,
    pub per_run: Vec<RunSummary>,
}

impl SweepSummary {
    pub fn from_outcomes(config: SimConfig, runs: &[(u64, Outcome)]) -> Self {
        let n = runs.len();
        let av = runs.iter().filter(|(_, o)| o.first_arrival == Arrival::Av).count();
        let gaps: Vec<f64> = runs
            .iter()
            .filter_map(|(_, o)| Some(o.t_hv? - o.t_av?))
            .collect();
        let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
        SweepSummary {
            config,
            n_runs: n,
            av_first_pct: pct(av),
            hv_first_pct: pct(n - av),
            violations: runs.iter().filter(|(_, o)| o.safety_violation).count(),
            collisions: runs.iter().filter(|(_, o)| o.collision).count(),
            timeouts: runs.iter().filter(|(_, o)| o.timeout).count(),
            mean_arrival_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
            min_separation: runs.iter().map(|(_, o)| o.min_separation).fold(f64::INFINITY, f64::min),
            per_run: runs
                .iter()
                .map(|(seed, o)| RunSummary { seed: *seed, first: o.first_arrival, t_av: o.t_av, t_hv: o.t_hv })
                .collect(),
        }
    }
}

/// Runs `n_runs` episodes seeded from `cfg.scenario.seed`. `parallelism`
/// caps the worker threads; `None` uses the global pool.
pub fn run_batch(cfg: &SimConfig, n_runs: usize, parallelism: Option<usize>) -> Result<SweepSummary> {
    if n_runs == 0 {
        return Err(Error::Config("n_runs must be at least 1".into()));
    }
    cfg.validate()?;
    let master = cfg.scenario.seed;
    let one = |i: usize| -> Result<(u64, Outcome)> {
        let mut run_cfg = *cfg;
        run_cfg.scenario.seed = run_seed(master, i as u64);
        let rec = run_episode(&run_cfg)?;
        Ok((rec.seed, rec.outcome))
    };
    let outcomes: Result<Vec<_>> = match parallelism {
        Some(1) => (0..n_runs).map(one).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| (0..n_runs).into_par_iter().map(one).collect()),
        None => (0..n_runs).into_par_iter().map(one).collect(),
    };
    Ok(SweepSummary::from_outcomes(*cfg, &outcomes?))
}
