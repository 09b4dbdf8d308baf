//! Experiment orchestration: strict config parsing, seeded Monte-Carlo drops,
//! the five named experiments, CSV/plot-script emission and the CLI plumbing.
//!
//! Determinism contract: `(config, seed)` fully determines every output byte.
//! Drops are the unit of parallelism; per-drop RNG streams are derived from
//! `(seed, sweep index, drop index)` with a counter construction, and
//! aggregation reduces drop results in index order, so results are invariant
//! to worker count and execution order.

pub mod config;
pub mod experiments;
pub mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{
    default_config, load_config, parse_override, ExperimentConfig, ExperimentKind,
};
pub use output::{emit_results, ResultRow, ResultTable};

use crate::error::Result;

/// Environment variable capping the worker count (results unaffected).
pub const THREADS_ENV: &str = "SIM_THREADS";

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Worker pool for drop-level parallelism; `None` uses the rayon default.
pub fn build_pool(threads: Option<usize>) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool construction")
}

/// RNG stream reserved for run-level draws (codebook generation).
pub const RUN_STREAM: u64 = u64::MAX;

/// Independent ChaCha stream for one (sweep point, drop) pair.
pub fn drop_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_rng(seed: u64) -> ChaCha8Rng {
    drop_rng(seed, RUN_STREAM)
}

/// Stream id for sweep point `sweep_idx`, drop `drop_idx`, experiment arm
/// `arm` (0 when unused).
pub fn stream_id(arm: u64, sweep_idx: usize, drop_idx: usize) -> u64 {
    (arm << 48) | ((sweep_idx as u64) << 32) | drop_idx as u64
}

/// Runs `n_drops` independent drops on the pool and collects the results in
/// drop-index order.
pub fn run_drops<T: Send>(
    pool: &rayon::ThreadPool,
    n_drops: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    pool.install(|| (0..n_drops).into_par_iter().map(f).collect())
}

/// Dispatches one experiment run; the table is fully sorted on return.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    pool: &rayon::ThreadPool,
) -> Result<ResultTable> {
    cfg.validate()?;
    let mut table = match cfg.experiment {
        ExperimentKind::MuGain => experiments::mu_gain::run(cfg, pool)?,
        ExperimentKind::Das => experiments::das::run(cfg, pool)?,
        ExperimentKind::Femto => experiments::femto::run(cfg, pool)?,
        ExperimentKind::Cfo => experiments::cfo::run(cfg, pool)?,
        ExperimentKind::PilotPower => experiments::pilot_power::run(cfg, pool)?,
    };
    table.sort();
    Ok(table)
}
