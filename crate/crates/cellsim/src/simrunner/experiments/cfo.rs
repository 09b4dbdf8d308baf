//! Residual-CFO throughput loss: the deterministic prediction chain
//! (MSE(SNR) -> residual CFO -> rate loss) against a Monte-Carlo simulation
//! with Gaussian CFO draws, per SNR grid point.

use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::linkmodel::{cfo_mse, throughput_loss};
use crate::metrics::mean_stderr;
use crate::simrunner::config::ExperimentConfig;
use crate::simrunner::output::ResultTable;
use crate::simrunner::{drop_rng, stream_id};

pub fn run(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ResultTable> {
    let model = cfg.link.cfo_model();
    let rate_map = cfg.link.rate_map();
    let mut table = ResultTable::default();
    for (idx, &snr_db) in cfg.sweep.snr_grid_db.iter().enumerate() {
        let snr = 10f64.powf(snr_db / 10.0);
        let mse = cfo_mse(&model, snr)?;
        let eps_pred = if cfg.link.cfo_force_zero { 0.0 } else { mse.sqrt() };
        let predicted = throughput_loss(&rate_map, &[snr], eps_pred)?;
        table.push("snr_db", snr_db, "delta_b_predicted", predicted, 0.0, 1);

        let mut rng = drop_rng(cfg.seed, stream_id(0, idx, 0));
        let normal = Normal::new(0.0, mse.sqrt()).expect("positive std");
        let mut draws = Vec::with_capacity(cfg.n_drops);
        for _ in 0..cfg.n_drops {
            let eps = if cfg.link.cfo_force_zero {
                0.0
            } else {
                normal.sample(&mut rng)
            };
            draws.push(throughput_loss(&rate_map, &[snr], eps)?);
        }
        let (mean, se) = mean_stderr(&draws);
        table.push("snr_db", snr_db, "delta_b_simulated", mean, se, draws.len());
    }
    Ok(table)
}
