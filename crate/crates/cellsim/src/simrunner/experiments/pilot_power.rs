//! Pilot/data power allocation versus user velocity: throughput of the unit
//! allocation against the power-efficient allocation, and the fraction of the
//! budget the latter actually spends. Deterministic; no Monte-Carlo.

use crate::error::Result;
use crate::linkmodel::{estimation_mse, post_eq_sinr, power_efficient_split, PowerSplit};
use crate::simrunner::config::{parse_antenna_config, ExperimentConfig};
use crate::simrunner::output::ResultTable;

pub fn run(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ResultTable> {
    let rate_map = cfg.link.rate_map();
    let budget = cfg.link.power_budget_w;
    // Noise fixed so the unit allocation operates at the configured SNR with
    // unit channel gain.
    let noise = (budget / 2.0) / 10f64.powf(cfg.link.pilot_snr_db / 10.0);

    let mut table = ResultTable::default();
    for &velocity in &cfg.sweep.velocities_kmh {
        for antenna in &cfg.sweep.antenna_configs {
            let (n_tx, n_rx) = parse_antenna_config(antenna)?;
            let n_streams = n_tx.min(n_rx);
            let est = cfg.link.estimator(n_tx);

            let unit = PowerSplit::unit(budget);
            let sigma_unit = estimation_mse(&est, &unit, velocity, noise)?;
            let sinr_unit = post_eq_sinr(&unit, 1.0, noise, sigma_unit, n_streams);
            let thr_unit = n_streams as f64 * rate_map.rate(sinr_unit)?;

            let efficient = power_efficient_split(&est, velocity, noise, budget, n_streams)?;
            let sigma_eff = estimation_mse(&est, &efficient, velocity, noise)?;
            let sinr_eff = post_eq_sinr(&efficient, 1.0, noise, sigma_eff, n_streams);
            let thr_eff = n_streams as f64 * rate_map.rate(sinr_eff)?;

            table.push(
                "velocity_kmh",
                velocity,
                &format!("throughput_unit_{antenna}"),
                thr_unit,
                0.0,
                1,
            );
            table.push(
                "velocity_kmh",
                velocity,
                &format!("throughput_pe_{antenna}"),
                thr_eff,
                0.0,
                1,
            );
            table.push(
                "velocity_kmh",
                velocity,
                &format!("power_used_pct_{antenna}"),
                100.0 * efficient.total_w() / budget,
                0.0,
                1,
            );
        }
    }
    Ok(table)
}
