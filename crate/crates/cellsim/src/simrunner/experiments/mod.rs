//! The five named experiments.

pub mod cfo;
pub mod das;
pub mod femto;
pub mod mu_gain;
pub mod pilot_power;

use crate::geometry::{build_hex_grid, GridParams, NetworkLayout};
use crate::simrunner::config::ExperimentConfig;

/// Layout for a scheduling/DAS experiment cell with the given antenna plan.
pub(crate) fn experiment_layout(
    cfg: &ExperimentConfig,
    antennas_per_cell: usize,
    rrus_per_cell: usize,
) -> NetworkLayout {
    build_hex_grid(&GridParams {
        rings: cfg.layout.rings,
        isd_m: cfg.layout.isd_m,
        rru_fraction: cfg.layout.rru_fraction,
        rrus_per_cell,
        antennas_per_cell,
        rru_antennas: cfg.layout.rru_antennas,
        cell_power_w: crate::geometry::dbm_to_watt(cfg.layout.cell_power_dbm),
    })
    .expect("validated layout parameters")
}
