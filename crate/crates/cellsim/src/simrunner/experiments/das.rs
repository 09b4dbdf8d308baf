//! Distributed-antenna study: area spectral efficiency of SU- and MU-MIMO
//! transceivers with perfect and quantized CSIT, on a centralized 8-antenna
//! cell and on a 4+2+2 split across the base station and two RRUs.
//!
//! The three sectors of the center site are simulated explicitly and
//! interfere with each other through their average radiated powers; more
//! distant base stations enter as a fixed interference floor.

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{dbm_to_watt, CellId, TxPointKind, UserProfile};
use crate::linkmodel::RateMap;
use crate::metrics::{area_spectral_efficiency, mean_stderr};
use crate::mimo::codebook::{clsm_codebooks, PrecoderCodebook, UnitaryCodebook, VectorCodebook};
use crate::mimo::feedback::{
    das_feedback_allocation, das_row_estimate, pu2rc_report, quantize_csit,
    quantized_row_estimate, AntennaGroup,
};
use crate::mimo::precoding::{mu_sinr, pu2rc_transceiver, zf_precoder, zf_user_selection, CsiReport};
use crate::mimo::transceiver::{clsm_transceiver, receive_combining, su_svd_transceiver};
use crate::propagation::{
    doppler_correlation, generate_fading_with, pathloss_db, sector_gain_db, FadingSpec, LinkKind,
    ShadowField,
};
use crate::simrunner::config::ExperimentConfig;
use crate::simrunner::output::ResultTable;
use crate::simrunner::{drop_rng, run_drops, run_rng, stream_id};

pub const N_TX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DasMode {
    SvdPerfect,
    ClsmQuantized,
    ZfPerfect,
    ZfQuantized,
    Pu2rcQuantized,
}

impl DasMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "svd-perfect" => Ok(DasMode::SvdPerfect),
            "clsm-quantized" => Ok(DasMode::ClsmQuantized),
            "zf-perfect" => Ok(DasMode::ZfPerfect),
            "zf-quantized" => Ok(DasMode::ZfQuantized),
            "pu2rc-quantized" => Ok(DasMode::Pu2rcQuantized),
            other => Err(Error::Config(format!("unknown DAS mode '{other}'"))),
        }
    }

    pub fn metric_tag(&self) -> &'static str {
        match self {
            DasMode::SvdPerfect => "svd_perfect",
            DasMode::ClsmQuantized => "clsm_quantized",
            DasMode::ZfPerfect => "zf_perfect",
            DasMode::ZfQuantized => "zf_quantized",
            DasMode::Pu2rcQuantized => "pu2rc_quantized",
        }
    }
}

/// Codebooks shared by a whole run, generated once from the run stream.
struct RunCodebooks {
    /// Direction codebook over all 8 antennas (centralized quantized CSIT).
    full: VectorCodebook,
    /// Per-group codebooks for the 4/2/2 DAS split.
    groups: Vec<VectorCodebook>,
    clsm: Vec<PrecoderCodebook>,
    unitary: UnitaryCodebook,
}

fn build_codebooks(cfg: &ExperimentConfig) -> RunCodebooks {
    let mut rng = run_rng(cfg.seed);
    let bits = cfg.mimo.feedback_bits;
    let full = VectorCodebook::random(N_TX, bits, &mut rng);
    let groups = vec![
        VectorCodebook::random(4, bits, &mut rng),
        VectorCodebook::random(2, bits, &mut rng),
        VectorCodebook::random(2, bits, &mut rng),
    ];
    let clsm = clsm_codebooks(N_TX, cfg.mimo.n_rx, bits, &mut rng);
    let unitary = UnitaryCodebook::dft_rotated(N_TX, cfg.mimo.pu2rc_matrix_bits);
    RunCodebooks {
        full,
        groups,
        clsm,
        unitary,
    }
}

struct DropOutcome {
    /// ASE per mode, bits/s/Hz/m^2 over the site footprint.
    ase: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<ResultTable> {
    let modes: Vec<DasMode> = cfg
        .sweep
        .das_modes
        .iter()
        .map(|m| DasMode::parse(m))
        .collect::<Result<_>>()?;
    let codebooks = build_codebooks(cfg);

    let mut table = ResultTable::default();
    for (arm_idx, (arm_name, rrus)) in [("centralized", 0usize), ("das", 2usize)]
        .into_iter()
        .enumerate()
    {
        for (k_idx, &k) in cfg.sweep.user_counts.iter().enumerate() {
            let outcomes: Vec<DropOutcome> = run_drops(pool, cfg.n_drops, |d| {
                simulate_drop(cfg, &modes, &codebooks, rrus, arm_idx as u64, k_idx, k, d)
            });
            for (mi, mode) in modes.iter().enumerate() {
                let ases: Vec<f64> = outcomes.iter().map(|o| o.ase[mi]).collect();
                let (mean, se) = mean_stderr(&ases);
                table.push(
                    "users_per_cell",
                    k as f64,
                    &format!("ase_{}_{arm_name}", mode.metric_tag()),
                    mean,
                    se,
                    ases.len(),
                );
            }
        }
    }
    Ok(table)
}

/// Per-user state within one cell for one drop.
struct UserChannel {
    /// Sqrt of the macroscopic power gain per transmit antenna.
    column_scales: Vec<f64>,
    /// Macroscopic loss per antenna group, dB (for the feedback allocation).
    group_loss_db: Vec<f64>,
    /// Antenna index ranges per group.
    group_ranges: Vec<std::ops::Range<usize>>,
    /// Noise + out-of-cell interference + floor, W.
    eff_noise_w: f64,
    fading: crate::propagation::FadingTrace,
}

impl UserChannel {
    fn channel_at(&self, tti: usize, n_rx: usize) -> DMatrix<Complex64> {
        let h = self.fading.at(tti, 0);
        DMatrix::from_fn(n_rx, N_TX, |r, c| {
            h[(r, c)] * Complex64::new(self.column_scales[c], 0.0)
        })
    }

    fn groups(&self) -> Vec<AntennaGroup> {
        self.group_ranges
            .iter()
            .enumerate()
            .map(|(id, range)| AntennaGroup {
                id,
                range: range.clone(),
                pathloss_db: self.group_loss_db[id],
            })
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate_drop(
    cfg: &ExperimentConfig,
    modes: &[DasMode],
    codebooks: &RunCodebooks,
    rrus: usize,
    arm: u64,
    k_idx: usize,
    k: usize,
    drop_idx: usize,
) -> DropOutcome {
    let mut rng = drop_rng(cfg.seed, stream_id(arm + 1, k_idx, drop_idx));
    let layout = super::experiment_layout(cfg, N_TX, rrus);
    let params = cfg.propagation.params();
    let n_rx = cfg.mimo.n_rx;
    let cell_power = dbm_to_watt(cfg.layout.cell_power_dbm);
    let noise_floor = cfg.propagation.noise_w() + cfg.propagation.floor_w();
    let rho = doppler_correlation(
        cfg.propagation.velocity_kmh,
        cfg.propagation.carrier_hz,
        cfg.propagation.tti_s,
    );
    let profile = UserProfile {
        velocity_kmh: cfg.propagation.velocity_kmh,
        n_rx_antennas: n_rx,
    };

    // Per cell: drop users in the sector and compute their channels.
    let mut cells: Vec<Vec<UserChannel>> = Vec::with_capacity(3);
    for c in 0..3 {
        let drop =
            crate::geometry::drop_users_in_sector(&layout, CellId(c), k, &profile, &mut rng)
                .expect("validated user count");
        let mut users = Vec::with_capacity(k);
        for user in &drop.users {
            // One shadowing draw per physical transmission point position:
            // the collocated arrays of all three sectors share the site path.
            let mut shadows = ShadowField::new();
            let own_cell = &layout.cells[c];
            let mut column_scales = Vec::with_capacity(N_TX);
            let mut group_loss_db = Vec::new();
            let mut group_ranges = Vec::new();
            let mut antenna = 0usize;
            for tp in &own_cell.tx_points {
                let d = tp.position.distance(user.position).max(1e-3);
                let pl = pathloss_db(d, LinkKind::Macro, &params).expect("positive distance");
                let gain = match tp.kind {
                    TxPointKind::MacroCollocated => sector_gain_db(
                        crate::geometry::angle_offset_deg(
                            tp.position.bearing_deg(user.position),
                            own_cell.sector_orientation_deg,
                        ),
                        &params,
                    ),
                    _ => 0.0,
                };
                let shadow =
                    shadows.sample(tp.position, params.macro_shadowing_std_db, &mut rng);
                let loss_db = pl + shadow - gain;
                let scale = 10f64.powf(-loss_db / 20.0);
                for _ in 0..tp.n_antennas {
                    column_scales.push(scale);
                }
                group_loss_db.push(loss_db);
                group_ranges.push(antenna..antenna + tp.n_antennas);
                antenna += tp.n_antennas;
            }

            // Average interference from the other two sectors of the site.
            let mut interference = 0.0;
            for c2 in 0..3 {
                if c2 == c {
                    continue;
                }
                let cell2 = &layout.cells[c2];
                for tp in &cell2.tx_points {
                    let d = tp.position.distance(user.position).max(1e-3);
                    let pl = pathloss_db(d, LinkKind::Macro, &params).expect("positive distance");
                    let gain = match tp.kind {
                        TxPointKind::MacroCollocated => sector_gain_db(
                            crate::geometry::angle_offset_deg(
                                tp.position.bearing_deg(user.position),
                                cell2.sector_orientation_deg,
                            ),
                            &params,
                        ),
                        _ => 0.0,
                    };
                    let shadow =
                        shadows.sample(tp.position, params.macro_shadowing_std_db, &mut rng);
                    interference += tp.tx_power_w * 10f64.powf((gain - pl - shadow) / 10.0);
                }
            }

            let fading = generate_fading_with(
                FadingSpec {
                    n_tti: cfg.n_tti,
                    n_rb: 1,
                    n_rx,
                    n_tx: N_TX,
                    rho,
                    rx_correlation: cfg.propagation.rx_correlation,
                },
                &mut rng,
            )
            .expect("validated fading dimensions");

            users.push(UserChannel {
                column_scales,
                group_loss_db,
                group_ranges,
                eff_noise_w: noise_floor + interference,
                fading,
            });
        }
        cells.push(users);
    }

    let rate_map = cfg.link.rate_map();
    let mut sum_rate = vec![0.0f64; modes.len()];
    for t in 0..cfg.n_tti {
        for cell_users in &cells {
            let channels: Vec<DMatrix<Complex64>> = cell_users
                .iter()
                .map(|u| u.channel_at(t, n_rx))
                .collect();
            let rows: Vec<RowDVector<Complex64>> =
                channels.iter().map(receive_combining).collect();
            for (mi, mode) in modes.iter().enumerate() {
                sum_rate[mi] += cell_rate(
                    *mode,
                    codebooks,
                    cell_users,
                    &channels,
                    &rows,
                    cell_power,
                    &rate_map,
                );
            }
        }
    }

    let area = layout.center_site_region().area();
    let horizon = cfg.n_tti as f64;
    let bw = cfg.scheduler.rb_bandwidth_hz * cfg.scheduler.n_rb as f64;
    let ase = sum_rate
        .iter()
        .map(|r| area_spectral_efficiency(r / horizon * bw, area, bw))
        .collect();
    DropOutcome { ase }
}

/// Sum rate of one cell for one TTI under the given transceiver mode,
/// bits/s/Hz.
#[allow(clippy::too_many_arguments)]
fn cell_rate(
    mode: DasMode,
    codebooks: &RunCodebooks,
    users: &[UserChannel],
    channels: &[DMatrix<Complex64>],
    rows: &[RowDVector<Complex64>],
    cell_power: f64,
    rate_map: &RateMap,
) -> f64 {
    match mode {
        DasMode::SvdPerfect => users
            .iter()
            .enumerate()
            .map(|(u, uc)| {
                let tx = su_svd_transceiver(&channels[u], cell_power / uc.eff_noise_w)
                    .expect("positive SNR");
                tx.stream_sinrs
                    .iter()
                    .map(|&s| rate_map.rate_clamped(s))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max),
        DasMode::ClsmQuantized => users
            .iter()
            .enumerate()
            .map(|(u, uc)| {
                let sel =
                    clsm_transceiver(&channels[u], &codebooks.clsm, cell_power / uc.eff_noise_w)
                        .expect("non-empty codebooks");
                sel.stream_sinrs
                    .iter()
                    .map(|&s| rate_map.rate_clamped(s))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max),
        DasMode::ZfPerfect => {
            let candidates: Vec<CsiReport> = users
                .iter()
                .enumerate()
                .map(|(u, uc)| CsiReport {
                    user: u,
                    row: rows[u].clone(),
                    noise_w: uc.eff_noise_w,
                })
                .collect();
            zf_cell_rate(&candidates, rows, users, cell_power, rate_map)
        }
        DasMode::ZfQuantized => {
            let candidates: Vec<CsiReport> = users
                .iter()
                .enumerate()
                .map(|(u, uc)| {
                    let row = &rows[u];
                    let estimate = if uc.group_ranges.len() > 1 {
                        let groups = uc.groups();
                        match das_feedback_allocation(row, &groups, &codebooks.groups) {
                            Ok(report) => {
                                das_row_estimate(&report, &groups, &codebooks.groups, N_TX)
                            }
                            Err(_) => RowDVector::zeros(N_TX),
                        }
                    } else {
                        match quantize_csit(row, &codebooks.full) {
                            Ok(q) => quantized_row_estimate(&codebooks.full, q.index, row.norm()),
                            Err(_) => RowDVector::zeros(N_TX),
                        }
                    };
                    CsiReport {
                        user: u,
                        row: estimate,
                        noise_w: uc.eff_noise_w,
                    }
                })
                .collect();
            zf_cell_rate(&candidates, rows, users, cell_power, rate_map)
        }
        DasMode::Pu2rcQuantized => {
            let reports: Vec<(usize, crate::mimo::feedback::Pu2rcReport)> = users
                .iter()
                .enumerate()
                .filter_map(|(u, uc)| {
                    pu2rc_report(&rows[u], &codebooks.unitary, cell_power, uc.eff_noise_w)
                        .ok()
                        .map(|r| (u, r))
                })
                .collect();
            let decision =
                pu2rc_transceiver(&reports, &codebooks.unitary, cell_power, rate_map);
            if decision.is_empty() {
                return 0.0;
            }
            let true_rows: Vec<RowDVector<Complex64>> =
                decision.served.iter().map(|&u| rows[u].clone()).collect();
            let noises: Vec<f64> = decision
                .served
                .iter()
                .map(|&u| users[u].eff_noise_w)
                .collect();
            mu_sinr(&decision, &true_rows, &noises)
                .iter()
                .map(|&s| rate_map.rate_clamped(s))
                .sum()
        }
    }
    .max(0.0)
}

/// Greedy selection on the reported rows, ZF precoding, then true SINRs.
fn zf_cell_rate(
    candidates: &[CsiReport],
    true_rows: &[RowDVector<Complex64>],
    users: &[UserChannel],
    cell_power: f64,
    rate_map: &RateMap,
) -> f64 {
    let selected = zf_user_selection(candidates, N_TX, cell_power, rate_map);
    if selected.is_empty() {
        return 0.0;
    }
    let est_rows: Vec<RowDVector<Complex64>> = selected
        .iter()
        .map(|&i| candidates[i].row.clone())
        .collect();
    let served: Vec<usize> = selected.iter().map(|&i| candidates[i].user).collect();
    let decision = match zf_precoder(&est_rows, &served, cell_power) {
        Ok(d) => d,
        Err(_) => return 0.0,
    };
    let actual_rows: Vec<RowDVector<Complex64>> = decision
        .served
        .iter()
        .map(|&u| true_rows[u].clone())
        .collect();
    let noises: Vec<f64> = decision
        .served
        .iter()
        .map(|&u| users[u].eff_noise_w)
        .collect();
    mu_sinr(&decision, &actual_rows, &noises)
        .iter()
        .map(|&s| rate_map.rate_clamped(s))
        .sum()
}
