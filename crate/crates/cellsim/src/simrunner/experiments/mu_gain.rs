//! Multi-user scheduling gain: sweeps the user count of one measured cell,
//! runs the three schedulers on identical drop realizations, and fits the
//! double-logarithmic gain law to the sum-throughput curve.

use crate::error::Result;
use crate::geometry::{CellId, UserProfile};
use crate::metrics::{fit_loglog_gain, jain_index, mean_stderr};
use crate::mimo::codebook::{clsm_codebooks, PrecoderCodebook};
use crate::propagation::{
    doppler_correlation, generate_fading_with, pathloss_db, sector_gain_db, shadowing_sample,
    FadingSpec, LinkKind,
};
use crate::scheduling::{
    estimate_rates, schedule, RateEstimateContext, RateMode, ResourceGrid, SchedulerKind,
    SchedulerState,
};
use crate::simrunner::config::{parse_antenna_config, ExperimentConfig};
use crate::simrunner::output::ResultTable;
use crate::simrunner::{drop_rng, run_drops, run_rng, stream_id};

const SCHEDULERS: [(SchedulerKind, &str); 3] = [
    (SchedulerKind::BestCqi, "best_cqi"),
    (SchedulerKind::ProportionalFair, "prop_fair"),
    (SchedulerKind::RoundRobin, "round_robin"),
];

struct DropOutcome {
    /// Cell sum throughput per scheduler, bits/s.
    sum_tput: [f64; 3],
    /// Jain index over per-user throughputs.
    jain: [f64; 3],
    /// Jain index over per-user resource (RB) shares.
    rb_share_jain: [f64; 3],
}

pub fn run(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<ResultTable> {
    let (n_tx, n_rx) = parse_antenna_config(&cfg.sweep.antenna_config)?;
    let codebooks = if n_tx > 1 {
        clsm_codebooks(n_tx, n_rx, cfg.mimo.feedback_bits, &mut run_rng(cfg.seed))
    } else {
        Vec::new()
    };

    let mut table = ResultTable::default();
    let mut mean_by_sched: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 3];
    for (k_idx, &k) in cfg.sweep.user_counts.iter().enumerate() {
        let outcomes: Vec<DropOutcome> = run_drops(pool, cfg.n_drops, |d| {
            simulate_drop(cfg, n_tx, n_rx, &codebooks, k_idx, k, d)
        });
        for (si, (_, name)) in SCHEDULERS.iter().enumerate() {
            let tputs: Vec<f64> = outcomes.iter().map(|o| o.sum_tput[si]).collect();
            let (mean, se) = mean_stderr(&tputs);
            table.push(
                "n_users",
                k as f64,
                &format!("sum_throughput_bps_{name}"),
                mean,
                se,
                tputs.len(),
            );
            let jains: Vec<f64> = outcomes.iter().map(|o| o.jain[si]).collect();
            let (jm, jse) = mean_stderr(&jains);
            table.push("n_users", k as f64, &format!("jain_{name}"), jm, jse, jains.len());
            let shares: Vec<f64> = outcomes.iter().map(|o| o.rb_share_jain[si]).collect();
            let (sm, sse) = mean_stderr(&shares);
            table.push(
                "n_users",
                k as f64,
                &format!("rb_share_jain_{name}"),
                sm,
                sse,
                shares.len(),
            );
            mean_by_sched[si].push((k as f64, mean));
        }
    }

    // Double-logarithmic gain fit per scheduler over the mean curve.
    for (si, (_, name)) in SCHEDULERS.iter().enumerate() {
        let points = &mean_by_sched[si];
        if points.len() >= 3 && points.iter().all(|&(k, _)| k >= 2.0) {
            if let Ok(fit) = fit_loglog_gain(points) {
                table.push("fit", 0.0, &format!("fit_m_{name}"), fit.scale, 0.0, points.len());
                table.push("fit", 0.0, &format!("fit_b_{name}"), fit.diversity, 0.0, points.len());
                table.push("fit", 0.0, &format!("fit_r2_{name}"), fit.r_squared, 0.0, points.len());
            }
        }
    }
    Ok(table)
}

fn simulate_drop(
    cfg: &ExperimentConfig,
    n_tx: usize,
    n_rx: usize,
    codebooks: &[PrecoderCodebook],
    k_idx: usize,
    k: usize,
    drop_idx: usize,
) -> DropOutcome {
    let mut rng = drop_rng(cfg.seed, stream_id(0, k_idx, drop_idx));
    let layout = super::experiment_layout(cfg, n_tx, 0);
    let params = cfg.propagation.params();
    let profile = UserProfile {
        velocity_kmh: cfg.propagation.velocity_kmh,
        n_rx_antennas: n_rx,
    };
    let drop = crate::geometry::drop_users_in_sector(&layout, CellId(0), k, &profile, &mut rng)
        .expect("validated user count");

    let grid = ResourceGrid {
        n_tti: cfg.n_tti,
        n_rb: cfg.scheduler.n_rb,
        rb_bandwidth_hz: cfg.scheduler.rb_bandwidth_hz,
    };
    grid.validate().expect("validated scheduler config");

    // Wideband SINR per user: serving sector signal against the same-site
    // sectors (identical path, so one shared shadowing draw; only the
    // antenna pattern separates them) plus the fixed out-of-grid floor and
    // noise. Transmit power is per simulated RB.
    let n_rb = grid.n_rb;
    let per_rb_power = crate::geometry::dbm_to_watt(cfg.layout.cell_power_dbm) / n_rb as f64;
    let noise_w = cfg.propagation.noise_w();
    let floor_w = cfg.propagation.floor_w();
    let site = layout.sites[0];
    let mut wideband_sinr = Vec::with_capacity(k);
    for user in &drop.users {
        let distance = site.distance(user.position).max(1e-3);
        let pl = pathloss_db(distance, LinkKind::Macro, &params).expect("positive distance");
        let bearing = site.bearing_deg(user.position);
        let shadow = shadowing_sample(params.macro_shadowing_std_db, &mut rng);
        let mut own_w = 0.0;
        let mut interference_w = 0.0;
        for cell in &layout.cells[..3] {
            let gain = sector_gain_db(
                crate::geometry::angle_offset_deg(bearing, cell.sector_orientation_deg),
                &params,
            );
            let rx = per_rb_power * 10f64.powf((gain - pl - shadow) / 10.0);
            if cell.id == CellId(0) {
                own_w = rx;
            } else {
                interference_w += rx;
            }
        }
        wideband_sinr.push(own_w / (noise_w + floor_w + interference_w));
    }

    let rho = doppler_correlation(
        cfg.propagation.velocity_kmh,
        cfg.propagation.carrier_hz,
        cfg.propagation.tti_s,
    );
    let fading: Vec<_> = (0..k)
        .map(|_| {
            generate_fading_with(
                FadingSpec {
                    n_tti: cfg.n_tti,
                    n_rb,
                    n_rx,
                    n_tx,
                    rho,
                    rx_correlation: cfg.propagation.rx_correlation,
                },
                &mut rng,
            )
            .expect("validated fading dimensions")
        })
        .collect();

    let rate_map = cfg.link.rate_map();
    let mode = if n_tx > 1 {
        RateMode::Clsm { codebooks }
    } else {
        RateMode::Siso
    };
    let ctx = RateEstimateContext {
        rate_map: &rate_map,
        wideband_sinr: &wideband_sinr,
        fading: &fading,
        mode,
    };

    let rb_bw = grid.rb_bandwidth_hz;
    // PF averages are seeded with the wideband rate estimate at drop time.
    let init_avgs: Vec<f64> = wideband_sinr
        .iter()
        .map(|&s| rate_map.rate_clamped(s) * rb_bw)
        .collect();
    let mut states: Vec<SchedulerState> = (0..3)
        .map(|_| SchedulerState::new(init_avgs.clone(), cfg.scheduler.pf_window_ttis).unwrap())
        .collect();
    let mut bits = vec![[0.0f64; 3]; k];
    let mut rb_counts = vec![[0usize; 3]; k];
    let tti_s = cfg.propagation.tti_s;
    for t in 0..grid.n_tti {
        let rates = estimate_rates(&ctx, t, n_rb);
        for (si, (kind, _)) in SCHEDULERS.iter().enumerate() {
            let decision = schedule(*kind, &rates, &mut states[si]);
            let mut served_rate = vec![0.0f64; k];
            for (rb, &u) in decision.per_rb.iter().enumerate() {
                served_rate[u] += rates.at(u, rb) * rb_bw;
                rb_counts[u][si] += 1;
            }
            for u in 0..k {
                bits[u][si] += served_rate[u] * tti_s;
            }
            if *kind == SchedulerKind::ProportionalFair {
                states[si].update(&served_rate);
            }
        }
    }

    let horizon_s = cfg.n_tti as f64 * tti_s;
    let mut sum_tput = [0.0f64; 3];
    let mut jain = [0.0f64; 3];
    let mut rb_share_jain = [0.0f64; 3];
    for si in 0..3 {
        let tputs: Vec<f64> = (0..k).map(|u| bits[u][si] / horizon_s).collect();
        sum_tput[si] = tputs.iter().sum();
        jain[si] = jain_index(&tputs).unwrap_or(0.0);
        let shares: Vec<f64> = (0..k).map(|u| rb_counts[u][si] as f64).collect();
        rb_share_jain[si] = jain_index(&shares).unwrap_or(0.0);
    }
    DropOutcome {
        sum_tput,
        jain,
        rb_share_jain,
    }
}
