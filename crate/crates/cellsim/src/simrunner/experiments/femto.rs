//! Macro-femto overlay: clustered users over the center site, femto APs added
//! one per cluster center, strongest-power attachment, and per-tier
//! throughput plus Jain's fairness index versus the femto count.
//!
//! Within one drop the cluster layout, user positions and shadowing are drawn
//! once and the femto count sweeps over prefixes of the same cluster centers,
//! so the total user population is constant across densities and sweep points
//! are paired. The snapshot model is static: each serving point splits its
//! band equally among its attached users (the long-run round-robin share) and
//! the SINR is wideband (pathloss, shadowing and pattern, no fast fading).

use crate::error::Result;
use crate::geometry::{
    attach_users, dbm_to_watt, drop_user_clusters, place_femtos_at_centers, Attachment,
    ReceivedPowerMap, UserProfile,
};
use crate::metrics::{jain_index, mean_stderr, tier_split_report, ThroughputReport, Tier};
use crate::propagation::received_power_map;
use crate::simrunner::config::ExperimentConfig;
use crate::simrunner::output::ResultTable;
use crate::simrunner::{drop_rng, run_drops, stream_id};

struct PointOutcome {
    macro_avg: Option<f64>,
    femto_avg: Option<f64>,
    combined_avg: f64,
    jain: f64,
}

pub fn run(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<ResultTable> {
    let per_drop: Vec<Vec<PointOutcome>> =
        run_drops(pool, cfg.n_drops, |d| simulate_drop(cfg, d));

    let mut table = ResultTable::default();
    for (f_idx, &n_femto) in cfg.sweep.femto_counts.iter().enumerate() {
        let sweep = n_femto as f64;
        let at = |f: &dyn Fn(&PointOutcome) -> Option<f64>| -> Vec<f64> {
            per_drop.iter().filter_map(|drop| f(&drop[f_idx])).collect()
        };
        let macros = at(&|o| o.macro_avg);
        if !macros.is_empty() {
            let (m, se) = mean_stderr(&macros);
            table.push("n_femtos", sweep, "avg_user_throughput_macro", m, se, macros.len());
        }
        let femtos = at(&|o| o.femto_avg);
        if !femtos.is_empty() {
            let (m, se) = mean_stderr(&femtos);
            table.push("n_femtos", sweep, "avg_user_throughput_femto", m, se, femtos.len());
        }
        let combined = at(&|o| Some(o.combined_avg));
        let (m, se) = mean_stderr(&combined);
        table.push("n_femtos", sweep, "avg_user_throughput_combined", m, se, combined.len());
        let jains = at(&|o| Some(o.jain));
        let (m, se) = mean_stderr(&jains);
        table.push("n_femtos", sweep, "jain_index", m, se, jains.len());
    }
    Ok(table)
}

/// One drop: a cluster layout with every candidate femto placed, one shadowing
/// map, then one outcome per swept femto count over the same realization.
fn simulate_drop(cfg: &ExperimentConfig, drop_idx: usize) -> Vec<PointOutcome> {
    let mut rng = drop_rng(cfg.seed, stream_id(0, 0, drop_idx));
    let layout = super::experiment_layout(cfg, 1, 0);
    let params = cfg.propagation.params();
    let region = layout.center_site_region();
    let profile = UserProfile {
        velocity_kmh: cfg.propagation.velocity_kmh,
        n_rx_antennas: 1,
    };
    let (drop, centers) = drop_user_clusters(
        &region,
        cfg.clusters.n_clusters,
        cfg.clusters.users_per_cluster,
        cfg.clusters.cluster_radius_m,
        &profile,
        &mut rng,
    )
    .expect("validated cluster parameters");
    let full_layout = place_femtos_at_centers(
        &layout,
        &centers,
        cfg.clusters.n_clusters,
        dbm_to_watt(cfg.layout.femto_power_dbm),
    )
    .expect("count bounded by centers");

    let powers = received_power_map(&full_layout, &drop, &params, &mut rng);
    let n_cells = full_layout.cells.len();

    cfg.sweep
        .femto_counts
        .iter()
        .map(|&n_femto| evaluate_overlay(cfg, &drop, &powers, n_cells, n_femto))
        .collect()
}

/// Serving candidates are the measurement site's three cells plus the first
/// `n_femto` femto APs; outer-ring cells act as interferers only. Column
/// indices refer to the full power map.
fn serving_candidates(n_cells: usize, n_femto: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..3).collect();
    cols.extend(n_cells..n_cells + n_femto);
    cols
}

fn evaluate_overlay(
    cfg: &ExperimentConfig,
    drop: &crate::geometry::UserDrop,
    powers: &ReceivedPowerMap,
    n_cells: usize,
    n_femto: usize,
) -> PointOutcome {
    let candidates = serving_candidates(n_cells, n_femto);
    let visible = ReceivedPowerMap {
        points: candidates.iter().map(|&c| powers.points[c]).collect(),
        power_dbm: powers
            .power_dbm
            .iter()
            .map(|row| candidates.iter().map(|&c| row[c]).collect())
            .collect(),
    };
    let attached = attach_users(drop, &visible);

    let mut share_count = vec![0usize; visible.points.len()];
    let point_index = |a: &Attachment| visible.points.iter().position(|p| p == a).unwrap();
    for user in &attached.users {
        share_count[point_index(user.attachment.as_ref().unwrap())] += 1;
    }

    let noise_w = cfg.propagation.noise_w() + cfg.propagation.floor_w();
    let bandwidth = cfg.scheduler.rb_bandwidth_hz * cfg.scheduler.n_rb as f64;
    let rate_map = cfg.link.rate_map();
    let mut per_user = Vec::with_capacity(attached.users.len());
    for user in &attached.users {
        let serving = point_index(user.attachment.as_ref().unwrap());
        let serving_col = candidates[serving];
        let full_row = &powers.power_dbm[user.id];
        let signal_w = dbm_to_watt(full_row[serving_col]);
        // Interference from every other active point: all macro cells plus
        // the deployed femtos (columns beyond n_cells + n_femto are
        // undeployed cluster centers).
        let mut interference_w = 0.0;
        for (col, &dbm) in full_row.iter().enumerate() {
            if col < n_cells + n_femto && col != serving_col {
                interference_w += dbm_to_watt(dbm);
            }
        }
        let sinr = signal_w / (noise_w + interference_w);
        let share = bandwidth / share_count[serving] as f64;
        let tier = match visible.points[serving] {
            Attachment::Cell(_) => Tier::Macro,
            Attachment::Femto(_) => Tier::Femto,
        };
        per_user.push((user.id, rate_map.rate_clamped(sinr) * share, tier));
    }

    let report = ThroughputReport { per_user };
    let split = tier_split_report(&report).expect("non-empty drop");
    let jain = jain_index(&report.throughputs()).unwrap_or(0.0);
    PointOutcome {
        macro_avg: split.macro_avg_bps,
        femto_avg: split.femto_avg_bps,
        combined_avg: split.combined_avg_bps,
        jain,
    }
}
