//! Cheap integration checks of per-experiment behavior not covered by the
//! acceptance suite.

use cellsim::simrunner::{build_pool, default_config, run_experiment, ExperimentKind, ResultTable};

fn run(kind: ExperimentKind, overrides: &[(&str, &str)]) -> ResultTable {
    let overrides: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let cfg = default_config(kind, &overrides).unwrap();
    let pool = build_pool(None);
    run_experiment(&cfg, &pool).unwrap()
}

#[test]
fn femto_zero_count_has_no_femto_tier() {
    let table = run(ExperimentKind::Femto, &[("n_drops", "15")]);
    let femto_rows = table.metric("avg_user_throughput_femto");
    assert!(femto_rows.iter().all(|r| r.sweep_value > 0.0));
    // With no femtos the combined mean equals the macro mean exactly.
    let at_zero = |metric: &str| {
        table
            .metric(metric)
            .iter()
            .find(|r| r.sweep_value == 0.0)
            .map(|r| r.mean)
            .unwrap()
    };
    assert_eq!(
        at_zero("avg_user_throughput_macro"),
        at_zero("avg_user_throughput_combined")
    );
}

#[test]
fn cfo_force_zero_collapses_both_curves() {
    let table = run(
        ExperimentKind::Cfo,
        &[("n_drops", "200"), ("link.cfo_force_zero", "true")],
    );
    for row in &table.rows {
        assert_eq!(row.mean, 0.0, "metric {} at {}", row.metric, row.sweep_value);
        assert_eq!(row.stderr, 0.0);
    }
}

#[test]
fn pilot_power_uses_full_budget_at_standstill_and_never_more() {
    let table = run(ExperimentKind::PilotPower, &[]);
    for antenna in ["1x1", "2x2", "4x4"] {
        let used = table.metric(&format!("power_used_pct_{antenna}"));
        let at_zero = used.iter().find(|r| r.sweep_value == 0.0).unwrap().mean;
        assert!((at_zero - 100.0).abs() < 1e-2, "{antenna}: {at_zero}%");
        // Non-increasing in velocity over the grid.
        let means: Vec<f64> = used.iter().map(|r| r.mean).collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert!(used.iter().all(|r| r.mean <= 100.0 + 1e-9));
    }
}

#[test]
fn mu_gain_emits_fits_and_all_metrics() {
    let table = run(
        ExperimentKind::MuGain,
        &[
            ("n_drops", "4"),
            ("n_tti", "20"),
            ("sweep.user_counts", "[2, 4, 8]"),
        ],
    );
    for sched in ["best_cqi", "prop_fair", "round_robin"] {
        assert_eq!(table.metric(&format!("sum_throughput_bps_{sched}")).len(), 3);
        assert_eq!(table.metric(&format!("jain_{sched}")).len(), 3);
        assert_eq!(table.metric(&format!("rb_share_jain_{sched}")).len(), 3);
        assert_eq!(table.metric(&format!("fit_m_{sched}")).len(), 1);
        assert_eq!(table.metric(&format!("fit_r2_{sched}")).len(), 1);
    }
    // Throughput ordering holds even on a tiny run.
    for k in [2.0, 4.0, 8.0] {
        let at = |m: &str| {
            table
                .metric(m)
                .iter()
                .find(|r| r.sweep_value == k)
                .unwrap()
                .mean
        };
        assert!(at("sum_throughput_bps_best_cqi") >= at("sum_throughput_bps_round_robin"));
    }
}

#[test]
fn das_emits_every_mode_and_arm() {
    let table = run(
        ExperimentKind::Das,
        &[
            ("n_drops", "3"),
            ("n_tti", "2"),
            ("sweep.user_counts", "[2, 4]"),
        ],
    );
    for arm in ["centralized", "das"] {
        for mode in [
            "svd_perfect",
            "clsm_quantized",
            "zf_perfect",
            "zf_quantized",
            "pu2rc_quantized",
        ] {
            let rows = table.metric(&format!("ase_{mode}_{arm}"));
            assert_eq!(rows.len(), 2, "{mode}/{arm}");
            assert!(rows.iter().all(|r| r.mean > 0.0));
        }
    }
}

#[test]
fn restricting_das_modes_restricts_output() {
    let table = run(
        ExperimentKind::Das,
        &[
            ("n_drops", "2"),
            ("n_tti", "2"),
            ("sweep.user_counts", "[2]"),
            ("sweep.das_modes", "[\"zf-perfect\"]"),
        ],
    );
    assert!(!table.metric("ase_zf_perfect_das").is_empty());
    assert!(table.metric("ase_svd_perfect_das").is_empty());
}
