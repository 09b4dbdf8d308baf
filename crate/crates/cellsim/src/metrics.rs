//! Throughput and fairness aggregation, plus the double-logarithmic
//! multi-user gain fit.

use crate::error::{Error, Result};

/// Serving tier of a user, for the overlay reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Macro,
    Femto,
}

/// Per-user average throughput with tier tags.
#[derive(Debug, Clone)]
pub struct ThroughputReport {
    /// (user id, throughput bits/s, tier)
    pub per_user: Vec<(usize, f64, Tier)>,
}

impl ThroughputReport {
    pub fn cell_sum_bps(&self) -> f64 {
        self.per_user.iter().map(|(_, t, _)| t).sum()
    }

    pub fn throughputs(&self) -> Vec<f64> {
        self.per_user.iter().map(|&(_, t, _)| t).collect()
    }
}

/// Jain's fairness index `(sum x)^2 / (n sum x^2)`, in (0, 1].
pub fn jain_index(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("fairness index needs at least one value"));
    }
    if x.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("throughputs must be non-negative"));
    }
    let sum: f64 = x.iter().sum();
    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        return Err(Error::UndefinedFairness);
    }
    Ok(sum * sum / (x.len() as f64 * sum_sq))
}

/// Result of fitting `T(k) = m ln(ln(b k))` to sum-throughput points.
#[derive(Debug, Clone, Copy)]
pub struct GainFit {
    /// Multiplexing scale `m` (bits/s); gain factors are ratios of `m`.
    pub scale: f64,
    /// Diversity placement `b` (dimensionless).
    pub diversity: f64,
    pub r_squared: f64,
}

/// Least-squares fit of the adapted double-logarithmic multi-user gain law.
///
/// `m` has a closed form given `b`; `b` is found by a coarse log-spaced scan
/// followed by golden-section refinement. Degenerate (constant) data returns
/// a fit with `r_squared = 0` instead of an error.
pub fn fit_loglog_gain(points: &[(f64, f64)]) -> Result<GainFit> {
    if points.len() < 3 {
        return Err(Error::invalid("fit needs at least 3 points"));
    }
    if points.iter().any(|&(k, _)| k < 2.0) {
        return Err(Error::invalid("fit needs k >= 2 at every point"));
    }
    let k_min = points.iter().map(|&(k, _)| k).fold(f64::INFINITY, f64::min);
    // ln(ln(b k)) needs b k > 1 at every point.
    let b_lo = (1.0 + 1e-6) / k_min;
    let b_hi = 1e3f64;

    let sse_and_m = |b: f64| -> (f64, f64) {
        let mut su2 = 0.0;
        let mut sut = 0.0;
        for &(k, t) in points {
            let u = (b * k).ln().ln();
            su2 += u * u;
            sut += u * t;
        }
        let m = if su2 > 0.0 { sut / su2 } else { 0.0 };
        let mut sse = 0.0;
        for &(k, t) in points {
            let u = (b * k).ln().ln();
            sse += (t - m * u).powi(2);
        }
        (sse, m)
    };

    // Coarse scan in log space, then golden-section refinement around the
    // best bracket.
    let n_scan = 96;
    let log_lo = b_lo.ln();
    let log_hi = b_hi.ln();
    let mut best_i = 0;
    let mut best_sse = f64::INFINITY;
    for i in 0..=n_scan {
        let b = (log_lo + (log_hi - log_lo) * i as f64 / n_scan as f64).exp();
        let (sse, _) = sse_and_m(b);
        if sse < best_sse {
            best_sse = sse;
            best_i = i;
        }
    }
    let bracket = |i: i64| {
        (log_lo + (log_hi - log_lo) * i.clamp(0, n_scan as i64) as f64 / n_scan as f64).exp()
    };
    let (mut a, mut c) = (bracket(best_i as i64 - 1), bracket(best_i as i64 + 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = c - inv_phi * (c - a);
    let mut x2 = a + inv_phi * (c - a);
    let mut f1 = sse_and_m(x1).0;
    let mut f2 = sse_and_m(x2).0;
    for _ in 0..80 {
        if f1 <= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - inv_phi * (c - a);
            f1 = sse_and_m(x1).0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (c - a);
            f2 = sse_and_m(x2).0;
        }
    }
    let b = 0.5 * (a + c);
    let (sse, m) = sse_and_m(b);

    let t_mean = points.iter().map(|&(_, t)| t).sum::<f64>() / points.len() as f64;
    let sst: f64 = points.iter().map(|&(_, t)| (t - t_mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - sse / sst).max(0.0)
    } else {
        0.0
    };
    Ok(GainFit {
        scale: m,
        diversity: b,
        r_squared,
    })
}

/// Aggregate throughput per unit area and bandwidth.
pub fn area_spectral_efficiency(total_throughput_bps: f64, area_m2: f64, bandwidth_hz: f64) -> f64 {
    total_throughput_bps / (area_m2 * bandwidth_hz)
}

/// Per-tier and combined average user throughput.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierSplit {
    pub macro_avg_bps: Option<f64>,
    pub femto_avg_bps: Option<f64>,
    pub combined_avg_bps: f64,
}

/// Arithmetic means per tier and overall; an empty tier is reported as
/// absent, not zero.
pub fn tier_split_report(report: &ThroughputReport) -> Result<TierSplit> {
    if report.per_user.is_empty() {
        return Err(Error::invalid("throughput report has no users"));
    }
    let mean_of = |tier: Tier| {
        let vals: Vec<f64> = report
            .per_user
            .iter()
            .filter(|(_, _, t)| *t == tier)
            .map(|&(_, v, _)| v)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let combined = report.cell_sum_bps() / report.per_user.len() as f64;
    Ok(TierSplit {
        macro_avg_bps: mean_of(Tier::Macro),
        femto_avg_bps: mean_of(Tier::Femto),
        combined_avg_bps: combined,
    })
}

/// Sample mean and standard error of the mean (0 for a single sample).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_reference_values() {
        assert!((jain_index(&[2.5, 2.5, 2.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!((jain_index(&[1.0, 0.0, 0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        // Derived: (1+2+3)^2 / (3 * 14) = 36/42 = 6/7.
        assert!((jain_index(&[1.0, 2.0, 3.0]).unwrap() - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn jain_edge_cases() {
        assert!(matches!(
            jain_index(&[0.0, 0.0]),
            Err(Error::UndefinedFairness)
        ));
        assert!(jain_index(&[]).is_err());
        assert!(jain_index(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn jain_scale_invariance_and_bounds() {
        let x = [0.5, 1.5, 4.0, 2.0];
        let j = jain_index(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * 7.3).collect();
        assert!((jain_index(&scaled).unwrap() - j).abs() < 1e-12);
        assert!(j >= 1.0 / x.len() as f64 && j <= 1.0);
    }

    /// Inverse-crime recovery: noiseless model data returns the generating
    /// parameters within 1% and R^2 = 1.
    #[test]
    fn fit_recovers_noiseless_parameters() {
        let points: Vec<(f64, f64)> = (1..=6)
            .map(|i| {
                let k = 2f64.powi(i); // 2..64
                (k, 3.0 * (2.0 * k).ln().ln())
            })
            .collect();
        let fit = fit_loglog_gain(&points).unwrap();
        assert!((fit.scale - 3.0).abs() < 0.03, "m = {}", fit.scale);
        assert!((fit.diversity - 2.0).abs() < 0.02, "b = {}", fit.diversity);
        assert!(fit.r_squared > 1.0 - 1e-6);
    }

    #[test]
    fn fit_scale_linearity() {
        let base: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&k| (k, 1.7 * (3.0 * k).ln().ln()))
            .collect();
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(k, t)| (k, 4.0 * t)).collect();
        let f1 = fit_loglog_gain(&base).unwrap();
        let f2 = fit_loglog_gain(&scaled).unwrap();
        assert!((f2.scale / f1.scale - 4.0).abs() < 1e-3);
        assert!((f2.diversity - f1.diversity).abs() < 1e-3 * f1.diversity);
    }

    #[test]
    fn fit_degenerate_data_reports_zero_r2() {
        let points = vec![(2.0, 5.0), (4.0, 5.0), (8.0, 5.0), (16.0, 5.0)];
        let fit = fit_loglog_gain(&points).unwrap();
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn fit_input_validation() {
        assert!(fit_loglog_gain(&[(2.0, 1.0), (4.0, 2.0)]).is_err());
        assert!(fit_loglog_gain(&[(1.0, 1.0), (4.0, 2.0), (8.0, 3.0)]).is_err());
    }

    #[test]
    fn ase_arithmetic() {
        assert_eq!(area_spectral_efficiency(0.0, 10.0, 10.0), 0.0);
        let base = area_spectral_efficiency(1e6, 1e4, 1e7);
        let halved = area_spectral_efficiency(1e6, 2e4, 1e7);
        assert!((base / halved - 2.0).abs() < 1e-12);
        // Three cells with a known sum rate over a known area.
        let ase = area_spectral_efficiency(3.0 * 2e6, 6.5e5, 1e7);
        assert!((ase - 6e6 / 6.5e12).abs() < 1e-18);
    }

    #[test]
    fn tier_split_cases() {
        let all_macro = ThroughputReport {
            per_user: vec![(0, 1.0, Tier::Macro), (1, 3.0, Tier::Macro)],
        };
        let split = tier_split_report(&all_macro).unwrap();
        assert_eq!(split.femto_avg_bps, None);
        assert!((split.combined_avg_bps - 2.0).abs() < 1e-12);
        assert!((split.macro_avg_bps.unwrap() - 2.0).abs() < 1e-12);

        let mixed = ThroughputReport {
            per_user: vec![
                (0, 1.0, Tier::Macro),
                (1, 1.0, Tier::Macro),
                (2, 3.0, Tier::Femto),
                (3, 3.0, Tier::Femto),
            ],
        };
        let split = tier_split_report(&mixed).unwrap();
        assert!((split.combined_avg_bps - 2.0).abs() < 1e-12);
    }

    /// Identity check: the combined mean equals the count-weighted tier mean.
    #[test]
    fn tier_split_weighted_identity() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..30);
            let per_user: Vec<(usize, f64, Tier)> = (0..n)
                .map(|i| {
                    let tier = if rng.random::<bool>() {
                        Tier::Macro
                    } else {
                        Tier::Femto
                    };
                    (i, rng.random_range(0.0..5.0), tier)
                })
                .collect();
            let report = ThroughputReport { per_user };
            let split = tier_split_report(&report).unwrap();
            let n_macro = report
                .per_user
                .iter()
                .filter(|(_, _, t)| *t == Tier::Macro)
                .count() as f64;
            let n_femto = report.per_user.len() as f64 - n_macro;
            let weighted = (split.macro_avg_bps.unwrap_or(0.0) * n_macro
                + split.femto_avg_bps.unwrap_or(0.0) * n_femto)
                / (n_macro + n_femto);
            assert!((weighted - split.combined_avg_bps).abs() < 1e-12);
            // The combined mean lies within the tier means.
            if let (Some(m), Some(f)) = (split.macro_avg_bps, split.femto_avg_bps) {
                let lo = m.min(f) - 1e-12;
                let hi = m.max(f) + 1e-12;
                assert!(split.combined_avg_bps >= lo && split.combined_avg_bps <= hi);
            }
        }
    }

    #[test]
    fn mean_stderr_basics() {
        let (m, se) = mean_stderr(&[2.0, 4.0, 6.0, 8.0]);
        assert!((m - 5.0).abs() < 1e-12);
        // Sample std of [2,4,6,8] is sqrt(20/3); stderr divides by sqrt(4).
        assert!((se - (20.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }
}
