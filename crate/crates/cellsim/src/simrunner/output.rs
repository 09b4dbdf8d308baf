//! Result tables, CSV emission (atomic, byte-stable) and gnuplot scripts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::simrunner::config::ExperimentKind;

pub const CSV_HEADER: &str = "sweep_var,sweep_value,metric,mean,stderr,n";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Aggregated experiment results, sorted by (sweep value, metric name).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(
        &mut self,
        sweep_var: &str,
        sweep_value: f64,
        metric: &str,
        mean: f64,
        stderr: f64,
        n: usize,
    ) {
        self.rows.push(ResultRow {
            sweep_var: sweep_var.to_string(),
            sweep_value,
            metric: metric.to_string(),
            mean,
            stderr,
            n,
        });
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep_value
                .total_cmp(&b.sweep_value)
                .then_with(|| a.metric.cmp(&b.metric))
                .then_with(|| a.sweep_var.cmp(&b.sweep_var))
        });
    }

    /// Rows for one metric, in sweep order.
    pub fn metric(&self, name: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.metric == name).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sweep_var, r.sweep_value, r.metric, r.mean, r.stderr, r.n
            )
            .expect("string write");
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            _ => return Err(Error::Config("missing or invalid CSV header".into())),
        }
        let mut table = ResultTable::default();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::Config(format!("CSV line {} malformed", i + 2)));
            }
            let parse_f = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("CSV line {}: {e}", i + 2)))
            };
            table.rows.push(ResultRow {
                sweep_var: fields[0].to_string(),
                sweep_value: parse_f(fields[1])?,
                metric: fields[2].to_string(),
                mean: parse_f(fields[3])?,
                stderr: parse_f(fields[4])?,
                n: fields[5]
                    .parse()
                    .map_err(|e| Error::Config(format!("CSV line {}: {e}", i + 2)))?,
            });
        }
        Ok(table)
    }
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the CSV and the gnuplot script for one experiment; returns the
/// written paths.
pub fn emit_results(
    table: &ResultTable,
    kind: ExperimentKind,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join(format!("{}.csv", kind.name()));
    write_atomic(&csv_path, &table.to_csv_string())?;
    let gp_path = out_dir.join(format!("{}.gp", kind.name()));
    write_atomic(&gp_path, &plot_script(table, kind))?;
    Ok(vec![csv_path, gp_path])
}

fn curve(csv: &str, metric: &str, title: &str, style: &str) -> String {
    format!(
        "    '{csv}' skip 1 using 2:(strcol(3) eq '{metric}' ? $4 : NaN) \
         with {style} title '{title}'"
    )
}

/// Plain-text gnuplot script referencing the CSV by relative path and
/// mirroring the corresponding figure layout.
pub fn plot_script(table: &ResultTable, kind: ExperimentKind) -> String {
    let csv = format!("{}.csv", kind.name());
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!("set output '{}.png'\nset terminal pngcairo size 1200,500\n", kind.name()));
    match kind {
        ExperimentKind::MuGain => {
            s.push_str("set xlabel 'users per cell'\nset ylabel 'cell sum throughput [bit/s]'\nset key left top\n");
            let mut plots = vec![
                curve(&csv, "sum_throughput_bps_best_cqi", "best CQI", "linespoints"),
                curve(&csv, "sum_throughput_bps_prop_fair", "proportional fair", "linespoints"),
                curve(&csv, "sum_throughput_bps_round_robin", "round robin", "linespoints"),
            ];
            // Dashed double-logarithmic approximation from the fitted factors.
            let m = table.metric("fit_m_best_cqi");
            let b = table.metric("fit_b_best_cqi");
            if let (Some(m), Some(b)) = (m.first(), b.first()) {
                plots.push(format!(
                    "    {} * log(log({} * x)) dashtype 2 title 'log log fit'",
                    m.mean, b.mean
                ));
            }
            s.push_str("plot \\\n");
            s.push_str(&plots.join(", \\\n"));
            s.push('\n');
        }
        ExperimentKind::Das => {
            s.push_str("set multiplot layout 1,2\nset xlabel 'users per cell'\nset ylabel 'area spectral efficiency [bit/s/Hz/m^2]'\nset key left top\n");
            for arm in ["centralized", "das"] {
                s.push_str(&format!("set title '{arm}'\nplot \\\n"));
                let plots: Vec<String> = [
                    "svd_perfect",
                    "clsm_quantized",
                    "zf_perfect",
                    "zf_quantized",
                    "pu2rc_quantized",
                ]
                .iter()
                .map(|m| curve(&csv, &format!("ase_{m}_{arm}"), &m.replace('_', " "), "linespoints"))
                .collect();
                s.push_str(&plots.join(", \\\n"));
                s.push('\n');
            }
            s.push_str("unset multiplot\n");
        }
        ExperimentKind::Femto => {
            s.push_str("set xlabel 'femto access points per macro cell'\nset ylabel 'average user throughput [bit/s]'\nset y2label 'Jain fairness index'\nset y2range [0:1]\nset y2tics\nset key left top\n");
            s.push_str("plot \\\n");
            let plots = [
                curve(&csv, "avg_user_throughput_femto", "femto users", "linespoints"),
                curve(&csv, "avg_user_throughput_combined", "combined", "linespoints"),
                curve(&csv, "avg_user_throughput_macro", "macro users", "linespoints"),
                format!(
                    "    '{csv}' skip 1 using 2:(strcol(3) eq 'jain_index' ? $4 : NaN) \
                     axes x1y2 with linespoints dashtype 2 title 'Jain index'"
                ),
            ];
            s.push_str(&plots.join(", \\\n"));
            s.push('\n');
        }
        ExperimentKind::Cfo => {
            s.push_str("set xlabel 'SNR [dB]'\nset ylabel 'coded throughput loss [bit/s/Hz]'\nset key right top\n");
            s.push_str("plot \\\n");
            let plots = [
                curve(&csv, "delta_b_predicted", "predicted", "lines"),
                curve(&csv, "delta_b_simulated", "simulated", "points"),
            ];
            s.push_str(&plots.join(", \\\n"));
            s.push('\n');
        }
        ExperimentKind::PilotPower => {
            s.push_str("set multiplot layout 2,1\nset xlabel 'user velocity [km/h]'\nset ylabel 'throughput [bit/s/Hz]'\nset key right top\n");
            let antennas = ["1x1", "2x2", "4x4"];
            s.push_str("plot \\\n");
            let mut plots = Vec::new();
            for a in antennas {
                plots.push(curve(&csv, &format!("throughput_unit_{a}"), &format!("unit {a}"), "linespoints"));
                plots.push(curve(&csv, &format!("throughput_pe_{a}"), &format!("power-efficient {a}"), "linespoints dashtype 2"));
            }
            s.push_str(&plots.join(", \\\n"));
            s.push('\n');
            s.push_str("set ylabel 'power used [% of budget]'\nplot \\\n");
            let plots: Vec<String> = antennas
                .iter()
                .map(|a| curve(&csv, &format!("power_used_pct_{a}"), a, "linespoints"))
                .collect();
            s.push_str(&plots.join(", \\\n"));
            s.push('\n');
            s.push_str("unset multiplot\n");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> ResultTable {
        let mut t = ResultTable::default();
        t.push("k", 2.0, "b_metric", 1.5, 0.1, 10);
        t.push("k", 1.0, "a_metric", 0.25, 0.0, 1);
        t.push("k", 1.0, "b_metric", -3.5e-7, 0.001, 5);
        t.sort();
        t
    }

    #[test]
    fn sorted_by_value_then_metric() {
        let t = sample_table();
        assert_eq!(t.rows[0].metric, "a_metric");
        assert_eq!(t.rows[1].metric, "b_metric");
        assert_eq!(t.rows[1].sweep_value, 1.0);
        assert_eq!(t.rows[2].sweep_value, 2.0);
    }

    #[test]
    fn csv_round_trip_identity() {
        let t = sample_table();
        let text = t.to_csv_string();
        let parsed = ResultTable::from_csv_str(&text).unwrap();
        assert_eq!(t, parsed);
        // Bytes are stable under re-serialization.
        assert_eq!(text, parsed.to_csv_string());
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::default();
        assert_eq!(t.to_csv_string(), format!("{CSV_HEADER}\n"));
        let parsed = ResultTable::from_csv_str(&t.to_csv_string()).unwrap();
        assert!(parsed.rows.is_empty());
    }

    #[test]
    fn csv_rejects_bad_header_and_fields() {
        assert!(ResultTable::from_csv_str("nope\n").is_err());
        let bad = format!("{CSV_HEADER}\nk,1.0,m,x,0,1\n");
        assert!(ResultTable::from_csv_str(&bad).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert!(!path.with_extension("tmp").exists());
    }

    #[test]
    fn emit_writes_csv_and_script() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample_table();
        let files = emit_results(&t, ExperimentKind::Cfo, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let csv = std::fs::read_to_string(&files[0]).unwrap();
        assert!(csv.starts_with(CSV_HEADER));
        let gp = std::fs::read_to_string(&files[1]).unwrap();
        assert!(gp.contains("cfo.csv"));
        assert!(gp.contains("delta_b_predicted"));
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let t = sample_table();
        let err = emit_results(&t, ExperimentKind::Cfo, Path::new("/proc/definitely/not/here"))
            .unwrap_err();
        match err {
            Error::Io { path, .. } => {
                assert!(path.to_string_lossy().contains("/proc"));
            }
            other => panic!("expected io error, got {other}"),
        }
    }
}
