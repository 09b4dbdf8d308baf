//! Limited feedback: direction quantization against a vector codebook, the
//! macro-diversity-aware feedback allocation for distributed antenna arrays,
//! and the per-column reports used by unitary precoding.
//!
//! Directions are quantized, wideband gains are reported unquantized.

use nalgebra::RowDVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mimo::codebook::{UnitaryCodebook, VectorCodebook};

/// Result of quantizing an effective channel row against a codebook.
#[derive(Debug, Clone, Copy)]
pub struct CsitQuantization {
    pub index: usize,
    /// Squared normalized correlation `|h_bar . e|^2` of the chosen entry.
    pub correlation: f64,
}

/// Squared correlation between a (not necessarily normalized) row and a
/// unit-norm precoding direction: `|h . e|^2 / |h|^2`.
fn normalized_match(row: &RowDVector<Complex64>, entry: &nalgebra::DVector<Complex64>) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (h, e) in row.iter().zip(entry.iter()) {
        acc += h * e;
    }
    acc.norm_sqr() / row.norm_squared()
}

/// Picks the codebook direction maximizing `|h_bar . e|^2`; ties resolve to
/// the lowest index. The metric is invariant to a common phase rotation of
/// the row.
pub fn quantize_csit(
    row: &RowDVector<Complex64>,
    codebook: &VectorCodebook,
) -> Result<CsitQuantization> {
    if row.norm_squared() == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let mut best = CsitQuantization {
        index: 0,
        correlation: -1.0,
    };
    for (i, entry) in codebook.entries.iter().enumerate() {
        let c = normalized_match(row, entry);
        if c > best.correlation {
            best = CsitQuantization {
                index: i,
                correlation: c,
            };
        }
    }
    Ok(best)
}

/// Transmitter-side row estimate from a quantized report: the reported gain
/// along the adjoint of the chosen direction, so that the estimated row times
/// the direction recovers the full gain.
pub fn quantized_row_estimate(
    codebook: &VectorCodebook,
    index: usize,
    gain: f64,
) -> RowDVector<Complex64> {
    let entry = &codebook.entries[index];
    RowDVector::from_iterator(entry.len(), entry.iter().map(|e| e.conj() * gain))
}

/// One group of a distributed antenna array (collocated array or one RRU).
#[derive(Debug, Clone)]
pub struct AntennaGroup {
    pub id: usize,
    /// Transmit antenna indices covered by this group.
    pub range: std::ops::Range<usize>,
    /// Macroscopic pathloss of the group's transmission point, dB.
    pub pathloss_db: f64,
}

/// Quantized feedback report for a distributed antenna array.
#[derive(Debug, Clone, Copy)]
pub struct DasReport {
    pub group: usize,
    pub index: usize,
    /// Unquantized norm of the selected group's subvector.
    pub wideband_gain: f64,
}

/// Invests the whole feedback budget in the antenna group with the smallest
/// macroscopic pathloss: only that group's subvector is quantized, with the
/// full-size codebook of the subvector dimension. Ties resolve to the lowest
/// group id.
pub fn das_feedback_allocation(
    row: &RowDVector<Complex64>,
    groups: &[AntennaGroup],
    codebooks: &[VectorCodebook],
) -> Result<DasReport> {
    if groups.is_empty() {
        return Err(Error::invalid("antenna groups must be non-empty"));
    }
    if groups.len() != codebooks.len() {
        return Err(Error::invalid("one codebook per antenna group required"));
    }
    let mut covered = 0;
    for (g, cb) in groups.iter().zip(codebooks) {
        if cb.dim() != g.range.len() {
            return Err(Error::invalid(format!(
                "codebook dimension {} does not match group {} size {}",
                cb.dim(),
                g.id,
                g.range.len()
            )));
        }
        covered += g.range.len();
    }
    if covered != row.len() {
        return Err(Error::invalid(
            "antenna groups must partition the transmit antennas",
        ));
    }

    let mut chosen = 0usize;
    for (i, g) in groups.iter().enumerate() {
        if g.pathloss_db < groups[chosen].pathloss_db {
            chosen = i;
        }
    }
    let group = &groups[chosen];
    let sub = RowDVector::from_iterator(
        group.range.len(),
        group.range.clone().map(|a| row[a]),
    );
    if sub.norm_squared() == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let q = quantize_csit(&sub, &codebooks[chosen])?;
    Ok(DasReport {
        group: group.id,
        index: q.index,
        wideband_gain: sub.norm(),
    })
}

/// Transmitter-side row estimate from a DAS report: the quantized subvector
/// direction scaled by the reported gain, zero-padded on the other groups.
pub fn das_row_estimate(
    report: &DasReport,
    groups: &[AntennaGroup],
    codebooks: &[VectorCodebook],
    n_tx: usize,
) -> RowDVector<Complex64> {
    let mut row = RowDVector::zeros(n_tx);
    let pos = groups
        .iter()
        .position(|g| g.id == report.group)
        .expect("report group exists");
    let entry = &codebooks[pos].entries[report.index];
    for (k, a) in groups[pos].range.clone().enumerate() {
        row[a] = entry[k].conj() * report.wideband_gain;
    }
    row
}

/// Preferred (matrix, column) report for per-column unitary precoding.
#[derive(Debug, Clone, Copy)]
pub struct Pu2rcReport {
    pub matrix_index: usize,
    pub column_index: usize,
    /// Estimated SINR under full-load transmission, quantized to the
    /// feedback grid.
    pub sinr_estimate: f64,
}

/// dB grid used to quantize the reported SINR (3 bits).
const SINR_GRID_MIN_DB: f64 = -10.0;
const SINR_GRID_MAX_DB: f64 = 25.0;
const SINR_GRID_LEVELS: usize = 8;

pub fn quantize_sinr(sinr: f64) -> f64 {
    let db = 10.0 * sinr.max(1e-12).log10();
    let step = (SINR_GRID_MAX_DB - SINR_GRID_MIN_DB) / (SINR_GRID_LEVELS - 1) as f64;
    let idx = ((db - SINR_GRID_MIN_DB) / step)
        .round()
        .clamp(0.0, (SINR_GRID_LEVELS - 1) as f64);
    10f64.powf((SINR_GRID_MIN_DB + idx * step) / 10.0)
}

/// Computes the user's preferred unitary matrix and column assuming all
/// columns of the chosen matrix are active with equal power.
pub fn pu2rc_report(
    row: &RowDVector<Complex64>,
    codebook: &UnitaryCodebook,
    cell_power_w: f64,
    noise_w: f64,
) -> Result<Pu2rcReport> {
    if row.norm_squared() == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let n = codebook.n_tx();
    let p = cell_power_w / n as f64;
    let mut best: Option<(f64, usize, usize)> = None;
    for (m, u) in codebook.matrices.iter().enumerate() {
        // |h u_c|^2 for every column.
        let mut gains = Vec::with_capacity(n);
        for c in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += row[k] * u[(k, c)];
            }
            gains.push(acc.norm_sqr());
        }
        let total: f64 = gains.iter().sum();
        for (c, &g) in gains.iter().enumerate() {
            let sinr = p * g / (noise_w + p * (total - g));
            if best.map_or(true, |(s, _, _)| sinr > s) {
                best = Some((sinr, m, c));
            }
        }
    }
    let (sinr, m, c) = best.expect("codebook non-empty");
    Ok(Pu2rcReport {
        matrix_index: m,
        column_index: c,
        sinr_estimate: quantize_sinr(sinr),
    })
}
