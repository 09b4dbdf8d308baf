//! Multi-user precoding: zero-forcing beamforming from (possibly quantized)
//! effective channel rows, greedy user selection on the ZF sum-rate estimate,
//! per-column unitary precoding from user reports, and the resulting
//! per-user SINRs against the true channels.

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linkmodel::RateMap;
use crate::mimo::codebook::UnitaryCodebook;
use crate::mimo::feedback::Pu2rcReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmissionMode {
    Svd,
    Clsm,
    Zf,
    Pu2rc,
}

/// A per-resource transmission decision: served users, unit-norm precoder
/// columns and per-stream powers. Total power always equals the cell budget
/// (empty decisions excepted).
#[derive(Debug, Clone)]
pub struct PrecodingDecision {
    pub served: Vec<usize>,
    /// `n_tx x n_streams`, unit-norm columns.
    pub precoder: DMatrix<Complex64>,
    pub stream_powers_w: Vec<f64>,
    pub mode: TransmissionMode,
}

impl PrecodingDecision {
    pub fn empty(n_tx: usize, mode: TransmissionMode) -> Self {
        PrecodingDecision {
            served: Vec::new(),
            precoder: DMatrix::zeros(n_tx, 0),
            stream_powers_w: Vec::new(),
            mode,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.served.is_empty()
    }

    pub fn total_power_w(&self) -> f64 {
        self.stream_powers_w
            .iter()
            .zip(self.precoder.column_iter())
            .map(|(p, col)| p * col.norm_squared())
            .sum()
    }
}

/// Relative singular-value threshold below which a user stack is treated as
/// rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

/// Zero-forcing precoder: right pseudo-inverse of the stacked rows, columns
/// normalized to unit norm, equal per-user power summing to the cell budget.
///
/// With the true (unquantized) rows the cross-user terms `h_i w_j`, `i != j`,
/// vanish to numerical precision.
pub fn zf_precoder(
    rows: &[RowDVector<Complex64>],
    users: &[usize],
    cell_power_w: f64,
) -> Result<PrecodingDecision> {
    if rows.is_empty() || rows.len() != users.len() {
        return Err(Error::invalid("need one row per served user"));
    }
    let n_tx = rows[0].len();
    if rows.len() > n_tx {
        return Err(Error::invalid("served set larger than transmit antennas"));
    }
    let k = rows.len();
    let a = DMatrix::from_fn(k, n_tx, |i, j| rows[i][j]);
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max_sv == 0.0
        || svd
            .singular_values
            .iter()
            .any(|s| *s < RANK_TOLERANCE * max_sv)
    {
        return Err(Error::SingularUserSet);
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    // pinv(A) = V S^-1 U^H, n_tx x k.
    let mut pinv = DMatrix::zeros(n_tx, k);
    for col in 0..k {
        for row in 0..n_tx {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..k.min(svd.singular_values.len()) {
                acc += v_t[(m, row)].conj() * u[(col, m)].conj() / svd.singular_values[m];
            }
            pinv[(row, col)] = acc;
        }
    }
    // Normalize columns; power split equally across served users.
    for mut col in pinv.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    let per_user = cell_power_w / k as f64;
    Ok(PrecodingDecision {
        served: users.to_vec(),
        precoder: pinv,
        stream_powers_w: vec![per_user; k],
        mode: TransmissionMode::Zf,
    })
}

/// A transmitter-side channel estimate for one candidate user.
#[derive(Debug, Clone)]
pub struct CsiReport {
    pub user: usize,
    /// Estimated effective row (true row for perfect CSIT, reconstructed
    /// quantized row otherwise).
    pub row: RowDVector<Complex64>,
    /// Effective noise-plus-interference power at this user.
    pub noise_w: f64,
}

/// Maximum served set size supported by the stack-allocated Gram solver.
const MAX_SERVED: usize = 16;

/// Diagonal of the inverse Gram matrix `(A A^H)^-1` of the stacked rows, via
/// in-place complex Cholesky. Returns `None` when the stack is numerically
/// rank deficient.
fn gram_inverse_diag(rows: &[&RowDVector<Complex64>], out: &mut [f64; MAX_SERVED]) -> Option<()> {
    let k = rows.len();
    debug_assert!(k <= MAX_SERVED);
    let mut m = [Complex64::new(0.0, 0.0); MAX_SERVED * MAX_SERVED];
    let mut scale = 0.0f64;
    for i in 0..k {
        for j in 0..=i {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..rows[i].len() {
                acc += rows[i][a] * rows[j][a].conj();
            }
            m[j * k + i] = acc;
            if i == j {
                scale = scale.max(acc.re);
            }
        }
    }
    if scale <= 0.0 {
        return None;
    }
    // Cholesky with a relative pivot floor for rank detection.
    let floor = scale * 1e-12;
    for j in 0..k {
        let mut diag = m[j * k + j].re;
        for c in 0..j {
            diag -= m[c * k + j].norm_sqr();
        }
        if diag <= floor {
            return None;
        }
        let l_jj = diag.sqrt();
        m[j * k + j] = Complex64::new(l_jj, 0.0);
        for i in (j + 1)..k {
            let mut acc = m[j * k + i];
            for c in 0..j {
                acc -= m[c * k + i] * m[c * k + j].conj();
            }
            m[j * k + i] = acc / l_jj;
        }
    }
    for t in 0..k {
        let mut y = [Complex64::new(0.0, 0.0); MAX_SERVED];
        let mut norm_sq = 0.0;
        for i in t..k {
            let mut acc = if i == t {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for c in t..i {
                acc -= m[c * k + i] * y[c];
            }
            let v = acc / m[i * k + i].re;
            y[i] = v;
            norm_sq += v.norm_sqr();
        }
        out[t] = norm_sq;
    }
    Some(())
}

/// Estimated ZF sum rate for a tentative served set: the precoder nulls the
/// estimated rows exactly, so the estimate carries no residual interference.
/// Uses the identity `|h_i w_i|^2 = 1 / [(A A^H)^-1]_ii` for unit-norm
/// pseudo-inverse columns.
fn zf_rate_estimate(
    reports: &[CsiReport],
    set: &[usize],
    cell_power_w: f64,
    rate_map: &RateMap,
) -> Option<f64> {
    if set.is_empty() || set.len() > MAX_SERVED {
        return None;
    }
    let rows: Vec<&RowDVector<Complex64>> = set.iter().map(|&i| &reports[i].row).collect();
    let mut inv_diag = [0.0f64; MAX_SERVED];
    gram_inverse_diag(&rows, &mut inv_diag)?;
    let per_user = cell_power_w / set.len() as f64;
    let mut sum = 0.0;
    for (slot, &i) in set.iter().enumerate() {
        let sinr = per_user / (inv_diag[slot] * reports[i].noise_w);
        sum += rate_map.rate_clamped(sinr);
    }
    Some(sum)
}

fn dot(row: &RowDVector<Complex64>, precoder: &DMatrix<Complex64>, col: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..row.len() {
        acc += row[k] * precoder[(k, col)];
    }
    acc
}

/// Greedy semi-orthogonal user selection: from each seed user, iteratively
/// adds the candidate maximizing the ZF sum-rate estimate until `n_tx` users
/// are selected or the estimate stops improving; the best chain over all
/// seeds is then polished by single-swap local search. Returns indices into
/// `candidates`, in selection order; deterministic for identical inputs.
pub fn zf_user_selection(
    candidates: &[CsiReport],
    n_tx: usize,
    cell_power_w: f64,
    rate_map: &RateMap,
) -> Vec<usize> {
    let mut best_chain: Vec<usize> = Vec::new();
    let mut best_rate = -1.0f64;
    for seed in 0..candidates.len() {
        let mut chain = vec![seed];
        let mut current = match zf_rate_estimate(candidates, &chain, cell_power_w, rate_map) {
            Some(r) => r,
            None => continue,
        };
        while chain.len() < n_tx.min(candidates.len()) {
            let mut step: Option<(f64, usize)> = None;
            for i in 0..candidates.len() {
                if chain.contains(&i) {
                    continue;
                }
                let mut tentative = chain.clone();
                tentative.push(i);
                if let Some(rate) =
                    zf_rate_estimate(candidates, &tentative, cell_power_w, rate_map)
                {
                    if step.map_or(true, |(r, _)| rate > r) {
                        step = Some((rate, i));
                    }
                }
            }
            match step {
                Some((rate, i)) if rate > current => {
                    chain.push(i);
                    current = rate;
                }
                _ => break,
            }
        }
        if current > best_rate {
            best_rate = current;
            best_chain = chain;
        }
    }
    // Single-swap refinement: replace one served user by one left-out
    // candidate while it strictly improves the estimate.
    let mut improved = true;
    let mut passes = 0;
    while improved && passes < 4 * n_tx {
        improved = false;
        passes += 1;
        for slot in 0..best_chain.len() {
            let mut swap: Option<(f64, usize)> = None;
            for i in 0..candidates.len() {
                if best_chain.contains(&i) {
                    continue;
                }
                let mut tentative = best_chain.clone();
                tentative[slot] = i;
                if let Some(rate) =
                    zf_rate_estimate(candidates, &tentative, cell_power_w, rate_map)
                {
                    if rate > best_rate && swap.map_or(true, |(r, _)| rate > r) {
                        swap = Some((rate, i));
                    }
                }
            }
            if let Some((rate, i)) = swap {
                best_chain[slot] = i;
                best_rate = rate;
                improved = true;
            }
        }
    }
    best_chain
}

/// Per-column unitary precoding: picks the unitary matrix maximizing the sum
/// of mapped rates over the best-reporting user per column, and serves at
/// most one user per column with equal power.
pub fn pu2rc_transceiver(
    reports: &[(usize, Pu2rcReport)],
    codebook: &UnitaryCodebook,
    cell_power_w: f64,
    rate_map: &RateMap,
) -> PrecodingDecision {
    let n_tx = codebook.n_tx();
    if reports.is_empty() {
        return PrecodingDecision::empty(n_tx, TransmissionMode::Pu2rc);
    }
    let mut best: Option<(f64, usize, Vec<Option<usize>>)> = None;
    for m in 0..codebook.matrices.len() {
        // Best reporting user per column; earlier report wins ties.
        let mut assignment: Vec<Option<usize>> = vec![None; n_tx];
        for (slot, (_, rep)) in reports.iter().enumerate() {
            if rep.matrix_index != m {
                continue;
            }
            let c = rep.column_index;
            let better = match assignment[c] {
                None => true,
                Some(prev) => rep.sinr_estimate > reports[prev].1.sinr_estimate,
            };
            if better {
                assignment[c] = Some(slot);
            }
        }
        let score: f64 = assignment
            .iter()
            .flatten()
            .map(|&slot| rate_map.rate_clamped(reports[slot].1.sinr_estimate))
            .sum();
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, m, assignment));
        }
    }
    let (_, m, assignment) = best.expect("non-empty reports");
    let served_cols: Vec<(usize, usize)> = assignment
        .iter()
        .enumerate()
        .filter_map(|(c, slot)| slot.map(|s| (c, s)))
        .collect();
    if served_cols.is_empty() {
        return PrecodingDecision::empty(n_tx, TransmissionMode::Pu2rc);
    }
    let u = &codebook.matrices[m];
    let precoder = DMatrix::from_fn(n_tx, served_cols.len(), |r, c| u[(r, served_cols[c].0)]);
    let per_stream = cell_power_w / served_cols.len() as f64;
    PrecodingDecision {
        served: served_cols.iter().map(|&(_, s)| reports[s].0).collect(),
        precoder,
        stream_powers_w: vec![per_stream; served_cols.len()],
        mode: TransmissionMode::Pu2rc,
    }
}

/// Per-user SINR of a decision evaluated against the true effective rows:
/// `sinr_i = p_i |h_i w_i|^2 / (noise_i + sum_{j != i} p_j |h_i w_j|^2)`.
///
/// `true_rows` and `noise_w` run parallel to `decision.served`.
pub fn mu_sinr(
    decision: &PrecodingDecision,
    true_rows: &[RowDVector<Complex64>],
    noise_w: &[f64],
) -> Vec<f64> {
    let k = decision.served.len();
    debug_assert_eq!(true_rows.len(), k);
    debug_assert_eq!(noise_w.len(), k);
    let mut sinrs = Vec::with_capacity(k);
    for i in 0..k {
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..k {
            let g = dot(&true_rows[i], &decision.precoder, j).norm_sqr()
                * decision.stream_powers_w[j];
            if i == j {
                signal = g;
            } else {
                interference += g;
            }
        }
        sinrs.push(signal / (noise_w[i] + interference));
    }
    sinrs
}
