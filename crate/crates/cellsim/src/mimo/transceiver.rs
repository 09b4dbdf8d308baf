//! Single-user transceivers: capacity-achieving SVD transmission with
//! water-filling, codebook-constrained closed-loop spatial multiplexing with
//! an MMSE receiver, and the dominant-eigenvector receive combining that
//! reduces a MIMO channel to one effective row per user.

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mimo::codebook::PrecoderCodebook;

/// Outcome of SVD transmission with water-filling power allocation.
#[derive(Debug, Clone)]
pub struct SvdTransmission {
    /// Shannon rate `sum log2(1 + p_i sigma_i^2 snr)` in bits/s/Hz.
    pub rate_bits: f64,
    /// Post-equalization SINR per active stream.
    pub stream_sinrs: Vec<f64>,
    /// Power fractions per active stream (sums to 1).
    pub stream_powers: Vec<f64>,
}

/// Water-filling over the singular values of `h` with total power 1 and
/// noise `1/snr`. The stream count never exceeds `min(n_tx, n_rx)`.
pub fn su_svd_transceiver(h: &DMatrix<Complex64>, snr: f64) -> Result<SvdTransmission> {
    if snr <= 0.0 {
        return Err(Error::invalid("SNR must be positive"));
    }
    let mut gains: Vec<f64> = h
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s * s * snr)
        .filter(|g| *g > 1e-300)
        .collect();
    gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if gains.is_empty() {
        return Ok(SvdTransmission {
            rate_bits: 0.0,
            stream_sinrs: Vec::new(),
            stream_powers: Vec::new(),
        });
    }
    // Largest active set whose water level clears the weakest inverse gain.
    let mut active = gains.len();
    let mut level = 0.0;
    while active > 0 {
        let inv_sum: f64 = gains[..active].iter().map(|g| 1.0 / g).sum();
        level = (1.0 + inv_sum) / active as f64;
        if level > 1.0 / gains[active - 1] {
            break;
        }
        active -= 1;
    }
    let mut stream_powers = Vec::with_capacity(active);
    let mut stream_sinrs = Vec::with_capacity(active);
    let mut rate = 0.0;
    for &g in &gains[..active] {
        let p = level - 1.0 / g;
        stream_powers.push(p);
        stream_sinrs.push(p * g);
        rate += (1.0 + p * g).log2();
    }
    Ok(SvdTransmission {
        rate_bits: rate,
        stream_sinrs,
        stream_powers,
    })
}

/// Closed-loop spatial multiplexing selection.
#[derive(Debug, Clone)]
pub struct ClsmSelection {
    pub rank: usize,
    pub index: usize,
    /// Shannon rate of the MMSE-equalized transmission, bits/s/Hz.
    pub rate_bits: f64,
    pub stream_sinrs: Vec<f64>,
}

/// Exhaustive search over `(rank, codebook entry)` maximizing the rate of an
/// MMSE-equalized transmission with equal per-stream power. Ties resolve to
/// the lower rank, then the lower index.
pub fn clsm_transceiver(
    h: &DMatrix<Complex64>,
    codebooks: &[PrecoderCodebook],
    snr: f64,
) -> Result<ClsmSelection> {
    if snr <= 0.0 {
        return Err(Error::invalid("SNR must be positive"));
    }
    if codebooks.is_empty() || codebooks.iter().any(|cb| cb.entries.is_empty()) {
        return Err(Error::invalid("CLSM codebooks must be non-empty"));
    }
    let gram = h.adjoint() * h;
    let mut best: Option<ClsmSelection> = None;
    let mut sinrs = [0.0f64; MAX_STREAMS];
    for cb in codebooks {
        let per_stream_snr = snr / cb.rank as f64;
        for (index, w) in cb.entries.iter().enumerate() {
            let ok = mmse_stream_sinrs(&gram, w.as_slice(), cb.rank, per_stream_snr, &mut sinrs);
            if !ok {
                continue;
            }
            let rate: f64 = sinrs[..cb.rank].iter().map(|s| (1.0 + s).log2()).sum();
            if best.as_ref().map_or(true, |b| rate > b.rate_bits) {
                best = Some(ClsmSelection {
                    rank: cb.rank,
                    index,
                    rate_bits: rate,
                    stream_sinrs: sinrs[..cb.rank].to_vec(),
                });
            }
        }
    }
    best.ok_or_else(|| Error::invalid("no valid CLSM hypothesis"))
}

pub const MAX_STREAMS: usize = 8;

/// Per-stream post-MMSE SINRs for transmission through precoder `w`
/// (column-major `n_tx x rank` slice) over a channel with Gram matrix
/// `gram = H^H H`: `sinr_k = 1 / Re[(I + p W^H G W)^-1]_kk - 1`.
///
/// Stack-allocated Cholesky path, no heap traffic; returns false when the
/// system matrix is not numerically positive definite.
pub fn mmse_stream_sinrs(
    gram: &DMatrix<Complex64>,
    w: &[Complex64],
    rank: usize,
    per_stream_snr: f64,
    out: &mut [f64; MAX_STREAMS],
) -> bool {
    debug_assert!(rank <= MAX_STREAMS);
    let n = gram.nrows();
    debug_assert_eq!(w.len(), n * rank);

    // t = G * W (n x rank), column-major.
    let mut t = [Complex64::new(0.0, 0.0); MAX_STREAMS * MAX_STREAMS];
    for c in 0..rank {
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += gram[(r, k)] * w[c * n + k];
            }
            t[c * n + r] = acc;
        }
    }
    // m = I + p * W^H t (rank x rank), Hermitian.
    let mut m = [Complex64::new(0.0, 0.0); MAX_STREAMS * MAX_STREAMS];
    for i in 0..rank {
        for j in 0..rank {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += w[i * n + k].conj() * t[j * n + k];
            }
            let mut v = acc * per_stream_snr;
            if i == j {
                v += 1.0;
            }
            m[j * rank + i] = v;
        }
    }
    // In-place Cholesky m = L L^H (lower triangle of m becomes L).
    for j in 0..rank {
        let mut diag = m[j * rank + j].re;
        for k in 0..j {
            diag -= m[k * rank + j].norm_sqr();
        }
        if diag <= 0.0 {
            return false;
        }
        let l_jj = diag.sqrt();
        m[j * rank + j] = Complex64::new(l_jj, 0.0);
        for i in (j + 1)..rank {
            let mut acc = m[j * rank + i];
            for k in 0..j {
                acc -= m[k * rank + i] * m[k * rank + j].conj();
            }
            m[j * rank + i] = acc / l_jj;
        }
    }
    // diag(M^-1)_k = || L^-1 e_k ||^2 via forward substitution.
    for k in 0..rank {
        let mut y = [Complex64::new(0.0, 0.0); MAX_STREAMS];
        let mut norm_sq = 0.0;
        for i in k..rank {
            let mut acc = if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for mcol in k..i {
                acc -= m[mcol * rank + i] * y[mcol];
            }
            let v = acc / m[i * rank + i].re;
            y[i] = v;
            norm_sq += v.norm_sqr();
        }
        out[k] = (1.0 / norm_sq - 1.0).max(0.0);
    }
    true
}

/// Reduces a full `n_rx x n_tx` channel to the effective row `u1^H H`, where
/// `u1` is the dominant left singular vector. The row norm equals the largest
/// singular value.
pub fn receive_combining(h: &DMatrix<Complex64>) -> RowDVector<Complex64> {
    if h.nrows() == 1 {
        return RowDVector::from_iterator(h.ncols(), h.row(0).iter().cloned());
    }
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut dominant = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > svd.singular_values[dominant] {
            dominant = i;
        }
    }
    let u1 = u.column(dominant);
    let mut row = RowDVector::zeros(h.ncols());
    for c in 0..h.ncols() {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..h.nrows() {
            acc += u1[r].conj() * h[(r, c)];
        }
        row[c] = acc;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::codebook::clsm_codebooks;
    use crate::propagation::complex_gaussian_matrix;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn identity(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// Symmetric water-filling oracle: identity channel splits power equally.
    #[test]
    fn svd_identity_channel() {
        for n in [2usize, 3, 4] {
            let tx = su_svd_transceiver(&identity(n), 1.0).unwrap();
            let expected = n as f64 * (1.0 + 1.0 / n as f64).log2();
            assert!((tx.rate_bits - expected).abs() < 1e-9, "n = {n}");
            for p in &tx.stream_powers {
                assert!((p - 1.0 / n as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn svd_rank_one_channel() {
        // Outer product: rank 1 with sigma^2 = 6.
        let h = DMatrix::from_fn(2, 3, |i, j| {
            let u = [1.0, 1.0][i];
            let v = [1.0, 1.0, 1.0][j];
            Complex64::new(u * v, 0.0)
        });
        let snr = 3.0;
        let tx = su_svd_transceiver(&h, snr).unwrap();
        assert_eq!(tx.stream_powers.len(), 1);
        assert!((tx.rate_bits - (1.0 + snr * 6.0).log2()).abs() < 1e-9);
    }

    #[test]
    fn svd_zero_channel() {
        let h = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
        let tx = su_svd_transceiver(&h, 1.0).unwrap();
        assert_eq!(tx.rate_bits, 0.0);
        assert!(su_svd_transceiver(&h, 0.0).is_err());
    }

    /// Exhaustive power-allocation grid oracle for the water-filler.
    #[test]
    fn svd_matches_power_grid() {
        let mut r = rng(10);
        for _ in 0..5 {
            let h = complex_gaussian_matrix(3, 4, &mut r);
            let snr = 2.5;
            let tx = su_svd_transceiver(&h, snr).unwrap();
            let mut gains: Vec<f64> = h
                .clone()
                .svd(false, false)
                .singular_values
                .iter()
                .map(|s| s * s * snr)
                .collect();
            gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let steps = 120;
            let mut best = 0.0f64;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let p1 = i as f64 / steps as f64;
                    let p2 = j as f64 / steps as f64;
                    let p3 = 1.0 - p1 - p2;
                    let rate = (1.0 + p1 * gains[0]).log2()
                        + (1.0 + p2 * gains[1]).log2()
                        + (1.0 + p3 * gains[2]).log2();
                    best = best.max(rate);
                }
            }
            assert!(
                tx.rate_bits >= best - 1e-9 && tx.rate_bits <= best + 1e-3,
                "waterfilling {} vs grid {}",
                tx.rate_bits,
                best
            );
        }
    }

    #[test]
    fn clsm_perfect_codebook_matches_rank_one_svd() {
        let mut r = rng(11);
        let h = complex_gaussian_matrix(2, 2, &mut r);
        // Codebook containing the true dominant right singular vector.
        let svd = h.clone().svd(false, true);
        let v_t = svd.v_t.unwrap();
        let mut dominant = 0;
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > svd.singular_values[dominant] {
                dominant = i;
            }
        }
        let v1 = DMatrix::from_fn(2, 1, |i, _| v_t[(dominant, i)].conj());
        let sigma1_sq = svd.singular_values[dominant].powi(2);
        let snr = 4.0;
        let cb = PrecoderCodebook {
            rank: 1,
            entries: vec![v1],
        };
        let sel = clsm_transceiver(&h, &[cb], snr).unwrap();
        let expected = (1.0 + snr * sigma1_sq).log2();
        assert!((sel.rate_bits - expected).abs() < 1e-9);
    }

    #[test]
    fn clsm_single_entry_codebook() {
        let mut r = rng(12);
        let h = complex_gaussian_matrix(2, 2, &mut r);
        let e = DMatrix::from_fn(2, 1, |i, _| {
            Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        let cb = PrecoderCodebook {
            rank: 1,
            entries: vec![e],
        };
        let sel = clsm_transceiver(&h, &[cb], 1.0).unwrap();
        assert_eq!(sel.rank, 1);
        assert_eq!(sel.index, 0);
    }

    /// CLSM is codebook-constrained, so it never beats the SVD capacity.
    #[test]
    fn clsm_rate_bounded_by_svd() {
        let mut r = rng(13);
        let cbs = clsm_codebooks(4, 2, 6, &mut r);
        for _ in 0..20 {
            let h = complex_gaussian_matrix(2, 4, &mut r);
            let snr = 5.0;
            let svd_rate = su_svd_transceiver(&h, snr).unwrap().rate_bits;
            let clsm_rate = clsm_transceiver(&h, &cbs, snr).unwrap().rate_bits;
            assert!(
                clsm_rate <= svd_rate + 1e-9,
                "CLSM {clsm_rate} exceeded SVD {svd_rate}"
            );
        }
    }

    /// MMSE SINR oracle: direct nalgebra inverse of the small system matrix.
    #[test]
    fn mmse_sinrs_match_direct_inverse() {
        let mut r = rng(14);
        for rank in 1..=4usize {
            let h = complex_gaussian_matrix(4, 6, &mut r);
            let gram = h.adjoint() * &h;
            let w = crate::propagation::complex_gaussian_matrix(6, rank, &mut r);
            let p = 1.7;
            let mut fast = [0.0f64; MAX_STREAMS];
            assert!(mmse_stream_sinrs(&gram, w.as_slice(), rank, p, &mut fast));
            let m = identity(rank) + (w.adjoint() * &gram * &w) * Complex64::new(p, 0.0);
            let inv = m.try_inverse().unwrap();
            for k in 0..rank {
                let expected = 1.0 / inv[(k, k)].re - 1.0;
                assert!(
                    (fast[k] - expected).abs() < 1e-9 * (1.0 + expected.abs()),
                    "rank {rank} stream {k}: {} vs {expected}",
                    fast[k]
                );
            }
        }
    }

    #[test]
    fn combining_row_vector_is_identity() {
        let mut r = rng(15);
        let h = complex_gaussian_matrix(1, 4, &mut r);
        let row = receive_combining(&h);
        for c in 0..4 {
            assert_eq!(row[c], h[(0, c)]);
        }
    }

    /// SVD identity: the combined row norm equals the largest singular value.
    #[test]
    fn combining_norm_is_sigma_one() {
        let mut r = rng(16);
        for _ in 0..10 {
            let h = complex_gaussian_matrix(4, 8, &mut r);
            let row = receive_combining(&h);
            let sigma1 = h
                .clone()
                .svd(false, false)
                .singular_values
                .iter()
                .cloned()
                .fold(0.0f64, f64::max);
            assert!((row.norm() - sigma1).abs() < 1e-9);
        }
    }

    /// Direct SVD oracle: u1^H H computed through nalgebra matrix products.
    #[test]
    fn combining_matches_direct_svd() {
        let mut r = rng(17);
        let h = complex_gaussian_matrix(4, 8, &mut r);
        let row = receive_combining(&h);
        let svd = h.clone().svd(true, false);
        let u = svd.u.unwrap();
        let mut dominant = 0;
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > svd.singular_values[dominant] {
                dominant = i;
            }
        }
        let direct = u.column(dominant).adjoint() * &h;
        for c in 0..8 {
            assert!((row[c] - direct[(0, c)]).norm() < 1e-9);
        }
    }

    #[test]
    fn combining_zero_matrix_gives_zero_row() {
        let h = DMatrix::from_element(3, 4, Complex64::new(0.0, 0.0));
        let row = receive_combining(&h);
        assert!(row.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn clsm_beamforming_gain_on_strong_direction() {
        // A channel aligned with one codebook entry should pick that entry.
        let dir = DVector::from_vec(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        ]);
        let h = DMatrix::from_fn(1, 2, |_, j| dir[j].conj() * 3.0);
        let aligned = DMatrix::from_fn(2, 1, |i, _| dir[i]);
        let off = DMatrix::from_fn(2, 1, |i, _| {
            Complex64::new(if i == 0 { 0.8 } else { -0.6 }, 0.0)
        });
        let cb = PrecoderCodebook {
            rank: 1,
            entries: vec![off, aligned],
        };
        let sel = clsm_transceiver(&h, &[cb], 1.0).unwrap();
        assert_eq!(sel.index, 1);
    }
}
