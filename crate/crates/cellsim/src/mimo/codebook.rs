//! Quantization codebooks: random vector codebooks for CSIT direction
//! feedback, random semi-unitary precoder codebooks for closed-loop spatial
//! multiplexing, and the DFT-rotated unitary set for per-column unitary
//! precoding.
//!
//! All random codebooks are generated once per run from the experiment seed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::propagation::complex_gaussian_matrix;

/// Random vector quantization codebook of unit-norm directions.
#[derive(Debug, Clone)]
pub struct VectorCodebook {
    pub bits: u32,
    pub entries: Vec<DVector<Complex64>>,
}

impl VectorCodebook {
    /// `2^bits` directions drawn uniformly on the complex unit sphere.
    pub fn random(dim: usize, bits: u32, rng: &mut impl Rng) -> Self {
        let entries = (0..1usize << bits)
            .map(|_| {
                let g = complex_gaussian_matrix(dim, 1, rng);
                let norm = g.norm();
                DVector::from_iterator(dim, g.iter().map(|v| v / norm))
            })
            .collect();
        VectorCodebook { bits, entries }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].len()
    }
}

/// Codebook of semi-unitary `n_tx x rank` precoders for one transmission rank.
#[derive(Debug, Clone)]
pub struct PrecoderCodebook {
    pub rank: usize,
    pub entries: Vec<DMatrix<Complex64>>,
}

impl PrecoderCodebook {
    pub fn random(n_tx: usize, rank: usize, count: usize, rng: &mut impl Rng) -> Self {
        let entries = (0..count)
            .map(|_| {
                let g = complex_gaussian_matrix(n_tx, rank, rng);
                g.qr().q()
            })
            .collect();
        PrecoderCodebook { rank, entries }
    }
}

/// Per-rank precoder codebooks under a joint feedback budget: the rank index
/// consumes `ceil(log2(n_ranks))` bits and the remainder selects the entry,
/// so the total report size stays at `total_bits`.
pub fn clsm_codebooks(
    n_tx: usize,
    n_rx: usize,
    total_bits: u32,
    rng: &mut impl Rng,
) -> Vec<PrecoderCodebook> {
    let n_ranks = n_tx.min(n_rx).max(1);
    let rank_bits = (usize::BITS - (n_ranks - 1).leading_zeros()).min(total_bits);
    let entry_bits = total_bits - rank_bits;
    (1..=n_ranks)
        .map(|rank| PrecoderCodebook::random(n_tx, rank, 1usize << entry_bits, rng))
        .collect()
}

/// DFT-rotated unitary codebook: `2^bits` rotated versions of the scaled
/// DFT matrix. Every matrix is unitary, so simultaneous transmission on its
/// columns is mutually interference-free under perfect channel knowledge.
#[derive(Debug, Clone)]
pub struct UnitaryCodebook {
    pub matrices: Vec<DMatrix<Complex64>>,
}

impl UnitaryCodebook {
    pub fn dft_rotated(n_tx: usize, bits: u32) -> Self {
        let count = 1usize << bits;
        let scale = 1.0 / (n_tx as f64).sqrt();
        let matrices = (0..count)
            .map(|m| {
                DMatrix::from_fn(n_tx, n_tx, |k, l| {
                    let phase = std::f64::consts::TAU
                        * (k as f64 * l as f64 / n_tx as f64
                            + k as f64 * m as f64 / (n_tx as f64 * count as f64));
                    Complex64::from_polar(scale, phase)
                })
            })
            .collect();
        UnitaryCodebook { matrices }
    }

    pub fn n_tx(&self) -> usize {
        self.matrices[0].nrows()
    }
}
