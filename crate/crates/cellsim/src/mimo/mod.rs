//! Transceiver abstractions: SU-MIMO (SVD water-filling, codebook-constrained
//! CLSM), MU-MIMO (zero-forcing beamforming, per-column unitary precoding)
//! and limited-feedback CSIT quantization including the DAS-aware allocation
//! of the feedback budget.

pub mod codebook;
pub mod feedback;
pub mod precoding;
pub mod transceiver;

pub use codebook::{clsm_codebooks, PrecoderCodebook, UnitaryCodebook, VectorCodebook};
pub use feedback::{
    das_feedback_allocation, das_row_estimate, pu2rc_report, quantize_csit,
    quantized_row_estimate, AntennaGroup, CsitQuantization, DasReport, Pu2rcReport,
};
pub use precoding::{
    mu_sinr, pu2rc_transceiver, zf_precoder, zf_user_selection, CsiReport, PrecodingDecision,
    TransmissionMode,
};
pub use transceiver::{
    clsm_transceiver, receive_combining, su_svd_transceiver, ClsmSelection, SvdTransmission,
};
