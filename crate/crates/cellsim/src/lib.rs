//! Deterministic, seed-reproducible cellular system-level simulator.
//!
//! The crate models a sectorized hexagonal macro network with optional remote
//! radio units and femto overlays, maps geometry to link quality through
//! pathloss/shadowing/fast-fading models, abstracts the physical layer with a
//! post-equalization SINR and a capped spectral-efficiency map, and runs
//! multi-user scheduling and MU-MIMO precoding studies on top. Experiments are
//! orchestrated by [`simrunner`], which guarantees bit-identical results for a
//! given `(config, seed)` pair regardless of worker count.

pub mod error;
pub mod geometry;
pub mod linkmodel;
pub mod metrics;
pub mod mimo;
pub mod propagation;
pub mod scheduling;
pub mod simrunner;

pub use error::{Error, Result};
