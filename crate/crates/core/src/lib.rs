//! Link-to-system mapping (physical-layer abstraction) for 5G NR.
//!
//! The crate turns a vector of per-resource-block SINRs into a transport
//! block error probability the way a system-level simulator needs it:
//!
//! ```text
//! SINR per RB ─► EESM (+ HARQ history) ─► effective SINR ─┐
//! MCS, TBS ───► base graph ─► code block segmentation ────┼─► code BLER ─► transport BLER
//!                       effective code rate (HARQ-IR) ────┘      (LUT)
//! ```
//!
//! Modules, bottom-up:
//!
//! - [`tables`]: MCS Table1/Table2 rows, calibrated EESM β per MCS, CQI quantization.
//! - [`eesm`]: effective SINR for single transmissions and HARQ-CC/HARQ-IR combining.
//! - [`segmentation`]: LDPC base graph selection, code block segmentation, transport BLER.
//! - [`lut`]: SINR-to-code-BLER lookup tables, their file format, and a synthetic generator.
//! - [`error_model`]: the full pipeline plus the seeded decode draw.
//! - [`calibration`]: β fitting against an AWGN reference.
//! - [`link_adaptation`]: error-model and Shannon-bound MCS selection.
//! - [`sim`]: a slot-level single-link simulator with metric output.
//!
//! All SINR values inside the library are linear power ratios unless a name
//! ends in `_db`.

pub mod calibration;
pub mod eesm;
pub mod error;
pub mod error_model;
pub mod fading;
pub mod link_adaptation;
pub mod lut;
pub mod segmentation;
pub mod sim;
pub mod tables;

pub use error::{Error, Result};

/// Converts a linear power ratio to decibels.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Converts decibels to a linear power ratio.
pub fn db_to_lin(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}
