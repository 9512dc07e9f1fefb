//! Hadamard coded modulation (HCM) and DC-reduced HCM for peak-power-limited
//! optical links, with ACO-OFDM and DCO-OFDM baselines.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod equalization;
pub mod error;
pub mod hadamard;
pub mod harness;
pub mod hcm;
pub mod ofdm;
pub mod pam;
pub mod permutation;

pub use error::{Error, Result};
pub use hadamard::{fwht, sylvester, BinaryHadamard};
pub use permutation::Permutation;
