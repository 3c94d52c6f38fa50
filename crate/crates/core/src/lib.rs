//! Two-stage limited-precision LDPC reconciliation.
//!
//! Stage one is a layered belief-propagation decoder working on a syndrome
//! coset, in floating point or in saturating fixed point. Stage two takes the
//! low-reliability symbols of a failed frame and peels the parity rows that
//! touch exactly one of them. Around the decoder sit a seeded Monte Carlo FER
//! harness over a binary-input AWGN channel and a composable finite-size
//! secret-key-rate model for Gaussian-modulated CV-QKD.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod corrector;
pub mod decoder;
mod error;
pub mod fixed;
pub mod gf2;
pub mod skr;

pub use error::{Error, Result};
pub use gf2::{BitVector, DegreeDistribution, IndexSet, ParityCheckMatrix};
