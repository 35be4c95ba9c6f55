//! Link-level simulation of convolutional-coded DQPSK over SIMO-OFDM with a
//! linear-prediction (predictive Viterbi) receiver.
//!
//! The transmitter encodes data with a rate-1/2 recursive systematic code,
//! maps dibits to DQPSK and sends one symbol per subcarrier. The receiver
//! never sees the channel: it predicts the per-subcarrier channel response
//! from past observations along each hypothesized path of a supertrellis.
//!
//! Modules, bottom-up:
//!
//! - [`coding`]: encoder trellis, DQPSK differential mapping
//! - [`channel`]: OFDM pipeline, Rayleigh channel, SNR calibration
//! - [`prediction`]: closed-form autocorrelations and the predictor ladder
//! - [`supertrellis`]: full and isometry-reduced supertrellises
//! - [`detectors`]: predictive Viterbi, coherent baseline, exhaustive oracle
//! - [`harness`]: Monte-Carlo BER sweeps, CSV and SVG output

pub mod channel;
pub mod coding;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod prediction;
pub mod supertrellis;

pub use error::{Error, Result};
