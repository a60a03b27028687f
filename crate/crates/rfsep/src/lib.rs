//! Single-channel RF source separation toolkit.
//!
//! The crate covers the full benchmark pipeline: QPSK and OFDM-QPSK
//! signal-of-interest generation and demodulation, interference handling
//! and mixture synthesis at target SINR, traditional separators (matched
//! filter passthrough, block LMMSE), trainable UNet and WaveNet
//! separators on a small built-in autodiff engine, and BER/MSE-vs-SINR
//! evaluation sweeps with CSV export.

pub mod error;
pub mod signal;
pub mod qpsk;
pub mod ofdm;
pub mod mixture;
pub mod baselines;
pub mod nn;
pub mod eval;
pub mod io;

pub use error::{Error, Result};
