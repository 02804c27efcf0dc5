//! 1-bit quantized multiuser MISO downlink precoding with PSK modulation.
//!
//! The transmitter drives each antenna through a pair of 1-bit DACs, so every
//! transmit sample is limited to the four points `(±1 ± j)/sqrt(2*Nt)`. This
//! crate provides the building blocks for simulating that downlink:
//!
//! - [`constellation`]: M-PSK constellations with Gray labels and the
//!   decomposition of each symbol along its two detection thresholds.
//! - [`metric`]: the symbol-scaling system that expresses every user's
//!   noiseless received signal in its threshold basis; the minimum scaling
//!   factor is the performance metric.
//! - [`precoder`]: 1-bit quantization and the quantized ZF, quantized
//!   matched-filter, random-sign and unquantized-ZF initial precoders.
//! - [`refine`]: the greedy one-antenna-at-a-time sign-flip refinement that
//!   maximizes the minimum scaling factor, plus an exhaustive max-min search
//!   for small arrays.
//! - [`sim`]: Rayleigh channel and AWGN generation and the deterministic
//!   Monte Carlo BER engine.

pub mod constellation;
mod error;
pub mod metric;
pub mod precoder;
pub mod refine;
pub mod sim;

pub use constellation::{Constellation, SymbolBases};
pub use error::{Error, Result};
pub use metric::{min_scaling, ChannelMatrix, ExtendedTransmitVector, ScalingMatrix, ScalingSystem};
pub use precoder::PrecoderKind;
pub use refine::RefineReport;
pub use sim::{BerRecord, SimulationConfig};
