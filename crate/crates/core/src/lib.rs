//! Reconciliation of correlated Gaussian keys with non-binary LDPC codes.
//!
//! The pipeline: a [`source`] produces correlated frames, the [`quantizer`]
//! maps them to `p`-bit symbols, the high `q` bits of each symbol are
//! protected by a code over GF(2^q) from [`ldpc`], and [`decoder`] recovers
//! them from a syndrome. [`protocol`] ties the pieces into the message
//! exchange and its rate accounting.

// Negated comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decoder;
pub mod gf;
pub mod ldpc;
pub mod protocol;
pub mod quantizer;
pub mod source;

pub use decoder::{DecodeResult, Decoder, DecoderConfig};
pub use gf::{GaloisField, Symbol};
pub use ldpc::{Profile, SparseParityCheck};
pub use protocol::{AliceMessage, ProtocolParams, ReconciliationReport};
pub use quantizer::{Bin, QuantizationGrid, SymbolSplit};
pub use source::{FramePair, Role, SourceModel};
