//! One-way reconciliation of a quantized Gaussian frame.
//!
//! Alice quantizes her frame, sends the `d` low bits of every symbol in the
//! clear together with the syndrome of the `q` high bits. Bob combines his
//! own frame with the disclosed bits into a-priori vectors for the high
//! bits, decodes against the syndrome and reassembles the full symbols.

use thiserror::Error;

use crate::decoder::{DecodeResult, Decoder, DecoderConfig};
use crate::gf::Symbol;
use crate::ldpc::SparseParityCheck;
use crate::quantizer::{self, apriori_into, Bin, Estimate, QuantizationGrid, QuantizerError, SymbolSplit};
use crate::source::{self, FramePair, Role, SourceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("symbol split corrects {split} bits but the code is over GF(2^{code})")]
    FieldMismatch { split: u32, code: u32 },
    #[error("mutual information must be positive, got {0}")]
    MutualInformation(f64),
    #[error("malformed message payload: {0}")]
    Payload(String),
}

/// Everything both parties agree on before a frame is reconciled.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    grid: QuantizationGrid,
    split: SymbolSplit,
    code: SparseParityCheck,
    rho: f64,
}

impl ProtocolParams {
    pub fn new(
        grid: QuantizationGrid,
        split: SymbolSplit,
        code: SparseParityCheck,
        rho: f64,
    ) -> Result<Self, ProtocolError> {
        split.check_grid(&grid)?;
        if split.q() != code.field().q() {
            return Err(ProtocolError::FieldMismatch { split: split.q(), code: code.field().q() });
        }
        source::check_rho(rho)?;
        Ok(Self { grid, split, code, rho })
    }

    pub fn grid(&self) -> &QuantizationGrid {
        &self.grid
    }

    pub fn split(&self) -> &SymbolSplit {
        &self.split
    }

    pub fn code(&self) -> &SparseParityCheck {
        &self.code
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Frame length.
    pub fn n(&self) -> usize {
        self.code.n()
    }

    /// Same grid, split and code at a different assumed correlation.
    pub fn with_rho(&self, rho: f64) -> Result<Self, ProtocolError> {
        source::check_rho(rho)?;
        Ok(Self { rho, ..self.clone() })
    }

    /// Disclosed bits per symbol, `d + q·m/n = p - q·R`.
    pub fn source_rate(&self) -> f64 {
        let (n, m) = (self.code.n() as f64, self.code.m() as f64);
        self.split.d() as f64 + self.split.q() as f64 * m / n
    }

    /// Upper bound on the information leaked per symbol; every disclosed
    /// bit counts in full.
    pub fn leak_bound(&self) -> f64 {
        self.source_rate()
    }
}

/// `R_source = p - q·R`.
pub fn source_rate(p: u32, q: u32, rate: f64) -> f64 {
    p as f64 - q as f64 * rate
}

/// What Alice sends over the public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliceMessage {
    /// The `d` low bits of every symbol.
    pub z_check: Vec<Bin>,
    /// Syndrome of the high bits, one field symbol per check.
    pub syndrome: Vec<Symbol>,
}

/// Alice's side: returns the public message and her full quantized frame.
///
/// Panics if `y_a` does not have the code length.
pub fn alice_messages(params: &ProtocolParams, y_a: &[f64]) -> (AliceMessage, Vec<Bin>) {
    assert_eq!(y_a.len(), params.n(), "frame length must equal the code length");
    let z_a = params.grid.quantize_frame(y_a);
    let (hat, z_check): (Vec<Symbol>, Vec<Bin>) = z_a.iter().map(|&k| params.split.split(k)).unzip();
    let syndrome = params.code.syndrome(&hat);
    (AliceMessage { z_check, syndrome }, z_a)
}

/// Bob's side with a caller-owned decoder (which must be built for
/// `params.code()`). Returns his reconstructed frame, best effort even when
/// decoding fails.
pub fn bob_reconcile_with(
    params: &ProtocolParams,
    decoder: &mut Decoder<'_>,
    y_b: &[f64],
    message: &AliceMessage,
    config: &DecoderConfig,
) -> (Vec<Bin>, DecodeResult) {
    let n = params.n();
    assert_eq!(y_b.len(), n, "frame length must equal the code length");
    assert_eq!(message.z_check.len(), n, "disclosed frame length must equal the code length");
    assert!(std::ptr::eq(decoder.code(), &params.code), "decoder was built for a different code");
    let apriori = apriori_frame(params, y_b, &message.z_check);
    let result = decoder.decode(&message.syndrome, &apriori, config);
    let z_b =
        result.decoded.iter().zip(&message.z_check).map(|(&hat, &check)| params.split.recombine(hat, check)).collect();
    (z_b, result)
}

pub fn bob_reconcile(
    params: &ProtocolParams,
    y_b: &[f64],
    message: &AliceMessage,
    config: &DecoderConfig,
) -> (Vec<Bin>, DecodeResult) {
    let mut decoder = Decoder::new(&params.code);
    bob_reconcile_with(params, &mut decoder, y_b, message, config)
}

/// The `n` a-priori vectors Bob feeds to the decoder, back to back.
pub fn apriori_frame(params: &ProtocolParams, y_b: &[f64], z_check: &[Bin]) -> Vec<f64> {
    let order = 1usize << params.split.q();
    let rho = params.rho;
    let scale = (2.0 * (1.0 - rho * rho)).sqrt();
    let mut out = vec![0.0; y_b.len() * order];
    for ((chunk, &y), &check) in out.chunks_mut(order).zip(y_b).zip(z_check) {
        apriori_into(&params.grid, &params.split, rho * y, scale, check, chunk);
    }
    out
}

/// Efficiency and its factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// `(H(Z_A) - R_source) / I(Y_A;Y_B)` with the exact discrete entropy.
    pub beta: f64,
    /// `I(Z_A;Y_B) / I(Y_A;Y_B)`.
    pub beta_q: f64,
    /// `(H(Z_A) - R_source) / I(Z_A;Y_B)`.
    pub beta_code: f64,
    /// `beta` with `H(Z_A)` replaced by `h(Y_A) - log2 δ`.
    pub beta_approx: f64,
}

impl Efficiency {
    /// All fields NaN, for sources that carry no mutual information.
    pub fn undefined() -> Self {
        Self { beta: f64::NAN, beta_q: f64::NAN, beta_code: f64::NAN, beta_approx: f64::NAN }
    }
}

/// `(entropy_h - r_source) / mutual_i`.
pub fn efficiency(entropy_h: f64, r_source: f64, mutual_i: f64) -> Result<f64, ProtocolError> {
    if !(mutual_i > 0.0) {
        return Err(ProtocolError::MutualInformation(mutual_i));
    }
    Ok((entropy_h - r_source) / mutual_i)
}

/// Information-theoretic quantities of one `(grid, rho)` pair; the
/// conditional entropy is a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyModel {
    pub entropy: f64,
    pub entropy_approx: f64,
    pub conditional_entropy: Estimate,
    pub mutual_information: f64,
}

impl EntropyModel {
    pub fn estimate(grid: &QuantizationGrid, rho: f64, samples: usize, seed: u64) -> Result<Self, ProtocolError> {
        Ok(Self {
            entropy: quantizer::discrete_entropy(grid),
            entropy_approx: quantizer::entropy_approx(grid),
            conditional_entropy: quantizer::conditional_entropy_mc(grid, rho, samples, seed)?,
            mutual_information: source::mutual_information(rho)?,
        })
    }

    /// `I(Z_A;Y_B) = H(Z_A) - H(Z_A|Y_B)`.
    pub fn quantized_mutual_information(&self) -> f64 {
        self.entropy - self.conditional_entropy.mean
    }

    pub fn efficiency(&self, r_source: f64) -> Result<Efficiency, ProtocolError> {
        let i = self.mutual_information;
        let iq = self.quantized_mutual_information();
        if !(iq > 0.0) {
            return Err(ProtocolError::MutualInformation(iq));
        }
        Ok(Efficiency {
            beta: efficiency(self.entropy, r_source, i)?,
            beta_q: iq / i,
            beta_code: (self.entropy - r_source) / iq,
            beta_approx: efficiency(self.entropy_approx, r_source, i)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconciliationReport {
    pub r_source: f64,
    pub leak_bound: f64,
    pub efficiency: Efficiency,
    pub decode: DecodeResult,
    /// Ground-truth comparison of the two keys; only meaningful in simulation.
    pub symbols_match: bool,
    /// Number of symbols where the reconciled key differs from the reference.
    pub symbol_errors: usize,
}

/// Runs both sides on one frame pair. With [`Role::Reverse`] Bob's frame is
/// the reference and Alice corrects toward it.
pub fn reconcile_frame(
    params: &ProtocolParams,
    model: &EntropyModel,
    decoder: &mut Decoder<'_>,
    frames: &FramePair,
    role: Role,
    config: &DecoderConfig,
) -> Result<ReconciliationReport, ProtocolError> {
    let (reference, side) = frames.orient(role);
    let (message, z_ref) = alice_messages(params, reference);
    let (z_rec, decode) = bob_reconcile_with(params, decoder, side, &message, config);
    let symbol_errors = z_ref.iter().zip(&z_rec).filter(|(a, b)| a != b).count();
    Ok(ReconciliationReport {
        r_source: params.source_rate(),
        leak_bound: params.leak_bound(),
        efficiency: model.efficiency(params.source_rate())?,
        decode,
        symbols_match: symbol_errors == 0,
        symbol_errors,
    })
}

impl AliceMessage {
    /// Byte layout: `n` and `m` as little-endian `u32`, then `d` and `q` as
    /// one byte each, then the `n` disclosed values at `d` bits each and the
    /// `m` syndrome symbols at `q` bits each, packed LSB-first into one bit
    /// stream padded with zeros to a whole byte.
    pub fn to_bytes(&self, split: &SymbolSplit) -> Vec<u8> {
        let (d, q) = (split.d(), split.q());
        let mut out = Vec::with_capacity(10 + self.payload_bits(split).div_ceil(8));
        out.extend((self.z_check.len() as u32).to_le_bytes());
        out.extend((self.syndrome.len() as u32).to_le_bytes());
        out.push(d as u8);
        out.push(q as u8);
        let mut w = BitWriter { out, acc: 0, used: 0 };
        for &v in &self.z_check {
            w.put(v as u32, d);
        }
        for &s in &self.syndrome {
            w.put(s as u32, q);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, SymbolSplit), ProtocolError> {
        let bad = |m: &str| ProtocolError::Payload(m.to_string());
        if bytes.len() < 10 {
            return Err(bad("shorter than the 10-byte header"));
        }
        let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let split = SymbolSplit::new(bytes[9] as u32, bytes[8] as u32)?;
        let bits = n * split.d() as usize + m * split.q() as usize;
        if bytes.len() != 10 + bits.div_ceil(8) {
            return Err(bad("length does not match the header"));
        }
        let mut r = BitReader { bytes: &bytes[10..], pos: 0 };
        let z_check = (0..n).map(|_| r.get(split.d()) as Bin).collect();
        let syndrome = (0..m).map(|_| r.get(split.q()) as Symbol).collect();
        if r.rest_nonzero() {
            return Err(bad("nonzero padding"));
        }
        Ok((Self { z_check, syndrome }, split))
    }

    /// Disclosed payload in bits, `n·d + m·q`.
    pub fn payload_bits(&self, split: &SymbolSplit) -> usize {
        self.z_check.len() * split.d() as usize + self.syndrome.len() * split.q() as usize
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    used: u32,
}

impl BitWriter {
    fn put(&mut self, v: u32, bits: u32) {
        self.acc |= (v as u64) << self.used;
        self.used += bits;
        while self.used >= 8 {
            self.out.push(self.acc as u8);
            self.acc >>= 8;
            self.used -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.used > 0 {
            self.out.push(self.acc as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn get(&mut self, bits: u32) -> u32 {
        let mut v = 0;
        for i in 0..bits as usize {
            let bit = (self.bytes[(self.pos + i) / 8] >> ((self.pos + i) % 8)) & 1;
            v |= (bit as u32) << i;
        }
        self.pos += bits as usize;
        v
    }

    fn rest_nonzero(&self) -> bool {
        let end = self.bytes.len() * 8;
        (self.pos..end).any(|i| (self.bytes[i / 8] >> (i % 8)) & 1 == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::GaloisField;
    use crate::ldpc::{assign_labels, peg_construct, PegConfig, Profile};
    use crate::source::{sample_frames, snr_db_to_rho};

    fn params(n: usize, rate: f64, q: u32, d: u32, alpha: f64, rho: f64) -> ProtocolParams {
        let m = ((1.0 - rate) * n as f64).round() as usize;
        let skel = peg_construct(n, m, &Profile::Regular { dv: 2 }, &PegConfig::new(17)).unwrap();
        let code = assign_labels(&skel, &GaloisField::new(q).unwrap(), 18).unwrap();
        let grid = QuantizationGrid::new(alpha, q + d).unwrap();
        ProtocolParams::new(grid, SymbolSplit::new(q, d).unwrap(), code, rho).unwrap()
    }

    #[test]
    fn source_rate_arithmetic() {
        assert!((source_rate(8, 5, 0.7) - 4.5).abs() < 1e-12);
        assert_eq!(source_rate(8, 5, 1.0), 3.0);
        assert_eq!(source_rate(8, 5, 0.0), 8.0);
        let p = params(1000, 0.7, 5, 3, 8.0, 0.9);
        assert!((p.source_rate() - source_rate(8, 5, p.code().design_rate())).abs() < 1e-12);
        assert_eq!(p.leak_bound(), p.source_rate());
    }

    #[test]
    fn message_volume() {
        let p = params(1000, 0.7, 5, 3, 8.0, 0.9);
        let frames = sample_frames(0.9, 1000, 1).unwrap();
        let (msg, z_a) = alice_messages(&p, &frames.y_a);
        assert_eq!(z_a.len(), 1000);
        let split = *p.split();
        assert_eq!(msg.z_check.len() * split.d() as usize, 3000);
        assert_eq!(msg.payload_bits(&split), 3000 + p.code().m() * 5);
        assert_eq!(msg.payload_bits(&split) as f64, p.n() as f64 * p.source_rate());
        assert_eq!(alice_messages(&p, &frames.y_a).0, msg);
    }

    #[test]
    fn zero_disclosure() {
        let p = params(200, 0.5, 4, 0, 3.0, 0.9);
        let frames = sample_frames(0.9, 200, 2).unwrap();
        let (msg, z_a) = alice_messages(&p, &frames.y_a);
        assert!(msg.z_check.iter().all(|&c| c == 0));
        assert_eq!(msg.payload_bits(p.split()), p.code().m() * 4);
        let hat: Vec<Symbol> = z_a.iter().map(|&k| k as Symbol).collect();
        assert_eq!(msg.syndrome, p.code().syndrome(&hat));
    }

    #[test]
    fn bytes_round_trip() {
        for (q, d) in [(5, 3), (4, 0), (3, 5)] {
            let p = params(120, 0.6, q, d, 4.0, 0.95);
            let frames = sample_frames(0.95, 120, 3).unwrap();
            let (msg, _) = alice_messages(&p, &frames.y_a);
            let bytes = msg.to_bytes(p.split());
            assert_eq!(bytes.len(), 10 + msg.payload_bits(p.split()).div_ceil(8));
            let (back, split) = AliceMessage::from_bytes(&bytes).unwrap();
            assert_eq!((back, split), (msg, *p.split()));
            assert!(AliceMessage::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        }
        assert!(AliceMessage::from_bytes(&[0; 4]).is_err());
    }

    #[test]
    fn noiseless_round_trip() {
        let rho = 0.99995;
        let p = params(1000, 0.7, 5, 3, 8.0, rho);
        let mut dec = Decoder::new(p.code());
        let cfg = DecoderConfig::default();
        for frame in 0..20 {
            let frames = sample_frames(rho, 1000, frame).unwrap();
            let (msg, z_a) = alice_messages(&p, &frames.y_a);
            let (z_b, res) = bob_reconcile_with(&p, &mut dec, &frames.y_b, &msg, &cfg);
            assert!(res.success);
            assert_eq!(z_b, z_a);
        }
    }

    #[test]
    fn waterfall_point_reconciles() {
        // Well above the R = 0.7 threshold for this setup.
        let rho = snr_db_to_rho(18.0).unwrap();
        let p = params(1000, 0.7, 5, 3, 8.0, rho);
        let model = EntropyModel::estimate(p.grid(), rho, 2000, 5).unwrap();
        let mut dec = Decoder::new(p.code());
        let mut ok = 0;
        for frame in 0..20 {
            let frames = sample_frames(rho, 1000, 100 + frame).unwrap();
            let r = reconcile_frame(&p, &model, &mut dec, &frames, Role::Direct, &DecoderConfig::default()).unwrap();
            assert_eq!(r.decode.success, r.decode.final_syndrome_match);
            if r.decode.success {
                assert_eq!(p.code().syndrome(&r.decode.decoded), alice_messages(&p, &frames.y_a).0.syndrome);
            }
            ok += r.symbols_match as usize;
        }
        assert!(ok >= 19, "{ok}/20");
    }

    #[test]
    fn reverse_role_swaps_frames() {
        let rho = 0.9999;
        let p = params(300, 0.5, 4, 2, 4.0, rho);
        let model = EntropyModel::estimate(p.grid(), rho, 100, 1).unwrap();
        let mut dec = Decoder::new(p.code());
        let frames = sample_frames(rho, 300, 8).unwrap();
        let r = reconcile_frame(&p, &model, &mut dec, &frames, Role::Reverse, &DecoderConfig::default()).unwrap();
        assert!(r.symbols_match);
    }

    #[test]
    fn efficiency_identities() {
        assert_eq!(efficiency(3.0, 3.0, 1.5).unwrap(), 0.0);
        assert!(efficiency(3.0, 1.0, 0.0).is_err());
        let grid = QuantizationGrid::new(8.0, 8).unwrap();
        let model = EntropyModel::estimate(&grid, 0.9, 4000, 2).unwrap();
        let e = model.efficiency(source_rate(8, 5, 0.7)).unwrap();
        assert!((e.beta - e.beta_q * e.beta_code).abs() < 1e-9);
        assert!((e.beta - e.beta_approx).abs() < 0.05);
        // Lower rate means more disclosure and lower efficiency.
        let rates = [0.9, 0.8, 0.7, 0.6, 0.5];
        let betas: Vec<f64> = rates.iter().map(|&r| model.efficiency(source_rate(8, 5, r)).unwrap().beta).collect();
        assert!(betas.windows(2).all(|w| w[1] < w[0]), "{betas:?}");
    }

    #[test]
    fn rejects_inconsistent_params() {
        let p = params(100, 0.5, 4, 2, 4.0, 0.9);
        let code = p.code().clone();
        let grid = QuantizationGrid::new(4.0, 6).unwrap();
        assert!(matches!(
            ProtocolParams::new(grid, SymbolSplit::new(5, 1).unwrap(), code.clone(), 0.9),
            Err(ProtocolError::FieldMismatch { .. })
        ));
        assert!(ProtocolParams::new(grid, SymbolSplit::new(4, 1).unwrap(), code.clone(), 0.9).is_err());
        assert!(ProtocolParams::new(grid, SymbolSplit::new(4, 2).unwrap(), code, 1.0).is_err());
    }
}
