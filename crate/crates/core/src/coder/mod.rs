//! Arithmetic coding driven by a predictor.
//!
//! Each letter is coded as the branch decisions on its root-to-leaf path,
//! one node at a time, so countable alphabets never need a full pmf. After
//! each letter both sides update their predictor with it, keeping the two
//! states identical.
//!
//! Stream layout: magic `TPC1`, version byte, a `u32` little-endian length
//! and that many bytes of JSON [`Descriptor`], the symbol count as `u64`
//! little-endian, then the payload bits MSB-first, zero-padded to a byte.

mod range;

use serde::{Deserialize, Serialize};

pub use range::{quantize, RangeDecoder, RangeEncoder, PROB_BITS, PROB_ONE};

use crate::alphabet::Letter;
use crate::error::{Error, Result};
use crate::predictor::{Model, Predictor, PredictorSpec};

pub const MAGIC: &[u8; 4] = b"TPC1";
pub const VERSION: u8 = 1;

/// Headers declaring more symbols than this are rejected as corrupt.
const MAX_SYMBOLS: u64 = 1 << 40;

/// Everything the decoder needs besides the payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub predictor: PredictorSpec,
    /// Opaque caller data carried in the header, e.g. a token dictionary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl Descriptor {
    pub fn new(predictor: PredictorSpec) -> Self {
        Descriptor { predictor, metadata: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EncodeStats {
    pub symbols: u64,
    pub header_bytes: u64,
    pub payload_bits: u64,
    /// `Σ −log₂ P(x_{i+1} | x_1…x_i)` under the unquantized predictor.
    pub ideal_bits: f64,
}

impl EncodeStats {
    /// Payload bits minus ideal bits.
    pub fn gap(&self) -> f64 {
        self.payload_bits as f64 - self.ideal_bits
    }

    pub fn bits_per_symbol(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.payload_bits as f64 / self.symbols as f64
        }
    }
}

/// Streams letters through a predictor into a range coder.
#[derive(Clone, Debug)]
pub struct Encoder<P: Predictor> {
    model: P,
    coder: RangeEncoder,
    symbols: u64,
    ideal_bits: f64,
}

impl<P: Predictor> Encoder<P> {
    pub fn new(model: P) -> Self {
        Encoder { model, coder: RangeEncoder::new(), symbols: 0, ideal_bits: 0.0 }
    }

    pub fn model(&self) -> &P {
        &self.model
    }

    pub fn encode(&mut self, a: Letter) -> Result<()> {
        if !self.model.supports(a) {
            return Err(Error::UnknownLetter(a));
        }
        let steps = self.model.code_path(a)?;
        let mut bits = 0.0;
        for (split, branch) in &steps {
            let p = split.prob(*branch);
            if p.is_nan() || p <= 0.0 {
                return Err(Error::InfiniteDivergence(a));
            }
            bits -= p.log2();
        }
        for (split, branch) in &steps {
            self.coder.encode(split, *branch)?;
        }
        self.ideal_bits += bits;
        self.symbols += 1;
        self.model.update(a)
    }

    pub fn finish(self) -> (Vec<u8>, EncodeStats) {
        let (payload, payload_bits) = self.coder.finish();
        let stats = EncodeStats { symbols: self.symbols, header_bytes: 0, payload_bits, ideal_bits: self.ideal_bits };
        (payload, stats)
    }
}

/// Inverse of [`Encoder`]. A shadow encoder re-encodes every decoded letter;
/// [`Decoder::finish`] fails unless it reproduces the payload exactly.
#[derive(Clone, Debug)]
pub struct Decoder<'a, P: Predictor> {
    model: P,
    coder: RangeDecoder<'a>,
    shadow: RangeEncoder,
    payload: &'a [u8],
}

impl<'a, P: Predictor> Decoder<'a, P> {
    pub fn new(model: P, payload: &'a [u8]) -> Self {
        Decoder { model, coder: RangeDecoder::new(payload), shadow: RangeEncoder::new(), payload }
    }

    pub fn model(&self) -> &P {
        &self.model
    }

    pub fn decode(&mut self) -> Result<Letter> {
        let coder = &mut self.coder;
        let shadow = &mut self.shadow;
        let a = self.model.decode_path(&mut |split| {
            let b = coder.decode(split)?;
            shadow.encode(split, b)?;
            Ok(b)
        })?;
        self.model.update(a)?;
        Ok(a)
    }

    pub fn finish(self) -> Result<()> {
        let (bytes, _) = self.shadow.finish();
        if bytes.len() > self.payload.len() {
            return Err(Error::Corrupt("payload truncated".into()));
        }
        if bytes != self.payload {
            return Err(Error::Corrupt("payload does not match the decoded letters".into()));
        }
        Ok(())
    }
}

/// A decoded stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub descriptor: Descriptor,
    pub letters: Vec<Letter>,
}

fn header(descriptor: &Descriptor, symbols: u64) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(descriptor)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Config("descriptor too large".into()))?;
    let mut out = Vec::with_capacity(json.len() + 17);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&symbols.to_le_bytes());
    Ok(out)
}

/// Encodes `letters` into a self-describing stream.
pub fn encode(descriptor: &Descriptor, letters: &[Letter]) -> Result<(Vec<u8>, EncodeStats)> {
    let mut enc = Encoder::new(descriptor.predictor.build()?);
    for &a in letters {
        enc.encode(a)?;
    }
    let (payload, mut stats) = enc.finish();
    let mut out = header(descriptor, letters.len() as u64)?;
    stats.header_bytes = out.len() as u64;
    out.extend_from_slice(&payload);
    Ok((out, stats))
}

fn take<'a>(input: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(Error::Corrupt(format!("stream ends inside the {what}")));
    }
    let (head, rest) = input.split_at(n);
    *input = rest;
    Ok(head)
}

/// Parses the header, returning the descriptor, symbol count and payload.
pub fn read_header(stream: &[u8]) -> Result<(Descriptor, u64, &[u8])> {
    let mut input = stream;
    if take(&mut input, 4, "magic")? != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = take(&mut input, 1, "version")?[0];
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(take(&mut input, 4, "descriptor length")?.try_into().expect("4 bytes"));
    let descriptor: Descriptor = serde_json::from_slice(take(&mut input, len as usize, "descriptor")?)
        .map_err(|e| Error::Corrupt(format!("bad descriptor: {e}")))?;
    let symbols = u64::from_le_bytes(take(&mut input, 8, "symbol count")?.try_into().expect("8 bytes"));
    if symbols > MAX_SYMBOLS {
        return Err(Error::Corrupt(format!("symbol count {symbols} is implausible")));
    }
    Ok((descriptor, symbols, input))
}

/// Decodes a stream produced by [`encode`].
pub fn decode(stream: &[u8]) -> Result<Decoded> {
    let (descriptor, symbols, payload) = read_header(stream)?;
    let model: Model = descriptor.predictor.build()?;
    let mut dec = Decoder::new(model, payload);
    let mut letters = Vec::with_capacity(symbols.min(1 << 20) as usize);
    for _ in 0..symbols {
        letters.push(dec.decode()?);
    }
    dec.finish()?;
    Ok(Decoded { descriptor, letters })
}
