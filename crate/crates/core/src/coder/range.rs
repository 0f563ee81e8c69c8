//! Binary-output range coder with a 64-bit state.
//!
//! The interval is `[low, low + range)` scaled by `2^-(emitted + 64)`.
//! Renormalization shifts one bit out whenever `range < 2^40`, so every
//! division below loses at most a factor `1 − 2^-24`. A carry out of `low`
//! is propagated into the bits already written.
//!
//! Every interval update shrinks `range` by at most the quantized
//! probability, and quantization rounds down, so the final width never
//! exceeds the product of the coded probabilities. The flush writes
//! `64 − ⌊log₂ range⌋` more bits, which keeps the payload within one bit of
//! `−log₂` of the final width.

use crate::error::{Error, Result};
use crate::predictor::Split;

/// Probabilities are quantized to multiples of `1/2^PROB_BITS`.
pub const PROB_BITS: u32 = 16;
pub const PROB_ONE: u64 = 1 << PROB_BITS;

const RENORM_BELOW: u64 = 1 << 40;

/// Quantized frequencies summing to [`PROB_ONE`]. Each is at least 1 and, for
/// probabilities of at least `2^-16`, at most `p·2^16`.
pub fn quantize(probs: &[f64]) -> Result<Vec<u64>> {
    if probs.len() as u64 > PROB_ONE {
        return Err(Error::TooManyBranches(probs.len()));
    }
    let mut freqs: Vec<u64> = probs.iter().map(|p| ((p * PROB_ONE as f64).floor() as u64).max(1)).collect();
    let mut excess = freqs.iter().sum::<u64>().saturating_sub(PROB_ONE);
    while excess > 0 {
        let (i, f) =
            freqs.iter().enumerate().max_by_key(|(i, f)| (**f, std::cmp::Reverse(*i))).expect("nonempty split");
        let take = excess.min(f - 1);
        if take == 0 {
            unreachable!("at most 2^16 branches always fit");
        }
        freqs[i] -= take;
        excess -= take;
    }
    Ok(freqs)
}

/// Packed MSB-first bit buffer with carry propagation.
#[derive(Clone, Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte pushed above") |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Adds one at the last written bit.
    fn carry(&mut self) {
        let mut pos = self.len;
        while pos > 0 {
            pos -= 1;
            let (byte, mask) = ((pos / 8) as usize, 0x80u8 >> (pos % 8));
            self.bytes[byte] ^= mask;
            if self.bytes[byte] & mask != 0 {
                return;
            }
        }
        unreachable!("carry past the start of the stream");
    }
}

#[derive(Clone, Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u64,
    out: BitWriter,
    decisions: u64,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        RangeEncoder { low: 0, range: u64::MAX, out: BitWriter::default(), decisions: 0 }
    }
}

/// Sub-interval `(start, width)` in units of `unit` for branch `branch`.
fn interval(split: &Split, range: u64, branch: u64) -> Result<(u64, u64, u64)> {
    match split {
        Split::Uniform(n) => {
            if *n == 0 || branch >= *n {
                return Err(Error::Corrupt(format!("branch {branch} of {n}")));
            }
            if *n > RENORM_BELOW >> 16 {
                return Err(Error::TooManyBranches(*n as usize));
            }
            Ok((range / n, branch, 1))
        }
        Split::Probs(p) => {
            let freqs = quantize(p)?;
            let f =
                *freqs.get(branch as usize).ok_or_else(|| Error::Corrupt(format!("branch {branch} of {}", p.len())))?;
            let cum: u64 = freqs[..branch as usize].iter().sum();
            Ok((range >> PROB_BITS, cum, f))
        }
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode(&mut self, split: &Split, branch: u64) -> Result<()> {
        let (unit, cum, f) = interval(split, self.range, branch)?;
        let (low, carry) = self.low.overflowing_add(unit * cum);
        self.low = low;
        if carry {
            self.out.carry();
        }
        self.range = unit * f;
        self.decisions += 1;
        while self.range < RENORM_BELOW {
            self.out.push(self.low >> 63 == 1);
            self.low <<= 1;
            self.range <<= 1;
        }
        Ok(())
    }

    /// Bits the stream will hold once flushed.
    pub fn bit_len(&self) -> u64 {
        if self.decisions == 0 {
            0
        } else {
            self.out.len + 1 + self.range.leading_zeros() as u64
        }
    }

    /// Writes the shortest bit string that, padded with zeros, lies in the
    /// final interval, and returns the bytes and the bit length.
    pub fn finish(mut self) -> (Vec<u8>, u64) {
        if self.decisions == 0 {
            return (Vec::new(), 0);
        }
        let k = 1 + self.range.leading_zeros();
        let shift = 64 - k;
        let mask = (1u64 << shift) - 1;
        let (v, carry) = self.low.overflowing_add(mask);
        if carry {
            self.out.carry();
        }
        let v = v & !mask;
        for i in 0..k {
            self.out.push((v >> (63 - i)) & 1 == 1);
        }
        (self.out.bytes, self.out.len)
    }
}

#[derive(Clone, Debug)]
pub struct RangeDecoder<'a> {
    low: u64,
    range: u64,
    code: u64,
    input: &'a [u8],
    /// Bits shifted out so far, i.e. the position of `code`'s top bit.
    pos: u64,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut d = RangeDecoder { low: 0, range: u64::MAX, code: 0, input, pos: 0 };
        for i in 0..64 {
            d.code = (d.code << 1) | d.bit(i);
        }
        d
    }

    fn bit(&self, i: u64) -> u64 {
        self.input.get((i / 8) as usize).map_or(0, |b| ((b >> (7 - i % 8)) & 1) as u64)
    }

    pub fn decode(&mut self, split: &Split) -> Result<u64> {
        let (unit, _, _) = interval(split, self.range, 0)?;
        let target = self.code.wrapping_sub(self.low) / unit;
        let branch = match split {
            Split::Uniform(_) => target,
            Split::Probs(p) => {
                let freqs = quantize(p)?;
                let mut cum = 0;
                freqs
                    .iter()
                    .position(|f| {
                        cum += f;
                        target < cum
                    })
                    .unwrap_or(freqs.len()) as u64
            }
        };
        let (unit, cum, f) = interval(split, self.range, branch)
            .map_err(|_| Error::Corrupt("code value outside the interval".into()))?;
        self.low = self.low.wrapping_add(unit * cum);
        self.range = unit * f;
        while self.range < RENORM_BELOW {
            self.low <<= 1;
            self.range <<= 1;
            self.code = (self.code << 1) | self.bit(self.pos + 64);
            self.pos += 1;
        }
        // The encoder writes at least one bit past every shifted-out bit.
        if self.pos >= self.input.len() as u64 * 8 {
            return Err(Error::Corrupt("payload truncated".into()));
        }
        Ok(branch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantization() {
        assert_eq!(quantize(&[0.5, 0.5]).unwrap(), vec![32768, 32768]);
        let q = quantize(&[1e-9, 1.0 - 1e-9]).unwrap();
        assert_eq!(q, vec![1, PROB_ONE - 1]);
        let q = quantize(&[0.5, 0.5 - 2e-6, 1e-6, 1e-6]).unwrap();
        assert_eq!(q.iter().sum::<u64>(), PROB_ONE);
        assert!(q.iter().all(|f| *f >= 1));
        let q = quantize(&[1.0 / 3.0; 3]).unwrap();
        assert!(q.iter().all(|f| *f == 21845));
        assert!(quantize(&vec![1.0 / 70000.0; 70000]).is_err());
    }

    #[test]
    fn carry_propagates() {
        let mut w = BitWriter::default();
        for b in [false, true, true, true, true, true, true, true, true, true] {
            w.push(b);
        }
        w.carry();
        assert_eq!(w.bytes, vec![0b1000_0000, 0]);
        assert_eq!(w.len, 10);
    }

    #[test]
    fn round_trip_random_splits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..300);
            let mut steps = Vec::new();
            for _ in 0..n {
                let split = if rng.random_bool(0.3) {
                    Split::Uniform(rng.random_range(1..5000))
                } else {
                    let k = rng.random_range(1..9);
                    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(6) + 1e-7).collect();
                    let s: f64 = w.iter().sum();
                    Split::Probs(w.into_iter().map(|x| x / s).collect())
                };
                let b = rng.random_range(0..split.arity());
                steps.push((split, b));
            }
            let mut enc = RangeEncoder::new();
            // Ideal length under the quantized probabilities actually coded.
            let mut ideal = 0.0;
            for (s, b) in &steps {
                enc.encode(s, *b).unwrap();
                ideal -= match s {
                    Split::Probs(p) => (quantize(p).unwrap()[*b as usize] as f64 / PROB_ONE as f64).log2(),
                    Split::Uniform(n) => -(*n as f64).log2(),
                };
            }
            let predicted = enc.bit_len();
            let (bytes, bits) = enc.finish();
            assert_eq!(bits, predicted);
            assert_eq!(bytes.len() as u64, bits.div_ceil(8));
            assert!(bits as f64 + 1e-9 >= ideal, "{bits} < {ideal}");
            assert!((bits as f64) < ideal + 1.01, "{bits} vs {ideal}");
            let mut dec = RangeDecoder::new(&bytes);
            for (s, b) in &steps {
                assert_eq!(dec.decode(s).unwrap(), *b);
            }
        }
    }

    #[test]
    fn skewed_stream_has_carries() {
        // Mostly-top branches push `low` up and exercise carry propagation.
        let split = Split::Probs(vec![0.001, 0.999]);
        let mut enc = RangeEncoder::new();
        for _ in 0..5000 {
            enc.encode(&split, 1).unwrap();
        }
        enc.encode(&Split::Uniform(3), 2).unwrap();
        let (bytes, _) = enc.finish();
        let mut dec = RangeDecoder::new(&bytes);
        for _ in 0..5000 {
            assert_eq!(dec.decode(&split).unwrap(), 1);
        }
        assert_eq!(dec.decode(&Split::Uniform(3)).unwrap(), 2);
    }
}
