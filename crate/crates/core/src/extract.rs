//! Toeplitz hashing and entropy diagnostics.
//!
//! Toeplitz matrices over GF(2) form a two-universal family, which is what
//! the leftover hash lemma needs. The matrix `T[i][j] = seed[i - j + n_in - 1]`
//! turns each output bit into an inner product of a seed window with the
//! reversed input, so rows are evaluated on packed 64-bit words.

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modq::BitString;

/// Default `log2(1 / delta)` for the extractor error.
pub const DEFAULT_ERROR_BITS: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzSeed {
    n_in: usize,
    n_out: usize,
    bits: BitString,
}

fn pack(bits: impl Iterator<Item = u8>, len: usize) -> Vec<u64> {
    let mut words = vec![0u64; len.div_ceil(64)];
    for (i, b) in bits.enumerate() {
        words[i / 64] |= (b as u64 & 1) << (i % 64);
    }
    words
}

impl ToeplitzSeed {
    pub fn new(n_in: usize, n_out: usize, bits: BitString) -> Result<Self> {
        if n_out == 0 || n_out > n_in {
            return Err(Error::InvalidParameter(format!("need 0 < n_out <= n_in, got {n_out} and {n_in}")));
        }
        if bits.len() != n_in + n_out - 1 {
            return Err(Error::Dimension(format!("seed has {} bits, expected {}", bits.len(), n_in + n_out - 1)));
        }
        Ok(Self { n_in, n_out, bits })
    }

    pub fn random<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Result<Self> {
        Self::new(n_in, n_out, BitString::random(n_in + n_out - 1, rng))
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    /// `T x` over GF(2).
    pub fn extract(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.n_in {
            return Err(Error::Dimension(format!("input has {} bits, expected {}", x.len(), self.n_in)));
        }
        let words = self.n_in.div_ceil(64);
        let rev = pack(x.as_slice().iter().rev().copied(), self.n_in);
        let tail_mask = if self.n_in.is_multiple_of(64) { u64::MAX } else { (1u64 << (self.n_in % 64)) - 1 };
        // shifted[r] holds the seed starting at bit r, so a window at i is
        // shifted[i % 64] from word i / 64 on.
        let seed = self.bits.as_slice();
        let shifted: Vec<Vec<u64>> =
            (0..64.min(seed.len())).map(|r| pack(seed[r..].iter().copied(), seed.len() - r)).collect();
        let out = (0..self.n_out)
            .map(|i| {
                let (copy, start) = (&shifted[i % 64], i / 64);
                let mut acc = 0u64;
                for w in 0..words {
                    let s = copy.get(start + w).copied().unwrap_or(0);
                    let mask = if w + 1 == words { tail_mask } else { u64::MAX };
                    acc ^= s & rev[w] & mask;
                }
                (acc.count_ones() & 1) as u8
            })
            .collect();
        BitString::new(out)
    }
}

/// `floor(rate * n_gen) - 2 * error_bits`, floored at zero.
pub fn output_length(rate: f64, n_gen: usize, error_bits: usize) -> usize {
    let raw = (rate.max(0.0) * n_gen as f64).floor() as usize;
    raw.saturating_sub(2 * error_bits)
}

/// `-log2` of the largest empirical symbol frequency.
pub fn empirical_min_entropy<T: Eq + Hash>(samples: &[T]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("min-entropy needs at least one sample".into()));
    }
    let mut counts: HashMap<&T, u64> = HashMap::new();
    for s in samples {
        *counts.entry(s).or_default() += 1;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    Ok((samples.len() as f64 / max as f64).log2())
}

/// Bits as hex lines, four bits per digit with the first bit most
/// significant, preceded by a `# bits=N` header.
pub fn to_hex_lines(bits: &BitString) -> String {
    let mut out = format!("# bits={}\n", bits.len());
    let digits: Vec<char> = bits
        .as_slice()
        .chunks(4)
        .map(|c| {
            let v = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (b as u32) << (3 - i));
            std::char::from_digit(v, 16).expect("nibble")
        })
        .collect();
    for line in digits.chunks(64) {
        out.extend(line);
        out.push('\n');
    }
    out
}

pub fn from_hex_lines(text: &str) -> Result<BitString> {
    let mut declared = None;
    let mut bits = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("bits=") {
                declared = Some(n.trim().parse::<usize>().map_err(|e| Error::InvalidParameter(format!("bad header: {e}")))?);
            }
            continue;
        }
        for ch in line.chars() {
            let v = ch.to_digit(16).ok_or_else(|| Error::InvalidParameter(format!("not a hex digit: {ch:?}")))?;
            bits.extend((0..4).map(|i| ((v >> (3 - i)) & 1) as u8));
        }
    }
    let n = declared.unwrap_or(bits.len());
    if n > bits.len() || bits.len() - n >= 4 {
        return Err(Error::InvalidParameter(format!("header says {n} bits, body has {}", bits.len())));
    }
    bits.truncate(n);
    BitString::new(bits)
}
