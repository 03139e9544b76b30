//! Exact arithmetic over Z_q.
//!
//! Residues are stored canonically in `[0, q)`. The centered representative
//! in `(-q/2, q/2]` is produced only where it matters: norms, noise checks
//! and decoding. Vectors are columns throughout.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ring Z_q for `2 <= q <= 2^31`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct ModRing {
    q: u64,
}

impl ModRing {
    pub const MAX_MODULUS: u64 = 1 << 31;

    pub fn new(q: u64) -> Result<Self> {
        if !(2..=Self::MAX_MODULUS).contains(&q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// `ceil(log2 q)`, the width of one block of `J`.
    pub fn bits(&self) -> usize {
        (64 - (self.q - 1).leading_zeros()) as usize
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.q - b + a
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.q
    }

    /// The representative of `x` in `(-q/2, q/2]`.
    #[inline]
    pub fn centered(&self, x: u64) -> i64 {
        debug_assert!(x < self.q);
        if 2 * x > self.q {
            x as i64 - self.q as i64
        } else {
            x as i64
        }
    }

    /// `|centered(x)|`.
    #[inline]
    pub fn abs(&self, x: u64) -> u64 {
        self.centered(x).unsigned_abs()
    }

    /// Multiplicative inverse, if `gcd(x, q) = 1`.
    pub fn inv(&self, x: u64) -> Option<u64> {
        let (mut r0, mut r1) = (self.q as i64, (x % self.q) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (t0, t1) = (t1, t0 - k * t1);
        }
        (r0 == 1).then(|| self.reduce(t0))
    }

    pub fn is_prime(&self) -> bool {
        let q = self.q;
        if q < 4 {
            return q >= 2;
        }
        if q.is_multiple_of(2) {
            return false;
        }
        let mut d = 3;
        while d * d <= q {
            if q.is_multiple_of(d) {
                return false;
            }
            d += 2;
        }
        true
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.q)
    }
}

impl TryFrom<u64> for ModRing {
    type Error = Error;
    fn try_from(q: u64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<ModRing> for u64 {
    fn from(r: ModRing) -> u64 {
        r.q
    }
}

/// Free-function form of [`ModRing::centered`].
pub fn centered_rep(x: u64, ring: ModRing) -> i64 {
    ring.centered(x)
}

/// JSON layout shared by vectors and matrices.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    q: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

/// A column vector over Z_q.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ModVec {
    ring: ModRing,
    data: Vec<u64>,
}

impl ModVec {
    pub fn new(ring: ModRing, data: Vec<u64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Dimension("vector must be non-empty".into()));
        }
        if let Some(&x) = data.iter().find(|&&x| x >= ring.q) {
            return Err(Error::InvalidParameter(format!("residue {x} not below q = {}", ring.q)));
        }
        Ok(Self { ring, data })
    }

    pub fn from_signed(ring: ModRing, xs: &[i64]) -> Result<Self> {
        Self::new(ring, xs.iter().map(|&x| ring.reduce(x)).collect())
    }

    pub fn zeros(ring: ModRing, len: usize) -> Self {
        assert!(len > 0, "vector must be non-empty");
        Self { ring, data: vec![0; len] }
    }

    pub fn random<R: Rng + ?Sized>(ring: ModRing, len: usize, rng: &mut R) -> Self {
        assert!(len > 0, "vector must be non-empty");
        Self { ring, data: (0..len).map(|_| ring.random(rng)).collect() }
    }

    /// Lifts a binary string into Z_q coordinate-wise.
    pub fn from_bits(ring: ModRing, bits: &BitString) -> Self {
        Self { ring, data: bits.iter().map(u64::from).collect() }
    }

    /// Decodes `index` in base q, least significant coordinate first.
    pub fn from_index(ring: ModRing, len: usize, mut index: u64) -> Self {
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(index % ring.q);
            index /= ring.q;
        }
        Self { ring, data }
    }

    /// Inverse of [`ModVec::from_index`].
    pub fn to_index(&self) -> u64 {
        self.data.iter().rev().fold(0, |acc, &x| acc * self.ring.q + x)
    }

    #[inline]
    pub fn ring(&self) -> ModRing {
        self.ring
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        self.data[i]
    }

    #[inline]
    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.data
    }

    pub fn centered(&self) -> Vec<i64> {
        self.data.iter().map(|&x| self.ring.centered(x)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Coordinates `start..end` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self { ring: self.ring, data: self.data[start..end].to_vec() }
    }

    /// Panics if the lengths or rings differ.
    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| self.ring.add(a, b))
    }

    /// Panics if the lengths or rings differ.
    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| self.ring.sub(a, b))
    }

    pub fn scale(&self, k: u64) -> Self {
        let k = k % self.ring.q;
        Self { ring: self.ring, data: self.data.iter().map(|&x| self.ring.mul(x, k)).collect() }
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.ring, other.ring, "ring mismatch");
        assert_eq!(self.len(), other.len(), "length mismatch");
        Self { ring: self.ring, data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }
}

impl TryFrom<MatrixJson> for ModVec {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.cols != 1 || j.rows != j.data.len() {
            return Err(Error::Dimension(format!(
                "vector must be {}x1, got {}x{}",
                j.data.len(),
                j.rows,
                j.cols
            )));
        }
        Self::new(ModRing::new(j.q)?, j.data)
    }
}

impl From<ModVec> for MatrixJson {
    fn from(v: ModVec) -> Self {
        MatrixJson { q: v.ring.q, rows: v.data.len(), cols: 1, data: v.data }
    }
}

/// Euclidean norm of the centered representatives.
pub fn euclidean_norm(v: &ModVec) -> f64 {
    v.data
        .iter()
        .map(|&x| {
            let c = v.ring.centered(x) as f64;
            c * c
        })
        .sum::<f64>()
        .sqrt()
}

/// Largest centered magnitude.
pub fn inf_norm(v: &ModVec) -> u64 {
    v.data.iter().map(|&x| v.ring.abs(x)).max().unwrap_or(0)
}

/// A dense row-major matrix over Z_q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ModMat {
    ring: ModRing,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ModMat {
    pub fn new(ring: ModRing, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(&x) = data.iter().find(|&&x| x >= ring.q) {
            return Err(Error::InvalidParameter(format!("residue {x} not below q = {}", ring.q)));
        }
        Ok(Self { ring, rows, cols, data })
    }

    pub fn zeros(ring: ModRing, rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { ring, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(ring: ModRing, n: usize) -> Self {
        Self::from_fn(ring, n, n, |i, j| u64::from(i == j))
    }

    pub fn from_fn(ring: ModRing, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j) % ring.q);
            }
        }
        Self { ring, rows, cols, data }
    }

    pub fn random<R: Rng + ?Sized>(ring: ModRing, rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(ring, rows, cols, |_, _| ring.random(rng))
    }

    #[inline]
    pub fn ring(&self) -> ModRing {
        self.ring
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = x % self.ring.q;
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> ModVec {
        ModVec { ring: self.ring, data: self.data[i * self.cols..(i + 1) * self.cols].to_vec() }
    }

    pub fn column(&self, j: usize) -> ModVec {
        ModVec { ring: self.ring, data: (0..self.rows).map(|i| self.get(i, j)).collect() }
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        assert!(start < end && end <= self.rows, "bad row range");
        Self {
            ring: self.ring,
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Self) -> Self {
        assert_eq!(self.ring, below.ring, "ring mismatch");
        assert_eq!(self.cols, below.cols, "column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Self { ring: self.ring, rows: self.rows + below.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ring, self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Panics on a shape mismatch.
    pub fn mul_vec(&self, v: &ModVec) -> ModVec {
        assert_eq!(self.ring, v.ring, "ring mismatch");
        assert_eq!(self.cols, v.len(), "shape mismatch");
        let q = self.ring.q as u128;
        let data = self
            .data
            .chunks_exact(self.cols)
            .map(|row| (row.iter().zip(&v.data).map(|(&a, &b)| a as u128 * b as u128).sum::<u128>() % q) as u64)
            .collect();
        ModVec { ring: self.ring, data }
    }

    /// Panics on a shape mismatch.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ring, other.ring, "ring mismatch");
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let q = self.ring.q as u128;
        let mut data = vec![0u64; self.rows * other.cols];
        let mut acc = vec![0u128; other.cols];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.get(i, k) as u128;
                if a == 0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (s, &b) in acc.iter_mut().zip(row) {
                    *s += a * b as u128;
                }
            }
            for (j, s) in acc.iter().enumerate() {
                data[i * other.cols + j] = (s % q) as u64;
            }
        }
        Self { ring: self.ring, rows: self.rows, cols: other.cols, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| self.ring.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| self.ring.sub(a, b))
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.ring, other.ring, "ring mismatch");
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Self {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Rank over the field Z_q. Requires q prime.
    pub fn rank(&self) -> Result<usize> {
        if !self.ring.is_prime() {
            return Err(Error::InvalidParameter(format!("rank needs a prime modulus, got {}", self.ring.q)));
        }
        let r = self.ring;
        let mut m = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..rows).find(|&i| m[i * cols + col] != 0) else {
                continue;
            };
            for j in 0..cols {
                m.swap(rank * cols + j, p * cols + j);
            }
            let inv = r.inv(m[rank * cols + col]).expect("nonzero pivot in a field");
            for i in 0..rows {
                if i == rank || m[i * cols + col] == 0 {
                    continue;
                }
                let f = r.mul(m[i * cols + col], inv);
                for j in 0..cols {
                    let t = r.mul(f, m[rank * cols + j]);
                    m[i * cols + j] = r.sub(m[i * cols + j], t);
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        Ok(rank)
    }
}

impl TryFrom<MatrixJson> for ModMat {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        Self::new(ModRing::new(j.q)?, j.rows, j.cols, j.data)
    }
}

impl From<ModMat> for MatrixJson {
    fn from(m: ModMat) -> Self {
        MatrixJson { q: m.ring.q, rows: m.rows, cols: m.cols, data: m.data }
    }
}

/// A string over {0,1}. Serialized as text such as `"0110"`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self { bits: (0..len).map(|_| rng.gen_range(0..2u8)).collect() }
    }

    /// Bit `i` of the result is bit `i` of `index`.
    pub fn from_index(len: usize, index: u64) -> Self {
        Self { bits: (0..len).map(|i| ((index >> i) & 1) as u8).collect() }
    }

    pub fn to_index(&self) -> u64 {
        self.bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Inner product mod 2. Panics if lengths differ.
    pub fn dot(&self, other: &Self) -> u8 {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.bits.iter().zip(&other.bits).fold(0, |acc, (&a, &b)| acc ^ (a & b))
    }

    /// Panics if lengths differ.
    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "length mismatch");
        Self { bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a ^ b).collect() }
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self { bits: self.bits[start..end].to_vec() }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl TryFrom<String> for BitString {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(Error::InvalidParameter(format!("bad bit character {:?}", c as char))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(|bits| Self { bits })
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

/// `J(x)`: little-endian `ceil(log2 q)`-bit expansion of each coordinate,
/// blocks concatenated in index order.
pub fn binary_map_j(x: &ModVec) -> BitString {
    let k = x.ring.bits();
    let mut bits = Vec::with_capacity(k * x.len());
    for &v in &x.data {
        bits.extend((0..k).map(|j| ((v >> j) & 1) as u8));
    }
    BitString { bits }
}

/// Inverse of [`binary_map_j`]. Fails on any block encoding a value `>= q`.
pub fn binary_map_j_inv(ring: ModRing, bits: &BitString) -> Result<ModVec> {
    let k = ring.bits();
    if bits.is_empty() || !bits.len().is_multiple_of(k) {
        return Err(Error::Dimension(format!("{} bits is not a positive multiple of {k}", bits.len())));
    }
    let data = bits
        .bits
        .chunks_exact(k)
        .enumerate()
        .map(|(block, chunk)| {
            let value = chunk.iter().enumerate().fold(0u64, |acc, (j, &b)| acc | (u64::from(b) << j));
            if value >= ring.q {
                Err(Error::BitPattern { block, value, q: ring.q })
            } else {
                Ok(value)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModVec { ring, data })
}

/// The gadget matrix `G = I_n ⊗ g` with `g = (1, 2, ..., 2^(k-1))`, shape `(n k) x n`.
pub fn gadget_matrix(ring: ModRing, n: usize) -> ModMat {
    let k = ring.bits();
    ModMat::from_fn(ring, n * k, n, |i, j| if i / k == j { (1u64 << (i % k)) % ring.q } else { 0 })
}
