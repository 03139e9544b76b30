//! Gadget trapdoors for LWE and the lossy sampler.
//!
//! `A = [Abar ; G - R Abar]` with `Abar` uniform and `R` ternary. Given
//! `y = A s + e`, the combination `R y_1 + y_2 = G s + (R e_1 + e_2)` is
//! decoded one gadget block at a time.
//!
//! Block decoding rounds against the basis `S` of the lattice
//! `{z : <g, z> = 0 mod q}`: column `j < k-1` is `2 e_j - e_{j+1}`, the last
//! column holds the bits of `q`. Since `S^T g = 0 mod q`, reducing `S^T t`
//! into `(-q/2, q/2]` recovers `S^T z` exactly whenever
//! `||S^T z||_inf < q/2`, and `z` then follows by an exact integer solve.
//! That condition holds for every `||z||_inf < q / (2 max(3, popcount q))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::gauss::TruncGaussian;
use crate::modq::{euclidean_norm, gadget_matrix, inf_norm, ModMat, ModRing, ModVec};

/// Decoder for one block of the gadget `g = (1, 2, ..., 2^(k-1))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetDecoder {
    ring: ModRing,
    k: usize,
    q_bits: Vec<i128>,
}

impl GadgetDecoder {
    /// Requires an odd modulus `q >= 3`.
    pub fn new(ring: ModRing) -> Result<Self> {
        let q = ring.modulus();
        if q < 3 || q.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("gadget decoding needs an odd modulus >= 3, got {q}")));
        }
        let k = ring.bits();
        Ok(Self { ring, k, q_bits: (0..k).map(|j| ((q >> j) & 1) as i128).collect() })
    }

    pub fn block_len(&self) -> usize {
        self.k
    }

    /// Every noise block with `||z||_inf` strictly below this decodes.
    pub fn certified_radius(&self) -> f64 {
        let ones = self.ring.modulus().count_ones().max(3);
        self.ring.modulus() as f64 / (2.0 * ones as f64)
    }

    /// Splits `t = g s + z (mod q)` into `(s, z)`, or `None` when the
    /// rounding step lands off the coset.
    pub fn decode(&self, t: &[u64]) -> Option<(u64, Vec<i64>)> {
        assert_eq!(t.len(), self.k, "block length mismatch");
        let r = self.ring;
        let q = r.modulus() as i128;
        let k = self.k;
        let mut c = Vec::with_capacity(k);
        for j in 0..k - 1 {
            c.push(r.centered(r.sub(r.add(t[j], t[j]), t[j + 1])) as i128);
        }
        let last = t.iter().zip(&self.q_bits).filter(|(_, &b)| b == 1).fold(0u64, |acc, (&x, _)| r.add(acc, x));
        c.push(r.centered(last) as i128);

        // z_j = 2^j z_0 - p_j with p_0 = 0 and p_{j+1} = 2 p_j + c_j.
        let mut p = vec![0i128; k];
        for j in 0..k - 1 {
            p[j + 1] = 2 * p[j] + c[j];
        }
        let num = c[k - 1] + (0..k).map(|j| self.q_bits[j] * p[j]).sum::<i128>();
        if num % q != 0 {
            return None;
        }
        let z0 = num / q;
        let z: Vec<i128> = (0..k).map(|j| (z0 << j) - p[j]).collect();
        let s = (t[0] as i128 - z0).rem_euclid(q) as u64;
        let consistent = (0..k).all(|j| (t[j] as i128 - z[j] - ((s as i128) << j)).rem_euclid(q) == 0);
        if !consistent {
            return None;
        }
        let z = z.into_iter().map(i64::try_from).collect::<std::result::Result<Vec<_>, _>>().ok()?;
        Some((s, z))
    }
}

/// A dense integer matrix, used for the short trapdoor `R`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    fn to_modmat(&self, ring: ModRing) -> ModMat {
        ModMat::from_fn(ring, self.rows, self.cols, |i, j| ring.reduce(self.get(i, j)))
    }
}

/// `A` together with its gadget trapdoor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrapdoorKeyJson", into = "TrapdoorKeyJson")]
pub struct TrapdoorKey {
    a: ModMat,
    r: IntMatrix,
    mbar: usize,
    decoder: GadgetDecoder,
}

#[derive(Serialize, Deserialize)]
struct Layout {
    mbar: usize,
}

#[derive(Serialize, Deserialize)]
struct TrapdoorKeyJson {
    #[serde(rename = "A")]
    a: ModMat,
    #[serde(rename = "R")]
    r: IntMatrix,
    layout: Layout,
}

impl From<TrapdoorKey> for TrapdoorKeyJson {
    fn from(k: TrapdoorKey) -> Self {
        Self { a: k.a, r: k.r, layout: Layout { mbar: k.mbar } }
    }
}

impl TryFrom<TrapdoorKeyJson> for TrapdoorKey {
    type Error = Error;
    fn try_from(j: TrapdoorKeyJson) -> Result<Self> {
        let ring = j.a.ring();
        let decoder = GadgetDecoder::new(ring)?;
        let n = j.a.cols();
        let w = n * decoder.block_len();
        if j.layout.mbar + w != j.a.rows() || j.r.rows != w || j.r.cols != j.layout.mbar || j.r.data.len() != w * j.layout.mbar {
            return Err(Error::Dimension("trapdoor layout does not match A".into()));
        }
        if j.r.data.iter().any(|x| x.abs() > 1) {
            return Err(Error::InvalidParameter("trapdoor entries must be in {-1, 0, 1}".into()));
        }
        let key = Self { a: j.a, r: j.r, mbar: j.layout.mbar, decoder };
        if !key.layout_holds() {
            return Err(Error::InvalidParameter("A is not [Abar ; G - R Abar]".into()));
        }
        Ok(key)
    }
}

impl TrapdoorKey {
    /// Samples `A` with a trapdoor. Needs an odd modulus and `m >= w + n`.
    pub fn generate<R: Rng + ?Sized>(ring: ModRing, n: usize, m: usize, rng: &mut R) -> Result<Self> {
        let decoder = GadgetDecoder::new(ring)?;
        let w = n * decoder.block_len();
        if n == 0 || m < w + n {
            return Err(Error::InvalidParameter(format!("gadget trapdoor needs m >= w + n = {}, got m = {m}", w + n)));
        }
        let mbar = m - w;
        let abar = ModMat::random(ring, mbar, n, rng);
        let r = IntMatrix { rows: w, cols: mbar, data: (0..w * mbar).map(|_| rng.gen_range(-1..=1)).collect() };
        let lower = gadget_matrix(ring, n).sub(&r.to_modmat(ring).mul(&abar));
        Ok(Self { a: abar.vstack(&lower), r, mbar, decoder })
    }

    pub fn a(&self) -> &ModMat {
        &self.a
    }

    pub fn r(&self) -> &IntMatrix {
        &self.r
    }

    pub fn mbar(&self) -> usize {
        self.mbar
    }

    pub fn decoder(&self) -> &GadgetDecoder {
        &self.decoder
    }

    /// Checks `A = [Abar ; G - R Abar]` exactly.
    pub fn layout_holds(&self) -> bool {
        let ring = self.a.ring();
        let abar = self.a.row_block(0, self.mbar);
        let lower = self.a.row_block(self.mbar, self.a.rows());
        lower.add(&self.r.to_modmat(ring).mul(&abar)) == gadget_matrix(ring, self.a.cols())
    }

    /// Recovers `(s, e)` from `y = A s + e`.
    ///
    /// Success means the decoded gadget noise equals `R e_1 + e_2` over the
    /// integers for the returned `e`. Any other outcome is a
    /// [`Error::DecodeFailure`], never a silent wrong answer.
    pub fn invert(&self, y: &ModVec) -> Result<(ModVec, ModVec)> {
        let ring = self.a.ring();
        if y.ring() != ring || y.len() != self.a.rows() {
            return Err(Error::Dimension(format!("expected a vector of length {}", self.a.rows())));
        }
        let (ys, mbar, k) = (y.as_slice(), self.mbar, self.decoder.block_len());
        let w = self.r.rows;
        let t: Vec<u64> = (0..w)
            .map(|i| {
                let acc = (0..mbar).fold(ys[mbar + i] as i128, |acc, j| acc + self.r.get(i, j) as i128 * ys[j] as i128);
                acc.rem_euclid(ring.modulus() as i128) as u64
            })
            .collect();
        let mut s = Vec::with_capacity(self.a.cols());
        let mut z = Vec::with_capacity(w);
        for block in t.chunks_exact(k) {
            let (si, zi) = self.decoder.decode(block).ok_or(Error::DecodeFailure)?;
            s.push(si);
            z.extend(zi);
        }
        let s = ModVec::new(ring, s)?;
        let e = y.sub(&self.a.mul_vec(&s));
        let ec = e.centered();
        for (i, &zi) in z.iter().enumerate() {
            let combo = (0..mbar).fold(ec[mbar + i] as i128, |acc, j| acc + self.r.get(i, j) as i128 * ec[j] as i128);
            if combo != zi as i128 {
                return Err(Error::DecodeFailure);
            }
        }
        Ok((s, e))
    }
}

/// Inversion by exhaustive search over `Z_q^n`, for shapes too small to
/// carry a gadget block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationKey {
    #[serde(rename = "A")]
    a: ModMat,
    radius: u64,
}

/// Largest `q^n` the enumeration inverter accepts.
pub const ENUMERATION_LIMIT: f64 = 1e6;

impl EnumerationKey {
    /// `radius` is the largest `||e||_inf` the inverter will accept.
    pub fn new(a: ModMat, radius: u64) -> Result<Self> {
        guard("q^n", (a.ring().modulus() as f64).powi(a.cols() as i32), ENUMERATION_LIMIT)?;
        Ok(Self { a, radius })
    }

    pub fn a(&self) -> &ModMat {
        &self.a
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    /// True when distinct `s` give noise cubes of the given radius that never
    /// meet, so that inversion is unambiguous.
    pub fn is_injective(&self) -> bool {
        let ring = self.a.ring();
        let n = self.a.cols();
        (1..ring.modulus().pow(n as u32)).all(|idx| inf_norm(&self.a.mul_vec(&ModVec::from_index(ring, n, idx))) > 2 * self.radius)
    }

    /// The unique `s` with `||y - A s||_inf <= radius`, if there is one.
    pub fn invert(&self, y: &ModVec) -> Result<(ModVec, ModVec)> {
        let ring = self.a.ring();
        if y.ring() != ring || y.len() != self.a.rows() {
            return Err(Error::Dimension(format!("expected a vector of length {}", self.a.rows())));
        }
        let n = self.a.cols();
        let mut found = None;
        for idx in 0..ring.modulus().pow(n as u32) {
            let s = ModVec::from_index(ring, n, idx);
            let e = y.sub(&self.a.mul_vec(&s));
            if inf_norm(&e) <= self.radius {
                if found.is_some() {
                    return Err(Error::DecodeFailure);
                }
                found = Some((s, e));
            }
        }
        found.ok_or(Error::DecodeFailure)
    }
}

/// Either kind of LWE inverter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Inverter {
    Gadget(TrapdoorKey),
    Enumeration(EnumerationKey),
}

impl Inverter {
    pub fn a(&self) -> &ModMat {
        match self {
            Inverter::Gadget(k) => k.a(),
            Inverter::Enumeration(k) => k.a(),
        }
    }

    pub fn invert(&self, y: &ModVec) -> Result<(ModVec, ModVec)> {
        match self {
            Inverter::Gadget(k) => k.invert(y),
            Inverter::Enumeration(k) => k.invert(y),
        }
    }
}

/// How far noise can grow before inversion starts failing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionRadius {
    /// Largest `r` such that every trial with `||e||_inf <= r` inverted.
    pub max_inf_radius: u64,
    /// Largest `||e||` among those trials.
    pub max_l2_norm: f64,
    /// The constant `C` in `||e|| <= q / (C sqrt(n log2 q))` implied by it.
    pub implied_c_t: f64,
    /// Success rate at each tested radius, starting from 0.
    pub success_by_radius: Vec<f64>,
}

/// Probes a key with uniform noise in growing cubes `[-r, r]^m`.
pub fn measure_inversion_radius<R: Rng + ?Sized>(key: &Inverter, trials: usize, max_radius: u64, rng: &mut R) -> InversionRadius {
    let a = key.a();
    let ring = a.ring();
    let (m, n) = (a.rows(), a.cols());
    let mut success_by_radius = Vec::new();
    let mut max_inf_radius = 0;
    let mut max_l2_norm: f64 = 0.0;
    let mut clean = true;
    for r in 0..=max_radius.min(ring.modulus() / 2) {
        let mut ok = 0;
        let mut level_norm: f64 = 0.0;
        for _ in 0..trials {
            let s = ModVec::random(ring, n, rng);
            let e = ModVec::from_signed(ring, &(0..m).map(|_| rng.gen_range(-(r as i64)..=r as i64)).collect::<Vec<_>>())
                .expect("non-empty");
            let y = a.mul_vec(&s).add(&e);
            if matches!(key.invert(&y), Ok((s2, e2)) if s2 == s && e2 == e) {
                ok += 1;
                level_norm = level_norm.max(euclidean_norm(&e));
            }
        }
        success_by_radius.push(ok as f64 / trials.max(1) as f64);
        if clean && ok == trials {
            max_inf_radius = r;
            max_l2_norm = max_l2_norm.max(level_norm);
        } else {
            clean = false;
        }
    }
    let scale = (n as f64 * (ring.modulus() as f64).log2()).sqrt();
    let implied_c_t = if max_l2_norm > 0.0 { ring.modulus() as f64 / (max_l2_norm * scale) } else { f64::INFINITY };
    InversionRadius { max_inf_radius, max_l2_norm, implied_c_t, success_by_radius }
}

/// `A~ = B C + F` with `B`, `C` uniform and `F` drawn from `chi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossyMatrix {
    pub a_tilde: ModMat,
    pub b: ModMat,
    pub c: ModMat,
    pub f: ModMat,
}

pub fn lossy_sample<R: Rng + ?Sized>(ring: ModRing, n: usize, m: usize, ell: usize, chi: &TruncGaussian, rng: &mut R) -> Result<LossyMatrix> {
    if ell == 0 || n == 0 || m == 0 {
        return Err(Error::InvalidParameter("lossy sampling needs positive n, m and ell".into()));
    }
    if chi.ring() != ring {
        return Err(Error::InvalidParameter("noise distribution lives in a different ring".into()));
    }
    let b = ModMat::random(ring, m, ell, rng);
    let c = ModMat::random(ring, ell, n, rng);
    let f = ModMat::from_fn(ring, m, n, |_, _| chi.sample(rng));
    Ok(LossyMatrix { a_tilde: b.mul(&c).add(&f), b, c, f })
}

/// `sqrt(2) (1 - exp(-2 pi m n B_L / B_V))^(1/2)`.
pub fn lossy_shift_bound(m: usize, n: usize, b_l: f64, b_v: f64) -> f64 {
    assert!(b_v > 0.0, "B_V must be positive");
    let x = -2.0 * std::f64::consts::PI * (m * n) as f64 * b_l / b_v;
    std::f64::consts::SQRT_2 * (-x.exp_m1()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ring(q: u64) -> ModRing {
        ModRing::new(q).unwrap()
    }

    // Oracle: nearest coset point by brute force over Z_q.
    fn brute_decode(ring: ModRing, t: &[u64]) -> (u64, i64) {
        (0..ring.modulus())
            .map(|s| {
                let worst = t.iter().enumerate().map(|(j, &tj)| ring.abs(ring.sub(tj, ring.mul(s, (1 << j) % ring.modulus())))).max().unwrap();
                (s, worst as i64)
            })
            .min_by_key(|&(_, w)| w)
            .unwrap()
    }

    #[test]
    fn certified_radii() {
        let r = |q| GadgetDecoder::new(ring(q)).unwrap().certified_radius();
        assert!((r(13) - 13.0 / 6.0).abs() < 1e-12);
        assert!((r(61) - 61.0 / 10.0).abs() < 1e-12);
        assert!((r(3) - 0.5).abs() < 1e-12);
        assert!(GadgetDecoder::new(ring(16)).is_err());
    }

    #[test]
    fn decoder_recovers_every_certified_noise_block() {
        for q in [3u64, 5, 7, 11, 13, 17] {
            let rg = ring(q);
            let dec = GadgetDecoder::new(rg).unwrap();
            let k = dec.block_len();
            let rad = dec.certified_radius().ceil() as i64 - 1;
            let side = (2 * rad + 1) as u64;
            for s in 0..q {
                for idx in 0..side.pow(k as u32) {
                    let z: Vec<i64> = (0..k).map(|j| (idx / side.pow(j as u32) % side) as i64 - rad).collect();
                    let t: Vec<u64> = (0..k).map(|j| rg.reduce(((s as i64) << j) + z[j])).collect();
                    assert_eq!(dec.decode(&t), Some((s, z.clone())), "q={q} s={s}");
                }
            }
        }
    }

    #[test]
    fn decoder_agrees_with_brute_force_when_it_answers() {
        let rg = ring(13);
        let dec = GadgetDecoder::new(rg).unwrap();
        for idx in 0..13u64.pow(4) {
            let t: Vec<u64> = (0..4).map(|j| idx / 13u64.pow(j) % 13).collect();
            let (s, z) = dec.decode(&t).expect("rounding always lands on the coset");
            let (_, best) = brute_decode(rg, &t);
            let got = z.iter().map(|x| x.abs()).max().unwrap();
            if got <= 2 {
                assert_eq!(got, best);
                assert_eq!(brute_decode(rg, &t).0, s);
            }
        }
    }

    #[test]
    fn generated_key_shape_and_layout() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let key = TrapdoorKey::generate(ring(13), 2, 12, &mut rng).unwrap();
        assert_eq!((key.a().rows(), key.a().cols()), (12, 2));
        assert_eq!(key.mbar(), 4);
        assert!(key.layout_holds());
        assert!(key.r().data.iter().all(|x| x.abs() <= 1));
        assert!(TrapdoorKey::generate(ring(13), 2, 9, &mut rng).is_err());
    }

    #[test]
    fn zero_noise_inverts_for_every_secret() {
        let r13 = ring(13);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let key = TrapdoorKey::generate(r13, 1, 5, &mut rng).unwrap();
        for s in 0..13 {
            let s = ModVec::new(r13, vec![s]).unwrap();
            let (s2, e2) = key.invert(&key.a().mul_vec(&s)).unwrap();
            assert_eq!(s2, s);
            assert!(e2.is_zero());
        }
    }

    #[test]
    fn exhaustive_unit_noise_q13() {
        let r13 = ring(13);
        for seed in 0..20 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let key = TrapdoorKey::generate(r13, 1, 5, &mut rng).unwrap();
            for s in 0..13 {
                let s = ModVec::new(r13, vec![s]).unwrap();
                for idx in 0..3u64.pow(5) {
                    let e: Vec<i64> = (0..5).map(|j| (idx / 3u64.pow(j) % 3) as i64 - 1).collect();
                    let e = ModVec::from_signed(r13, &e).unwrap();
                    let y = key.a().mul_vec(&s).add(&e);
                    assert_eq!(key.invert(&y).unwrap(), (s.clone(), e));
                }
            }
        }
    }

    #[test]
    fn uniform_targets_fail_or_reconstruct() {
        let r = ring(13);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let key = TrapdoorKey::generate(r, 4, 20, &mut rng).unwrap();
        let mut failures = 0;
        for _ in 0..2000 {
            let y = ModVec::random(r, 20, &mut rng);
            match key.invert(&y) {
                Ok((s, e)) => assert_eq!(key.a().mul_vec(&s).add(&e), y),
                Err(Error::DecodeFailure) => failures += 1,
                Err(other) => panic!("{other}"),
            }
        }
        assert!(failures > 1900, "only {failures} failures");
    }

    #[test]
    fn key_json_round_trip_and_validation() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let key = TrapdoorKey::generate(ring(13), 2, 12, &mut rng).unwrap();
        let json = serde_json::to_value(&key).unwrap();
        assert_eq!(json["layout"]["mbar"], 4);
        assert_eq!(json["R"]["rows"], 8);
        let back: TrapdoorKey = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(back, key);
        let mut bad = json;
        bad["A"]["data"][0] = serde_json::json!((key.a().get(0, 0) + 1) % 13);
        assert!(serde_json::from_value::<TrapdoorKey>(bad).is_err());
    }

    fn entry_histogram(q: u64, n: usize, m: usize, samples: usize, seed: u64) -> (Vec<u64>, Vec<TrapdoorKey>) {
        let r = ring(q);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; q as usize];
        let mut keys = Vec::new();
        let mut total = 0;
        while total < samples {
            let key = TrapdoorKey::generate(r, n, m, &mut rng).unwrap();
            for &x in key.a().as_slice() {
                counts[x as usize] += 1;
                total += 1;
            }
            keys.push(key);
        }
        (counts, keys)
    }

    #[test]
    fn entries_of_a_look_uniform() {
        let (counts, _) = entry_histogram(61, 8, 56, 100_000, 6);
        let test = chi_square(&counts, &[1.0 / 61.0; 61]);
        assert!(test.p_value > 0.001, "{test:?}");
    }

    // With mbar = n = 4 a trapdoor row is all zero with probability 3^-4, and
    // the matching row of A is then a gadget row. The histogram must follow
    // that exact mixture rather than the uniform law.
    #[test]
    fn entries_follow_exact_mixture_at_minimal_width() {
        let (q, n, m) = (13u64, 4, 20);
        let (counts, keys) = entry_histogram(q, n, m, 100_000, 6);
        let r = ring(q);
        let mbar = m - n * r.bits();
        let p_zero_row = 3f64.powi(-(mbar as i32));
        let g = gadget_matrix(r, n);
        let mut probs = vec![0.0; q as usize];
        for i in 0..m {
            for j in 0..n {
                if i < mbar {
                    probs.iter_mut().for_each(|p| *p += 1.0 / q as f64);
                } else {
                    probs.iter_mut().for_each(|p| *p += (1.0 - p_zero_row) / q as f64);
                    probs[g.get(i - mbar, j) as usize] += p_zero_row;
                }
            }
        }
        let cells = (m * n) as f64;
        probs.iter_mut().for_each(|p| *p /= cells);
        let total: u64 = counts.iter().sum();
        assert_eq!(total as usize, keys.len() * m * n);
        let test = chi_square(&counts, &probs);
        assert!(test.p_value > 0.001, "{test:?}");
    }

    #[test]
    fn enumeration_inverter() {
        let r = ring(5);
        let a = ModMat::new(r, 2, 1, vec![2, 3]).unwrap();
        let key = EnumerationKey::new(a.clone(), 0).unwrap();
        assert!(key.is_injective());
        for s in 0..5 {
            let s = ModVec::new(r, vec![s]).unwrap();
            assert_eq!(key.invert(&a.mul_vec(&s)).unwrap().0, s);
        }
        assert!(key.invert(&ModVec::new(r, vec![1, 0]).unwrap()).is_err());
        let degenerate = EnumerationKey::new(ModMat::new(r, 2, 1, vec![1, 0]).unwrap(), 1).unwrap();
        assert!(!degenerate.is_injective());
        assert!(EnumerationKey::new(ModMat::zeros(ring(61), 2, 4), 0).is_err());
    }

    #[test]
    fn inversion_radius_report() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let key = Inverter::Gadget(TrapdoorKey::generate(ring(61), 1, 8, &mut rng).unwrap());
        let rep = measure_inversion_radius(&key, 200, 3, &mut rng);
        assert_eq!(rep.success_by_radius[0], 1.0);
        assert!(rep.max_inf_radius >= 1);
        assert!(rep.implied_c_t.is_finite() && rep.implied_c_t > 0.0);
    }

    #[test]
    fn lossy_zero_noise_has_low_rank() {
        let r = ring(13);
        let chi = TruncGaussian::new(r, 0.5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let l = lossy_sample(r, 6, 10, 2, &chi, &mut rng).unwrap();
        assert!(l.f.as_slice().iter().all(|&x| x == 0));
        assert!(l.a_tilde.rank().unwrap() <= 2);
        assert_eq!((l.b.rows(), l.b.cols(), l.c.rows(), l.c.cols()), (10, 2, 2, 6));
        assert_eq!(l.a_tilde, l.b.mul(&l.c).add(&l.f));
    }

    #[test]
    fn lossy_noise_times_binary_secret_is_short() {
        let r = ring(61);
        let b_l = 2.0;
        let chi = TruncGaussian::new(r, b_l).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let (n, m) = (8, 20);
        for _ in 0..200 {
            let l = lossy_sample(r, n, m, 2, &chi, &mut rng).unwrap();
            let s = ModVec::from_bits(r, &crate::modq::BitString::random(n, &mut rng));
            assert!(euclidean_norm(&l.f.mul_vec(&s)) <= n as f64 * (m as f64).sqrt() * b_l);
        }
        let again = |seed| lossy_sample(r, n, m, 2, &chi, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(again(3), again(3));
    }

    #[test]
    fn lossy_bound_values() {
        let want = std::f64::consts::SQRT_2 * (1.0 - (-32.0 * std::f64::consts::PI * 1e-6f64).exp()).sqrt();
        assert!((lossy_shift_bound(4, 4, 1.0, 1e6) / want - 1.0).abs() < 1e-9);
        assert!(lossy_shift_bound(4, 4, 1e-300, 1.0) < 1e-140);
        assert!(lossy_shift_bound(4, 4, 1.0, 10.0) < lossy_shift_bound(4, 4, 2.0, 10.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn returned_pair_reconstructs_target(q in prop::sample::select(vec![5u64, 7, 11, 13, 61]), n in 1usize..4, extra in 0usize..4, seed in any::<u64>()) {
            let r = ring(q);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let m = n * r.bits() + n + extra;
            let key = TrapdoorKey::generate(r, n, m, &mut rng).unwrap();
            let y = ModVec::random(r, m, &mut rng);
            if let Ok((s, e)) = key.invert(&y) {
                prop_assert_eq!(key.a().mul_vec(&s).add(&e), y);
            }
            let s = ModVec::random(r, n, &mut rng);
            let (s2, e2) = key.invert(&key.a().mul_vec(&s)).unwrap();
            prop_assert_eq!(s2, s);
            prop_assert!(e2.is_zero());
        }
    }
}
