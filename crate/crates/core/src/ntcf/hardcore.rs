//! The adaptive hardcore bit: the map `I_{b,x}`, the sets `G` and `Ĝ`, and
//! the empirical hardcore game.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NtcfKeyPair, PublicKey};
use crate::error::{Error, Result};
use crate::modq::{binary_map_j, BitString, ModVec};
use crate::stats::wilson;

/// Coordinates of `I_{b,x}(d)` that decide membership in `G_{k,b,x}`:
/// the first `ceil(n/2)` for `b = 0`, the last `floor(n/2)` for `b = 1`.
pub fn half_range(n: usize, b: u8) -> Range<usize> {
    let mid = n.div_ceil(2);
    if b == 0 {
        0..mid
    } else {
        mid..n
    }
}

/// `I_{b,x}(d)_i = d_i . (J(x_i) xor J(x_i - (-1)^b))`, block by block.
pub fn index_map_i(b: u8, x: &ModVec, d: &BitString) -> Result<BitString> {
    let ring = x.ring();
    let k = ring.bits();
    if d.len() != x.len() * k {
        return Err(Error::Dimension(format!("d has length {}, expected {}", d.len(), x.len() * k)));
    }
    let neighbour = if b == 0 {
        x.sub(&ModVec::new(ring, vec![1; x.len()])?)
    } else {
        x.add(&ModVec::new(ring, vec![1; x.len()])?)
    };
    let diff = binary_map_j(x).xor(&binary_map_j(&neighbour));
    let bits = (0..x.len()).map(|i| d.slice(i * k, (i + 1) * k).dot(&diff.slice(i * k, (i + 1) * k))).collect();
    BitString::new(bits)
}

/// Whether `I` has a nonzero bit in branch `b`'s half.
pub fn in_g_bits(i: &BitString, b: u8) -> bool {
    half_range(i.len(), b).any(|j| i.get(j) == 1)
}

/// Membership of `d` in `G_{k,b,x}`.
pub fn in_g(b: u8, x: &ModVec, d: &BitString) -> Result<bool> {
    Ok(in_g_bits(&index_map_i(b, x, d)?, b))
}

/// The set `Ĝ = G_{k,0,x0} ∩ G_{k,1,x1}` as a predicate on `d`.
///
/// Only the first half of `x0` and the last half of `x1` matter, which is
/// why the set can be built from one preimage and half of `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ghat {
    x0: ModVec,
    x1: ModVec,
}

impl Ghat {
    pub fn new(x0: ModVec, x1: ModVec) -> Self {
        Self { x0, x1 }
    }

    /// `Ĝ_{s_{b xor 1}, b, x_b}`: built from `x_b` and the half of `s`
    /// indexed by the other branch's range.
    pub fn from_half(b: u8, x_b: &ModVec, s_other: &BitString) -> Result<Self> {
        let ring = x_b.ring();
        let n = x_b.len();
        let range = half_range(n, 1 - b);
        if s_other.len() != range.len() {
            return Err(Error::Dimension(format!("half secret has length {}, expected {}", s_other.len(), range.len())));
        }
        let mut padded = vec![0u8; n];
        for (j, i) in range.enumerate() {
            padded[i] = s_other.get(j);
        }
        let s = ModVec::from_bits(ring, &BitString::new(padded)?);
        Ok(if b == 0 {
            Self { x0: x_b.clone(), x1: x_b.sub(&s) }
        } else {
            Self { x0: x_b.add(&s), x1: x_b.clone() }
        })
    }

    pub fn contains(&self, d: &BitString) -> Result<bool> {
        Ok(in_g(0, &self.x0, d)? && in_g(1, &self.x1, d)?)
    }
}

impl NtcfKeyPair {
    /// `Ĝ_y` from the two preimages of `y`.
    pub fn ghat(&self, y: &ModVec) -> Result<Ghat> {
        let claw = self.claw(y)?;
        Ok(Ghat::new(claw.x0, claw.x1))
    }

    /// `s` restricted to branch `b`'s half.
    pub fn s_half(&self, b: u8) -> BitString {
        let r = half_range(self.s().len(), b);
        self.s().slice(r.start, r.end)
    }
}

/// Where a candidate `(b, x, d, c)` falls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HMembership {
    MemberH,
    MemberHbar,
    Neither,
}

impl NtcfKeyPair {
    /// Classifies `(b, x, d, c)` against `H_s` and its complement `H̄_s`.
    pub fn in_h(&self, b: u8, x: &ModVec, d: &BitString, c: u8) -> HMembership {
        let n = self.s().len();
        let k = x.ring().bits();
        if b > 1 || c > 1 || x.len() != n || x.ring() != self.public().ring() || d.len() != n * k {
            return HMembership::Neither;
        }
        let good = Ghat::from_half(b, x, &self.s_half(1 - b)).and_then(|g| g.contains(d));
        if !matches!(good, Ok(true)) {
            return HMembership::Neither;
        }
        let s = self.s_vec();
        let partner = if b == 0 { x.sub(&s) } else { x.add(&s) };
        let parity = d.dot(&binary_map_j(x).xor(&binary_map_j(&partner)));
        if parity == c {
            HMembership::MemberH
        } else {
            HMembership::MemberHbar
        }
    }
}

/// An adversary's output in the hardcore game.
#[derive(Clone, Debug, PartialEq)]
pub struct HardcoreGuess {
    pub b: u8,
    pub x: ModVec,
    pub d: BitString,
    pub c: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardcoreReport {
    pub trials: u64,
    pub in_h: u64,
    pub in_hbar: u64,
    pub p_h: f64,
    pub p_hbar: f64,
    /// `|P[H] - P[H̄]|`.
    pub advantage: f64,
    pub ci_h: (f64, f64),
    pub ci_hbar: (f64, f64),
    /// Interval for the advantage from the two 95% Wilson intervals.
    pub advantage_ci: (f64, f64),
}

/// Plays the game `trials` times with a fresh key each time and estimates
/// the adversary's advantage.
pub fn hardcore_game<R, K, A>(mut key_gen: K, mut adversary: A, trials: u64, rng: &mut R) -> Result<HardcoreReport>
where
    R: Rng + ?Sized,
    K: FnMut(&mut R) -> Result<NtcfKeyPair>,
    A: FnMut(&PublicKey, &mut R) -> HardcoreGuess,
{
    let (mut h, mut hbar) = (0u64, 0u64);
    for _ in 0..trials {
        let key = key_gen(rng)?;
        let g = adversary(key.public(), rng);
        match key.in_h(g.b, &g.x, &g.d, g.c) {
            HMembership::MemberH => h += 1,
            HMembership::MemberHbar => hbar += 1,
            HMembership::Neither => {}
        }
    }
    let t = trials.max(1) as f64;
    let (p_h, p_hbar) = (h as f64 / t, hbar as f64 / t);
    let ci_h = wilson(h, trials, 1.96);
    let ci_hbar = wilson(hbar, trials, 1.96);
    let lo = (ci_h.0 - ci_hbar.1).max(ci_hbar.0 - ci_h.1).max(0.0);
    let hi = (ci_h.1 - ci_hbar.0).max(ci_hbar.1 - ci_h.0).min(1.0);
    Ok(HardcoreReport {
        trials,
        in_h: h,
        in_hbar: hbar,
        p_h,
        p_hbar,
        advantage: (p_h - p_hbar).abs(),
        ci_h,
        ci_hbar,
        advantage_ci: (lo, hi),
    })
}
