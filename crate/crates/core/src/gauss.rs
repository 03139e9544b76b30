//! Truncated discrete Gaussians over Z_q and Z_q^m.
//!
//! `D_{Z_q,B}(x) = exp(-pi |x|^2 / B^2) / tau` on `|x| <= B` and zero
//! elsewhere, with `|x|` the centered magnitude. The m-dimensional version is
//! the product of i.i.d. coordinates, so its support is the cube
//! `||x||_inf <= B`. Everything is summed exactly over the support.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::modq::{euclidean_norm, ModRing, ModVec};

/// Widths above this switch the sampler from inverse CDF to rejection.
pub const REJECTION_THRESHOLD: f64 = 1e4;

/// Largest `q^m` that [`hellinger_sq`] and [`shifted_tv`] will enumerate.
pub const ENUMERATION_GUARD: f64 = 1e7;

const MAX_SUPPORT: f64 = 1e8;

/// `D_{Z_q,B}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncGaussian {
    ring: ModRing,
    width: f64,
    lo: i64,
    hi: i64,
    tau: f64,
    cdf: Option<Vec<f64>>,
}

impl TruncGaussian {
    pub fn new(ring: ModRing, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter(format!("Gaussian width must be positive, got {width}")));
        }
        let q = ring.modulus() as i64;
        let r = width.floor().min(q as f64) as i64;
        let lo = (-r).max(-((q - 1) / 2));
        let hi = r.min(q / 2);
        guard("Gaussian support", (hi - lo + 1) as f64, MAX_SUPPORT)?;
        let weight = |c: i64| (-std::f64::consts::PI * (c * c) as f64 / (width * width)).exp();
        let tau: f64 = (lo..=hi).map(weight).sum();
        let cdf = (width <= REJECTION_THRESHOLD).then(|| {
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = (lo..=hi)
                .map(|c| {
                    acc += weight(c) / tau;
                    acc
                })
                .collect();
            *cdf.last_mut().expect("support is never empty") = 1.0;
            cdf
        });
        Ok(Self { ring, width, lo, hi, tau, cdf })
    }

    pub fn ring(&self) -> ModRing {
        self.ring
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// The normalizer `tau`.
    pub fn normalizer(&self) -> f64 {
        self.tau
    }

    /// Centered support as an inclusive range.
    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn support_len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    /// Density at a centered value.
    pub fn density_centered(&self, c: i64) -> f64 {
        if c < self.lo || c > self.hi {
            return 0.0;
        }
        (-std::f64::consts::PI * (c * c) as f64 / (self.width * self.width)).exp() / self.tau
    }

    /// Density at a residue.
    pub fn density(&self, x: u64) -> f64 {
        self.density_centered(self.ring.centered(x))
    }

    /// Product density of the m-dimensional distribution.
    pub fn density_vec(&self, v: &ModVec) -> f64 {
        let mut p = 1.0;
        for &x in v.as_slice() {
            p *= self.density(x);
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// Whether `v` lies in the support of the product distribution.
    pub fn in_support(&self, v: &ModVec) -> bool {
        v.as_slice().iter().all(|&x| {
            let c = self.ring.centered(x);
            self.lo <= c && c <= self.hi
        })
    }

    /// One draw. A singleton support consumes no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.lo == self.hi {
            return self.ring.reduce(self.lo);
        }
        let c = match &self.cdf {
            Some(cdf) => {
                let u: f64 = rng.gen();
                self.lo + cdf.partition_point(|&p| p <= u) as i64
            }
            None => loop {
                let c = rng.gen_range(self.lo..=self.hi);
                let accept = (-std::f64::consts::PI * (c as f64 / self.width).powi(2)).exp();
                if rng.gen::<f64>() < accept {
                    break c;
                }
            },
        };
        self.ring.reduce(c)
    }

    /// `m` i.i.d. draws.
    pub fn sample_vec<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> ModVec {
        let data = (0..m).map(|_| self.sample(rng)).collect();
        ModVec::new(self.ring, data).expect("samples are reduced")
    }
}

/// The shifted-distribution bound `1 - exp(-2 pi sqrt(m) ||e|| / B)`.
pub fn shift_bound(m: usize, e_norm: f64, width: f64) -> f64 {
    1.0 - (-2.0 * std::f64::consts::PI * (m as f64).sqrt() * e_norm / width).exp()
}

/// Exact squared Hellinger distance between `D` and `D + e`, with the bound it
/// is supposed to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HellingerReport {
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `H^2(D, D + e) = 1 - sum_x sqrt(D(x) D(x - e))`, summed over the support.
///
/// The bound is reported rather than asserted: when a coordinate of `e`
/// moves the support entirely off itself the distance is exactly 1, above
/// the bound.
pub fn hellinger_sq(dist: &TruncGaussian, e: &ModVec) -> Result<HellingerReport> {
    check_ring(dist, e)?;
    let m = e.len();
    guard("q^m", (dist.ring.modulus() as f64).powi(m as i32), ENUMERATION_GUARD)?;
    let len = dist.support_len();
    let total = len.pow(m as u32);
    let ring = dist.ring;
    let mut bc = 0.0;
    for idx in 0..total {
        let (mut rest, mut term) = (idx, 1.0);
        for &ei in e.as_slice() {
            let c = dist.lo + (rest % len) as i64;
            rest /= len;
            let shifted = ring.centered(ring.sub(ring.reduce(c), ei));
            term *= (dist.density_centered(c) * dist.density_centered(shifted)).sqrt();
            if term == 0.0 {
                break;
            }
        }
        bc += term;
    }
    let value = (1.0 - bc).clamp(0.0, 1.0);
    let bound = shift_bound(m, euclidean_norm(e), dist.width);
    Ok(HellingerReport { value, bound, holds: value <= bound + 1e-12 })
}

/// Total variation distance between `D` and `D + e` by enumeration of Z_q^m.
pub fn shifted_tv(dist: &TruncGaussian, e: &ModVec) -> Result<f64> {
    check_ring(dist, e)?;
    let m = e.len();
    let q = dist.ring.modulus();
    guard("q^m", (q as f64).powi(m as i32), ENUMERATION_GUARD)?;
    let mut sum = 0.0;
    for idx in 0..q.pow(m as u32) {
        let x = ModVec::from_index(dist.ring, m, idx);
        sum += (dist.density_vec(&x) - dist.density_vec(&x.sub(e))).abs();
    }
    Ok(0.5 * sum)
}

/// `1/2 sum |f1 - f2|` over a shared finite domain.
pub fn tv_distance(f1: &[f64], f2: &[f64]) -> Result<f64> {
    if f1.len() != f2.len() {
        return Err(Error::Dimension(format!("domains of size {} and {}", f1.len(), f2.len())));
    }
    Ok(0.5 * f1.iter().zip(f2).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn check_ring(dist: &TruncGaussian, e: &ModVec) -> Result<()> {
    if e.ring() != dist.ring {
        return Err(Error::Dimension("shift lives in a different ring".into()));
    }
    Ok(())
}
