//! The LWE-based noisy trapdoor claw-free family.
//!
//! A key is `k = (A, u)` with `u = A s + e`, `s` binary. The two branches are
//!
//! ```text
//! f_{k,0}(x)(y) = D_{B_P}(y - A x)
//! f_{k,1}(x)(y) = D_{B_P}(y - A x - A s)
//! ```
//!
//! and the claw partner of `x_0` is `x_1 = x_0 - s`. The prover only ever
//! sees `f'`, which shifts by the public `u` instead of `A s`; the two agree
//! on the `b = 0` branch and are close on `b = 1`.

mod hardcore;
mod moderate;

pub use hardcore::{
    half_range, hardcore_game, in_g, in_g_bits, index_map_i, Ghat, HMembership, HardcoreGuess, HardcoreReport,
};
pub use moderate::{is_moderate_vec, moderate_check, parity_tv, MODERATE_GUARD};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::TruncGaussian;
use crate::modq::{BitString, ModMat, ModRing, ModVec};
use crate::profile::ParameterProfile;
use crate::trapdoor::{EnumerationKey, Inverter, TrapdoorKey};

/// Key generation gives up after this many rejected draws.
pub const KEYGEN_RETRIES: usize = 64;

/// The public half of a key. Safe to send to a prover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicKey {
    #[serde(rename = "A")]
    pub a: ModMat,
    pub u: ModVec,
    pub profile: ParameterProfile,
}

/// The verifier's trapdoor record: the inverter plus the recovered `(s, e)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecretKey {
    pub inverter: Inverter,
    pub s: BitString,
    pub e: ModVec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NtcfKeyPair {
    public: PublicKey,
    #[serde(rename = "trapdoor")]
    secret: SecretKey,
}

/// A claw `f_{k,0}(x0) = f_{k,1}(x1)` together with an image `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClawPair {
    pub x0: ModVec,
    pub x1: ModVec,
    pub y: ModVec,
}

fn check_bit(b: u8) {
    assert!(b <= 1, "branch bit must be 0 or 1, got {b}");
}

impl PublicKey {
    pub fn ring(&self) -> ModRing {
        self.a.ring()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// `D_{B_P}` over one coordinate.
    pub fn preimage_noise(&self) -> TruncGaussian {
        TruncGaussian::new(self.ring(), self.profile.b_p).expect("profile widths are validated")
    }

    /// `e' = y - A x - b u`.
    pub fn residual(&self, b: u8, x: &ModVec, y: &ModVec) -> ModVec {
        check_bit(b);
        let r = y.sub(&self.a.mul_vec(x));
        if b == 1 {
            r.sub(&self.u)
        } else {
            r
        }
    }

    /// `f'_{k,b}(x)(y)`, computable from public data alone.
    pub fn density_f_prime(&self, b: u8, x: &ModVec, y: &ModVec) -> f64 {
        self.preimage_noise().density_vec(&self.residual(b, x, y))
    }

    /// Public check: `y` lies in the support of `f'_{k,b}(x)`, the cube
    /// `||e'||_inf <= B_P` on which the truncated density is positive.
    pub fn chk(&self, b: u8, x: &ModVec, y: &ModVec) -> bool {
        self.preimage_noise().in_support(&self.residual(b, x, y))
    }

    /// The looser ball test `||e'||_2 <= B_P sqrt(m)`.
    pub fn chk_ball(&self, b: u8, x: &ModVec, y: &ModVec) -> bool {
        let r = self.residual(b, x, y);
        crate::modq::euclidean_norm(&r) <= self.profile.b_p * (self.m() as f64).sqrt() + 1e-12
    }

    /// One honest draw from the image superposition's marginal:
    /// `b, x` uniform, `y = A x + b u + e_0`.
    pub fn sample_image<R: Rng + ?Sized>(&self, rng: &mut R) -> (u8, ModVec, ModVec) {
        let b = rng.gen_range(0..2u8);
        let x = ModVec::random(self.ring(), self.n(), rng);
        let e0 = self.preimage_noise().sample_vec(self.m(), rng);
        let mut y = self.a.mul_vec(&x).add(&e0);
        if b == 1 {
            y = y.add(&self.u);
        }
        (b, x, y)
    }
}

impl NtcfKeyPair {
    /// Draws `A` with a trapdoor, a binary secret and `e ~ D_{B_V}^m`, and
    /// keeps the draw only if the trapdoor recovers `(s, e)` from `u`.
    pub fn generate<R: Rng + ?Sized>(profile: &ParameterProfile, rng: &mut R) -> Result<Self> {
        profile.validate()?;
        let ring = profile.ring()?;
        let (n, m) = (profile.n, profile.m);
        let key_noise = TruncGaussian::new(ring, profile.b_v)?;
        for _ in 0..KEYGEN_RETRIES {
            let inverter = if profile.uses_gadget() {
                Inverter::Gadget(TrapdoorKey::generate(ring, n, m, rng)?)
            } else {
                let key = EnumerationKey::new(ModMat::random(ring, m, n, rng), profile.noise_radius())?;
                if !key.is_injective() {
                    continue;
                }
                Inverter::Enumeration(key)
            };
            let s = BitString::random(n, rng);
            let e = key_noise.sample_vec(m, rng);
            let a = inverter.a().clone();
            let u = a.mul_vec(&ModVec::from_bits(ring, &s)).add(&e);
            match inverter.invert(&u) {
                Ok((s_rec, e_rec)) if s_rec == ModVec::from_bits(ring, &s) && e_rec == e => {
                    return Ok(Self {
                        public: PublicKey { a, u, profile: profile.clone() },
                        secret: SecretKey { inverter, s, e },
                    })
                }
                _ => continue,
            }
        }
        Err(Error::DecodeFailure)
    }

    /// Reassembles a key pair, checking `u = A s + e` and that the inverter
    /// belongs to `A`.
    pub fn from_parts(public: PublicKey, secret: SecretKey) -> Result<Self> {
        let ring = public.ring();
        if secret.inverter.a() != &public.a {
            return Err(Error::InvalidParameter("trapdoor does not match the public matrix".into()));
        }
        if secret.s.len() != public.n() || secret.e.len() != public.m() || secret.e.ring() != ring {
            return Err(Error::Dimension("secret has the wrong shape".into()));
        }
        if public.a.mul_vec(&ModVec::from_bits(ring, &secret.s)).add(&secret.e) != public.u {
            return Err(Error::InvalidParameter("u is not A s + e".into()));
        }
        Ok(Self { public, secret })
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn secret(&self) -> &SecretKey {
        &self.secret
    }

    pub fn profile(&self) -> &ParameterProfile {
        &self.public.profile
    }

    pub fn s(&self) -> &BitString {
        &self.secret.s
    }

    /// `s` as a vector over Z_q.
    pub fn s_vec(&self) -> ModVec {
        ModVec::from_bits(self.public.ring(), &self.secret.s)
    }

    /// `f_{k,b}(x)(y)`. Needs the secret; test oracles only.
    pub fn density_f(&self, b: u8, x: &ModVec, y: &ModVec) -> f64 {
        check_bit(b);
        let mut r = y.sub(&self.public.a.mul_vec(x));
        if b == 1 {
            r = r.sub(&self.public.a.mul_vec(&self.s_vec()));
        }
        self.public.preimage_noise().density_vec(&r)
    }

    /// The preimage of `y` on branch `b`: `s_0 - b s` where `s_0` is the
    /// trapdoor's decoding of `y`. Fails unless the decoded noise lies in
    /// the cube of radius `floor(B_P) + floor(B_V)` that any honest image
    /// lands in.
    pub fn inv(&self, b: u8, y: &ModVec) -> Result<ModVec> {
        check_bit(b);
        let (s0, e) = self.secret.inverter.invert(y)?;
        if crate::modq::inf_norm(&e) > self.profile().noise_radius() {
            return Err(Error::DecodeFailure);
        }
        Ok(if b == 1 { s0.sub(&self.s_vec()) } else { s0 })
    }

    /// Both preimages of `y`.
    pub fn claw(&self, y: &ModVec) -> Result<ClawPair> {
        let x0 = self.inv(0, y)?;
        let x1 = x0.sub(&self.s_vec());
        Ok(ClawPair { x0, x1, y: y.clone() })
    }
}
