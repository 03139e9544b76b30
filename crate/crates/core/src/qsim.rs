//! State-vector simulation of the honest prover at micro scale.
//!
//! The register layout is `|b>|x>|y>` with `b` a qubit, `x in Z_q^n` and
//! `y in Z_q^m`. Only the steps the prover actually performs are modelled:
//! preparing the image superposition, measuring `y`, then either measuring
//! the preimage or applying Hadamards to `(b, J(x))` and measuring.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{guard, Error, Result};
use crate::modq::{binary_map_j, BitString, ModRing, ModVec};
use crate::ntcf::PublicKey;

/// Largest state dimension `2 q^(n+m)` the simulator will allocate.
pub const STATE_GUARD: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct StateVector {
    ring: ModRing,
    n: usize,
    m: usize,
    amps: Vec<Complex64>,
}

/// The `(b, x)` register after `y` has been measured.
#[derive(Clone, Debug)]
pub struct Collapsed {
    ring: ModRing,
    n: usize,
    y: ModVec,
    amps: Vec<Complex64>,
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::InvalidParameter(format!("cannot sample: {e}")))?;
    Ok(dist.sample(rng))
}

impl StateVector {
    /// `sum_b sum_x sum_y sqrt(f'_{k,b}(x)(y) / (2 q^n)) |b, x, y>`.
    pub fn prepare_samp(pk: &PublicKey) -> Result<Self> {
        let ring = pk.ring();
        let (n, m) = (pk.n(), pk.m());
        let q = ring.modulus() as f64;
        guard("2 q^(n+m)", 2.0 * q.powi((n + m) as i32), STATE_GUARD)?;
        let (nx, ny) = (ring.modulus().pow(n as u32), ring.modulus().pow(m as u32));
        let noise = pk.preimage_noise();
        let scale = 1.0 / (2.0 * nx as f64);
        let mut amps = Vec::with_capacity((2 * nx * ny) as usize);
        for b in 0..2u8 {
            for xi in 0..nx {
                let x = ModVec::from_index(ring, n, xi);
                let centre = pk.residual(b, &x, &ModVec::zeros(ring, m));
                for yi in 0..ny {
                    let y = ModVec::from_index(ring, m, yi);
                    let p = noise.density_vec(&y.add(&centre));
                    amps.push(Complex64::new((p * scale).sqrt(), 0.0));
                }
            }
        }
        Ok(Self { ring, n, m, amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn y_cells(&self) -> usize {
        self.ring.modulus().pow(self.m as u32) as usize
    }

    /// `|<b, x, y|psi>|^2`.
    pub fn probability(&self, b: u8, x: &ModVec, y: &ModVec) -> f64 {
        let nx = self.ring.modulus().pow(self.n as u32) as usize;
        let i = ((b as usize * nx) + x.to_index() as usize) * self.y_cells() + y.to_index() as usize;
        self.amps[i].norm_sqr()
    }

    /// Born-rule law of the `y` register, indexed like `ModVec::to_index`.
    pub fn y_distribution(&self) -> Vec<f64> {
        let ny = self.y_cells();
        let mut out = vec![0.0; ny];
        for (i, a) in self.amps.iter().enumerate() {
            out[i % ny] += a.norm_sqr();
        }
        out
    }

    /// Measures `y` and returns the renormalised `(b, x)` register.
    pub fn measure_y<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(ModVec, Collapsed)> {
        let yi = sample_index(&self.y_distribution(), rng)?;
        let y = ModVec::from_index(self.ring, self.m, yi as u64);
        let ny = self.y_cells();
        let mut amps: Vec<Complex64> = self.amps.iter().skip(yi).step_by(ny).copied().collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Ok((y.clone(), Collapsed { ring: self.ring, n: self.n, y, amps }))
    }
}

impl Collapsed {
    pub fn y(&self) -> &ModVec {
        &self.y
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn decode(&self, i: usize) -> (u8, ModVec) {
        let nx = self.ring.modulus().pow(self.n as u32) as usize;
        ((i / nx) as u8, ModVec::from_index(self.ring, self.n, (i % nx) as u64))
    }

    /// Branches with nonzero amplitude.
    pub fn support(&self) -> Vec<(u8, ModVec, Complex64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, &a)| {
                let (b, x) = self.decode(i);
                (b, x, a)
            })
            .collect()
    }

    /// Measures `(b, x)` in the computational basis.
    pub fn measure_preimage<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(u8, ModVec)> {
        let probs: Vec<f64> = self.amps.iter().map(|a| a.norm_sqr()).collect();
        Ok(self.decode(sample_index(&probs, rng)?))
    }

    /// Writes `(b, J(x))` into `w + 1` qubits and applies a Hadamard to each.
    /// Index bit 0 is `u`, bits `1..=w` are `d`.
    pub fn hadamard_register(&self) -> Vec<Complex64> {
        let w = self.n * self.ring.bits();
        let size = 1usize << (w + 1);
        let mut reg = vec![Complex64::new(0.0, 0.0); size];
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (b, x) = self.decode(i);
            let j = binary_map_j(&x).to_index() as usize;
            reg[b as usize | (j << 1)] += a;
        }
        walsh_hadamard(&mut reg);
        reg
    }

    /// Born-rule law of `(u, d)` after the Hadamards, indexed `u + 2 d`.
    pub fn equation_distribution(&self) -> Vec<f64> {
        self.hadamard_register().iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn measure_equation<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(u8, BitString)> {
        let i = sample_index(&self.equation_distribution(), rng)?;
        let w = self.n * self.ring.bits();
        Ok(((i & 1) as u8, BitString::from_index(w, (i >> 1) as u64)))
    }
}

/// In-place normalised Walsh-Hadamard transform.
pub fn walsh_hadamard(v: &mut [Complex64]) {
    let len = v.len();
    assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for start in (0..len).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (len as f64).sqrt();
    for a in v {
        *a *= scale;
    }
}
