//! Simplified devices at explicit dimension, and the analytic bounds that
//! go with them.
//!
//! A simplified device holds, for each classical outcome `y`, a
//! subnormalised state `phi_y` and three projective measurements: `Pi`
//! (three outcomes), `M` and `K` (two outcomes each). Only `Pi^0`, `Pi^1`,
//! `M^1` and `K^0` are stored; the remaining operators are completions to
//! the identity. `M^1` is the projector that passes the equation test.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Largest Hilbert space dimension accepted.
pub const MAX_DIM: usize = 64;
const TOL: f64 = 1e-9;

fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Frobenius distance, used for all "within tolerance" checks.
pub fn distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

pub fn is_projector(p: &CMat) -> bool {
    p.is_square() && distance(p, &p.adjoint()) <= TOL && distance(&(p * p), p) <= TOL
}

fn commute(a: &CMat, b: &CMat) -> bool {
    distance(&(a * b), &(b * a)) <= TOL
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> f64 {
    a.singular_values().max()
}

fn trace_re(a: &CMat) -> f64 {
    a.trace().re
}

fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let h = (a + a.adjoint()).scale(0.5);
    let e = h.symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Orthonormal basis of the range of a projector, as columns.
fn range_basis(p: &CMat) -> CMat {
    let (vals, vecs) = eigh(p);
    let cols: Vec<_> = vals.iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(i, _)| vecs.column(i).into_owned()).collect();
    if cols.is_empty() {
        CMat::zeros(p.nrows(), 0)
    } else {
        CMat::from_columns(&cols)
    }
}

mod json {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("operator must be a square matrix"));
        }
        Ok(CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }
}

/// The operators attached to one outcome `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceBranch {
    #[serde(with = "json")]
    pub phi: CMat,
    #[serde(rename = "Pi0", with = "json")]
    pub pi0: CMat,
    #[serde(rename = "Pi1", with = "json")]
    pub pi1: CMat,
    #[serde(rename = "M1", with = "json")]
    pub m1: CMat,
    #[serde(rename = "K0", with = "json")]
    pub k0: CMat,
}

impl DeviceBranch {
    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn pi(&self, v: u8) -> CMat {
        match v {
            0 => self.pi0.clone(),
            1 => self.pi1.clone(),
            _ => identity(self.dim()) - &self.pi0 - &self.pi1,
        }
    }

    pub fn m(&self, e: u8) -> CMat {
        if e == 1 {
            self.m1.clone()
        } else {
            identity(self.dim()) - &self.m1
        }
    }

    pub fn k(&self, k: u8) -> CMat {
        if k == 0 {
            self.k0.clone()
        } else {
            identity(self.dim()) - &self.k0
        }
    }

    /// `Pr(e, k | y)` for the sequential `M` then `K` measurement.
    pub fn equation_law(&self) -> [[f64; 2]; 2] {
        let t = trace_re(&self.phi).max(f64::MIN_POSITIVE);
        let mut out = [[0.0; 2]; 2];
        for e in 0..2u8 {
            let me = self.m(e);
            let post = &me * &self.phi * &me;
            for k in 0..2u8 {
                let kk = self.k(k);
                out[e as usize][k as usize] = (trace_re(&(&kk * &post * &kk)) / t).max(0.0);
            }
        }
        out
    }

    /// `Pr(v | y)` for the preimage measurement.
    pub fn preimage_law(&self) -> [f64; 3] {
        let t = trace_re(&self.phi).max(f64::MIN_POSITIVE);
        let mut out = [0.0; 3];
        for v in 0..3u8 {
            let p = self.pi(v);
            out[v as usize] = (trace_re(&(&p * &self.phi * &p)) / t).max(0.0);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedDevice {
    dim: usize,
    #[serde(rename = "y")]
    branches: Vec<DeviceBranch>,
}

/// A branch of the post-measurement state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PostBranch {
    /// `phi_00^e`: equation measurement only.
    Equation { e: u8 },
    /// `phi_01^{ek}`: equation measurement followed by `K`.
    EquationK { e: u8, k: u8 },
    /// `phi_1^v`: preimage measurement.
    Preimage { v: u8 },
}

impl SimplifiedDevice {
    /// Checks every invariant: shapes, projectors, `Pi^0 Pi^1 = 0`,
    /// `K` commuting with `M` and `Pi`, `phi` positive with total trace 1.
    pub fn new(branches: Vec<DeviceBranch>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDevice(msg));
        let Some(first) = branches.first() else {
            return bad("a device needs at least one branch".into());
        };
        let dim = first.dim();
        if dim == 0 || dim > MAX_DIM {
            return bad(format!("dimension {dim} outside 1..={MAX_DIM}"));
        }
        let mut total = 0.0;
        for (y, br) in branches.iter().enumerate() {
            for (name, op) in [("phi", &br.phi), ("Pi0", &br.pi0), ("Pi1", &br.pi1), ("M1", &br.m1), ("K0", &br.k0)] {
                if op.nrows() != dim || op.ncols() != dim {
                    return bad(format!("branch {y}: {name} is not {dim}x{dim}"));
                }
            }
            for (name, op) in [("Pi0", &br.pi0), ("Pi1", &br.pi1), ("M1", &br.m1), ("K0", &br.k0)] {
                if !is_projector(op) {
                    return bad(format!("branch {y}: {name} is not a projector"));
                }
            }
            if (&br.pi0 * &br.pi1).norm() > TOL {
                return bad(format!("branch {y}: Pi0 and Pi1 overlap"));
            }
            if !(commute(&br.k0, &br.m1) && commute(&br.k0, &br.pi0) && commute(&br.k0, &br.pi1)) {
                return bad(format!("branch {y}: K does not commute with M and Pi"));
            }
            if distance(&br.phi, &br.phi.adjoint()) > TOL || eigh(&br.phi).0.iter().any(|&v| v < -TOL) {
                return bad(format!("branch {y}: phi is not positive semidefinite"));
            }
            total += trace_re(&br.phi);
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("traces of phi sum to {total}, not 1"));
        }
        Ok(Self { dim, branches })
    }

    /// The one-qubit honest device: `Pi` computational, `M^1 = |+><+|`,
    /// `K^0 = I`, `phi = |+><+|`.
    pub fn honest_qubit() -> Self {
        let c = |re: f64| Complex64::new(re, 0.0);
        let plus = CMat::from_element(2, 2, c(0.5));
        let pi0 = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let pi1 = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
        Self::new(vec![DeviceBranch { phi: plus.clone(), pi0, pi1, m1: plus, k0: identity(2) }])
            .expect("the honest qubit device is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> &[DeviceBranch] {
        &self.branches
    }

    /// `Pr(y) = Tr phi_y`.
    pub fn y_probabilities(&self) -> Vec<f64> {
        self.branches.iter().map(|b| trace_re(&b.phi).max(0.0)).collect()
    }

    /// `max_y || K^0 (Pi^0 M^1 Pi^0 + Pi^1 M^1 Pi^1) ||`.
    pub fn overlap(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| operator_norm(&(&b.k0 * (&b.pi0 * &b.m1 * &b.pi0 + &b.pi1 * &b.m1 * &b.pi1))))
            .fold(0.0, f64::max)
    }

    /// The `y`-blocks of a post-measurement state, each `A phi_y A^dagger`.
    pub fn post_measurement(&self, branch: PostBranch) -> Vec<CMat> {
        self.branches
            .iter()
            .map(|b| {
                let op = match branch {
                    PostBranch::Equation { e } => b.m(e),
                    PostBranch::EquationK { e, k } => b.k(k) * b.m(e),
                    PostBranch::Preimage { v } => b.pi(v),
                };
                &op * &b.phi * op.adjoint()
            })
            .collect()
    }

    /// The full block-diagonal operator `sum_y |y><y| (x) block_y`.
    pub fn block_diagonal(blocks: &[CMat]) -> CMat {
        let d = blocks.first().map_or(0, |b| b.nrows());
        let mut out = CMat::zeros(d * blocks.len(), d * blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            out.view_mut((i * d, i * d), (d, d)).copy_from(b);
        }
        out
    }

    pub fn trace(blocks: &[CMat]) -> f64 {
        blocks.iter().map(trace_re).sum()
    }
}

/// One block of the two-projector normal form.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanBlock {
    /// Orthonormal columns; the first lies in the range of `P` for
    /// two-dimensional blocks.
    pub basis: CMat,
    /// `cos^2` of the angle: `M` acts as `[[c^2, cs], [cs, s^2]]`.
    pub cos_sq: f64,
    /// For one-dimensional blocks, whether the vector lies in `P`.
    pub in_p: bool,
}

impl JordanBlock {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn angle(&self) -> f64 {
        self.cos_sq.clamp(0.0, 1.0).sqrt().acos()
    }

    /// `(P, M)` restricted to the block, in the block's basis.
    fn local(&self) -> (CMat, CMat) {
        let c = |v: f64| Complex64::new(v, 0.0);
        let (cc, ss) = (self.cos_sq, 1.0 - self.cos_sq);
        if self.dim() == 2 {
            let cs = (cc * ss).max(0.0).sqrt();
            (
                CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]),
                CMat::from_row_slice(2, 2, &[c(cc), c(cs), c(cs), c(ss)]),
            )
        } else if self.in_p {
            (CMat::from_element(1, 1, c(1.0)), CMat::from_element(1, 1, c(cc)))
        } else {
            // Outside P the block is the second half of a padded pair.
            (CMat::from_element(1, 1, c(0.0)), CMat::from_element(1, 1, c(ss)))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JordanDecomposition {
    pub blocks: Vec<JordanBlock>,
}

impl JordanDecomposition {
    /// Rebuilds `(P, M)` from the blocks.
    pub fn reconstruct(&self, dim: usize) -> (CMat, CMat) {
        let (mut p, mut m) = (CMat::zeros(dim, dim), CMat::zeros(dim, dim));
        for b in &self.blocks {
            let (lp, lm) = b.local();
            p += &b.basis * lp * b.basis.adjoint();
            m += &b.basis * lm * b.basis.adjoint();
        }
        (p, m)
    }

    /// `max(||P - P'||, ||M - M'||)` in Frobenius norm.
    pub fn reconstruction_error(&self, p: &CMat, m: &CMat) -> f64 {
        let (rp, rm) = self.reconstruct(p.nrows());
        distance(p, &rp).max(distance(m, &rm))
    }

    pub fn angles(&self) -> Vec<f64> {
        self.blocks.iter().map(JordanBlock::angle).collect()
    }
}

/// Splits the space into blocks of dimension at most two on which both
/// projectors act together.
///
/// Eigenvectors `v` of `P M P` inside the range of `P` pair with
/// `(I - P) M v`; what is left over lies outside `P` and is split by the
/// eigenvectors of `M`. One-dimensional blocks are kept at their natural
/// size and carry `cos^2` in `{0, 1}`.
pub fn jordan_angles(p: &CMat, m: &CMat) -> Result<JordanDecomposition> {
    let d = p.nrows();
    if d > MAX_DIM || !is_projector(p) || !is_projector(m) || m.nrows() != d {
        return Err(Error::InvalidDevice("jordan_angles needs two projectors of equal dimension".into()));
    }
    let v = range_basis(p);
    let mut blocks = Vec::new();
    let mut covered = CMat::zeros(d, d);
    if v.ncols() > 0 {
        let x = v.adjoint() * m * &v;
        let (vals, vecs) = eigh(&x);
        for (j, &c2) in vals.iter().enumerate() {
            let c2 = c2.clamp(0.0, 1.0);
            let vj = &v * vecs.column(j);
            let leak = (identity(d) - p) * m * &vj;
            let cs = (c2 * (1.0 - c2)).sqrt();
            let basis = if cs > 1e-7 {
                CMat::from_columns(&[vj.clone(), leak.unscale(cs)])
            } else {
                CMat::from_columns(std::slice::from_ref(&vj))
            };
            let cos_sq = if basis.ncols() == 2 { c2 } else { c2.round() };
            covered += &basis * basis.adjoint();
            blocks.push(JordanBlock { basis, cos_sq, in_p: true });
        }
    }
    let rest = identity(d) - covered;
    let u = range_basis(&rest);
    if u.ncols() > 0 {
        let (vals, vecs) = eigh(&(u.adjoint() * m * &u));
        for (j, &mv) in vals.iter().enumerate() {
            let basis = CMat::from_columns(&[&u * vecs.column(j)]);
            blocks.push(JordanBlock { basis, cos_sq: 1.0 - mv.round().clamp(0.0, 1.0), in_p: false });
        }
    }
    Ok(JordanDecomposition { blocks })
}

/// Projector onto the eigenspaces of `P M P + (I-P) M (I-P)` with
/// eigenvalue in `[1 - omega, omega]`.
pub fn bad_subspace_k(p: &CMat, m: &CMat, omega: f64) -> Result<CMat> {
    if !(0.5 < omega && omega <= 1.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} outside (1/2, 1]")));
    }
    let d = p.nrows();
    let q = identity(d) - p;
    let h = p * m * p + &q * m * &q;
    let (vals, vecs) = eigh(&h);
    let mut k = CMat::zeros(d, d);
    for (j, &l) in vals.iter().enumerate() {
        if l >= 1.0 - omega - TOL && l <= omega + TOL {
            let c = vecs.column(j);
            k += c * c.adjoint();
        }
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglesCheck {
    pub gamma: f64,
    pub mu: f64,
    /// `Tr((I - K) phi)`.
    pub lhs: f64,
    /// `(2 mu + 10 sqrt(gamma)) / (1 - 4 omega (1 - omega))`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates both sides of the trace bound on `I - K`.
pub fn angles_inequality(p: &CMat, m: &CMat, phi: &CMat, omega: f64) -> Result<AnglesCheck> {
    let k = bad_subspace_k(p, m, omega)?;
    let d = p.nrows();
    let q = identity(d) - p;
    let gamma = (1.0 - trace_re(&(m * phi))).max(0.0);
    let mu = (0.5 - trace_re(&(m * p * phi * p)) - trace_re(&(m * &q * phi * &q))).abs();
    let lhs = trace_re(&((identity(d) - k) * phi));
    let denom = 1.0 - 4.0 * omega * (1.0 - omega);
    let rhs = if denom > 0.0 { (2.0 * mu + 10.0 * gamma.sqrt()) / denom } else { f64::INFINITY };
    Ok(AnglesCheck { gamma, mu, lhs, rhs, holds: lhs <= rhs + TOL })
}

/// A random rank-`rank` orthogonal projector.
pub fn random_projector<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMat {
    if rank == 0 {
        return CMat::zeros(dim, dim);
    }
    let g = CMat::from_fn(dim, rank, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let q = g.qr().q();
    &q * q.adjoint()
}

/// A random density matrix of the given rank.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, rank.max(1), |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let rho = &g * g.adjoint();
    let t = trace_re(&rho);
    rho.unscale(t)
}

/// `2 log2(e) (t - 1/2 - omega/2)^2` above `(1 + omega)/2`, else 0.
pub fn lambda_curve(omega: f64, t: f64) -> f64 {
    let kink = 0.5 + omega / 2.0;
    if t >= kink {
        2.0 * std::f64::consts::LOG2_E * (t - kink).powi(2)
    } else {
        0.0
    }
}

/// `lambda_omega(1 - gamma/kappa - eta) - c (p_test + eps / (kappa p_test))`.
///
/// `c` stands in for an unspecified constant; 1 is the neutral choice.
pub fn rate_bound(omega: f64, gamma: f64, kappa: f64, eta: f64, p_test: f64, eps: f64, c: f64) -> f64 {
    lambda_curve(omega, 1.0 - gamma / kappa - eta) - c * (p_test + eps / (kappa * p_test))
}

/// `2 exp(-t^2 n / 2)`.
pub fn azuma_bound(t: f64, n: f64) -> f64 {
    2.0 * (-t * t * n / 2.0).exp()
}

/// `exp(-(t/2) asinh(t / (2 v^2)) n)`.
pub fn fan_bound(t: f64, v: f64, n: f64) -> f64 {
    (-(t / 2.0) * (t / (2.0 * v * v)).asinh() * n).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn qubit(pi0: [f64; 4], m1: [f64; 4]) -> DeviceBranch {
        let mk = |a: [f64; 4]| CMat::from_row_slice(2, 2, &a.map(c));
        let pi0 = mk(pi0);
        DeviceBranch { phi: mk([0.5, 0.5, 0.5, 0.5]), pi1: identity(2) - &pi0, pi0, m1: mk(m1), k0: identity(2) }
    }

    #[test]
    fn overlap_examples() {
        assert!((SimplifiedDevice::honest_qubit().overlap() - 0.5).abs() < 1e-12);
        let zero = SimplifiedDevice::new(vec![qubit([1.0, 0.0, 0.0, 0.0], [0.0; 4])]).unwrap();
        assert_eq!(zero.overlap(), 0.0);
        let aligned = SimplifiedDevice::new(vec![qubit([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0])]).unwrap();
        assert!((aligned.overlap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_unitarily_invariant() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let d = 6;
        let pi0 = random_projector(d, 2, &mut rng);
        let k0 = identity(d);
        let br = DeviceBranch {
            phi: random_state(d, 2, &mut rng),
            pi1: CMat::zeros(d, d),
            pi0,
            m1: random_projector(d, 3, &mut rng),
            k0,
        };
        let dev = SimplifiedDevice::new(vec![br.clone()]).unwrap();
        let g = CMat::from_fn(d, d, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let u = g.qr().q();
        let conj = |a: &CMat| &u * a * u.adjoint();
        let rotated = DeviceBranch {
            phi: conj(&br.phi),
            pi0: conj(&br.pi0),
            pi1: conj(&br.pi1),
            m1: conj(&br.m1),
            k0: conj(&br.k0),
        };
        let dev2 = SimplifiedDevice::new(vec![rotated]).unwrap();
        assert!((dev.overlap() - dev2.overlap()).abs() < 1e-9);
    }

    #[test]
    fn invalid_devices_are_rejected() {
        let mut br = qubit([1.0, 0.0, 0.0, 0.0], [0.5, 0.5, 0.5, 0.5]);
        br.m1[(0, 0)] = c(0.7);
        assert!(SimplifiedDevice::new(vec![br]).is_err());
        let mut br = qubit([1.0, 0.0, 0.0, 0.0], [0.5, 0.5, 0.5, 0.5]);
        br.k0 = br.pi0.clone();
        assert!(SimplifiedDevice::new(vec![br]).is_err(), "K must commute with M");
        let mut br = qubit([1.0, 0.0, 0.0, 0.0], [0.5, 0.5, 0.5, 0.5]);
        br.phi = br.phi.scale(2.0);
        assert!(SimplifiedDevice::new(vec![br]).is_err());
    }

    #[test]
    fn post_measurement_traces() {
        let dev = SimplifiedDevice::honest_qubit();
        let t = |b| SimplifiedDevice::trace(&dev.post_measurement(b));
        assert!((t(PostBranch::Preimage { v: 0 }) - 0.5).abs() < 1e-12);
        assert!((t(PostBranch::Preimage { v: 1 }) - 0.5).abs() < 1e-12);
        assert!(t(PostBranch::Preimage { v: 2 }).abs() < 1e-12);
        assert!((t(PostBranch::Equation { e: 1 }) - 1.0).abs() < 1e-12);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let d = 8;
        let m1 = random_projector(d, 4, &mut rng);
        let pi0 = random_projector(d, 3, &mut rng);
        let dev = SimplifiedDevice::new(vec![
            DeviceBranch {
                phi: random_state(d, 3, &mut rng).scale(0.4),
                pi0: pi0.clone(),
                pi1: CMat::zeros(d, d),
                m1: m1.clone(),
                k0: identity(d),
            },
            DeviceBranch { phi: random_state(d, 2, &mut rng).scale(0.6), pi0, pi1: CMat::zeros(d, d), m1, k0: identity(d) },
        ])
        .unwrap();
        let sum_e: f64 = (0..2).map(|e| SimplifiedDevice::trace(&dev.post_measurement(PostBranch::Equation { e }))).sum();
        let sum_ek: f64 = (0..2)
            .flat_map(|e| (0..2).map(move |k| (e, k)))
            .map(|(e, k)| SimplifiedDevice::trace(&dev.post_measurement(PostBranch::EquationK { e, k })))
            .sum();
        let sum_v: f64 = (0..3).map(|v| SimplifiedDevice::trace(&dev.post_measurement(PostBranch::Preimage { v }))).sum();
        for s in [sum_e, sum_ek, sum_v] {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let full = SimplifiedDevice::block_diagonal(&dev.post_measurement(PostBranch::Preimage { v: 0 }));
        assert_eq!(full.nrows(), 16);
    }

    #[test]
    fn jordan_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        // Commuting pair: diagonal projectors.
        let p = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(1.0), c(0.0), c(0.0)]));
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0), c(1.0), c(0.0)]));
        let j = jordan_angles(&p, &m).unwrap();
        for a in j.angles() {
            assert!(a.abs() < 1e-9 || (a - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        }
        assert!(j.reconstruction_error(&p, &m) < 1e-8);
        // Two lines at 45 degrees.
        let p = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let m = CMat::from_element(2, 2, c(0.5));
        let j = jordan_angles(&p, &m).unwrap();
        assert_eq!(j.blocks.len(), 1);
        assert!((j.blocks[0].cos_sq - 0.5).abs() < 1e-12);
        for _ in 0..20 {
            let d = 8;
            let p = random_projector(d, rng.gen_range(0..=d), &mut rng);
            let m = random_projector(d, rng.gen_range(0..=d), &mut rng);
            let j = jordan_angles(&p, &m).unwrap();
            assert!(j.reconstruction_error(&p, &m) < 1e-8);
            assert_eq!(j.blocks.iter().map(JordanBlock::dim).sum::<usize>(), d);
        }
        assert!(jordan_angles(&p.scale(2.0), &m).is_err());
    }

    #[test]
    fn bad_subspace_examples() {
        let dev = SimplifiedDevice::honest_qubit();
        let b = &dev.branches()[0];
        let k = bad_subspace_k(&b.pi0, &b.m1, 0.75).unwrap();
        assert!(distance(&k, &identity(2)) < 1e-9);
        let k = bad_subspace_k(&b.pi0, &b.pi0, 0.75).unwrap();
        assert!(k.norm() < 1e-9);
        assert!(bad_subspace_k(&b.pi0, &b.pi0, 0.5).is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = random_projector(8, 3, &mut rng);
            let m = random_projector(8, 4, &mut rng);
            let k = bad_subspace_k(&p, &m, 0.75).unwrap();
            let q = identity(8) - &p;
            let h = &p * &m * &p + &q * &m * &q;
            assert!(is_projector(&k));
            assert!(commute(&k, &h) && commute(&k, &p));
        }
    }

    #[test]
    fn angles_inequality_on_random_instances() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = 8;
            let p = random_projector(d, rng.gen_range(1..d), &mut rng);
            let m = random_projector(d, rng.gen_range(1..d), &mut rng);
            let inner = random_state(d, 2, &mut rng);
            let leaked = &m * &inner * &m;
            let phi = (leaked.scale(0.95) + inner.scale(0.05 * trace_re(&leaked))).unscale(trace_re(&leaked));
            let chk = angles_inequality(&p, &m, &phi, 0.75).unwrap();
            assert!(chk.holds, "{chk:?}");
        }
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_curve(0.75, 0.8), 0.0);
        assert!((lambda_curve(0.75, 1.0) - std::f64::consts::LOG2_E / 32.0).abs() < 1e-12);
        let h = 1e-6;
        let kink = 0.875;
        assert!(((lambda_curve(0.75, kink + h) - lambda_curve(0.75, kink)) / h).abs() < 1e-5);
        let grid: Vec<f64> = (0..=200).map(|i| lambda_curve(0.75, i as f64 / 200.0)).collect();
        for w in grid.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn bound_values() {
        assert_eq!(azuma_bound(0.0, 100.0), 2.0);
        assert!(fan_bound(0.1, 0.5, 200.0) < fan_bound(0.1, 0.5, 100.0));
        let limit = rate_bound(0.75, 0.0, 0.5, 0.0, 1e-9, 0.0, 1.0);
        assert!((limit - lambda_curve(0.75, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn json_layout() {
        let dev = SimplifiedDevice::honest_qubit();
        let v = serde_json::to_value(&dev).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["y"][0]["phi"][0][1], serde_json::json!([0.5, 0.0]));
        let back: SimplifiedDevice = serde_json::from_value(v).unwrap();
        assert_eq!(back, dev);
    }
}
