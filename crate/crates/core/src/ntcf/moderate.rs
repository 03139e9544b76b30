//! Moderate matrices and the parity-versus-syndrome distance.

use crate::error::{guard, Error, Result};
use crate::modq::{BitString, ModMat, ModVec};

/// Largest row span `q^ell` that will be enumerated.
pub const MODERATE_GUARD: f64 = 1e6;

/// At least `n/4` entries with centered magnitude in `(q/8, 3q/8]`.
pub fn is_moderate_vec(v: &ModVec) -> bool {
    let q = v.ring().modulus();
    let count = v
        .as_slice()
        .iter()
        .filter(|&&x| {
            let a = v.ring().abs(x);
            8 * a > q && 8 * a <= 3 * q
        })
        .count();
    4 * count >= v.len()
}

/// Whether every nonzero vector in the row span of `c` is moderate.
pub fn moderate_check(c: &ModMat) -> Result<bool> {
    let ring = c.ring();
    let ell = c.rows();
    guard("q^ell", (ring.modulus() as f64).powi(ell as i32), MODERATE_GUARD)?;
    let ct = c.transpose();
    for idx in 1..ring.modulus().pow(ell as u32) {
        let combo = ct.mul_vec(&ModVec::from_index(ring, ell, idx));
        if combo.is_zero() || !is_moderate_vec(&combo) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact joint law of `(C s, dhat . s mod 2)` for uniform binary `s`,
/// indexed by `2 * index(C s) + parity`.
fn joint_law(c: &ModMat, dhat: &BitString) -> Result<Vec<f64>> {
    let ring = c.ring();
    let (ell, n) = (c.rows(), c.cols());
    if dhat.len() != n {
        return Err(Error::Dimension(format!("dhat has length {}, expected {n}", dhat.len())));
    }
    guard("q^ell", (ring.modulus() as f64).powi(ell as i32), MODERATE_GUARD)?;
    let cells = ring.modulus().pow(ell as u32) as usize;
    let mut law = vec![0.0; 2 * cells];
    law[0] = 1.0;
    for j in 0..n {
        let col = c.column(j);
        let flip = dhat.get(j) as usize;
        let mut next = vec![0.0; 2 * cells];
        for v in 0..cells {
            let moved = ModVec::from_index(ring, ell, v as u64).add(&col).to_index() as usize;
            for parity in 0..2 {
                let p = law[2 * v + parity];
                if p == 0.0 {
                    continue;
                }
                next[2 * v + parity] += 0.5 * p;
                next[2 * moved + (parity ^ flip)] += 0.5 * p;
            }
        }
        law = next;
    }
    Ok(law)
}

/// Distance of `(C s, dhat . s)` from uniform on `Z_q^ell x {0,1}`, or, given
/// `v`, the distance of `dhat . s` conditioned on `C s = v` from a fair bit.
pub fn parity_tv(c: &ModMat, dhat: &BitString, v: Option<&ModVec>) -> Result<f64> {
    let law = joint_law(c, dhat)?;
    match v {
        None => {
            let u = 1.0 / law.len() as f64;
            Ok(0.5 * law.iter().map(|p| (p - u).abs()).sum::<f64>())
        }
        Some(v) => {
            if v.ring() != c.ring() || v.len() != c.rows() {
                return Err(Error::Dimension("v does not match C".into()));
            }
            let i = v.to_index() as usize;
            let (p0, p1) = (law[2 * i], law[2 * i + 1]);
            if p0 + p1 == 0.0 {
                return Err(Error::InvalidParameter("C s = v has no binary solution".into()));
            }
            Ok((p0 / (p0 + p1) - 0.5).abs())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modq::ModRing;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn worked_row() {
        let ring = ModRing::new(17).unwrap();
        let v = ModVec::from_signed(ring, &[3, 3, 4, 5, 0, 1, 8, 6]).unwrap();
        assert!(is_moderate_vec(&v));
        let c = ModMat::new(ring, 1, 8, v.into_vec()).unwrap();
        // 3, 3, 4, 5, 6 and their multiples; checked against the definition below.
        let brute = (1..17).all(|k| is_moderate_vec(&c.row(0).scale(k)));
        assert_eq!(moderate_check(&c).unwrap(), brute);
    }

    #[test]
    fn zero_matrix_is_not_moderate() {
        let ring = ModRing::new(5).unwrap();
        assert!(!moderate_check(&ModMat::zeros(ring, 1, 8)).unwrap());
    }

    fn brute_law(c: &ModMat, dhat: &BitString) -> Vec<f64> {
        let ring = c.ring();
        let n = c.cols();
        let cells = ring.modulus().pow(c.rows() as u32) as usize;
        let mut law = vec![0.0; 2 * cells];
        for si in 0..1u64 << n {
            let s = BitString::from_index(n, si);
            let cs = c.mul_vec(&ModVec::from_bits(ring, &s)).to_index() as usize;
            law[2 * cs + dhat.dot(&s) as usize] += 1.0 / (1u64 << n) as f64;
        }
        law
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn dynamic_programme_matches_enumeration(seed in any::<u64>(), n in 1usize..10, ell in 1usize..3) {
            let ring = ModRing::new(5).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let c = ModMat::random(ring, ell, n, &mut rng);
            let d = BitString::random(n, &mut rng);
            let law = joint_law(&c, &d).unwrap();
            let brute = brute_law(&c, &d);
            for (a, b) in law.iter().zip(&brute) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let u = 1.0 / brute.len() as f64;
            let tv: f64 = 0.5 * brute.iter().map(|p| (p - u).abs()).sum::<f64>();
            prop_assert!((parity_tv(&c, &d, None).unwrap() - tv).abs() < 1e-12);
            let v = c.mul_vec(&ModVec::from_bits(ring, &BitString::random(n, &mut rng)));
            let i = v.to_index() as usize;
            let cond = (brute[2 * i] / (brute[2 * i] + brute[2 * i + 1]) - 0.5).abs();
            prop_assert!((parity_tv(&c, &d, Some(&v)).unwrap() - cond).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_of_zero_dhat_is_a_constant() {
        let ring = ModRing::new(5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let c = ModMat::random(ring, 1, 6, &mut rng);
        let v = c.mul_vec(&ModVec::zeros(ring, 6));
        assert_eq!(parity_tv(&c, &BitString::zeros(6), Some(&v)).unwrap(), 0.5);
    }

    #[test]
    fn guard_and_shape_errors() {
        let ring = ModRing::new(61).unwrap();
        assert!(moderate_check(&ModMat::zeros(ring, 4, 4)).is_err());
        let c = ModMat::zeros(ModRing::new(5).unwrap(), 1, 4);
        assert!(parity_tv(&c, &BitString::zeros(3), None).is_err());
    }
}
