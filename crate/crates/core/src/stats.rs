//! Small statistical helpers used by the Monte-Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

/// Result of a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of `observed` counts against cell probabilities.
///
/// Cells whose expected count is below 5 are pooled into one cell so the
/// asymptotic distribution stays usable. A count in a zero-probability cell
/// gives p = 0.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len(), "cell count mismatch");
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let exp = p * n;
        if p <= 0.0 {
            if o > 0 {
                return ChiSquare { statistic: f64::INFINITY, dof: 0, p_value: 0.0 };
            }
            continue;
        }
        if exp < 5.0 {
            pooled_obs += o as f64;
            pooled_exp += exp;
            continue;
        }
        stat += (o as f64 - exp).powi(2) / exp;
        cells += 1;
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    if cells < 2 {
        return ChiSquare { statistic: stat, dof: 0, p_value: 1.0 };
    }
    let dof = cells - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    ChiSquare { statistic: stat, dof, p_value: dist.sf(stat) }
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Frequency (monobit) test p-value.
pub fn monobit_p(bits: &[u8]) -> f64 {
    if bits.is_empty() {
        return 1.0;
    }
    let s: i64 = bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).sum();
    let s_obs = (s.abs() as f64) / (bits.len() as f64).sqrt();
    erfc(s_obs / std::f64::consts::SQRT_2)
}

/// Runs test p-value. Returns 0 when the frequency pre-test fails.
pub fn runs_p(bits: &[u8]) -> f64 {
    let n = bits.len();
    if n < 2 {
        return 1.0;
    }
    let nf = n as f64;
    let pi = bits.iter().filter(|&&b| b != 0).count() as f64 / nf;
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return 0.0;
    }
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (runs as f64 - 2.0 * nf * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi);
    erfc(num / den)
}
