//! Parameter profiles.
//!
//! A profile fixes the lattice shape `(q, n, m, w)`, the three noise widths
//! `B_L < B_V < B_P` and the protocol knobs. The shipped profiles are toys:
//! each records which of the five conditions on the construction it
//! violates. `paper-shape` is only ever reported, never run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modq::ModRing;

/// Protocol-level parameters shared by both protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Number of rounds `N`.
    #[serde(rename = "N")]
    pub rounds: usize,
    /// Probability that a round is a test round.
    pub p_test: f64,
    /// Tolerated failure fraction.
    pub gamma: f64,
    /// Probability of `T = 1` on a test round.
    pub kappa: f64,
    pub eta: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterProfile {
    pub name: String,
    pub lambda: u32,
    pub ell: usize,
    pub n: usize,
    pub m: usize,
    pub q_mod: u64,
    #[serde(rename = "B_L")]
    pub b_l: f64,
    #[serde(rename = "B_V")]
    pub b_v: f64,
    #[serde(rename = "B_P")]
    pub b_p: f64,
    #[serde(flatten)]
    pub protocol: ProtocolParams,
}

/// Which of the five construction conditions a profile meets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `n >= ell log2 q` and `m >= n log2 q`.
    pub lwe_shape: bool,
    /// `w = n ceil(log2 q)`.
    pub gadget_width: bool,
    /// `B_P <= q / (2 C_T sqrt(m n log2 q))` with `C_T = 1`.
    pub trapdoor_width: bool,
    /// `2 sqrt(n) <= B_L < B_V < B_P`.
    pub noise_order: bool,
    /// `B_P / B_V` and `B_V / B_L` at least `lambda^(log2 lambda)`.
    pub superpolynomial_ratios: bool,
}

impl ConditionFlags {
    pub fn all_hold(&self) -> bool {
        self.violated().is_empty()
    }

    pub fn violated(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.lwe_shape {
            out.push("1: n >= ell log q and m >= n log q");
        }
        if !self.gadget_width {
            out.push("2: w = n ceil(log q)");
        }
        if !self.trapdoor_width {
            out.push("3: B_P <= q / (2 C_T sqrt(m n log q))");
        }
        if !self.noise_order {
            out.push("4: 2 sqrt(n) <= B_L < B_V < B_P");
        }
        if !self.superpolynomial_ratios {
            out.push("5: B_P/B_V and B_V/B_L super-polynomial");
        }
        out
    }
}

/// Names accepted by [`ParameterProfile::named`].
pub const PROFILE_NAMES: [&str; 5] = ["micro", "micro3", "desk-small", "desk-medium", "desk-wide"];

/// `q / (2 C_T sqrt(m n log2 q))`.
pub fn trapdoor_width(q: u64, n: usize, m: usize, c_t: f64) -> f64 {
    q as f64 / (2.0 * c_t * ((m * n) as f64 * (q as f64).log2()).sqrt())
}

fn superpolynomial_threshold(lambda: u32) -> f64 {
    let l = f64::from(lambda.max(2));
    l.powf(l.log2())
}

impl ParameterProfile {
    pub fn named(name: &str) -> Result<Self> {
        let p = match name {
            "micro" => Self::build(name, 2, 1, 1, 2, 5, (0.25, 0.5, 0.9), (400, 0.25, 0.4)),
            "micro3" => Self::build(name, 2, 1, 1, 3, 3, (0.25, 0.5, 0.9), (400, 0.25, 0.4)),
            "desk-small" => {
                let b_p = trapdoor_width(13, 4, 20, 1.0);
                Self::build(name, 8, 1, 4, 20, 13, (b_p / 4.0, b_p / 2.0, b_p), (4000, 0.1, 0.2))
            }
            "desk-medium" => {
                let b_p = trapdoor_width(61, 8, 56, 1.0);
                Self::build(name, 16, 1, 8, 56, 61, (b_p / 4.0, b_p / 2.0, b_p), (4000, 0.1, 0.1))
            }
            "desk-wide" => {
                let b_p = trapdoor_width(13, 32, 160, 1.0);
                Self::build(name, 16, 2, 32, 160, 13, (b_p / 4.0, b_p / 2.0, b_p), (1000, 0.05, 0.05))
            }
            "paper-shape" => {
                return Err(Error::InvalidParameter(
                    "paper-shape is reported by the shape calculator and cannot be run".into(),
                ))
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown profile {other:?}; expected one of {}",
                    PROFILE_NAMES.join(", ")
                )))
            }
        };
        Ok(p)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        name: &str,
        lambda: u32,
        ell: usize,
        n: usize,
        m: usize,
        q_mod: u64,
        (b_l, b_v, b_p): (f64, f64, f64),
        (rounds, p_test, gamma): (usize, f64, f64),
    ) -> Self {
        Self {
            name: name.to_string(),
            lambda,
            ell,
            n,
            m,
            q_mod,
            b_l,
            b_v,
            b_p,
            protocol: ProtocolParams { rounds, p_test, gamma, kappa: 0.5, eta: 0.1, omega: 0.75 },
        }
    }

    pub fn ring(&self) -> Result<ModRing> {
        ModRing::new(self.q_mod)
    }

    /// `n ceil(log2 q)`.
    pub fn w(&self) -> usize {
        let k = (64 - (self.q_mod.max(2) - 1).leading_zeros()) as usize;
        self.n * k
    }

    /// Whether `m` leaves room for a gadget block.
    pub fn uses_gadget(&self) -> bool {
        self.m >= self.w() + self.n
    }

    /// Largest `||y - A x - b u||_inf` that inversion accepts: the preimage
    /// noise plus, on the `b = 1` branch, the key noise.
    pub fn noise_radius(&self) -> u64 {
        (self.b_p.floor() + self.b_v.floor()) as u64
    }

    pub fn conditions(&self) -> ConditionFlags {
        let log_q = (self.q_mod as f64).log2();
        let threshold = superpolynomial_threshold(self.lambda);
        ConditionFlags {
            lwe_shape: self.n as f64 >= self.ell as f64 * log_q && self.m as f64 >= self.n as f64 * log_q,
            gadget_width: true,
            trapdoor_width: self.b_p <= trapdoor_width(self.q_mod, self.n, self.m, 1.0) * (1.0 + 1e-12),
            noise_order: 2.0 * (self.n as f64).sqrt() <= self.b_l && self.b_l < self.b_v && self.b_v < self.b_p,
            superpolynomial_ratios: self.b_p / self.b_v >= threshold && self.b_v / self.b_l >= threshold,
        }
    }

    /// Shape checks needed to run anything at all.
    pub fn validate(&self) -> Result<()> {
        let ring = self.ring()?;
        if !ring.is_prime() {
            return Err(Error::InvalidParameter(format!("q = {} is not prime", self.q_mod)));
        }
        if self.n == 0 || self.m == 0 || self.ell == 0 {
            return Err(Error::InvalidParameter("n, m and ell must be positive".into()));
        }
        if !self.uses_gadget() && (self.q_mod as f64).powi(self.n as i32) > crate::trapdoor::ENUMERATION_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "m = {} is below w + n = {} and q^n is too large to enumerate",
                self.m,
                self.w() + self.n
            )));
        }
        for (label, b) in [("B_L", self.b_l), ("B_V", self.b_v), ("B_P", self.b_p)] {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidParameter(format!("{label} must be positive")));
            }
        }
        let p = &self.protocol;
        if !(0.0 < p.p_test && p.p_test <= 1.0) {
            return Err(Error::InvalidParameter("p_test must lie in (0, 1]".into()));
        }
        if !(0.0 < p.kappa && p.kappa <= 1.0) {
            return Err(Error::InvalidParameter("kappa must lie in (0, 1]".into()));
        }
        if !(0.5 < p.omega && p.omega <= 1.0) {
            return Err(Error::InvalidParameter("omega must lie in (1/2, 1]".into()));
        }
        if p.rounds == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        Ok(())
    }
}

/// Sizes that meet all five conditions, computed without building anything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub lambda: u32,
    pub ell: usize,
    pub n: usize,
    pub m: usize,
    pub w: usize,
    pub log2_q: f64,
    pub log2_b_l: f64,
    pub log2_b_v: f64,
    pub log2_b_p: f64,
    /// The super-polynomial ratio used, `lambda^(log2 lambda)`, in bits.
    pub log2_ratio: f64,
    pub conditions: ConditionFlags,
}

/// Solves the five conditions for security parameter `lambda`.
///
/// Uses `ell = lambda`, `n = ell ceil(log2 q)`, `m = w + n`,
/// `B_L = 2 sqrt(n)`, both noise ratios equal to `lambda^(log2 lambda)`, and
/// `q` from condition 3 with `C_T = 1`. The circular dependence through
/// `log2 q` is resolved by fixed-point iteration.
pub fn paper_shape(lambda: u32) -> ShapeReport {
    let ell = lambda.max(2) as usize;
    let log2_ratio = superpolynomial_threshold(lambda).log2();
    let mut log2_q: f64 = 64.0;
    let (mut n, mut m, mut w) = (0, 0, 0);
    let (mut log2_b_l, mut log2_b_v, mut log2_b_p) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let k = log2_q.ceil() as usize;
        n = ell * k;
        w = n * k;
        m = w + n;
        log2_b_l = (2.0 * (n as f64).sqrt()).log2();
        log2_b_v = log2_b_l + log2_ratio;
        log2_b_p = log2_b_v + log2_ratio;
        let next = log2_b_p + 1.0 + 0.5 * ((m * n) as f64 * log2_q).log2();
        if (next - log2_q).abs() < 1e-9 {
            log2_q = next;
            break;
        }
        log2_q = next;
    }
    let log_q = log2_q;
    let conditions = ConditionFlags {
        lwe_shape: n as f64 >= ell as f64 * log_q && m as f64 >= n as f64 * log_q,
        gadget_width: w == n * log2_q.ceil() as usize,
        trapdoor_width: log2_b_p <= log2_q - 1.0 - 0.5 * ((m * n) as f64 * log2_q).log2() + 1e-9,
        noise_order: log2_b_l >= (2.0 * (n as f64).sqrt()).log2() - 1e-12 && log2_b_l < log2_b_v && log2_b_v < log2_b_p,
        superpolynomial_ratios: log2_b_p - log2_b_v >= log2_ratio - 1e-9 && log2_b_v - log2_b_l >= log2_ratio - 1e-9,
    };
    ShapeReport { lambda, ell, n, m, w, log2_q, log2_b_l, log2_b_v, log2_b_p, log2_ratio, conditions }
}
