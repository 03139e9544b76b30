use clap::{Args, Subcommand};
use ntcf_core::devices::{angles_inequality, jordan_angles, lambda_curve, rate_bound};
use ntcf_core::modq::{BitString, ModMat, ModRing, ModVec};
use ntcf_core::ntcf::{hardcore_game, moderate_check, parity_tv, HardcoreGuess, NtcfKeyPair};
use ntcf_core::profile::{paper_shape, ParameterProfile, PROFILE_NAMES};
use ntcf_core::rng::substream;
use rand::Rng;
use serde_json::{json, Value};

use crate::common::{config, load_device, print_json, CliResult, ProfileArgs};

#[derive(Subcommand, Debug)]
pub enum AnalyzeCmd {
    /// Which construction conditions each profile meets.
    Conditions {
        /// Profiles to report; all shipped profiles when empty.
        names: Vec<String>,
    },
    /// Sizes that meet every condition at a given security parameter.
    PaperShape {
        #[arg(long, default_value_t = 128)]
        lambda: u32,
    },
    /// Moderate-matrix frequency and parity distances.
    Moderate(ModerateArgs),
    /// Hardcore-bit game against a trapdoor-free adversary.
    Hardcore(HardcoreArgs),
    /// Overlap, Jordan angles and the angles bound for a device.
    Device {
        /// `honest-qubit` or a device JSON file.
        #[arg(long, default_value = "honest-qubit")]
        device: String,
        #[arg(long, default_value_t = 0.75)]
        omega: f64,
    },
    /// The rate curve and the profile's rate bound.
    Lambda(LambdaArgs),
}

#[derive(Args, Debug)]
pub struct ModerateArgs {
    #[arg(long, default_value_t = 5)]
    pub q: u64,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub matrices: u64,
    /// Random parity vectors per moderate matrix.
    #[arg(long, default_value_t = 50)]
    pub dhat: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct HardcoreArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// `random` guesses everything; `sampler` uses an honest preimage.
    #[arg(long, default_value = "sampler")]
    pub adversary: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct LambdaArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 20)]
    pub steps: u32,
    /// Deviation term in the rate bound.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Constant multiplying the loss terms.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

pub fn cmd_analyze(cmd: &AnalyzeCmd) -> CliResult<()> {
    let out = match cmd {
        AnalyzeCmd::Conditions { names } => conditions(names)?,
        AnalyzeCmd::PaperShape { lambda } => json!(paper_shape(*lambda)),
        AnalyzeCmd::Moderate(a) => moderate(a)?,
        AnalyzeCmd::Hardcore(a) => hardcore(a)?,
        AnalyzeCmd::Device { device, omega } => device_report(device, *omega)?,
        AnalyzeCmd::Lambda(a) => lambda(a)?,
    };
    print_json(&out);
    Ok(())
}

fn conditions(names: &[String]) -> CliResult<Value> {
    let names: Vec<String> =
        if names.is_empty() { PROFILE_NAMES.iter().map(|s| s.to_string()).collect() } else { names.to_vec() };
    let mut out = Vec::new();
    for name in names {
        let p = ParameterProfile::named(&name)?;
        let c = p.conditions();
        out.push(json!({
            "profile": p,
            "conditions": c,
            "violated": c.violated(),
            "insecure": true,
        }));
    }
    Ok(Value::Array(out))
}

fn moderate(a: &ModerateArgs) -> CliResult<Value> {
    let ring = ModRing::new(a.q)?;
    if a.ell == 0 || a.n == 0 {
        return config("--ell and --n must be positive");
    }
    let mut rng = substream(a.seed, 0, "moderate", 0);
    let (mut moderate, mut worst_tv) = (0u64, 0.0f64);
    for _ in 0..a.matrices {
        let c = ModMat::random(ring, a.ell, a.n, &mut rng);
        if !moderate_check(&c)? {
            continue;
        }
        moderate += 1;
        for _ in 0..a.dhat {
            let d = BitString::random(a.n, &mut rng);
            worst_tv = worst_tv.max(parity_tv(&c, &d, None)?);
        }
    }
    let q_ell = (a.q as f64).powi(a.ell as i32);
    let fraction = moderate as f64 / a.matrices.max(1) as f64;
    let fraction_bound = 1.0 - q_ell * 2f64.powf(-(a.n as f64) / 8.0);
    let tv_bound = q_ell.sqrt() * 2f64.powf(-(a.n as f64) / 40.0);
    Ok(json!({
        "q": a.q, "ell": a.ell, "n": a.n, "matrices": a.matrices,
        "moderate": moderate,
        "moderate_fraction": fraction,
        "fraction_bound": fraction_bound,
        "max_tv": worst_tv,
        "tv_bound": tv_bound,
        "holds": fraction >= fraction_bound && worst_tv <= tv_bound,
    }))
}

fn hardcore(a: &HardcoreArgs) -> CliResult<Value> {
    let profile = a.profile.load()?;
    let sampler = match a.adversary.as_str() {
        "random" => false,
        "sampler" => true,
        other => return config(format!("unknown adversary {other:?}")),
    };
    let width = profile.n * profile.ring()?.bits();
    let mut rng = substream(a.seed, 0, "hardcore", 0);
    let report = hardcore_game(
        |rng| NtcfKeyPair::generate(&profile, rng),
        |pk, rng| {
            let (b, x) = if sampler {
                let (b, x, _) = pk.sample_image(rng);
                (b, x)
            } else {
                (rng.gen_range(0..2), ModVec::random(pk.ring(), pk.n(), rng))
            };
            HardcoreGuess { b, x, d: BitString::random(width, rng), c: rng.gen_range(0..2) }
        },
        a.trials,
        &mut rng,
    )?;
    Ok(json!({ "profile": profile.name, "adversary": a.adversary, "report": report }))
}

fn device_report(spec: &str, omega: f64) -> CliResult<Value> {
    let dev = load_device(spec)?;
    let mut branches = Vec::new();
    for (y, b) in dev.branches().iter().enumerate() {
        let jordan = jordan_angles(&b.pi0, &b.m1)?;
        let check = angles_inequality(&b.pi0, &b.m1, &b.phi, omega)?;
        branches.push(json!({
            "y": y,
            "angles": jordan.angles(),
            "reconstruction_error": jordan.reconstruction_error(&b.pi0, &b.m1),
            "equation_law": b.equation_law(),
            "preimage_law": b.preimage_law(),
            "angles_check": check,
        }));
    }
    Ok(json!({
        "dim": dev.dim(),
        "overlap": dev.overlap(),
        "y_probabilities": dev.y_probabilities(),
        "branches": branches,
    }))
}

fn lambda(a: &LambdaArgs) -> CliResult<Value> {
    let p = a.profile.load()?;
    let omega = p.protocol.omega;
    let steps = a.steps.max(1);
    let table: Vec<Value> = (0..=steps)
        .map(|i| {
            let t = 0.5 + 0.5 * i as f64 / steps as f64;
            json!({ "t": t, "lambda": lambda_curve(omega, t) })
        })
        .collect();
    let pp = &p.protocol;
    Ok(json!({
        "profile": p.name,
        "omega": omega,
        "curve": table,
        "rate_bound": rate_bound(omega, pp.gamma, pp.kappa, pp.eta, pp.p_test, a.eps, a.c),
    }))
}
