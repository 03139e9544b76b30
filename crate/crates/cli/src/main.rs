//! `ntcf`: key generation, protocol runs, analyses, extraction and the
//! socket transport.
//!
//! Exit codes: 0 success, 2 configuration, 3 I/O, 4 protocol violation,
//! 5 size guard exceeded. `NTCF_LOG` sets the log level.

mod analyze;
mod common;
mod net;
mod run;

use std::io::BufReader;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ntcf_core::devices::rate_bound;
use ntcf_core::extract::{from_hex_lines, output_length, to_hex_lines, ToeplitzSeed, DEFAULT_ERROR_BITS};
use ntcf_core::modq::BitString;
use ntcf_core::ntcf::NtcfKeyPair;
use ntcf_core::protocol::Transcript;
use ntcf_core::rng::substream;
use ntcf_core::stats::{monobit_p, runs_p};
use serde_json::json;

use common::{config, print_json, read_text, write_text, CliError, CliResult, ProfileArgs};

#[derive(Parser, Debug)]
#[command(name = "ntcf", version, about = "Trapdoor claw-free functions and randomness expansion at toy scale")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a key pair and write it as JSON.
    Keygen(KeygenArgs),
    /// Run a protocol or the single-round test.
    Run(run::RunArgs),
    /// Reports and calculators.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCmd),
    /// Hash bits with a Toeplitz extractor.
    Extract(ExtractArgs),
    /// Serve a prover over TCP or stdio.
    Serve(net::ServeArgs),
    /// Run the verifier against a served prover.
    Connect(net::ConnectArgs),
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    session: u64,
    /// Key pair with trapdoor.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Public key only.
    #[arg(long, value_name = "PATH")]
    public: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Input bits as hex lines.
    #[arg(long, value_name = "PATH", required_unless_present = "transcript", conflicts_with = "transcript")]
    input: Option<PathBuf>,
    /// Take the reported generation bits of a transcript instead.
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Seed for the extractor's substream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    session: u64,
    /// Output length; overrides --rate.
    #[arg(long)]
    n_out: Option<usize>,
    /// Entropy rate per input bit. Defaults to the rate bound of the
    /// transcript's profile.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ERROR_BITS)]
    error_bits: usize,
}

fn cmd_keygen(a: &KeygenArgs) -> CliResult<()> {
    let profile = a.profile.load()?;
    let mut rng = substream(a.seed, a.session, "keygen", 0);
    let key = NtcfKeyPair::generate(&profile, &mut rng)?;
    write_text(&a.out, &serde_json::to_string_pretty(&key).expect("key json"))?;
    if let Some(p) = &a.public {
        write_text(p, &serde_json::to_string_pretty(key.public()).expect("key json"))?;
    }
    print_json(&json!({
        "profile": profile.name,
        "n": profile.n,
        "m": profile.m,
        "q": profile.q_mod,
        "trapdoor": if profile.uses_gadget() { "gadget" } else { "enumeration" },
        "violated_conditions": profile.conditions().violated(),
        "out": a.out,
    }));
    Ok(())
}

fn cmd_extract(a: &ExtractArgs) -> CliResult<()> {
    let (input, default_rate) = match (&a.input, &a.transcript) {
        (Some(path), _) => (from_hex_lines(&read_text(path)?)?, None),
        (None, Some(path)) => {
            let f = std::fs::File::open(path).map_err(|e| CliError::Io(path.clone(), e))?;
            let t = Transcript::read_jsonl(BufReader::new(f))?;
            let pp = &t.header().profile.protocol;
            let rate = rate_bound(pp.omega, pp.gamma, pp.kappa, pp.eta, pp.p_test, 0.0, 1.0);
            (BitString::new(t.reported_bits())?, Some(rate))
        }
        (None, None) => return config("give --input or --transcript"),
    };
    let n_out = match (a.n_out, a.rate.or(default_rate)) {
        (Some(n), _) => n,
        (None, Some(rate)) => output_length(rate, input.len(), a.error_bits),
        (None, None) => return config("give --n-out or --rate"),
    };
    if n_out == 0 || n_out > input.len() {
        return config(format!("output length {n_out} must lie in 1..={}", input.len()));
    }
    let mut rng = substream(a.seed, a.session, "extractor", 0);
    let seed = ToeplitzSeed::random(input.len(), n_out, &mut rng)?;
    let out = seed.extract(&input)?;
    write_text(&a.output, &to_hex_lines(&out))?;
    print_json(&json!({
        "n_in": input.len(),
        "n_out": n_out,
        "seed_bits": seed.bits().len(),
        "ones_fraction": out.iter().map(f64::from).sum::<f64>() / n_out as f64,
        "monobit_p": monobit_p(out.as_slice()),
        "runs_p": runs_p(out.as_slice()),
        "output": a.output,
    }));
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NTCF_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Keygen(a) => cmd_keygen(a),
        Cmd::Run(a) => run::cmd_run(a),
        Cmd::Analyze(a) => analyze::cmd_analyze(a),
        Cmd::Extract(a) => cmd_extract(a),
        Cmd::Serve(a) => net::cmd_serve(a),
        Cmd::Connect(a) => net::cmd_connect(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
