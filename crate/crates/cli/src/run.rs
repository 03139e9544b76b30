use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ntcf_core::extract::{empirical_min_entropy, to_hex_lines};
use ntcf_core::modq::BitString;
use ntcf_core::profile::ParameterProfile;
use ntcf_core::protocol::{
    run_protocol1, run_protocol2, single_round_test, DeviceProver, ProverKind, RoundType, SessionInfo, Transcript,
};
use ntcf_core::rng::substream;
use serde_json::{json, Value};

use crate::common::{config, create, load_device, print_json, write_text, CliError, CliResult, ProfileArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Protocol1,
    Protocol2,
    SingleRound,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "protocol1")]
    pub mode: Mode,
    /// ideal, qsim-micro, classical-committed, classical-replay or classical-random.
    #[arg(long, default_value = "ideal")]
    pub prover: String,
    /// Device for protocol2: `honest-qubit` or a device JSON file.
    #[arg(long, default_value = "honest-qubit")]
    pub device: String,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First session index.
    #[arg(long, default_value_t = 0)]
    pub session: u64,
    /// Independent sessions to run in parallel.
    #[arg(long, default_value_t = 1)]
    pub sessions: u64,
    /// Trials for single-round mode.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Transcript JSONL; with several sessions `.s<i>` is added to the stem.
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
    /// Reported generation bits as hex lines.
    #[arg(long, value_name = "PATH")]
    pub bits: Option<PathBuf>,
    /// Also write the summary JSON here.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

pub fn session_path(base: &Path, session: u64, many: bool) -> PathBuf {
    if !many {
        return base.to_owned();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.s{session}.{}", ext.to_string_lossy()),
        None => format!("{stem}.s{session}"),
    };
    base.with_file_name(name)
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let profile = args.profile.load()?;
    if args.sessions == 0 {
        return config("--sessions must be positive");
    }
    let summary = match args.mode {
        Mode::SingleRound => single_round(args, &profile)?,
        Mode::Protocol1 | Mode::Protocol2 => sessions(args, &profile)?,
    };
    if let Some(path) = &args.summary {
        write_text(path, &serde_json::to_string_pretty(&summary).expect("json value"))?;
    }
    print_json(&summary);
    Ok(())
}

fn prover_kind(name: &str) -> CliResult<ProverKind> {
    let kind = ProverKind::parse(name)?;
    if kind == ProverKind::Remote {
        return config("the remote prover is used through `connect`");
    }
    Ok(kind)
}

fn single_round(args: &RunArgs, profile: &ParameterProfile) -> CliResult<Value> {
    let kind = prover_kind(&args.prover)?;
    let mut results = Vec::new();
    for session in args.session..args.session + args.sessions {
        let mut prover = kind.build(args.seed, session)?;
        let mut rng = substream(args.seed, session, "verifier", 0);
        let report = single_round_test(profile, prover.as_mut(), args.trials, &mut rng)?;
        log::info!("session {session}: rate {:.4}", report.rate);
        results.push(json!({ "session": session, "report": report }));
    }
    Ok(json!({
        "mode": "single-round",
        "profile": profile.name,
        "prover": kind.name(),
        "seed": args.seed,
        "sessions": results,
    }))
}

fn run_session(args: &RunArgs, profile: &ParameterProfile, session: u64) -> CliResult<Transcript> {
    let info = SessionInfo { seed: args.seed, session };
    let mut rng = substream(args.seed, session, "verifier", 0);
    Ok(match args.mode {
        Mode::Protocol1 => {
            let mut prover = prover_kind(&args.prover)?.build(args.seed, session)?;
            run_protocol1(profile, prover.as_mut(), &mut rng, info)?
        }
        _ => {
            let device = load_device(&args.device)?;
            let mut prover = DeviceProver::new(device, substream(args.seed, session, "prover", 0));
            run_protocol2(profile, &mut prover, &mut rng, info)?
        }
    })
}

fn sessions(args: &RunArgs, profile: &ParameterProfile) -> CliResult<Value> {
    let ids: Vec<u64> = (args.session..args.session + args.sessions).collect();
    let transcripts: Vec<CliResult<Transcript>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ids.iter().map(|&s| scope.spawn(move || run_session(args, profile, s))).collect();
        handles.into_iter().map(|h| h.join().expect("session thread panicked")).collect()
    });
    let many = ids.len() > 1;
    let mut reports = Vec::new();
    let mut accepted = 0;
    for (&session, transcript) in ids.iter().zip(transcripts) {
        let transcript = transcript?;
        if let Some(base) = &args.transcript {
            let path = session_path(base, session, many);
            let mut f = create(&path)?;
            transcript.write_jsonl(&mut f)?;
            std::io::Write::flush(&mut f).map_err(|e| CliError::Io(path.clone(), e))?;
        }
        if let Some(base) = &args.bits {
            let bits = BitString::new(transcript.reported_bits())?;
            write_text(&session_path(base, session, many), &to_hex_lines(&bits))?;
        }
        let report = summarize(&transcript);
        accepted += u64::from(report["accepted"] == json!(true));
        reports.push(report);
    }
    let mut summary = json!({
        "mode": if args.mode == Mode::Protocol1 { "protocol1" } else { "protocol2" },
        "profile": profile.name,
        "seed": args.seed,
    });
    if many {
        summary["sessions"] = Value::Array(reports);
        summary["accepted_sessions"] = json!(accepted);
        summary["acceptance_frequency"] = json!(accepted as f64 / ids.len() as f64);
    } else if let (Value::Object(dst), Value::Object(src)) = (&mut summary, reports.remove(0)) {
        dst.extend(src);
    }
    Ok(summary)
}

/// Acceptance, pass rates per challenge, randomness budget and entropy.
pub fn summarize(t: &Transcript) -> Value {
    let v = t.verdict().cloned().unwrap_or_else(|| t.recompute_verdict());
    let mut groups: std::collections::BTreeMap<String, (u64, u64, u64)> = Default::default();
    for r in t.rounds().filter(|r| r.round_type == RoundType::Test) {
        let label = match (r.c, r.t) {
            (0, None) => "equation".to_string(),
            (1, None) => "preimage".to_string(),
            (c, Some(t)) => format!("c{c}_t{t}"),
            (c, None) => format!("c{c}"),
        };
        let g = groups.entry(label).or_default();
        g.0 += 1;
        g.1 += r.w as u64;
        g.2 += u64::from(r.coin);
    }
    let per_challenge: serde_json::Map<String, Value> = groups
        .into_iter()
        .map(|(k, (n, pass, coins))| {
            let rate = if n == 0 { 0.0 } else { pass as f64 / n as f64 };
            (k, json!({ "rounds": n, "passed": pass, "rate": rate, "coin_rounds": coins }))
        })
        .collect();
    let bits = t.reported_bits();
    let rerequests: u64 = t.rounds().map(|r| r.rerequests as u64).sum();
    json!({
        "session": t.header().session,
        "prover": t.header().prover,
        "accepted": v.accepted,
        "test_rounds": v.test_rounds,
        "scored_rounds": v.scored_rounds,
        "score": v.score,
        "threshold": v.threshold,
        "pass_rate": v.pass_rate,
        "fraction_rule": v.fraction_rule,
        "per_challenge": per_challenge,
        "gen_rounds": v.gen_rounds,
        "reported_bits": bits.len(),
        "rerequests": rerequests,
        "min_entropy": empirical_min_entropy(&bits).ok(),
        "randomness_budget": {
            "keygen": v.budget.keygen,
            "challenges": v.budget.challenges,
            "coins": v.budget.coins,
            "total": v.budget.total(),
        },
    })
}
