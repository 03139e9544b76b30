use std::io::{BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use ntcf_core::protocol::wire::{serve_prover, RemoteProver, ServeSummary};
use ntcf_core::protocol::{run_protocol1, ProverKind, SessionInfo, Transcript};
use ntcf_core::rng::substream;
use serde_json::{json, Value};

use crate::common::{config, create, CliError, CliResult, ProfileArgs};
use crate::run::summarize;

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// A prover that works without the trapdoor.
    #[arg(long, default_value = "classical-committed")]
    pub prover: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub session: u64,
    /// Address to listen on; port 0 picks a free port, printed on stdout.
    #[arg(long, default_value = "127.0.0.1:0", conflicts_with = "stdio")]
    pub listen: String,
    /// Speak the wire protocol on stdin/stdout instead of TCP.
    #[arg(long)]
    pub stdio: bool,
}

#[derive(Args, Debug)]
pub struct ConnectArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub session: u64,
    #[arg(long, default_value = "127.0.0.1:7878", conflicts_with = "stdio")]
    pub addr: String,
    /// Speak the wire protocol on stdin/stdout instead of TCP.
    #[arg(long)]
    pub stdio: bool,
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
    /// Seconds to keep retrying the connection.
    #[arg(long, default_value_t = 10)]
    pub wait: u64,
}

fn serve_json(s: &ServeSummary) -> Value {
    json!({ "keys": s.keys, "challenges": s.challenges, "verdict": s.verdict })
}

pub fn cmd_serve(args: &ServeArgs) -> CliResult<()> {
    let kind = ProverKind::parse(&args.prover)?;
    if kind == ProverKind::Remote {
        return config("serve needs a local prover");
    }
    let mut prover = kind.build(args.seed, args.session)?;
    if prover.needs_trapdoor() {
        return config(format!("prover {} needs the trapdoor and cannot be served", kind.name()));
    }
    if args.stdio {
        let stdin = std::io::stdin().lock();
        let stdout = std::io::stdout().lock();
        let summary = serve_prover(stdin, stdout, prover.as_mut())?;
        eprintln!("{}", serde_json::to_string_pretty(&serve_json(&summary)).expect("json value"));
        return Ok(());
    }
    let listener = TcpListener::bind(&args.listen).map_err(|e| CliError::Io(args.listen.clone().into(), e))?;
    let local = listener.local_addr().map_err(|e| CliError::Io(args.listen.clone().into(), e))?;
    println!("listening on {local}");
    std::io::stdout().flush().ok();
    let (stream, peer) = listener.accept().map_err(|e| CliError::Io(local.to_string().into(), e))?;
    log::info!("verifier connected from {peer}");
    stream.set_nodelay(true).map_err(|e| CliError::Io(peer.to_string().into(), e))?;
    let reader = BufReader::new(stream.try_clone().map_err(|e| CliError::Io(peer.to_string().into(), e))?);
    let summary = serve_prover(reader, stream, prover.as_mut())?;
    println!("{}", serde_json::to_string_pretty(&serve_json(&summary)).expect("json value"));
    Ok(())
}

fn dial(addr: &str, wait: Duration) -> CliResult<TcpStream> {
    let start = Instant::now();
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => {
                s.set_nodelay(true).map_err(|e| CliError::Io(addr.into(), e))?;
                return Ok(s);
            }
            Err(e) if start.elapsed() >= wait => return Err(CliError::Io(addr.into(), e)),
            Err(_) => std::thread::sleep(Duration::from_millis(50)),
        }
    }
}

pub fn cmd_connect(args: &ConnectArgs) -> CliResult<()> {
    let profile = args.profile.load()?;
    let info = SessionInfo { seed: args.seed, session: args.session };
    let mut rng = substream(args.seed, args.session, "verifier", 0);
    let (transcript, to_stderr): (Transcript, bool) = if args.stdio {
        let mut remote = RemoteProver::connect(std::io::stdin().lock(), std::io::stdout().lock())?;
        (run_protocol1(&profile, &mut remote, &mut rng, info)?, true)
    } else {
        let stream = dial(&args.addr, Duration::from_secs(args.wait))?;
        let reader = BufReader::new(stream.try_clone().map_err(|e| CliError::Io(args.addr.clone().into(), e))?);
        let mut remote = RemoteProver::connect(reader, stream)?;
        (run_protocol1(&profile, &mut remote, &mut rng, info)?, false)
    };
    if let Some(path) = &args.transcript {
        let mut f = create(path)?;
        transcript.write_jsonl(&mut f)?;
        f.flush().map_err(|e| CliError::Io(path.clone(), e))?;
    }
    let text = serde_json::to_string_pretty(&summarize(&transcript)).expect("json value");
    if to_stderr {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
    Ok(())
}
