//! Verifier engines for the randomness-expansion protocol (Protocol 1), the
//! simplified protocol (Protocol 2) and the single-round test.
//!
//! The engines only talk to provers through the [`Prover`] and
//! [`SimplifiedProver`] traits, so an in-process simulator and a remote
//! process over the wire codec are interchangeable.

mod provers;
mod transcript;
pub mod wire;

pub use provers::{
    AlwaysAccept, CommittedProver, DeviceProver, IdealProver, ProverKind, QsimProver, RandomProver, ReplayProver,
};
pub use transcript::{Event, Header, Transcript, TranscriptLine, TRANSCRIPT_FORMAT};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modq::{binary_map_j, BitString, ModVec};
use crate::ntcf::{ClawPair, NtcfKeyPair, PublicKey};
use crate::profile::ParameterProfile;
use crate::rng::CountingRng;
use crate::stats::wilson;

/// Inversion failures tolerated per round before it is scored as lost.
pub const REREQUEST_CAP: u32 = 16;

/// Slack on acceptance thresholds, which are products of floats.
const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundType {
    Test,
    Gen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub c: u8,
    /// Only set on Protocol 2 test rounds.
    pub t: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    Equation { u: u8, d: BitString },
    Preimage { b: u8, x: ModVec },
    /// Protocol 2, `C = 0`: the equation outcome and, when asked, `k`.
    Check { e: u8, k: Option<u8> },
    /// Protocol 2, `C = 1`.
    Label { v: u8 },
    /// No usable answer; the round scores `W = 0`.
    Malformed { reason: String },
}

/// What happened in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    #[serde(rename = "G")]
    pub round_type: RoundType,
    #[serde(rename = "C")]
    pub c: u8,
    #[serde(rename = "T")]
    pub t: Option<u8>,
    pub key_epoch: Option<u64>,
    pub y: Option<ModVec>,
    /// Inversion failures before `y` was accepted.
    pub rerequests: u32,
    pub answer: Answer,
    /// Whether `W` was set by a coin because `d` fell outside `Ĝ_y`.
    pub coin: bool,
    #[serde(rename = "W")]
    pub w: u8,
    /// Generation rounds only: the reported bit when `W = 1`, else 2.
    #[serde(rename = "O")]
    pub o: Option<u8>,
}

/// Verifier randomness spent, in bits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomnessBudget {
    pub keygen: u64,
    pub challenges: u64,
    pub coins: u64,
}

impl RandomnessBudget {
    pub fn total(&self) -> u64 {
        self.keygen + self.challenges + self.coins
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub test_rounds: u64,
    /// Rounds counted towards acceptance: all test rounds for Protocol 1,
    /// test rounds with `T = 1` for Protocol 2.
    pub scored_rounds: u64,
    pub score: u64,
    pub threshold: f64,
    /// `score / scored_rounds`, or 0 when nothing was scored.
    pub pass_rate: f64,
    /// Whether `pass_rate >= 1 - gamma`, the per-test-round reading of the
    /// acceptance rule. Reported only; `accepted` uses `threshold`.
    pub fraction_rule: bool,
    pub gen_rounds: u64,
    /// `O` over generation rounds, as digits in `{0, 1, 2}`.
    pub output: String,
    pub budget: RandomnessBudget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Protocol1,
    Protocol2,
}

/// The prover side of Protocol 1 and the single-round test.
pub trait Prover {
    fn name(&self) -> String;

    /// Provers that simulate quantum power with the trapdoor. The engine
    /// hands them the key pair; nothing else ever sees it.
    fn needs_trapdoor(&self) -> bool {
        false
    }

    fn receive_key(&mut self, epoch: u64, key: &PublicKey, trapdoor: Option<&NtcfKeyPair>) -> Result<()>;

    /// An image `y`. `attempt` counts re-requests within the round.
    fn sample(&mut self, round: u64, attempt: u32) -> Result<ModVec>;

    /// An [`Error::Protocol`] is recorded as a malformed answer; any other
    /// error aborts the session.
    fn answer(&mut self, round: u64, challenge: Challenge) -> Result<Answer>;

    fn decision(&mut self, _round: u64, _w: u8) -> Result<()> {
        Ok(())
    }

    /// `None` after a single-round session, which has no verdict.
    fn finish(&mut self, _verdict: Option<&Verdict>) -> Result<()> {
        Ok(())
    }
}

/// The prover side of Protocol 2.
pub trait SimplifiedProver {
    fn name(&self) -> String;
    fn answer(&mut self, round: u64, challenge: Challenge) -> Result<Answer>;
}

/// `(1 - gamma) p_test N`.
pub fn protocol1_threshold(profile: &ParameterProfile) -> f64 {
    let p = &profile.protocol;
    (1.0 - p.gamma) * p.p_test * p.rounds as f64
}

/// `(1 - gamma/kappa - eta) kappa p_test N`.
pub fn protocol2_threshold(profile: &ParameterProfile) -> f64 {
    let p = &profile.protocol;
    (1.0 - p.gamma / p.kappa - p.eta) * p.kappa * p.p_test * p.rounds as f64
}

/// Recomputes the verdict from the rounds alone.
pub fn verdict_from_rounds(
    kind: ProtocolKind,
    profile: &ParameterProfile,
    rounds: &[RoundRecord],
    budget: RandomnessBudget,
) -> Verdict {
    let tests: Vec<&RoundRecord> = rounds.iter().filter(|r| r.round_type == RoundType::Test).collect();
    let scored: Vec<&&RoundRecord> = match kind {
        ProtocolKind::Protocol1 => tests.iter().collect(),
        ProtocolKind::Protocol2 => tests.iter().filter(|r| r.t == Some(1)).collect(),
    };
    let score: u64 = scored.iter().map(|r| r.w as u64).sum();
    let threshold = match kind {
        ProtocolKind::Protocol1 => protocol1_threshold(profile),
        ProtocolKind::Protocol2 => protocol2_threshold(profile),
    };
    let pass_rate = if scored.is_empty() { 0.0 } else { score as f64 / scored.len() as f64 };
    let meets = score as f64 >= threshold - THRESHOLD_SLACK;
    let accepted = match kind {
        ProtocolKind::Protocol1 => meets,
        ProtocolKind::Protocol2 => !scored.is_empty() && meets,
    };
    let output: String = rounds.iter().filter_map(|r| r.o).map(|o| char::from(b'0' + o)).collect();
    Verdict {
        accepted,
        test_rounds: tests.len() as u64,
        scored_rounds: scored.len() as u64,
        score,
        threshold,
        pass_rate,
        fraction_rule: !scored.is_empty() && pass_rate >= 1.0 - profile.protocol.gamma - THRESHOLD_SLACK,
        gen_rounds: (rounds.len() - tests.len()) as u64,
        output,
        budget,
    }
}

/// Session labels written into the transcript header.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub seed: u64,
    pub session: u64,
}

struct Scored {
    w: u8,
    coin: bool,
}

fn check_answer(pk: &PublicKey, challenge: u8, answer: &Answer) -> std::result::Result<(), String> {
    let w = pk.n() * pk.ring().bits();
    match (challenge, answer) {
        (0, Answer::Equation { u, d }) if *u <= 1 && d.len() == w => Ok(()),
        (0, Answer::Equation { .. }) => Err(format!("equation answer needs u in {{0,1}} and |d| = {w}")),
        (1, Answer::Preimage { b, x }) if *b <= 1 && x.len() == pk.n() && x.ring() == pk.ring() => Ok(()),
        (1, Answer::Preimage { .. }) => Err(format!("preimage answer needs b in {{0,1}} and x in Z_q^{}", pk.n())),
        (_, Answer::Malformed { reason }) => Err(reason.clone()),
        (c, other) => Err(format!("answer {other:?} does not fit challenge {c}")),
    }
}

/// The Protocol 1 decision rule for one answer.
fn score<R: Rng + ?Sized>(key: &NtcfKeyPair, claw: &ClawPair, answer: &Answer, rng: &mut R) -> Result<Scored> {
    Ok(match answer {
        Answer::Equation { u, d } => {
            let ghat = crate::ntcf::Ghat::new(claw.x0.clone(), claw.x1.clone());
            if ghat.contains(d)? {
                let parity = d.dot(&binary_map_j(&claw.x0).xor(&binary_map_j(&claw.x1)));
                Scored { w: u8::from(parity == *u), coin: false }
            } else {
                Scored { w: rng.gen_range(0..2u8), coin: true }
            }
        }
        Answer::Preimage { b, x } => Scored { w: u8::from(key.public().chk(*b, x, &claw.y)), coin: false },
        _ => Scored { w: 0, coin: false },
    })
}

fn ask(prover: &mut dyn Prover, pk: &PublicKey, round: u64, challenge: Challenge) -> Result<Answer> {
    let answer = match prover.answer(round, challenge) {
        Ok(a) => a,
        Err(Error::Protocol(reason)) => Answer::Malformed { reason },
        Err(e) => return Err(e),
    };
    Ok(match check_answer(pk, challenge.c, &answer) {
        Ok(()) => answer,
        Err(reason) => Answer::Malformed { reason },
    })
}

/// Gets an invertible `y`, re-requesting up to [`REREQUEST_CAP`] times.
fn obtain_image(prover: &mut dyn Prover, key: &NtcfKeyPair, round: u64) -> Result<(Option<ModVec>, Option<ClawPair>, u32)> {
    let mut last = None;
    for attempt in 0..REREQUEST_CAP {
        let y = match prover.sample(round, attempt) {
            Ok(y) => y,
            Err(Error::Protocol(_)) => continue,
            Err(e) => return Err(e),
        };
        if y.len() == key.public().m() && y.ring() == key.public().ring() {
            if let Ok(claw) = key.claw(&y) {
                return Ok((Some(y), Some(claw), attempt));
            }
        }
        last = Some(y);
    }
    Ok((last, None, REREQUEST_CAP))
}

fn new_key<R: RngCore>(
    profile: &ParameterProfile,
    rng: &mut CountingRng<R>,
    budget: &mut RandomnessBudget,
) -> Result<NtcfKeyPair> {
    let before = rng.bits();
    let key = NtcfKeyPair::generate(profile, rng)?;
    budget.keygen += rng.bits() - before;
    Ok(key)
}

fn hand_over(prover: &mut dyn Prover, epoch: u64, key: &NtcfKeyPair) -> Result<()> {
    let secret = prover.needs_trapdoor().then_some(key);
    prover.receive_key(epoch, key.public(), secret)
}

/// Runs Protocol 1 to completion.
pub fn run_protocol1<R: RngCore>(
    profile: &ParameterProfile,
    prover: &mut dyn Prover,
    rng: &mut R,
    info: SessionInfo,
) -> Result<Transcript> {
    profile.validate()?;
    let mut rng = CountingRng::new(rng);
    let mut budget = RandomnessBudget::default();
    let mut transcript = Transcript::new(Header::new(ProtocolKind::Protocol1, profile, prover.name(), info));
    let mut epoch = 0u64;
    let mut key = new_key(profile, &mut rng, &mut budget)?;
    transcript.push_epoch(epoch, key.public().clone());
    hand_over(prover, epoch, &key)?;
    let mut rounds = Vec::with_capacity(profile.protocol.rounds);
    for index in 0..profile.protocol.rounds as u64 {
        let (y, claw, rerequests) = obtain_image(prover, &key, index)?;
        let before = rng.bits();
        let round_type = if rng.gen_bool(profile.protocol.p_test) { RoundType::Test } else { RoundType::Gen };
        let c = if round_type == RoundType::Test { rng.gen_range(0..2u8) } else { 1 };
        budget.challenges += rng.bits() - before;
        let (answer, scored) = match &claw {
            Some(claw) => {
                let answer = ask(prover, key.public(), index, Challenge { c, t: None })?;
                let before = rng.bits();
                let s = score(&key, claw, &answer, &mut rng)?;
                budget.coins += rng.bits() - before;
                (answer, s)
            }
            None => (
                Answer::Malformed { reason: format!("no invertible image after {REREQUEST_CAP} requests") },
                Scored { w: 0, coin: false },
            ),
        };
        prover.decision(index, scored.w)?;
        let o = match (round_type, &answer) {
            (RoundType::Gen, Answer::Preimage { b, .. }) if scored.w == 1 => Some(*b),
            (RoundType::Gen, _) => Some(2),
            _ => None,
        };
        let record = RoundRecord {
            index,
            round_type,
            c,
            t: None,
            key_epoch: Some(epoch),
            y,
            rerequests,
            answer,
            coin: scored.coin,
            w: scored.w,
            o,
        };
        transcript.push_round(record.clone());
        rounds.push(record);
        if round_type == RoundType::Test {
            epoch += 1;
            key = new_key(profile, &mut rng, &mut budget)?;
            transcript.push_epoch(epoch, key.public().clone());
            hand_over(prover, epoch, &key)?;
        }
    }
    let verdict = verdict_from_rounds(ProtocolKind::Protocol1, profile, &rounds, budget);
    prover.finish(Some(&verdict))?;
    transcript.set_verdict(verdict);
    Ok(transcript)
}

/// Runs Protocol 2 against a simplified prover.
pub fn run_protocol2<R: RngCore>(
    profile: &ParameterProfile,
    prover: &mut dyn SimplifiedProver,
    rng: &mut R,
    info: SessionInfo,
) -> Result<Transcript> {
    profile.validate()?;
    let mut rng = CountingRng::new(rng);
    let mut budget = RandomnessBudget::default();
    let mut transcript = Transcript::new(Header::new(ProtocolKind::Protocol2, profile, prover.name(), info));
    let p = &profile.protocol;
    let mut rounds = Vec::with_capacity(p.rounds);
    for index in 0..p.rounds as u64 {
        let before = rng.bits();
        let round_type = if rng.gen_bool(p.p_test) { RoundType::Test } else { RoundType::Gen };
        let (c, t) = match round_type {
            RoundType::Test => (rng.gen_range(0..2u8), u8::from(rng.gen_bool(p.kappa))),
            RoundType::Gen => (1, 0),
        };
        budget.challenges += rng.bits() - before;
        let challenge = Challenge { c, t: (round_type == RoundType::Test).then_some(t) };
        let answer = match prover.answer(index, challenge) {
            Ok(a) => a,
            Err(Error::Protocol(reason)) => Answer::Malformed { reason },
            Err(e) => return Err(e),
        };
        let (answer, w, o) = match (c, answer) {
            (0, Answer::Check { e, k }) if e <= 1 && (t == 0 || matches!(k, Some(0 | 1))) => {
                let w = if t == 1 { e * (1 - k.unwrap_or(1)) } else { e };
                (Answer::Check { e, k }, w, None)
            }
            (1, Answer::Label { v }) if v <= 2 => (Answer::Label { v }, u8::from(v <= 1), Some(v)),
            (_, Answer::Malformed { reason }) => (Answer::Malformed { reason }, 0, None),
            (c, other) => (Answer::Malformed { reason: format!("answer {other:?} does not fit challenge {c}") }, 0, None),
        };
        let o = match round_type {
            RoundType::Gen => Some(o.unwrap_or(2)),
            RoundType::Test => None,
        };
        let record = RoundRecord {
            index,
            round_type,
            c,
            t: challenge.t,
            key_epoch: None,
            y: None,
            rerequests: 0,
            answer,
            coin: false,
            w,
            o,
        };
        transcript.push_round(record.clone());
        rounds.push(record);
    }
    transcript.set_verdict(verdict_from_rounds(ProtocolKind::Protocol2, profile, &rounds, budget));
    Ok(transcript)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleRoundReport {
    pub prover: String,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci: (f64, f64),
    /// `(trials, successes)` for the equation and preimage challenges.
    pub equation: (u64, u64),
    pub preimage: (u64, u64),
    /// Equation rounds whose `d` fell outside `Ĝ_y`.
    pub coin_rounds: u64,
}

/// Fresh key, image, uniform challenge, one decision; repeated `trials` times.
pub fn single_round_test<R: RngCore>(
    profile: &ParameterProfile,
    prover: &mut dyn Prover,
    trials: u64,
    rng: &mut R,
) -> Result<SingleRoundReport> {
    profile.validate()?;
    let mut counts = [(0u64, 0u64); 2];
    let mut coin_rounds = 0;
    for trial in 0..trials {
        let key = NtcfKeyPair::generate(profile, rng)?;
        hand_over(prover, trial, &key)?;
        let (_, claw, _) = obtain_image(prover, &key, trial)?;
        let c = rng.gen_range(0..2u8);
        let w = match &claw {
            Some(claw) => {
                let answer = ask(prover, key.public(), trial, Challenge { c, t: None })?;
                let s = score(&key, claw, &answer, rng)?;
                coin_rounds += u64::from(s.coin);
                s.w
            }
            None => 0,
        };
        prover.decision(trial, w)?;
        counts[c as usize].0 += 1;
        counts[c as usize].1 += w as u64;
    }
    prover.finish(None)?;
    let successes = counts[0].1 + counts[1].1;
    Ok(SingleRoundReport {
        prover: prover.name(),
        trials,
        successes,
        rate: successes as f64 / trials.max(1) as f64,
        ci: wilson(successes, trials, 1.96),
        equation: counts[0],
        preimage: counts[1],
        coin_rounds,
    })
}

/// `1 - (1 - 2^-ceil(n/2)) (1 - 2^-floor(n/2))`: the chance that a uniform
/// `d` misses `Ĝ_y` when both claw differences are nonzero in every block.
pub fn ghat_miss_rate(n: usize) -> f64 {
    let a = 0.5f64.powi(n.div_ceil(2) as i32);
    let b = 0.5f64.powi((n / 2) as i32);
    1.0 - (1.0 - a) * (1.0 - b)
}
