//! Newline-delimited JSON between a verifier and a remote prover.
//!
//! The verifier drives: it sends `hello`, then keys, sample requests,
//! challenges and decisions, and closes with `final`. The prover answers
//! `hello`, each `sample` request with a `sample` carrying `y`, and each
//! `challenge` with `answer_eq` or `answer_pre`.

use std::io::{BufRead, ErrorKind, Write};

use serde::{Deserialize, Serialize};

use super::{Answer, Challenge, Prover, Verdict};
use crate::error::{Error, Result};
use crate::modq::{BitString, ModVec};
use crate::ntcf::{NtcfKeyPair, PublicKey};

pub const WIRE_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello { role: String, name: String, fmt: u32 },
    Key { epoch: u64, key: PublicKey },
    Sample { round: u64, attempt: u32, y: Option<ModVec> },
    Challenge { round: u64, c: u8, t: Option<u8> },
    AnswerEq { round: u64, u: u8, d: BitString },
    AnswerPre { round: u64, b: u8, x: ModVec },
    Decision { round: u64, w: u8 },
    Final { verdict: Option<Verdict> },
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<()> {
    let mut line = serde_json::to_vec(msg)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()?;
    Ok(())
}

/// Reads one message. A closed stream is an I/O error; a line that does not
/// parse is a protocol violation.
pub fn read_message<R: BufRead>(r: &mut R) -> Result<Message> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(Error::Io(std::io::Error::new(ErrorKind::UnexpectedEof, "peer closed the connection")));
    }
    serde_json::from_str(line.trim_end()).map_err(|e| Error::Protocol(format!("bad message: {e}")))
}

/// The verifier's handle on a prover in another process.
pub struct RemoteProver<R, W> {
    reader: R,
    writer: W,
    name: String,
}

impl<R: BufRead, W: Write> RemoteProver<R, W> {
    /// Exchanges `hello` messages.
    pub fn connect(mut reader: R, mut writer: W) -> Result<Self> {
        write_message(&mut writer, &Message::Hello { role: "verifier".into(), name: "verifier".into(), fmt: WIRE_FORMAT })?;
        match read_message(&mut reader)? {
            Message::Hello { role, name, fmt } if role == "prover" && fmt == WIRE_FORMAT => Ok(Self { reader, writer, name }),
            other => Err(Error::Protocol(format!("expected a prover hello, got {other:?}"))),
        }
    }
}

impl<R: BufRead, W: Write> Prover for RemoteProver<R, W> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn receive_key(&mut self, epoch: u64, key: &PublicKey, _trapdoor: Option<&NtcfKeyPair>) -> Result<()> {
        write_message(&mut self.writer, &Message::Key { epoch, key: key.clone() })
    }

    fn sample(&mut self, round: u64, attempt: u32) -> Result<ModVec> {
        write_message(&mut self.writer, &Message::Sample { round, attempt, y: None })?;
        match read_message(&mut self.reader)? {
            Message::Sample { round: r, y: Some(y), .. } if r == round => Ok(y),
            other => Err(Error::Protocol(format!("expected a sample for round {round}, got {other:?}"))),
        }
    }

    fn answer(&mut self, round: u64, challenge: Challenge) -> Result<Answer> {
        write_message(&mut self.writer, &Message::Challenge { round, c: challenge.c, t: challenge.t })?;
        match read_message(&mut self.reader)? {
            Message::AnswerEq { round: r, u, d } if r == round => Ok(Answer::Equation { u, d }),
            Message::AnswerPre { round: r, b, x } if r == round => Ok(Answer::Preimage { b, x }),
            other => Err(Error::Protocol(format!("expected an answer for round {round}, got {other:?}"))),
        }
    }

    fn decision(&mut self, round: u64, w: u8) -> Result<()> {
        write_message(&mut self.writer, &Message::Decision { round, w })
    }

    fn finish(&mut self, verdict: Option<&Verdict>) -> Result<()> {
        write_message(&mut self.writer, &Message::Final { verdict: verdict.cloned() })
    }
}

/// What the prover side saw.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServeSummary {
    pub keys: u64,
    pub challenges: u64,
    pub verdict: Option<Verdict>,
}

/// Runs `prover` against a verifier until `final`.
pub fn serve_prover<R: BufRead, W: Write>(mut reader: R, mut writer: W, prover: &mut dyn Prover) -> Result<ServeSummary> {
    if prover.needs_trapdoor() {
        return Err(Error::InvalidParameter(format!("prover {} needs the trapdoor and cannot run remotely", prover.name())));
    }
    match read_message(&mut reader)? {
        Message::Hello { role, fmt, .. } if role == "verifier" && fmt == WIRE_FORMAT => {}
        other => return Err(Error::Protocol(format!("expected a verifier hello, got {other:?}"))),
    }
    write_message(&mut writer, &Message::Hello { role: "prover".into(), name: prover.name(), fmt: WIRE_FORMAT })?;
    let mut summary = ServeSummary::default();
    loop {
        match read_message(&mut reader)? {
            Message::Key { epoch, key } => {
                summary.keys += 1;
                prover.receive_key(epoch, &key, None)?;
            }
            Message::Sample { round, attempt, y: None } => {
                let y = prover.sample(round, attempt).ok();
                write_message(&mut writer, &Message::Sample { round, attempt, y })?;
            }
            Message::Challenge { round, c, t } => {
                summary.challenges += 1;
                let reply = match prover.answer(round, Challenge { c, t })? {
                    Answer::Equation { u, d } => Message::AnswerEq { round, u, d },
                    Answer::Preimage { b, x } => Message::AnswerPre { round, b, x },
                    other => return Err(Error::Protocol(format!("prover produced {other:?}, which has no wire form"))),
                };
                write_message(&mut writer, &reply)?;
            }
            Message::Decision { round, w } => prover.decision(round, w)?,
            Message::Final { verdict } => {
                prover.finish(verdict.as_ref())?;
                summary.verdict = verdict;
                return Ok(summary);
            }
            other => return Err(Error::Protocol(format!("unexpected message {other:?}"))),
        }
    }
}
