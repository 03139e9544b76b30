//! Transcripts and their JSON-lines form.
//!
//! Line order is the order of events: the header, the first key epoch, then
//! rounds with a new epoch line after every test round, and the verdict.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{verdict_from_rounds, ProtocolKind, RoundRecord, SessionInfo, Verdict};
use crate::error::{Error, Result};
use crate::ntcf::PublicKey;
use crate::profile::ParameterProfile;

pub const TRANSCRIPT_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub fmt: u32,
    pub protocol: ProtocolKind,
    pub profile: ParameterProfile,
    pub prover: String,
    pub seed: u64,
    pub session: u64,
}

impl Header {
    pub fn new(protocol: ProtocolKind, profile: &ParameterProfile, prover: String, info: SessionInfo) -> Self {
        Self { fmt: TRANSCRIPT_FORMAT, protocol, profile: profile.clone(), prover, seed: info.seed, session: info.session }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Epoch { epoch: u64, key: PublicKey },
    Round(RoundRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TranscriptLine {
    Header(Header),
    Epoch { epoch: u64, key: PublicKey },
    Round(RoundRecord),
    Verdict(Verdict),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    header: Header,
    events: Vec<Event>,
    verdict: Option<Verdict>,
}

impl Transcript {
    pub fn new(header: Header) -> Self {
        Self { header, events: Vec::new(), verdict: None }
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn push_epoch(&mut self, epoch: u64, key: PublicKey) {
        self.events.push(Event::Epoch { epoch, key });
    }

    pub fn push_round(&mut self, round: RoundRecord) {
        self.events.push(Event::Round(round));
    }

    pub fn set_verdict(&mut self, verdict: Verdict) {
        self.verdict = Some(verdict);
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        self.verdict.as_ref()
    }

    pub fn rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.events.iter().filter_map(|e| match e {
            Event::Round(r) => Some(r),
            Event::Epoch { .. } => None,
        })
    }

    pub fn epochs(&self) -> impl Iterator<Item = (u64, &PublicKey)> {
        self.events.iter().filter_map(|e| match e {
            Event::Epoch { epoch, key } => Some((*epoch, key)),
            Event::Round(_) => None,
        })
    }

    /// Bits reported on generation rounds, whatever `W` was.
    pub fn reported_bits(&self) -> Vec<u8> {
        self.rounds()
            .filter(|r| r.round_type == super::RoundType::Gen)
            .filter_map(|r| match &r.answer {
                super::Answer::Preimage { b, .. } => Some(*b),
                super::Answer::Label { v } if *v <= 1 => Some(*v),
                _ => None,
            })
            .collect()
    }

    /// The verdict as a function of the recorded rounds only.
    pub fn recompute_verdict(&self) -> Verdict {
        let rounds: Vec<RoundRecord> = self.rounds().cloned().collect();
        let budget = self.verdict.as_ref().map(|v| v.budget.clone()).unwrap_or_default();
        verdict_from_rounds(self.header.protocol, &self.header.profile, &rounds, budget)
    }

    pub fn lines(&self) -> Vec<TranscriptLine> {
        let mut out = vec![TranscriptLine::Header(self.header.clone())];
        out.extend(self.events.iter().map(|e| match e {
            Event::Epoch { epoch, key } => TranscriptLine::Epoch { epoch: *epoch, key: key.clone() },
            Event::Round(r) => TranscriptLine::Round(r.clone()),
        }));
        if let Some(v) = &self.verdict {
            out.push(TranscriptLine::Verdict(v.clone()));
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for line in self.lines() {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut transcript: Option<Self> = None;
        for (no, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TranscriptLine = serde_json::from_str(&line)?;
            match (parsed, transcript.as_mut()) {
                (TranscriptLine::Header(h), None) => {
                    if h.fmt != TRANSCRIPT_FORMAT {
                        return Err(Error::Protocol(format!("unsupported transcript format {}", h.fmt)));
                    }
                    transcript = Some(Self::new(h));
                }
                (TranscriptLine::Epoch { epoch, key }, Some(t)) => t.push_epoch(epoch, key),
                (TranscriptLine::Round(r), Some(t)) => t.push_round(r),
                (TranscriptLine::Verdict(v), Some(t)) => t.set_verdict(v),
                _ => return Err(Error::Protocol(format!("line {}: unexpected transcript line", no + 1))),
            }
        }
        transcript.ok_or_else(|| Error::Protocol("empty transcript".into()))
    }
}
