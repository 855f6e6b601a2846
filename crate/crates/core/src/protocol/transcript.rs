use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::checks::{CheckId, CheckRecord};
use crate::quantum::QubitOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Message {
    BetaTransfer { count: usize },
    AnnounceResults { results: Vec<QubitOutcome> },
    AnnounceL { l: Vec<usize> },
    AnnounceF { f: bool },
    AnnounceNU { n: Vec<usize>, u: Vec<usize> },
    AlphaTransfer { indices: Vec<usize> },
    Abort { check: CheckId },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::BetaTransfer { .. } => "BetaTransfer",
            Message::AnnounceResults { .. } => "AnnounceResults",
            Message::AnnounceL { .. } => "AnnounceL",
            Message::AnnounceF { .. } => "AnnounceF",
            Message::AnnounceNU { .. } => "AnnounceNU",
            Message::AlphaTransfer { .. } => "AlphaTransfer",
            Message::Abort { .. } => "Abort",
        }
    }

    /// First 16 hex digits of the SHA-256 of the JSON payload.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("messages serialize");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    /// A short human-readable summary.
    fn summary(&self) -> String {
        match self {
            Message::BetaTransfer { count } => format!("count={count}"),
            Message::AnnounceResults { results } => {
                let ones = results.iter().filter(|r| r.q).count();
                format!("count={} q1={ones}", results.len())
            }
            Message::AnnounceL { l } => format!("size={}", l.len()),
            Message::AnnounceF { f } => format!("f={}", u8::from(*f)),
            Message::AnnounceNU { n, u } => format!("n={} u={}", n.len(), u.len()),
            Message::AlphaTransfer { indices } => format!("count={}", indices.len()),
            Message::Abort { check } => format!("check={check}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Completed { c: bool },
    Aborted { check: CheckId, by: Party },
}

impl Outcome {
    pub fn coin(&self) -> Option<bool> {
        match self {
            Outcome::Completed { c } => Some(*c),
            Outcome::Aborted { .. } => None,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed { .. })
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Completed { c } => write!(f, "Completed(c={})", u8::from(*c)),
            Outcome::Aborted { check, by } => write!(f, "Aborted({check}, by={by})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "lowercase")]
pub enum TranscriptEntry {
    Message {
        step: u8,
        sender: Party,
        message: Message,
    },
    Check {
        step: u8,
        record: CheckRecord,
    },
    Outcome {
        step: u8,
        outcome: Outcome,
        alice_c: Option<bool>,
        bob_c: Option<bool>,
    },
}

/// A flat, serializable row for the JSON rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRow {
    pub step: u8,
    pub sender: Party,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_id: Option<CheckId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.4}")
    }
}

impl Transcript {
    pub fn push_message(&mut self, step: u8, sender: Party, message: Message) {
        self.entries.push(TranscriptEntry::Message {
            step,
            sender,
            message,
        });
    }

    pub fn push_check(&mut self, step: u8, record: CheckRecord) {
        self.entries.push(TranscriptEntry::Check { step, record });
    }

    pub fn push_outcome(
        &mut self,
        step: u8,
        outcome: Outcome,
        alice_c: Option<bool>,
        bob_c: Option<bool>,
    ) {
        self.entries.push(TranscriptEntry::Outcome {
            step,
            outcome,
            alice_c,
            bob_c,
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.entries.iter().filter_map(|e| match e {
            TranscriptEntry::Check { record, .. } => Some(record),
            _ => None,
        })
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks().filter(|r| !r.pass)
    }

    pub fn rows(&self) -> Vec<TranscriptRow> {
        self.entries
            .iter()
            .map(|e| match e {
                TranscriptEntry::Message {
                    step,
                    sender,
                    message,
                } => TranscriptRow {
                    step: *step,
                    sender: *sender,
                    kind: message.kind().to_string(),
                    payload_digest: Some(message.digest()),
                    check_id: match message {
                        Message::Abort { check } => Some(*check),
                        _ => None,
                    },
                    verdict: None,
                    observed: None,
                    expected: None,
                },
                TranscriptEntry::Check { step, record } => TranscriptRow {
                    step: *step,
                    sender: record.by,
                    kind: "Check".to_string(),
                    payload_digest: None,
                    check_id: Some(record.id),
                    verdict: Some(if record.pass { "pass" } else { "fail" }.to_string()),
                    observed: Some(record.observed),
                    expected: Some(record.expected),
                },
                TranscriptEntry::Outcome { step, outcome, .. } => TranscriptRow {
                    step: *step,
                    sender: Party::Bob,
                    kind: outcome.to_string(),
                    payload_digest: None,
                    check_id: None,
                    verdict: None,
                    observed: None,
                    expected: None,
                },
            })
            .collect()
    }

    /// One line per message or check record.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = match e {
                TranscriptEntry::Message {
                    step,
                    sender,
                    message,
                } => format!(
                    "step={step} {sender} {} {} digest={}",
                    message.kind(),
                    message.summary(),
                    message.digest()
                ),
                TranscriptEntry::Check { step, record } => {
                    let mut l = format!(
                        "step={step} {} check {}{} observed={} expected={}",
                        record.by,
                        record.id,
                        record
                            .subject
                            .as_deref()
                            .map(|s| format!("[{s}]"))
                            .unwrap_or_default(),
                        fmt_num(record.observed),
                        fmt_num(record.expected)
                    );
                    if let Some(t) = record.tolerance {
                        l.push_str(&format!(" tolerance={}", fmt_num(t)));
                    }
                    l.push_str(if record.pass {
                        " verdict=pass"
                    } else {
                        " verdict=fail"
                    });
                    l
                }
                TranscriptEntry::Outcome {
                    step,
                    outcome,
                    alice_c,
                    bob_c,
                } => {
                    let show =
                        |c: &Option<bool>| c.map_or("-".to_string(), |b| u8::from(b).to_string());
                    format!(
                        "step={step} outcome {outcome} alice_c={} bob_c={}",
                        show(alice_c),
                        show(bob_c)
                    )
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows()).expect("rows serialize")
    }
}
