//! Replayable record of one protocol run.

use serde::{Deserialize, Serialize};

use super::roster::PartyRoster;
use crate::error::{QdcError, Result};
use crate::protocol::MessageWord;

pub const TRANSCRIPT_SCHEMA: &str = "qdc-transcript/1";

/// Knobs that change what a run does, recorded so a replay can redo it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub roster: PartyRoster,
    /// Order in which slots perform the round-1 projector measurement.
    pub round1_order: Vec<usize>,
    /// Slots that keep their round-2 sign to themselves.
    pub abstaining: Vec<usize>,
    /// Abstaining slots also keep their round-1 shift to themselves.
    pub withhold_round1: bool,
}

impl RunOptions {
    /// Slot-ascending order, one party per slot, nobody abstains.
    pub fn standard(n: usize) -> Self {
        Self::with_roster(n, PartyRoster::one_per_slot(n))
    }

    pub fn with_roster(n: usize, roster: PartyRoster) -> Self {
        Self {
            roster,
            round1_order: (1..=n).collect(),
            abstaining: vec![],
            withhold_round1: false,
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        self.roster.validate(n)?;
        let mut order = self.round1_order.clone();
        order.sort_unstable();
        if order != (1..=n).collect::<Vec<_>>() {
            return Err(QdcError::Argument(format!(
                "round-1 order {:?} is not a permutation of 1..={n}",
                self.round1_order
            )));
        }
        for &slot in &self.abstaining {
            if slot == 0 || slot > n {
                return Err(QdcError::Argument(format!(
                    "abstaining slot {slot} outside 1..={n}"
                )));
            }
            let party = self.roster.party_of(slot).expect("validated roster");
            if self.roster.grouping()[party]
                .iter()
                .any(|s| !self.abstaining.contains(s))
            {
                return Err(QdcError::Argument(format!(
                    "slot {slot} abstains but its party also holds collaborating slots"
                )));
            }
        }
        if !self.abstaining.is_empty()
            && self
                .roster
                .grouping()
                .iter()
                .all(|g| g.iter().all(|s| self.abstaining.contains(s)))
        {
            return Err(QdcError::Argument(
                "every party abstains; nobody is left to decode".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// Sender applies `U_{a,b}` to qutrit `qutrit` (one-based).
    EncodeOp {
        qutrit: usize,
        a: u8,
        b: u8,
    },
    Transfer {
        particle: usize,
        from: String,
        to: String,
    },
    /// One-based projector label `P_k`.
    Round1Outcome {
        slot: usize,
        projector: usize,
    },
    Broadcast1 {
        slot: usize,
        from: String,
        shift: u8,
    },
    Round2Outcome {
        slot: usize,
        sigma: i8,
    },
    Broadcast2 {
        slot: usize,
        from: String,
        sigma: i8,
    },
}

impl Event {
    pub fn is_broadcast(&self) -> bool {
        matches!(self, Event::Broadcast1 { .. } | Event::Broadcast2 { .. })
    }

    pub fn is_measurement(&self) -> bool {
        matches!(
            self,
            Event::Round1Outcome { .. } | Event::Round2Outcome { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Decoded {
    Message {
        message: MessageWord,
    },
    /// What the collaborating parties jointly know when some slot abstains.
    Undecodable {
        known_shifts: Vec<Option<u8>>,
        known_sigmas: Vec<Option<i8>>,
        /// Parity of the known signs, read as a sign bit.
        sign_guess: u8,
    },
}

impl Decoded {
    pub fn message(&self) -> Option<&MessageWord> {
        match self {
            Decoded::Message { message } => Some(message),
            Decoded::Undecodable { .. } => None,
        }
    }
}

/// Classical and quantum resources consumed by one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunicationLedger {
    pub qutrits_sent_by_sender: usize,
    /// `log₂3` per broadcast shift.
    pub receiver_round1_bits: f64,
    /// One bit per broadcast sign.
    pub receiver_round2_bits: f64,
    /// Round-1 cost if each trit is sent as two bits.
    pub receiver_round1_encoded_bits: u64,
    pub broadcast_events: usize,
    /// `log₂` of the message count divided by the number of messages the
    /// decoding parties cannot rule out.
    pub decoded_bits: f64,
}

impl CommunicationLedger {
    pub fn broadcast_bits(&self) -> f64 {
        self.receiver_round1_bits + self.receiver_round2_bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: String,
    pub n: usize,
    pub seed: u64,
    pub message: MessageWord,
    pub options: RunOptions,
    pub events: Vec<Event>,
    pub decoded: Decoded,
    pub ledger: CommunicationLedger,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcripts always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcripts always serialize")
    }

    /// Parses a transcript, rejecting unknown schema versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| QdcError::Format(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_str()) {
            Some(TRANSCRIPT_SCHEMA) => {}
            Some(other) => {
                return Err(QdcError::Format(format!(
                    "unsupported transcript schema {other:?}"
                )))
            }
            None => return Err(QdcError::Format("missing schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| QdcError::Format(e.to_string()))
    }

    pub fn round1_outcomes(&self) -> Vec<(usize, usize)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Round1Outcome { slot, projector } => Some((*slot, *projector)),
                _ => None,
            })
            .collect()
    }

    /// Round-2 signs in slot order.
    pub fn sigmas(&self) -> Vec<i8> {
        let mut out: Vec<(usize, i8)> = self
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Round2Outcome { slot, sigma } => Some((*slot, *sigma)),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.into_iter().map(|(_, s)| s).collect()
    }

    pub fn broadcast_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_broadcast()).count()
    }
}
