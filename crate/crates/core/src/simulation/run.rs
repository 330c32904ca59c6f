use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::roster::PartyRoster;
use super::transcript::{
    CommunicationLedger, Decoded, Event, RunOptions, Transcript, TRANSCRIPT_SCHEMA,
};
use crate::error::{QdcError, Result};
use crate::hilbert::{MixedRadixState, DEFAULT_AMPLITUDE_CAP};
use crate::protocol::{
    channel_state_with_cap, coherent_measure, encode, message_count, pair_measure,
    projector_outcome_to_shift, reconstruct_message, MessageWord, ReceiverPair,
};

/// Per-run quantities that are not part of the transcript.
#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    /// Born probability of each round-1 outcome, in slot order.
    pub round1_probabilities: Vec<f64>,
    /// `|⟨encoded|after round 1⟩|²`.
    pub round1_fidelity: f64,
    pub encoded: MixedRadixState,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub transcript: Transcript,
    pub diagnostics: RunDiagnostics,
}

/// Runs the five protocol steps with one party per slot unless `roster`
/// says otherwise.
pub fn run_protocol(
    n: usize,
    message: &MessageWord,
    seed: u64,
    roster: &PartyRoster,
) -> Result<Transcript> {
    let options = RunOptions::with_roster(n, roster.clone());
    Ok(run_with_options(n, message, seed, &options)?.transcript)
}

/// Like [`run_protocol`] with the default roster, where the listed slots
/// withhold their round-2 sign.
pub fn run_with_abstention(
    n: usize,
    message: &MessageWord,
    seed: u64,
    abstaining: &[usize],
) -> Result<Transcript> {
    let mut options = RunOptions::standard(n);
    options.abstaining = abstaining.to_vec();
    Ok(run_with_options(n, message, seed, &options)?.transcript)
}

pub fn run_with_options(
    n: usize,
    message: &MessageWord,
    seed: u64,
    options: &RunOptions,
) -> Result<RunOutput> {
    run_with_cap(n, message, seed, options, DEFAULT_AMPLITUDE_CAP)
}

pub fn run_with_cap(
    n: usize,
    message: &MessageWord,
    seed: u64,
    options: &RunOptions,
    cap: usize,
) -> Result<RunOutput> {
    if message.n_receivers() != n {
        return Err(QdcError::Argument(format!(
            "message {message} is for {} receivers, run has {n}",
            message.n_receivers()
        )));
    }
    options.validate(n)?;
    let roster = &options.roster;
    let broadcasting = roster.party_count() > 1;
    let abstains = |slot: usize| options.abstaining.contains(&slot);
    let party = |slot: usize| {
        roster
            .party_name_of(slot)
            .expect("validated roster")
            .to_string()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();

    // (i)-(ii) encode
    let encoded = encode(&channel_state_with_cap(n, cap)?, message)?;
    let shifts = message.shifts();
    for (i, &a) in shifts.iter().enumerate() {
        let b = if i == 0 { message.sign() } else { 0 };
        events.push(Event::EncodeOp {
            qutrit: i + 1,
            a,
            b,
        });
    }

    // (iii) transfer
    for slot in 1..=n {
        events.push(Event::Transfer {
            particle: slot,
            from: roster.sender().to_string(),
            to: party(slot),
        });
    }

    // (iv) round 1
    let mut state = encoded.clone();
    let mut round1 = vec![0usize; n + 1];
    let mut round1_probabilities = vec![0.0; n];
    for &slot in &options.round1_order {
        let (projector, post, p) =
            pair_measure(&state, ReceiverPair::for_slot(n, slot)?, &mut rng)?;
        state = post;
        round1[slot] = projector;
        round1_probabilities[slot - 1] = p;
        events.push(Event::Round1Outcome { slot, projector });
    }
    let round1_fidelity = encoded.fidelity(&state)?;
    let measured_shifts: Vec<u8> = (1..=n)
        .map(|slot| projector_outcome_to_shift(round1[slot]))
        .collect::<Result<_>>()?;
    let mut shift_shared = vec![!broadcasting; n + 1];
    if broadcasting {
        for &slot in &options.round1_order {
            if options.withhold_round1 && abstains(slot) {
                continue;
            }
            shift_shared[slot] = true;
            events.push(Event::Broadcast1 {
                slot,
                from: party(slot),
                shift: measured_shifts[slot - 1],
            });
        }
    }

    // (v) round 2, each receiver in the basis its own round-1 outcome selects
    let mut sigmas = vec![0i8; n];
    for slot in 1..=n {
        let (sigma, post) = coherent_measure(
            &state,
            ReceiverPair::for_slot(n, slot)?,
            measured_shifts[slot - 1],
            &mut rng,
        )?;
        state = post;
        sigmas[slot - 1] = sigma;
        events.push(Event::Round2Outcome { slot, sigma });
    }
    let mut sigma_shared = vec![!broadcasting; n + 1];
    if broadcasting {
        for slot in 1..=n {
            if abstains(slot) {
                continue;
            }
            sigma_shared[slot] = true;
            events.push(Event::Broadcast2 {
                slot,
                from: party(slot),
                sigma: sigmas[slot - 1],
            });
        }
    }

    // What the collaborating parties hold: their own slots plus broadcasts.
    let known_shifts: Vec<Option<u8>> = (1..=n)
        .map(|s| (shift_shared[s] || !abstains(s)).then_some(measured_shifts[s - 1]))
        .collect();
    let known_sigmas: Vec<Option<i8>> = (1..=n)
        .map(|s| (sigma_shared[s] || !abstains(s)).then_some(sigmas[s - 1]))
        .collect();
    let decoded =
        if known_shifts.iter().all(Option::is_some) && known_sigmas.iter().all(Option::is_some) {
            Decoded::Message {
                message: reconstruct_message(&measured_shifts, &sigmas)?,
            }
        } else {
            let parity: i8 = known_sigmas.iter().flatten().product();
            Decoded::Undecodable {
                known_shifts: known_shifts.clone(),
                known_sigmas: known_sigmas.clone(),
                sign_guess: if parity == 1 { 0 } else { 1 },
            }
        };

    let ledger = build_ledger(n, &events, &known_shifts, &known_sigmas)?;
    Ok(RunOutput {
        transcript: Transcript {
            schema_version: TRANSCRIPT_SCHEMA.to_string(),
            n,
            seed,
            message: message.clone(),
            options: options.clone(),
            events,
            decoded,
            ledger,
        },
        diagnostics: RunDiagnostics {
            round1_probabilities,
            round1_fidelity,
            encoded,
        },
    })
}

fn build_ledger(
    n: usize,
    events: &[Event],
    known_shifts: &[Option<u8>],
    known_sigmas: &[Option<i8>],
) -> Result<CommunicationLedger> {
    let count = |pred: fn(&Event) -> bool| events.iter().filter(|e| pred(e)).count();
    let round1 = count(|e| matches!(e, Event::Broadcast1 { .. }));
    let round2 = count(|e| matches!(e, Event::Broadcast2 { .. }));
    let transfers = count(|e| matches!(e, Event::Transfer { .. }));
    let unknown_shifts = known_shifts.iter().filter(|s| s.is_none()).count() as i32;
    let sign_unknown = known_sigmas.iter().any(Option::is_none);
    let total = message_count(n)? as f64;
    let ambiguity = 3f64.powi(unknown_shifts) * if sign_unknown { 2.0 } else { 1.0 };
    Ok(CommunicationLedger {
        qutrits_sent_by_sender: transfers,
        receiver_round1_bits: round1 as f64 * 3f64.log2(),
        receiver_round2_bits: round2 as f64,
        receiver_round1_encoded_bits: 2 * round1 as u64,
        broadcast_events: round1 + round2,
        decoded_bits: (total / ambiguity).log2(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "at", content = "index", rename_all = "snake_case")]
pub enum Divergence {
    Event(usize),
    Decoded,
    Ledger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ReplayVerdict {
    Match,
    Mismatch {
        location: Divergence,
        recorded: String,
        recomputed: String,
    },
}

/// Re-runs a transcript from its seed and options and reports the first
/// place where the recorded run and the fresh one disagree.
pub fn replay(transcript: &Transcript) -> Result<ReplayVerdict> {
    if transcript.schema_version != TRANSCRIPT_SCHEMA {
        return Err(QdcError::Format(format!(
            "unsupported transcript schema {:?}",
            transcript.schema_version
        )));
    }
    let fresh = run_with_options(
        transcript.n,
        &transcript.message,
        transcript.seed,
        &transcript.options,
    )?
    .transcript;
    let show = |e: Option<&Event>| e.map_or_else(|| "<end>".to_string(), |e| format!("{e:?}"));
    let longest = transcript.events.len().max(fresh.events.len());
    for i in 0..longest {
        let (recorded, recomputed) = (transcript.events.get(i), fresh.events.get(i));
        if recorded != recomputed {
            return Ok(ReplayVerdict::Mismatch {
                location: Divergence::Event(i),
                recorded: show(recorded),
                recomputed: show(recomputed),
            });
        }
    }
    if transcript.decoded != fresh.decoded {
        return Ok(ReplayVerdict::Mismatch {
            location: Divergence::Decoded,
            recorded: format!("{:?}", transcript.decoded),
            recomputed: format!("{:?}", fresh.decoded),
        });
    }
    // Bitwise: ledgers are derived from identical event lists.
    if transcript.ledger != fresh.ledger {
        return Ok(ReplayVerdict::Mismatch {
            location: Divergence::Ledger,
            recorded: format!("{:?}", transcript.ledger),
            recomputed: format!("{:?}", fresh.ledger),
        });
    }
    Ok(ReplayVerdict::Match)
}
