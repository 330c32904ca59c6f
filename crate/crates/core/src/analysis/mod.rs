//! Quantitative reports over encoded states and protocol runs.

mod leakage;

use serde::Serialize;

use crate::error::{QdcError, Result};
use crate::hilbert::{inner_product, MixedRadixState};
use crate::protocol::{message_count, MessageWord};
use crate::simulation::{run_protocol, PartyRoster};

pub use leakage::{receiver_leakage, receiver_leakage_with_cap, LeakageReport};

/// Messages above this count are not enumerated for the capacity cross-check.
const ENUMERATION_LIMIT: u64 = 2_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    pub n: usize,
    /// `1 + N·log₂3`.
    pub bound_bits: f64,
    pub message_count: u64,
    /// Whether `message_count` was obtained by enumerating every message.
    pub enumerated: bool,
    /// Ideal broadcast cost per receiver: one trit and one sign bit.
    pub per_receiver_broadcast_bits: f64,
}

pub fn capacity_bound(n: usize) -> Result<CapacityReport> {
    let formula = message_count(n)?;
    let (count, enumerated) = if formula <= ENUMERATION_LIMIT {
        let counted = MessageWord::all(n)?.count() as u64;
        if counted != formula {
            return Err(QdcError::Argument(format!(
                "enumerated {counted} messages, expected {formula}"
            )));
        }
        (counted, true)
    } else {
        (formula, false)
    };
    Ok(CapacityReport {
        n,
        bound_bits: 1.0 + n as f64 * 3f64.log2(),
        message_count: count,
        enumerated,
        per_receiver_broadcast_bits: 3f64.log2() + 1.0,
    })
}

impl CapacityReport {
    pub fn to_text(&self) -> String {
        format!(
            "receivers            {}\nmessages             {}\ncapacity bound       {:.6} bits\nbroadcast/receiver   {:.6} bits\n",
            self.n, self.message_count, self.bound_bits, self.per_receiver_broadcast_bits
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GramReport {
    pub size: usize,
    /// Row-major inner products `⟨ψᵢ|ψⱼ⟩` as `[re, im]`.
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub max_off_diagonal: f64,
    pub max_diagonal_deviation: f64,
    /// Zero-based indices of the largest off-diagonal entry.
    pub worst_pair: Option<(usize, usize)>,
}

impl GramReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_off_diagonal.max(self.max_diagonal_deviation)
    }
}

pub fn gram_report(states: &[MixedRadixState]) -> Result<GramReport> {
    if states.is_empty() {
        return Err(QdcError::Argument("no states".into()));
    }
    let mut matrix = vec![vec![[0.0; 2]; states.len()]; states.len()];
    let mut max_off_diagonal: f64 = 0.0;
    let mut max_diagonal_deviation: f64 = 0.0;
    let mut worst_pair = None;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let g = inner_product(a, b)?;
            matrix[i][j] = [g.re, g.im];
            if i == j {
                max_diagonal_deviation = max_diagonal_deviation.max((g - 1.0).norm());
            } else if g.norm() > max_off_diagonal {
                max_off_diagonal = g.norm();
                worst_pair = Some((i, j));
            }
        }
    }
    Ok(GramReport {
        size: states.len(),
        matrix,
        max_off_diagonal,
        max_diagonal_deviation,
        worst_pair,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRow {
    pub mode: String,
    pub parties: usize,
    pub decoded_bits: f64,
    /// Receiver-to-receiver broadcasts at `log₂3` per trit and 1 per sign.
    pub broadcast_bits: f64,
    /// Same broadcasts with trits sent as two bits each.
    pub broadcast_encoded_bits: f64,
    pub broadcast_events: usize,
    pub net_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub modes: Vec<ModeRow>,
    pub note: String,
}

/// Ledger figures of one honest run in each receiver grouping. Ledgers
/// depend only on event counts, which are the same for every message and
/// seed, so a single run per mode suffices.
pub fn communication_comparison(n: usize) -> Result<ComparisonReport> {
    if n < 2 {
        return Err(QdcError::Argument(
            "comparison needs at least two receivers".into(),
        ));
    }
    let message = MessageWord::from_index(n, 0)?;
    let modes = [
        ("multi-receiver", PartyRoster::one_per_slot(n)),
        ("single-receiver", PartyRoster::single_party(n)),
    ]
    .into_iter()
    .map(|(name, roster)| {
        let t = run_protocol(n, &message, 0, &roster)?;
        let l = &t.ledger;
        Ok(ModeRow {
            mode: name.to_string(),
            parties: roster.party_count(),
            decoded_bits: l.decoded_bits,
            broadcast_bits: l.broadcast_bits(),
            broadcast_encoded_bits: l.receiver_round1_encoded_bits as f64 + l.receiver_round2_bits,
            broadcast_events: l.broadcast_events,
            net_bits: l.decoded_bits - l.broadcast_bits(),
        })
    })
    .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        n,
        modes,
        note: "Both groupings decode the full message. Only the multi-receiver grouping \
               spends receiver-to-receiver broadcasts; net_bits is decoded minus broadcast \
               bits and is one possible accounting, not a derived bound."
            .into(),
    })
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<16} {:>7} {:>12} {:>14} {:>14} {:>7} {:>12}\n",
            "mode", "parties", "decoded", "broadcast", "broadcast(2b)", "events", "net"
        );
        for r in &self.modes {
            out += &format!(
                "{:<16} {:>7} {:>12.6} {:>14.6} {:>14.6} {:>7} {:>12.6}\n",
                r.mode,
                r.parties,
                r.decoded_bits,
                r.broadcast_bits,
                r.broadcast_encoded_bits,
                r.broadcast_events,
                r.net_bits
            );
        }
        out += &format!("note: {}\n", self.note);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{canonical_labels, canonical_state};

    #[test]
    fn capacity_values() {
        let r = capacity_bound(2).unwrap();
        assert!((r.bound_bits - 18f64.log2()).abs() < 1e-12);
        assert!((r.bound_bits - 4.169925).abs() < 1e-6);
        assert_eq!(r.message_count, 18);
        let r = capacity_bound(1).unwrap();
        assert!((r.bound_bits - 2.584963).abs() < 1e-6);
        let r = capacity_bound(5).unwrap();
        assert_eq!(r.message_count, 486);
        assert!(r.enumerated);
        assert!((r.bound_bits - 486f64.log2()).abs() < 1e-12);
        assert!(capacity_bound(0).is_err());
        assert!(r.to_text().contains("bits"));
    }

    #[test]
    fn gram_of_table() {
        let states: Vec<_> = canonical_labels()
            .map(|(k, s)| canonical_state(k, s).unwrap())
            .collect();
        let r = gram_report(&states).unwrap();
        assert_eq!(r.size, 18);
        assert!(r.max_deviation() < 1e-12);
        let one = gram_report(&states[..1]).unwrap();
        assert_eq!(one.size, 1);
        assert!((one.matrix[0][0][0] - 1.0).abs() < 1e-12 && one.matrix[0][0][1] == 0.0);
        assert!(gram_report(&[]).is_err());
    }

    #[test]
    fn gram_names_duplicate() {
        let s = canonical_state(3, crate::protocol::Sign::Plus).unwrap();
        let r = gram_report(&[
            s.clone(),
            canonical_state(1, crate::protocol::Sign::Plus).unwrap(),
            s,
        ])
        .unwrap();
        assert_eq!(r.worst_pair, Some((0, 2)));
        assert!((r.max_off_diagonal - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_rows() {
        let r = communication_comparison(2).unwrap();
        let multi = &r.modes[0];
        let single = &r.modes[1];
        assert!((multi.decoded_bits - 18f64.log2()).abs() < 1e-12);
        assert!((multi.broadcast_bits - (2.0 * 3f64.log2() + 2.0)).abs() < 1e-12);
        assert_eq!(single.broadcast_bits, 0.0);
        assert_eq!(single.broadcast_events, 0);
        assert!((single.decoded_bits - 18f64.log2()).abs() < 1e-12);
        assert!(communication_comparison(1).is_err());
        assert!(r.to_text().contains("single-receiver"));
    }
}
