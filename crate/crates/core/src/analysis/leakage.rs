use serde::Serialize;

use crate::error::Result;
use crate::hilbert::{partial_trace, DensityMatrix, DEFAULT_AMPLITUDE_CAP, SUM_TOL};
use crate::linalg;
use crate::protocol::{channel_state_with_cap, encode, MessageWord, ReceiverPair};

/// What one receiver's pair reveals about the message before any broadcast.
#[derive(Debug, Clone, Serialize)]
pub struct LeakageReport {
    pub n: usize,
    pub slot: usize,
    pub distinguishable_classes: usize,
    pub class_sizes: Vec<usize>,
    /// The slot's own shift, when every message of a class shares it.
    pub class_shift: Vec<Option<u8>>,
    /// Whether reduced states of different classes have orthogonal supports.
    pub orthogonal_supports: bool,
    /// `log₂(classes)` when supports are orthogonal, otherwise unset.
    pub leaked_bits: Option<f64>,
    pub max_pairwise_trace_distance_within_class: f64,
    pub min_trace_distance_across_classes: f64,
}

impl LeakageReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "receivers {}  slot {}\nclasses {}  sizes {:?}\n",
            self.n, self.slot, self.distinguishable_classes, self.class_sizes
        );
        match self.leaked_bits {
            Some(bits) => out += &format!("leaked {bits:.6} bits (orthogonal supports)\n"),
            None => out += "leaked bits undefined (supports overlap)\n",
        }
        out += &format!(
            "max within-class trace distance {:.6}\nmin across-class trace distance {:.6}\n",
            self.max_pairwise_trace_distance_within_class, self.min_trace_distance_across_classes
        );
        out
    }
}

pub fn receiver_leakage(n: usize, slot: usize) -> Result<LeakageReport> {
    receiver_leakage_with_cap(n, slot, DEFAULT_AMPLITUDE_CAP)
}

/// Groups all `2·3^N` messages by the reduced state of `slot`'s
/// (qutrit, qubit) pair; states within trace distance `1e-10` share a class.
pub fn receiver_leakage_with_cap(n: usize, slot: usize, cap: usize) -> Result<LeakageReport> {
    let pair = ReceiverPair::for_slot(n, slot)?;
    let channel = channel_state_with_cap(n, cap)?;
    let mut reduced: Vec<(MessageWord, DensityMatrix)> = vec![];
    for m in MessageWord::all(n)? {
        let rho = partial_trace(&encode(&channel, &m)?, &pair.targets())?;
        reduced.push((m, rho));
    }

    // Each class is (representative index, member indices).
    let mut classes: Vec<(usize, Vec<usize>)> = vec![];
    for (i, (_, rho)) in reduced.iter().enumerate() {
        let mut placed = false;
        for (rep, members) in classes.iter_mut() {
            if rho.trace_distance(&reduced[*rep].1)? <= SUM_TOL {
                members.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push((i, vec![i]));
        }
    }

    let mut within: f64 = 0.0;
    for (_, members) in &classes {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                within = within.max(reduced[i].1.trace_distance(&reduced[j].1)?);
            }
        }
    }
    let mut across = f64::INFINITY;
    let mut orthogonal = true;
    for (x, (ri, _)) in classes.iter().enumerate() {
        for (rj, _) in &classes[x + 1..] {
            let (a, b) = (reduced[*ri].1.matrix(), reduced[*rj].1.matrix());
            across = across.min(linalg::trace_distance(a, b));
            if a.dot(b).iter().any(|z| z.norm() > SUM_TOL) {
                orthogonal = false;
            }
        }
    }
    if classes.len() < 2 {
        across = 0.0;
    }

    let class_shift = classes
        .iter()
        .map(|(_, members)| {
            let shift = reduced[members[0]].0.shifts()[slot - 1];
            members
                .iter()
                .all(|&i| reduced[i].0.shifts()[slot - 1] == shift)
                .then_some(shift)
        })
        .collect();
    Ok(LeakageReport {
        n,
        slot,
        distinguishable_classes: classes.len(),
        class_sizes: classes.iter().map(|(_, m)| m.len()).collect(),
        class_shift,
        orthogonal_supports: orthogonal,
        leaked_bits: orthogonal.then(|| (classes.len() as f64).log2()),
        max_pairwise_trace_distance_within_class: within,
        min_trace_distance_across_classes: across,
    })
}
