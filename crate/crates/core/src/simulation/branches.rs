//! Exact enumeration of measurement branches.
//!
//! Nothing here samples: every branch is carried as an unnormalized vector
//! whose squared norm is its joint Born probability.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{QdcError, Result};
use crate::hilbert::{apply_local, MixedRadixState, NEGLIGIBLE_PROBABILITY};
use crate::protocol::{
    channel_state, encode, projector_outcome_to_shift, reconstruct_message, CoherentBasis,
    MessageWord, PairProjectorSet, ReceiverPair,
};

/// One complete path through both decoding rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    /// One-based projector label per slot.
    pub round1: Vec<usize>,
    pub sigmas: Vec<i8>,
    pub probability: f64,
}

impl Branch {
    pub fn decode(&self) -> Result<MessageWord> {
        let shifts = self
            .round1
            .iter()
            .map(|&k| projector_outcome_to_shift(k))
            .collect::<Result<Vec<_>>>()?;
        reconstruct_message(&shifts, &self.sigmas)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchEnumeration {
    pub branches: Vec<Branch>,
    /// Total weight on paths where some coherent measurement lands in the
    /// complement subspace.
    pub complement_probability: f64,
}

/// Every round-1 × round-2 outcome path of an honest run on `message`,
/// with slots measuring in ascending order.
pub fn enumerate_branches(message: &MessageWord) -> Result<BranchEnumeration> {
    let n = message.n_receivers();
    let encoded = encode(&channel_state(n)?, message)?;
    let pairs: Vec<ReceiverPair> = (1..=n)
        .map(|s| ReceiverPair::for_slot(n, s))
        .collect::<Result<_>>()?;

    let mut round1: Vec<(Vec<usize>, MixedRadixState)> = vec![(vec![], encoded)];
    for pair in &pairs {
        let set = PairProjectorSet::get().on(*pair)?;
        let mut next = vec![];
        for (labels, state) in &round1 {
            for (k, p) in set.projectors().iter().enumerate() {
                let projected = apply_local(state, p)?;
                if projected.norm().powi(2) >= NEGLIGIBLE_PROBABILITY {
                    let mut labels = labels.clone();
                    labels.push(k + 1);
                    next.push((labels, projected));
                }
            }
        }
        round1 = next;
    }

    let mut branches = vec![];
    let mut complement_probability = 0.0;
    for (labels, state) in round1 {
        let shifts: Vec<u8> = labels
            .iter()
            .map(|&k| projector_outcome_to_shift(k))
            .collect::<Result<_>>()?;
        let mut paths: Vec<(Vec<i8>, MixedRadixState)> = vec![(vec![], state)];
        for (pair, &a) in pairs.iter().zip(&shifts) {
            let basis = CoherentBasis::get(a)?;
            let measurement = basis.on(*pair)?;
            let mut next = vec![];
            for (sigmas, s) in &paths {
                for (k, p) in measurement.projectors().iter().enumerate() {
                    let projected = apply_local(s, p)?;
                    let weight = projected.norm().powi(2);
                    if weight < NEGLIGIBLE_PROBABILITY {
                        continue;
                    }
                    if k == 2 {
                        complement_probability += weight;
                        continue;
                    }
                    let mut sigmas = sigmas.clone();
                    sigmas.push(if k == 0 { 1 } else { -1 });
                    next.push((sigmas, projected));
                }
            }
            paths = next;
        }
        for (sigmas, s) in paths {
            branches.push(Branch {
                round1: labels.clone(),
                sigmas,
                probability: s.norm().powi(2),
            });
        }
    }
    Ok(BranchEnumeration {
        branches,
        complement_probability,
    })
}

/// Exact joint distribution of all round-2 signs on `state` when slot `i`
/// measures in the coherent basis for `shifts[i-1]`. Every one of the `2^N`
/// sign patterns is listed, zero-weight ones included.
pub fn sign_distribution(state: &MixedRadixState, shifts: &[u8]) -> Result<Vec<(Vec<i8>, f64)>> {
    let n = shifts.len();
    if state.layout().len() != 2 * n {
        return Err(QdcError::Argument(format!(
            "{} shifts for a {}-subsystem state",
            n,
            state.layout().len()
        )));
    }
    let mut out = Vec::with_capacity(1 << n);
    for pattern in 0..(1u32 << n) {
        let sigmas: Vec<i8> = (0..n)
            .map(|i| {
                if pattern >> (n - 1 - i) & 1 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let mut projected = state.clone();
        for (i, (&a, &sigma)) in shifts.iter().zip(&sigmas).enumerate() {
            let p =
                CoherentBasis::get(a)?.sign_projector(sigma, ReceiverPair::for_slot(n, i + 1)?)?;
            projected = apply_local(&projected, &p)?;
        }
        out.push((sigmas, projected.norm().powi(2)));
    }
    Ok(out)
}

/// Marginal over the one-based `slots`, keyed by their signs in the listed order.
pub fn marginal(distribution: &[(Vec<i8>, f64)], slots: &[usize]) -> BTreeMap<Vec<i8>, f64> {
    let mut out = BTreeMap::new();
    for (sigmas, p) in distribution {
        let key: Vec<i8> = slots.iter().map(|&s| sigmas[s - 1]).collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SecrecyReport {
    pub n: usize,
    pub subset: Vec<usize>,
    /// Largest `|P(σ_S | b=0) − P(σ_S | b=1)|` over all shift vectors and patterns.
    pub max_sign_deviation: f64,
    /// Largest change of `P(σ_S)` when only shifts outside `S` vary.
    pub max_outside_shift_deviation: f64,
    /// `P(σ_S)` for the all-zero message, for reference.
    pub reference: BTreeMap<String, f64>,
}

/// Compares the exact joint law of the signs in `subset` across every
/// message of `n` receivers.
pub fn abstention_secrecy(n: usize, subset: &[usize]) -> Result<SecrecyReport> {
    if subset.len() >= n || subset.iter().any(|&s| s == 0 || s > n) {
        return Err(QdcError::Argument(format!(
            "{subset:?} is not a strict subset of the slots 1..={n}"
        )));
    }
    let channel = channel_state(n)?;
    let mut by_shifts: BTreeMap<Vec<u8>, [BTreeMap<Vec<i8>, f64>; 2]> = BTreeMap::new();
    for message in MessageWord::all(n)? {
        let encoded = encode(&channel, &message)?;
        let shifts = message.shifts();
        let dist = marginal(&sign_distribution(&encoded, &shifts)?, subset);
        by_shifts.entry(shifts).or_default()[message.sign() as usize] = dist;
    }

    let deviation = |a: &BTreeMap<Vec<i8>, f64>, b: &BTreeMap<Vec<i8>, f64>| {
        a.keys()
            .chain(b.keys())
            .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max)
    };
    let mut max_sign_deviation: f64 = 0.0;
    let mut inside_reference: BTreeMap<Vec<u8>, &BTreeMap<Vec<i8>, f64>> = BTreeMap::new();
    let mut max_outside_shift_deviation: f64 = 0.0;
    for (shifts, [plus, minus]) in &by_shifts {
        max_sign_deviation = max_sign_deviation.max(deviation(plus, minus));
        let inside: Vec<u8> = subset.iter().map(|&s| shifts[s - 1]).collect();
        for dist in [plus, minus] {
            let reference = *inside_reference.entry(inside.clone()).or_insert(dist);
            max_outside_shift_deviation =
                max_outside_shift_deviation.max(deviation(reference, dist));
        }
    }
    let zero = &by_shifts[&vec![0u8; n]][0];
    let reference = zero
        .iter()
        .map(|(k, p)| {
            let key: String = k.iter().map(|&s| if s == 1 { '+' } else { '-' }).collect();
            (key, *p)
        })
        .collect();
    Ok(SecrecyReport {
        n,
        subset: subset.to_vec(),
        max_sign_deviation,
        max_outside_shift_deviation,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n2_branches_are_two_equal_halves() {
        let m = MessageWord::from_components(&[1, 1, 0]).unwrap();
        let e = enumerate_branches(&m).unwrap();
        assert!(e.complement_probability < 1e-12);
        assert_eq!(e.branches.len(), 2);
        for b in &e.branches {
            assert_eq!(b.round1, vec![2, 1]);
            assert!((b.probability - 0.5).abs() < 1e-12);
            assert_eq!(b.sigmas[0] * b.sigmas[1], -1);
            assert_eq!(b.decode().unwrap(), m);
        }
    }

    #[test]
    fn sign_of_single_slot_is_uniform() {
        let plus = encode(
            &channel_state(2).unwrap(),
            &MessageWord::from_components(&[0, 0, 0]).unwrap(),
        )
        .unwrap();
        let d = marginal(&sign_distribution(&plus, &[0, 0]).unwrap(), &[1]);
        assert_eq!(d.len(), 2);
        for p in d.values() {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn full_set_is_not_secret() {
        assert!(abstention_secrecy(2, &[1, 2]).is_err());
        assert!(abstention_secrecy(2, &[3]).is_err());
    }
}
