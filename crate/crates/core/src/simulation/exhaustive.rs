use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::roster::PartyRoster;
use super::run::run_with_cap;
use super::transcript::RunOptions;
use crate::error::{QdcError, Result};
use crate::hilbert::{DEFAULT_AMPLITUDE_CAP, EXACT_TOL};
use crate::protocol::{message_count, MessageWord};

/// Upper bound on `runs × 6^N`, a proxy for wall-clock cost.
pub const DEFAULT_WORK_BUDGET: u64 = 500_000_000;

#[derive(Debug, Clone, Copy)]
pub struct BatchLimits {
    pub work_budget: u64,
    pub amplitude_cap: usize,
}

impl Default for BatchLimits {
    fn default() -> Self {
        Self {
            work_budget: DEFAULT_WORK_BUDGET,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MessageStats {
    pub index: u64,
    pub message: MessageWord,
    /// Round-1 projector labels seen, keyed `"P2,P1"`, with counts.
    pub round1_outcomes: BTreeMap<String, u64>,
    /// Round-2 sign patterns seen, keyed `"+-"`, with counts.
    pub sigma_patterns: BTreeMap<String, u64>,
    pub decoded_correctly: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub n: usize,
    pub seeds: u64,
    pub runs: u64,
    pub decoded_correctly: u64,
    /// Runs with `Πσᵢ = (−1)^b`.
    pub parity_law_held: u64,
    /// Runs whose round-1 outcomes all had probability 1 and left the state unchanged.
    pub round1_non_disturbing: u64,
    pub max_round1_probability_deviation: f64,
    pub max_round1_fidelity_deviation: f64,
    pub violations: Vec<String>,
    pub per_message: Vec<MessageStats>,
}

impl BatchReport {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
            && self.decoded_correctly == self.runs
            && self.parity_law_held == self.runs
            && self.round1_non_disturbing == self.runs
    }
}

/// Every message of `n` receivers on seeds `0..seeds`, default roster.
pub fn run_exhaustive(n: usize, seeds: u64) -> Result<BatchReport> {
    let messages: Vec<MessageWord> = MessageWord::all(n)?.collect();
    run_batch(
        n,
        &messages,
        seeds,
        &PartyRoster::one_per_slot(n),
        BatchLimits::default(),
    )
}

/// Runs each message on seeds `0..seeds` in parallel and reduces in
/// (message, seed) order, so the report does not depend on scheduling.
pub fn run_batch(
    n: usize,
    messages: &[MessageWord],
    seeds: u64,
    roster: &PartyRoster,
    limits: BatchLimits,
) -> Result<BatchReport> {
    message_count(n)?;
    let dim = 6f64.powi(n as i32);
    let runs = messages.len() as u64 * seeds;
    let work = runs as f64 * dim;
    if work > limits.work_budget as f64 {
        return Err(QdcError::CapacityLimit(format!(
            "{runs} runs on {dim} amplitudes exceed the work budget of {}",
            limits.work_budget
        )));
    }
    let options = RunOptions::with_roster(n, roster.clone());
    let jobs: Vec<(usize, u64)> = (0..messages.len())
        .flat_map(|m| (0..seeds).map(move |s| (m, s)))
        .collect();
    let outputs = jobs
        .par_iter()
        .map(|&(m, seed)| run_with_cap(n, &messages[m], seed, &options, limits.amplitude_cap))
        .collect::<Result<Vec<_>>>()?;

    let mut report = BatchReport {
        n,
        seeds,
        runs,
        decoded_correctly: 0,
        parity_law_held: 0,
        round1_non_disturbing: 0,
        max_round1_probability_deviation: 0.0,
        max_round1_fidelity_deviation: 0.0,
        violations: vec![],
        per_message: messages
            .iter()
            .map(|m| MessageStats {
                index: m.index(),
                message: m.clone(),
                round1_outcomes: BTreeMap::new(),
                sigma_patterns: BTreeMap::new(),
                decoded_correctly: 0,
            })
            .collect(),
    };
    for (&(m, seed), out) in jobs.iter().zip(&outputs) {
        let t = &out.transcript;
        let message = &messages[m];
        let stats = &mut report.per_message[m];

        let mut r1 = t.round1_outcomes();
        r1.sort_unstable();
        let r1_key: Vec<String> = r1.iter().map(|(_, k)| format!("P{k}")).collect();
        *stats.round1_outcomes.entry(r1_key.join(",")).or_insert(0) += 1;
        let sigmas = t.sigmas();
        let sigma_key: String = sigmas
            .iter()
            .map(|&s| if s == 1 { '+' } else { '-' })
            .collect();
        *stats.sigma_patterns.entry(sigma_key).or_insert(0) += 1;

        if t.decoded.message() == Some(message) {
            report.decoded_correctly += 1;
            stats.decoded_correctly += 1;
        } else {
            report.violations.push(format!(
                "message {message} seed {seed}: decoded {:?}",
                t.decoded
            ));
        }
        let parity: i8 = sigmas.iter().product();
        if parity == if message.sign() == 0 { 1 } else { -1 } {
            report.parity_law_held += 1;
        } else {
            report.violations.push(format!(
                "message {message} seed {seed}: sign parity {parity}"
            ));
        }
        let d = &out.diagnostics;
        let p_dev = d
            .round1_probabilities
            .iter()
            .map(|p| (p - 1.0).abs())
            .fold(0.0, f64::max);
        let f_dev = (d.round1_fidelity - 1.0).abs();
        report.max_round1_probability_deviation =
            report.max_round1_probability_deviation.max(p_dev);
        report.max_round1_fidelity_deviation = report.max_round1_fidelity_deviation.max(f_dev);
        if p_dev <= EXACT_TOL && f_dev <= EXACT_TOL {
            report.round1_non_disturbing += 1;
        } else {
            report.violations.push(format!(
                "message {message} seed {seed}: round 1 disturbed the state (p dev {p_dev:e}, fidelity dev {f_dev:e})"
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exhaustive_runs() {
        let r = run_exhaustive(1, 1).unwrap();
        assert_eq!((r.decoded_correctly, r.runs), (6, 6));
        assert!(r.all_ok());
        let r = run_exhaustive(2, 10).unwrap();
        assert_eq!((r.decoded_correctly, r.runs), (180, 180));
        assert!(r.all_ok());
        assert_eq!(r.per_message.len(), 18);
    }

    #[test]
    fn budget_is_enforced() {
        let messages: Vec<_> = MessageWord::all(2).unwrap().collect();
        let limits = BatchLimits {
            work_budget: 18 * 36 - 1,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
        };
        assert!(matches!(
            run_batch(2, &messages, 1, &PartyRoster::one_per_slot(2), limits),
            Err(QdcError::CapacityLimit(_))
        ));
    }
}
