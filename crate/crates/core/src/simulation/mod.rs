//! Party-level protocol harness.
//!
//! A run prepares the channel, lets the sender encode and ship qutrits, then
//! has every receiver slot measure its pair with the projectors, broadcast
//! the shift, measure in the coherent basis that shift selects, and
//! broadcast the sign. Everything random is drawn from one seeded ChaCha
//! stream, so the seed and options recorded in a [`Transcript`] reproduce
//! the run exactly.

mod branches;
mod exhaustive;
mod roster;
mod run;
mod transcript;

pub use branches::{
    abstention_secrecy, enumerate_branches, marginal, sign_distribution, Branch, BranchEnumeration,
    SecrecyReport,
};
pub use exhaustive::{
    run_batch, run_exhaustive, BatchLimits, BatchReport, MessageStats, DEFAULT_WORK_BUDGET,
};
pub use roster::PartyRoster;
pub use run::{
    replay, run_protocol, run_with_abstention, run_with_cap, run_with_options, Divergence,
    ReplayVerdict, RunDiagnostics, RunOutput,
};
pub use transcript::{
    CommunicationLedger, Decoded, Event, RunOptions, Transcript, TRANSCRIPT_SCHEMA,
};
