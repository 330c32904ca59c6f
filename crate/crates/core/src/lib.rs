//! Simulator for multi-receiver dense coding over a qutrit-qubit channel.
//!
//! A sender holding `N` qutrits shares `(|0…0⟩ + |1…1⟩)/√2` with `N`
//! receivers holding one qubit each. The sender encodes `1 + N·log₂3` bits
//! with local qutrit unitaries and ships each qutrit to its receiver, who
//! decodes in two measure-and-broadcast rounds.
//!
//! - [`hilbert`]: mixed-radix state vectors, local operators, measurement, partial trace
//! - [`protocol`]: encoding unitaries, channel states, projectors and decoding algebra
//! - [`simulation`]: party harness, transcripts, exhaustive driver, replay
//! - [`analysis`]: capacity, Gram, leakage and communication reports

pub mod analysis;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod protocol;
pub mod simulation;

pub use error::{QdcError, Result};
