//! Collective verification of entangled states.
//!
//! A source claims to emit copies of a target state |ψ⟩. Instead of testing
//! copies one at a time, the collective scheme projects a k-copy ensemble
//! onto the symmetric subspace of a cyclic shift (one ancilla qubit drives
//! the controlled permutation), then runs a standard two-outcome
//! verification measurement on a random size-t subset. This crate provides:
//!
//! - a dense operator engine evaluating the scheme exactly at desk scale
//!   ([`protocol`]),
//! - the closed-form passing probabilities, round/sample complexities, and
//!   post-selected output qualities for five noise scenarios ([`formulas`]),
//! - noisy-ensemble constructors ([`noise`]) and target-state builders
//!   ([`states`]),
//! - a compiler from the controlled cyclic shift to Fredkin-level circuits
//!   with a text format and a two-party variant ([`circuit`]),
//! - a seeded Monte Carlo runner whose statistics are identical in
//!   sequential and parallel execution (`parallel` feature, on by default).

pub mod circuit;
pub mod error;
pub mod formulas;
pub mod matrix;
pub mod noise;
pub mod protocol;
pub mod qstate;
pub mod states;

pub use error::{Error, Result};
pub use matrix::CMatrix;
pub use noise::{NoiseKind, NoiseSpec};
pub use protocol::{RoundOutcome, RunStats, Scheme};
pub use qstate::{fidelity, DensityMatrix, Operator, StateVector};
pub use states::Strategy;
