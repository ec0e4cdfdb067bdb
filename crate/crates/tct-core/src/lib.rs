// SPDX-License-Identifier: Apache-2.0

//! Core of a theorem-carrying-transaction chain: a minimal contract
//! language, a tracing interpreter, path hashing and straight-line (SSA)
//! extraction, verification-condition generation over modular-arithmetic
//! axioms, an external SMT solver driver, a persistent theorem repository,
//! and a deterministic multi-node protocol simulation.
//!
//! The flow, end to end: a contract in the MiniSol language is parsed and
//! inheritance-flattened ([`minisol`]); transactions execute with full trace
//! recording ([`interp`]); a trace's control-flow projection is hashed and
//! its straight-line program extracted ([`trace`]); proof obligations are
//! built from the straight-line program plus declared invariants and a
//! hypothesis ([`vcgen`]); an external SMT process decides them ([`solver`]);
//! proven theorems are cached and reused ([`repo`]); and validating nodes
//! gate every state change on a matching theorem ([`protocol`]).

pub mod interp;
pub mod minisol;
pub mod protocol;
pub mod repo;
pub mod solver;
pub mod trace;
pub mod vcgen;
pub mod word;

pub use word::{Address, Digest, Word256};
