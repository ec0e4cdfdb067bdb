// SPDX-License-Identifier: Apache-2.0

//! Library half of the command-line harness: the scenario language and its
//! runner, plus the one-shot setup and dump plumbing the CLI verbs share.

pub mod ops;
pub mod scenario;
