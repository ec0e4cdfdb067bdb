// SPDX-License-Identifier: Apache-2.0

//! The three-party protocol simulation: transaction issuer, pre-execution
//! service, and N validating nodes over a deterministic in-process bus.
//!
//! Messages are totally ordered; every node processes the same sequence, so
//! honest nodes hold byte-identical worlds, repos, and block logs at every
//! prefix. Node 0 doubles as the pre-execution service: it matches incoming
//! transactions against its theorem repository before anything is broadcast.
//!
//! Three workflows:
//! - **A** — a transaction with no applicable theorem is answered with
//!   `NeedTheorem`; the issuer proves one under a hypothesis of its choosing
//!   and resubmits the transaction together with the theorem and its sample
//!   bundle; nodes verify, store, and then validate in one message.
//! - **B** — a transaction matched by a stored theorem is broadcast with it;
//!   nodes re-check the hypothesis concretely, execute, and compare path
//!   hashes — no prover anywhere.
//! - **C** — a theorem travels alone: nodes re-derive and re-prove all of
//!   its obligations from the bundled sample transaction on scratch state,
//!   then store it. World state and block logs never change.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::interp::{ExecError, ExecStatus, Interpreter, Transaction, WorldState};
use crate::minisol::{
    check_hypothesis, eval_hypothesis, expr_to_string, parse_expression_text, parse_hypothesis,
    CodeRegistry, FunctionDef, HypothesisError, ResolvedContract,
};
use crate::repo::{EvidenceEntry, FunctionRef, RepoError, Theorem, TheoremRepo, PROVEN};
use crate::solver::{check_query, ReplayContext, SolverConfig, SolverError, Verdict};
use crate::trace::{extract_straightline, path_hash, ExtractError, GoalOrigin, PathHash, TraceError};
use crate::vcgen::{build_vc, VcError};
use crate::word::{Address, Digest, Word256};

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

/// Why a node refused to commit; attached verbatim to the issuer's response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// No stored or bundled theorem applies to the transaction.
    NoTheorem,
    /// The theorem's hypothesis is concretely false on the node's state.
    HypothesisFalse,
    /// Execution completed but its path hash differs from the theorem's.
    PathHashMismatch,
    /// The theorem's obligations could not be re-established.
    TheoremUnproven,
    /// Execution reverted; nothing to commit.
    Reverted,
    /// Execution exceeded the step limit.
    StepLimit,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::NoTheorem => "NoTheorem",
            RejectReason::HypothesisFalse => "HypothesisFalse",
            RejectReason::PathHashMismatch => "PathHashMismatch",
            RejectReason::TheoremUnproven => "TheoremUnproven",
            RejectReason::Reverted => "Reverted",
            RejectReason::StepLimit => "StepLimit",
        };
        f.write_str(s)
    }
}

impl FromStr for RejectReason {
    type Err = String;
    fn from_str(s: &str) -> Result<RejectReason, String> {
        Ok(match s {
            "NoTheorem" => RejectReason::NoTheorem,
            "HypothesisFalse" => RejectReason::HypothesisFalse,
            "PathHashMismatch" => RejectReason::PathHashMismatch,
            "TheoremUnproven" => RejectReason::TheoremUnproven,
            "Reverted" => RejectReason::Reverted,
            "StepLimit" => RejectReason::StepLimit,
            other => return Err(format!("unknown reject reason `{other}`")),
        })
    }
}

/// Everything a node needs to re-establish a theorem from scratch: the
/// sample transaction that realizes the certified path. SSA, verification
/// conditions, and proofs are all re-derived locally — nothing is trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBundle {
    pub sample: Transaction,
}

/// Bus messages, in the order the parties exchange them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Message {
    /// Issuer → service.
    SubmitTx(Transaction),
    /// Service → issuer: no applicable theorem; prove one.
    NeedTheorem { tx: u64 },
    /// Service → all nodes. The bundle travels only when the theorem is not
    /// yet stored (workflow A's combined verify-store-execute step).
    SubmitTxWithTheorem {
        tx: Transaction,
        theorem: Theorem,
        bundle: Option<TheoremBundle>,
    },
    /// Submitter → all nodes: certify without committing anything.
    SubmitTheoremOnly { theorem: Theorem, bundle: TheoremBundle },
    /// Service → issuer.
    Commit { tx: u64, block: u64 },
    /// Service → issuer.
    Reject { tx: u64, reason: RejectReason },
}

/// One committed transaction in a node's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEntry {
    pub index: u64,
    pub tx: Transaction,
    /// The theorem that admitted the transaction.
    pub theorem: Digest,
}

/// A node's answer to one broadcast transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NodeOutcome {
    Committed { block: u64 },
    Rejected(RejectReason),
}

impl fmt::Display for NodeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeOutcome::Committed { block } => write!(f, "commit(block {block})"),
            NodeOutcome::Rejected(reason) => write!(f, "reject({reason})"),
        }
    }
}

/// A node's answer to one workflow-C submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoremOutcome {
    Stored(Digest),
    Rejected(RejectReason),
}

// ---------------------------------------------------------------------------
// Counters
// ---------------------------------------------------------------------------

/// Per-node validation work. Every field counts actual events on the hot
/// path, so reuse claims are measurable rather than asserted.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidationCounters {
    /// External prover invocations (workflow A/C verification only).
    pub solver_calls: u64,
    /// Concrete hypothesis evaluations.
    pub phi_evals: u64,
    /// Interpreter runs (validation executions and scratch test-runs).
    pub executions: u64,
    /// Path-hash comparisons against a theorem.
    pub hash_checks: u64,
}

impl ValidationCounters {
    /// Field-wise difference against an earlier snapshot.
    pub fn since(&self, earlier: &ValidationCounters) -> ValidationCounters {
        ValidationCounters {
            solver_calls: self.solver_calls - earlier.solver_calls,
            phi_evals: self.phi_evals - earlier.phi_evals,
            executions: self.executions - earlier.executions,
            hash_checks: self.hash_checks - earlier.hash_checks,
        }
    }
}

/// The pre-execution service's matching work, kept apart from validation so
/// the per-commit overhead claim stays clean.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LookupCounters {
    /// Repository queries (one per submitted transaction).
    pub lookups: u64,
    /// Hypotheses evaluated during those queries.
    pub phi_evals: u64,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Environment and malformed-input failures. Everything that an honest or
/// dishonest party can trigger through the protocol itself is a
/// [`RejectReason`] instead.
#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("hypothesis: {0}")]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error("{0}")]
    BadTarget(String),
    #[error("deployment did not complete: {0:?}")]
    DeployFailed(ExecStatus),
}

// ---------------------------------------------------------------------------
// Issuer-side proving
// ---------------------------------------------------------------------------

/// One goal's fate during a proving attempt.
#[derive(Debug, Clone)]
pub struct GoalResult {
    pub origin: GoalOrigin,
    pub verdict: Verdict,
    pub detail: String,
    pub nonlinear: bool,
}

/// Everything a proving attempt learned, whether or not it succeeded.
#[derive(Debug, Clone)]
pub struct ProofReport {
    pub goals: Vec<GoalResult>,
    pub solver_calls: u64,
    pub path_hash: PathHash,
}

impl ProofReport {
    pub fn all_proven(&self) -> bool {
        self.goals.iter().all(|g| matches!(g.verdict, Verdict::Proven))
    }
}

/// Result of [`prove_for_tx`] / [`prove_deployment`].
#[derive(Debug)]
pub enum ProveOutcome {
    /// All goals proven. Deployment proofs carry no bundle: their theorems
    /// document the obligation but are not network-submittable.
    Proven {
        theorem: Theorem,
        bundle: Option<TheoremBundle>,
        report: ProofReport,
    },
    /// The hypothesis is not concretely true for the sample itself; no
    /// proof was attempted.
    HypothesisFalse,
    /// The sample's test-run did not complete.
    ExecutionFailed(ExecStatus),
    /// Obligation construction refused the path (e.g. a write outside the
    /// function's declared modifies frame).
    VcRejected(VcError),
    /// At least one goal came back refuted or unknown.
    Unproven { report: ProofReport },
}

fn prove_goals(
    registry: &CodeRegistry,
    solver: &SolverConfig,
    trace_result: &crate::interp::ExecutionResult,
    phi: &crate::minisol::Expr,
) -> Result<Result<(ProofReport, PathHash), ProveOutcome>, ProtocolError> {
    let ssa = extract_straightline(&trace_result.trace, registry)?;
    let h = path_hash(&trace_result.trace)?;
    let queries = match build_vc(&ssa, phi, registry) {
        Ok(q) => q,
        Err(e) => return Ok(Err(ProveOutcome::VcRejected(e))),
    };
    let ctx = ReplayContext { registry, ssa: &ssa, path_hash: h };
    let mut goals = Vec::new();
    let mut calls = 0u64;
    for query in &queries {
        let outcome = check_query(solver, query, &ctx)?;
        calls += u64::from(outcome.solver_calls);
        goals.push(GoalResult {
            origin: query.origin.clone(),
            verdict: outcome.verdict,
            detail: outcome.detail,
            nonlinear: query.nonlinear,
        });
    }
    Ok(Ok((ProofReport { goals, solver_calls: calls, path_hash: h }, h)))
}

fn evidence_for(report: &ProofReport, solver: &SolverConfig, checked_at: u64) -> Vec<EvidenceEntry> {
    report
        .goals
        .iter()
        .map(|g| EvidenceEntry {
            goal: g.origin.to_string(),
            verdict: PROVEN.into(),
            solver: solver.identity.clone(),
            checked_at,
        })
        .collect()
}

/// The issuer's side of workflow A (and the proving half of workflow C):
/// test-run `tx` against `world`, build every obligation under `hypothesis`,
/// and discharge them all. `checked_at` is the logical timestamp recorded in
/// the theorem's evidence; callers pass the bus clock so identical runs
/// produce identical theorems.
pub fn prove_for_tx(
    registry: &CodeRegistry,
    solver: &SolverConfig,
    world: &WorldState,
    tx: &Transaction,
    hypothesis: &str,
    checked_at: u64,
) -> Result<ProveOutcome, ProtocolError> {
    let account = world
        .account(&tx.target)
        .ok_or_else(|| ProtocolError::BadTarget(format!("no contract account at {}", tx.target)))?;
    let contract = registry
        .get(&account.code_hash)
        .ok_or_else(|| ProtocolError::BadTarget(format!("code {} not registered", account.code_hash)))?;
    let function = contract
        .function(&tx.function)
        .filter(|f| !f.is_constructor)
        .ok_or_else(|| {
            ProtocolError::BadTarget(format!("{} has no function {}", contract.name, tx.function))
        })?;
    let phi = parse_hypothesis(contract, function, hypothesis)?;
    if eval_hypothesis(function, &phi, tx.origin.to_word(), &tx.args, &account.scalars)
        != Ok(true)
    {
        return Ok(ProveOutcome::HypothesisFalse);
    }
    let result = Interpreter::new(registry).execute(world, tx)?;
    if result.status != ExecStatus::Committed {
        return Ok(ProveOutcome::ExecutionFailed(result.status));
    }
    let (report, h) = match prove_goals(registry, solver, &result, &phi)? {
        Ok(pair) => pair,
        Err(outcome) => return Ok(outcome),
    };
    if !report.all_proven() {
        return Ok(ProveOutcome::Unproven { report });
    }
    let evidence = evidence_for(&report, solver, checked_at);
    let theorem = Theorem::new(
        FunctionRef { code_hash: account.code_hash, function: tx.function.clone() },
        expr_to_string(&phi),
        h,
        evidence,
    );
    Ok(ProveOutcome::Proven {
        theorem,
        bundle: Some(TheoremBundle { sample: tx.clone() }),
        report,
    })
}

/// Prove the deployment obligation of `contract` under `hypothesis` over its
/// constructor parameters (and zero-initialized scalars): deploy on a fresh
/// world and discharge the obligations of the constructor path. Deployment
/// obligations assume no invariants — the verification conditions establish
/// them from nothing.
pub fn prove_deployment(
    registry: &CodeRegistry,
    solver: &SolverConfig,
    contract: &ResolvedContract,
    args: &[Word256],
    origin: Address,
    hypothesis: &str,
    checked_at: u64,
) -> Result<ProveOutcome, ProtocolError> {
    let empty_ctor;
    let ctor: &FunctionDef = match &contract.constructor {
        Some(f) => f,
        None => {
            empty_ctor = FunctionDef {
                name: "constructor".to_string(),
                params: Vec::new(),
                returns: None,
                body: Vec::new(),
                preconditions: Vec::new(),
                postconditions: Vec::new(),
                modifies: None,
                is_constructor: true,
            };
            &empty_ctor
        }
    };
    let phi = parse_hypothesis(contract, ctor, hypothesis)?;
    let pristine = crate::interp::Account::fresh(contract);
    if eval_hypothesis(ctor, &phi, origin.to_word(), args, &pristine.scalars) != Ok(true) {
        return Ok(ProveOutcome::HypothesisFalse);
    }
    let world = WorldState::new();
    let (_, result) = Interpreter::new(registry).deploy(&world, contract, args, origin)?;
    if result.status != ExecStatus::Committed {
        return Ok(ProveOutcome::ExecutionFailed(result.status));
    }
    let (report, h) = match prove_goals(registry, solver, &result, &phi)? {
        Ok(pair) => pair,
        Err(outcome) => return Ok(outcome),
    };
    if !report.all_proven() {
        return Ok(ProveOutcome::Unproven { report });
    }
    let evidence = evidence_for(&report, solver, checked_at);
    let theorem = Theorem::new(
        FunctionRef { code_hash: contract.code_hash, function: ctor.name.clone() },
        expr_to_string(&phi),
        h,
        evidence,
    );
    Ok(ProveOutcome::Proven { theorem, bundle: None, report })
}

// ---------------------------------------------------------------------------
// Nodes
// ---------------------------------------------------------------------------

/// Shared per-message environment handed to node operations.
struct Env<'a> {
    registry: &'a CodeRegistry,
    solver: &'a SolverConfig,
    step_limit: Option<usize>,
    debug_asserts: bool,
}

impl<'a> Env<'a> {
    fn interpreter(&self) -> Interpreter<'a> {
        let interp = Interpreter::new(self.registry).with_debug_asserts(self.debug_asserts);
        match self.step_limit {
            Some(limit) => interp.with_step_limit(limit),
            None => interp,
        }
    }
}

/// One validating node: world, theorem repository, block log, counters.
#[derive(Debug)]
pub struct Node {
    pub id: usize,
    pub world: WorldState,
    pub repo: TheoremRepo,
    pub log: Vec<BlockEntry>,
    pub counters: ValidationCounters,
    pub lookup: LookupCounters,
}

impl Node {
    fn new(id: usize) -> Node {
        Node {
            id,
            world: WorldState::new(),
            repo: TheoremRepo::in_memory(),
            log: Vec::new(),
            counters: ValidationCounters::default(),
            lookup: LookupCounters::default(),
        }
    }

    /// Canonical serialization of the consensus-relevant state — world,
    /// repository, log. Counters are intentionally excluded: the service
    /// role makes node 0's lookup work legitimately different.
    pub fn snapshot(&self) -> String {
        let world = serde_json::to_value(&self.world).expect("world serializes");
        let log = serde_json::to_value(&self.log).expect("log serializes");
        let mut out = String::from("[world]\n");
        out.push_str(&serde_json::to_string_pretty(&world).expect("json prints"));
        out.push_str("\n[repo]\n");
        out.push_str(&self.repo.canonical_json());
        out.push_str("[log]\n");
        out.push_str(&serde_json::to_string_pretty(&log).expect("json prints"));
        out.push('\n');
        out
    }

    /// Re-establish a theorem from its bundle on scratch state: check the
    /// sample satisfies φ, test-run it, confirm the path hash, then rebuild
    /// and re-prove every obligation. Nothing in the bundle is trusted.
    fn verify_theorem(
        &mut self,
        env: &Env<'_>,
        theorem: &Theorem,
        bundle: &TheoremBundle,
    ) -> Result<Result<(), RejectReason>, ProtocolError> {
        let sample = &bundle.sample;
        let Some(account) = self.world.account(&sample.target) else {
            return Ok(Err(RejectReason::TheoremUnproven));
        };
        let Some(contract) = env.registry.get(&account.code_hash) else {
            return Ok(Err(RejectReason::TheoremUnproven));
        };
        let Some(function) = contract.function(&sample.function).filter(|f| !f.is_constructor)
        else {
            return Ok(Err(RejectReason::TheoremUnproven));
        };
        if account.code_hash != theorem.f.code_hash || sample.function != theorem.f.function {
            return Ok(Err(RejectReason::TheoremUnproven));
        }
        let Ok(phi) = parse_expression_text(&theorem.hypothesis) else {
            return Ok(Err(RejectReason::TheoremUnproven));
        };
        if check_hypothesis(contract, function, &phi).is_err() {
            return Ok(Err(RejectReason::TheoremUnproven));
        }
        self.counters.phi_evals += 1;
        if eval_hypothesis(function, &phi, sample.origin.to_word(), &sample.args, &account.scalars)
            != Ok(true)
        {
            return Ok(Err(RejectReason::HypothesisFalse));
        }
        self.counters.executions += 1;
        let result = env.interpreter().execute(&self.world, sample)?;
        match result.status {
            ExecStatus::Committed => {}
            ExecStatus::Reverted => return Ok(Err(RejectReason::Reverted)),
            ExecStatus::StepLimitExceeded => return Ok(Err(RejectReason::StepLimit)),
        }
        self.counters.hash_checks += 1;
        let h = path_hash(&result.trace)?;
        if !theorem.confirm(&h) {
            return Ok(Err(RejectReason::PathHashMismatch));
        }
        let ssa = extract_straightline(&result.trace, env.registry)?;
        let Ok(queries) = build_vc(&ssa, &phi, env.registry) else {
            return Ok(Err(RejectReason::TheoremUnproven));
        };
        let ctx = ReplayContext { registry: env.registry, ssa: &ssa, path_hash: h };
        for query in &queries {
            let outcome = check_query(env.solver, query, &ctx)?;
            self.counters.solver_calls += u64::from(outcome.solver_calls);
            if !matches!(outcome.verdict, Verdict::Proven) {
                return Ok(Err(RejectReason::TheoremUnproven));
            }
        }
        Ok(Ok(()))
    }

    /// The normative validation order: (1) theorem known or verified from
    /// its bundle, (2) hypothesis concretely true on this node's state,
    /// (3) execute, (4) completed, (5) path hash matches. Only then does the
    /// buffered delta commit and the log grow; any failure leaves this node
    /// untouched.
    fn validate_and_commit(
        &mut self,
        env: &Env<'_>,
        tx: &Transaction,
        theorem: &Theorem,
        bundle: Option<&TheoremBundle>,
    ) -> Result<NodeOutcome, ProtocolError> {
        // (1) known or verifiable
        if self.repo.get(&theorem.id).is_none() {
            let Some(bundle) = bundle else {
                return Ok(NodeOutcome::Rejected(RejectReason::NoTheorem));
            };
            match self.verify_theorem(env, theorem, bundle)? {
                Ok(()) => match self.repo.add(theorem.clone()) {
                    Ok(_) => {}
                    Err(RepoError::IncompleteEvidence { .. }) => {
                        return Ok(NodeOutcome::Rejected(RejectReason::TheoremUnproven));
                    }
                    Err(e) => return Err(e.into()),
                },
                Err(reason) => return Ok(NodeOutcome::Rejected(reason)),
            }
        }

        // (2) φ concretely true here
        let applicable = {
            let Some(account) = self.world.account(&tx.target) else {
                return Ok(NodeOutcome::Rejected(RejectReason::NoTheorem));
            };
            if account.code_hash != theorem.f.code_hash || tx.function != theorem.f.function {
                return Ok(NodeOutcome::Rejected(RejectReason::NoTheorem));
            }
            let Some(contract) = env.registry.get(&account.code_hash) else {
                return Ok(NodeOutcome::Rejected(RejectReason::NoTheorem));
            };
            let Some(function) = contract.function(&tx.function).filter(|f| !f.is_constructor)
            else {
                return Ok(NodeOutcome::Rejected(RejectReason::NoTheorem));
            };
            self.counters.phi_evals += 1;
            match parse_expression_text(&theorem.hypothesis) {
                Ok(phi) => {
                    eval_hypothesis(function, &phi, tx.origin.to_word(), &tx.args, &account.scalars)
                        == Ok(true)
                }
                Err(_) => false,
            }
        };
        if !applicable {
            return Ok(NodeOutcome::Rejected(RejectReason::HypothesisFalse));
        }

        // (3) execute once; the delta stays buffered until every check passes
        self.counters.executions += 1;
        let result = env.interpreter().execute(&self.world, tx)?;

        // (4) completed
        match result.status {
            ExecStatus::Committed => {}
            ExecStatus::Reverted => return Ok(NodeOutcome::Rejected(RejectReason::Reverted)),
            ExecStatus::StepLimitExceeded => {
                return Ok(NodeOutcome::Rejected(RejectReason::StepLimit));
            }
        }

        // (5) the executed path is the certified path
        self.counters.hash_checks += 1;
        let h = path_hash(&result.trace)?;
        if !theorem.confirm(&h) {
            return Ok(NodeOutcome::Rejected(RejectReason::PathHashMismatch));
        }

        // commit
        self.world.apply(&result.delta, env.registry);
        let block = self.log.len() as u64;
        self.log.push(BlockEntry { index: block, tx: tx.clone(), theorem: theorem.id });
        Ok(NodeOutcome::Committed { block })
    }
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

/// What one transaction submission came to.
#[derive(Debug)]
pub struct SubmissionReport {
    pub tx_id: u64,
    /// The response sent back to the issuer (node 0's answer).
    pub outcome: NodeOutcome,
    /// Every node's answer, in node order; empty when the submission never
    /// reached broadcast. Honest runs are unanimous.
    pub node_outcomes: Vec<NodeOutcome>,
    /// Workflow B: the stored theorem the service matched.
    pub reused: Option<Digest>,
    /// Workflow A: what the issuer's proving attempt found.
    pub proof: Option<ProofReport>,
}

impl SubmissionReport {
    pub fn unanimous(&self) -> bool {
        self.node_outcomes.iter().all(|o| *o == self.outcome)
    }
}

/// What one workflow-C submission came to.
#[derive(Debug)]
pub struct CertifyReport {
    /// Node 0's answer.
    pub outcome: TheoremOutcome,
    pub node_results: Vec<TheoremOutcome>,
    /// The submitter's own proving report (absent if proving never started).
    pub proof: Option<ProofReport>,
}

/// The deterministic simulation: a total-order bus over N nodes, with node 0
/// doubling as the pre-execution service.
pub struct Network {
    pub registry: CodeRegistry,
    pub solver: SolverConfig,
    pub nodes: Vec<Node>,
    /// Complete ordered message history.
    pub bus: Vec<Message>,
    /// Prover work done by issuers/submitters, outside any node.
    pub issuer_solver_calls: u64,
    pub step_limit: Option<usize>,
    /// Run node-side executions with concrete invariant/assert checking on.
    pub debug_asserts: bool,
}

impl Network {
    pub fn new(registry: CodeRegistry, node_count: usize, solver: SolverConfig) -> Network {
        assert!(node_count >= 1, "the network needs at least the service node");
        Network {
            registry,
            solver,
            nodes: (0..node_count).map(Node::new).collect(),
            bus: Vec::new(),
            issuer_solver_calls: 0,
            step_limit: None,
            debug_asserts: false,
        }
    }

    /// Logical clock: theorems minted during this run stamp their evidence
    /// with the bus position, keeping repeated runs byte-identical.
    pub fn clock(&self) -> u64 {
        self.bus.len() as u64
    }

    fn env(&self) -> Env<'_> {
        Env {
            registry: &self.registry,
            solver: &self.solver,
            step_limit: self.step_limit,
            debug_asserts: self.debug_asserts,
        }
    }

    /// Provision a contract uniformly on every node (genesis-style; code
    /// publication is not part of the theorem protocol). The constructor
    /// runs once and its delta applies to all nodes, so addresses and
    /// storage are identical everywhere.
    pub fn deploy(
        &mut self,
        contract: &ResolvedContract,
        args: &[Word256],
        origin: Address,
    ) -> Result<Address, ProtocolError> {
        let (address, result) = {
            let env = self.env();
            let interp = env.interpreter();
            interp.deploy(&self.nodes[0].world, contract, args, origin)?
        };
        if result.status != ExecStatus::Committed {
            return Err(ProtocolError::DeployFailed(result.status));
        }
        for node in &mut self.nodes {
            node.world.apply(&result.delta, &self.registry);
        }
        Ok(address)
    }

    fn respond(&mut self, tx: u64, outcome: &NodeOutcome) {
        self.bus.push(match outcome {
            NodeOutcome::Committed { block } => Message::Commit { tx, block: *block },
            NodeOutcome::Rejected(reason) => Message::Reject { tx, reason: *reason },
        });
    }

    fn broadcast_validate(
        &mut self,
        tx: &Transaction,
        theorem: &Theorem,
        bundle: Option<&TheoremBundle>,
    ) -> Result<Vec<NodeOutcome>, ProtocolError> {
        let env = Env {
            registry: &self.registry,
            solver: &self.solver,
            step_limit: self.step_limit,
            debug_asserts: self.debug_asserts,
        };
        let mut outcomes = Vec::with_capacity(self.nodes.len());
        for node in &mut self.nodes {
            outcomes.push(node.validate_and_commit(&env, tx, theorem, bundle)?);
        }
        Ok(outcomes)
    }

    /// Submit a transaction. With no applicable stored theorem the service
    /// answers `NeedTheorem`; the issuer then either gives up (`hypothesis`
    /// is `None` → the response is `Reject(NoTheorem)`) or proves a theorem
    /// under the given hypothesis and resubmits (workflow A). A match runs
    /// workflow B.
    pub fn submit(
        &mut self,
        tx: Transaction,
        hypothesis: Option<&str>,
    ) -> Result<SubmissionReport, ProtocolError> {
        let tx_id = tx.id;
        self.bus.push(Message::SubmitTx(tx.clone()));

        // Pre-execution service: match against stored theorems.
        let evaluated = {
            let service = &self.nodes[0];
            service.world.account(&tx.target).map_or(0, |account| {
                service.repo.keyed_count(&FunctionRef {
                    code_hash: account.code_hash,
                    function: tx.function.clone(),
                }) as u64
            })
        };
        let matched: Option<Theorem> = {
            let service = &self.nodes[0];
            service
                .repo
                .find_applicable(&tx, &service.world, &self.registry)
                .first()
                .map(|t| (*t).clone())
        };
        self.nodes[0].lookup.lookups += 1;
        self.nodes[0].lookup.phi_evals += evaluated;

        if let Some(theorem) = matched {
            // Workflow B
            self.bus.push(Message::SubmitTxWithTheorem {
                tx: tx.clone(),
                theorem: theorem.clone(),
                bundle: None,
            });
            let node_outcomes = self.broadcast_validate(&tx, &theorem, None)?;
            let outcome = node_outcomes[0].clone();
            self.respond(tx_id, &outcome);
            return Ok(SubmissionReport {
                tx_id,
                outcome,
                node_outcomes,
                reused: Some(theorem.id),
                proof: None,
            });
        }

        self.bus.push(Message::NeedTheorem { tx: tx_id });
        let Some(text) = hypothesis else {
            let outcome = NodeOutcome::Rejected(RejectReason::NoTheorem);
            self.respond(tx_id, &outcome);
            return Ok(SubmissionReport {
                tx_id,
                outcome,
                node_outcomes: Vec::new(),
                reused: None,
                proof: None,
            });
        };

        // Workflow A: the issuer proves against its own (service) view.
        let checked_at = self.clock();
        let attempt = prove_for_tx(
            &self.registry,
            &self.solver,
            &self.nodes[0].world,
            &tx,
            text,
            checked_at,
        )?;
        let rejected = |network: &mut Network,
                        reason: RejectReason,
                        proof: Option<ProofReport>| {
            let outcome = NodeOutcome::Rejected(reason);
            network.respond(tx_id, &outcome);
            Ok(SubmissionReport {
                tx_id,
                outcome,
                node_outcomes: Vec::new(),
                reused: None,
                proof,
            })
        };
        match attempt {
            ProveOutcome::Proven { theorem, bundle, report } => {
                self.issuer_solver_calls += report.solver_calls;
                let bundle = bundle.expect("transaction proofs carry their sample");
                self.bus.push(Message::SubmitTxWithTheorem {
                    tx: tx.clone(),
                    theorem: theorem.clone(),
                    bundle: Some(bundle.clone()),
                });
                let node_outcomes = self.broadcast_validate(&tx, &theorem, Some(&bundle))?;
                let outcome = node_outcomes[0].clone();
                self.respond(tx_id, &outcome);
                Ok(SubmissionReport {
                    tx_id,
                    outcome,
                    node_outcomes,
                    reused: None,
                    proof: Some(report),
                })
            }
            ProveOutcome::HypothesisFalse => rejected(self, RejectReason::HypothesisFalse, None),
            ProveOutcome::ExecutionFailed(ExecStatus::StepLimitExceeded) => {
                rejected(self, RejectReason::StepLimit, None)
            }
            ProveOutcome::ExecutionFailed(_) => rejected(self, RejectReason::Reverted, None),
            ProveOutcome::VcRejected(_) => rejected(self, RejectReason::TheoremUnproven, None),
            ProveOutcome::Unproven { report } => {
                self.issuer_solver_calls += report.solver_calls;
                rejected(self, RejectReason::TheoremUnproven, Some(report))
            }
        }
    }

    /// Workflow C: broadcast a theorem with its bundle; every node
    /// re-verifies and stores it. World state and block logs never change.
    pub fn submit_theorem(
        &mut self,
        theorem: Theorem,
        bundle: TheoremBundle,
    ) -> Result<CertifyReport, ProtocolError> {
        self.bus.push(Message::SubmitTheoremOnly {
            theorem: theorem.clone(),
            bundle: bundle.clone(),
        });
        let env = Env {
            registry: &self.registry,
            solver: &self.solver,
            step_limit: self.step_limit,
            debug_asserts: self.debug_asserts,
        };
        let mut node_results = Vec::with_capacity(self.nodes.len());
        for node in &mut self.nodes {
            let result = match node.verify_theorem(&env, &theorem, &bundle)? {
                Ok(()) => match node.repo.add(theorem.clone()) {
                    Ok(id) => TheoremOutcome::Stored(id),
                    Err(RepoError::IncompleteEvidence { .. }) => {
                        TheoremOutcome::Rejected(RejectReason::TheoremUnproven)
                    }
                    Err(e) => return Err(e.into()),
                },
                Err(reason) => TheoremOutcome::Rejected(reason),
            };
            node_results.push(result);
        }
        let outcome = node_results[0].clone();
        if let TheoremOutcome::Rejected(reason) = &outcome {
            self.bus.push(Message::Reject { tx: bundle.sample.id, reason: *reason });
        }
        Ok(CertifyReport { outcome, node_results, proof: None })
    }

    /// Prove a theorem for `sample` under `hypothesis` and submit it via
    /// workflow C in one step — the programmer's pre-certification path.
    pub fn certify(
        &mut self,
        sample: Transaction,
        hypothesis: &str,
    ) -> Result<CertifyReport, ProtocolError> {
        let checked_at = self.clock();
        let attempt = prove_for_tx(
            &self.registry,
            &self.solver,
            &self.nodes[0].world,
            &sample,
            hypothesis,
            checked_at,
        )?;
        match attempt {
            ProveOutcome::Proven { theorem, bundle, report } => {
                self.issuer_solver_calls += report.solver_calls;
                let bundle = bundle.expect("transaction proofs carry their sample");
                let mut submitted = self.submit_theorem(theorem, bundle)?;
                submitted.proof = Some(report);
                Ok(submitted)
            }
            ProveOutcome::HypothesisFalse => Ok(CertifyReport {
                outcome: TheoremOutcome::Rejected(RejectReason::HypothesisFalse),
                node_results: Vec::new(),
                proof: None,
            }),
            ProveOutcome::ExecutionFailed(ExecStatus::StepLimitExceeded) => Ok(CertifyReport {
                outcome: TheoremOutcome::Rejected(RejectReason::StepLimit),
                node_results: Vec::new(),
                proof: None,
            }),
            ProveOutcome::ExecutionFailed(_) => Ok(CertifyReport {
                outcome: TheoremOutcome::Rejected(RejectReason::Reverted),
                node_results: Vec::new(),
                proof: None,
            }),
            ProveOutcome::VcRejected(_) => Ok(CertifyReport {
                outcome: TheoremOutcome::Rejected(RejectReason::TheoremUnproven),
                node_results: Vec::new(),
                proof: None,
            }),
            ProveOutcome::Unproven { report } => {
                self.issuer_solver_calls += report.solver_calls;
                Ok(CertifyReport {
                    outcome: TheoremOutcome::Rejected(RejectReason::TheoremUnproven),
                    node_results: Vec::new(),
                    proof: Some(report),
                })
            }
        }
    }

    /// All nodes' snapshots; byte-identical on every honest run.
    pub fn snapshots(&self) -> Vec<String> {
        self.nodes.iter().map(Node::snapshot).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minisol::{parse_source, resolve};
    use crate::solver::SolverConfig;

    const TOKEN: &str = include_str!("../../../corpus/contracts/token.msol");

    const THEOREM_ONE: &str = "0 <= totalSupply && totalSupply < 2 ** 255 \
        && 0 <= _value && _value < 2 ** 255 && 0 <= _fee && _fee < 2 ** 255";

    fn eoa(k: u64) -> Address {
        Address::from_counter(0x1_0000_0000 + k)
    }

    fn registry() -> CodeRegistry {
        let program = resolve(&parse_source(TOKEN).unwrap()).unwrap();
        let mut registry = CodeRegistry::new();
        registry.insert_program(&program);
        registry
    }

    fn network() -> (Network, Address) {
        let registry = registry();
        let token = registry.by_name("MultiVulnToken").unwrap().clone();
        let mut net = Network::new(registry, 3, SolverConfig::locate(None).unwrap());
        let addr = net.deploy(&token, &[Word256::from_u64(1000)], eoa(0)).unwrap();
        (net, addr)
    }

    fn transfer(id: u64, token: Address, value: u64, fee: u64) -> Transaction {
        Transaction {
            id,
            origin: eoa(0),
            target: token,
            function: "transferProxy".into(),
            args: vec![
                eoa(0).to_word(),
                eoa(1).to_word(),
                Word256::from_u64(value),
                Word256::from_u64(fee),
            ],
        }
    }

    fn assert_identical(net: &Network) {
        let snaps = net.snapshots();
        for s in &snaps[1..] {
            assert_eq!(s, &snaps[0], "node state diverged");
        }
    }

    #[test]
    fn no_theorem_means_no_commit_and_no_state_change() {
        let (mut net, token) = network();
        for node in &net.nodes {
            assert!(node.world.account(&token).is_some(), "deploy reached every node");
        }
        let before = net.snapshots();

        let report = net.submit(transfer(1, token, 10, 1), None).unwrap();
        assert_eq!(report.outcome, NodeOutcome::Rejected(RejectReason::NoTheorem));
        assert!(report.node_outcomes.is_empty(), "nothing was broadcast");
        assert!(matches!(net.bus[1], Message::NeedTheorem { tx: 1 }));
        assert!(matches!(
            net.bus[2],
            Message::Reject { tx: 1, reason: RejectReason::NoTheorem }
        ));

        // A hostile submission whose args violate the hypothesis dies at the
        // issuer's own precondition: φ false, no proof attempted.
        let mut hostile = transfer(2, token, 0, 0);
        hostile.args[2] = Word256::pow2(255).wrapping_add(Word256::ONE);
        hostile.args[3] = Word256::pow2(255);
        let report = net.submit(hostile, Some(THEOREM_ONE)).unwrap();
        assert_eq!(report.outcome, NodeOutcome::Rejected(RejectReason::HypothesisFalse));
        assert!(report.proof.is_none(), "no goals were ever attempted");

        assert_eq!(net.snapshots(), before, "rejections leave no trace in state");
        assert_eq!(net.issuer_solver_calls, 0);
        assert_identical(&net);
    }

    #[test]
    fn workflow_a_proves_verifies_everywhere_then_workflow_b_reuses() {
        let (mut net, token) = network();

        // Workflow A: prove + resubmit in one protocol round.
        let report = net.submit(transfer(1, token, 10, 1), Some(THEOREM_ONE)).unwrap();
        assert_eq!(report.outcome, NodeOutcome::Committed { block: 0 });
        assert!(report.unanimous());
        assert_eq!(report.reused, None);
        let proof = report.proof.expect("workflow A proves");
        assert_eq!(proof.goals.len(), 2, "both declared invariants become goals");
        assert!(proof.all_proven());
        assert_eq!(net.issuer_solver_calls, proof.solver_calls);
        for node in &net.nodes {
            assert_eq!(node.repo.len(), 1, "every node stored the theorem");
            assert_eq!(node.log.len(), 1);
            assert!(
                node.counters.solver_calls >= 2,
                "workflow A verification re-proves on every node"
            );
        }
        assert_identical(&net);

        // Workflow B: the same shape of transaction now reuses the theorem
        // at a cost of exactly one φ evaluation, one execution, and one hash
        // comparison per node — and zero solver calls anywhere.
        let before: Vec<ValidationCounters> = net.nodes.iter().map(|n| n.counters).collect();
        let issuer_before = net.issuer_solver_calls;
        let report = net.submit(transfer(2, token, 20, 2), None).unwrap();
        assert_eq!(report.outcome, NodeOutcome::Committed { block: 1 });
        assert!(report.unanimous());
        assert!(report.reused.is_some(), "the stored theorem matched");
        assert!(report.proof.is_none());
        for (node, earlier) in net.nodes.iter().zip(&before) {
            let delta = node.counters.since(earlier);
            assert_eq!(
                delta,
                ValidationCounters {
                    solver_calls: 0,
                    phi_evals: 1,
                    executions: 1,
                    hash_checks: 1
                },
                "workflow B overhead on node {}",
                node.id
            );
        }
        assert_eq!(net.issuer_solver_calls, issuer_before);
        assert_eq!(net.nodes[0].lookup.lookups, 2);
        assert_identical(&net);
    }

    #[test]
    fn workflow_c_certifies_without_touching_world_or_log() {
        let (mut net, token) = network();
        let worlds_before: Vec<WorldState> =
            net.nodes.iter().map(|n| n.world.clone()).collect();

        let report = net.certify(transfer(1, token, 10, 1), THEOREM_ONE).unwrap();
        let TheoremOutcome::Stored(id) = report.outcome else {
            panic!("certification failed: {:?}", report.outcome);
        };
        assert!(report.node_results.iter().all(|r| *r == TheoremOutcome::Stored(id)));
        for (node, world) in net.nodes.iter().zip(&worlds_before) {
            assert_eq!(&node.world, world, "workflow C must not move state");
            assert!(node.log.is_empty());
            assert_eq!(node.repo.len(), 1);
        }
        assert_identical(&net);

        // A reverting transaction still matches φ (the hypothesis says
        // nothing about balances) but fails check 4 and commits nothing.
        let mut broke = transfer(2, token, 10, 1);
        broke.origin = eoa(7);
        broke.args[0] = eoa(7).to_word();
        let report = net.submit(broke, None).unwrap();
        assert_eq!(report.outcome, NodeOutcome::Rejected(RejectReason::Reverted));
        assert!(report.unanimous());
        for (node, world) in net.nodes.iter().zip(&worlds_before) {
            assert_eq!(&node.world, world);
            assert!(node.log.is_empty());
        }
        assert_identical(&net);
    }

    #[test]
    fn tampered_path_hash_is_rejected_before_any_proving() {
        let (mut net, token) = network();
        let sample = transfer(1, token, 10, 1);
        let outcome = prove_for_tx(
            &net.registry,
            &net.solver,
            &net.nodes[0].world,
            &sample,
            THEOREM_ONE,
            0,
        )
        .unwrap();
        let ProveOutcome::Proven { theorem, bundle, .. } = outcome else {
            panic!("the benign transfer proves");
        };
        let tampered = Theorem::new(
            theorem.f.clone(),
            theorem.hypothesis.clone(),
            PathHash(Digest::of(b"somewhere else entirely")),
            theorem.evidence.clone(),
        );
        let report = net.submit_theorem(tampered, bundle.unwrap()).unwrap();
        assert_eq!(
            report.outcome,
            TheoremOutcome::Rejected(RejectReason::PathHashMismatch)
        );
        assert!(report
            .node_results
            .iter()
            .all(|r| *r == TheoremOutcome::Rejected(RejectReason::PathHashMismatch)));
        for node in &net.nodes {
            assert!(node.repo.is_empty(), "nothing may be stored");
            assert_eq!(
                node.counters.solver_calls, 0,
                "the hash check precedes all proving"
            );
        }
        assert_identical(&net);
    }

    #[test]
    fn a_node_with_divergent_state_rejects_hypothesis_false_locally() {
        let (mut net, token) = network();
        let sample = transfer(1, token, 10, 1);
        let outcome = prove_for_tx(
            &net.registry,
            &net.solver,
            &net.nodes[0].world,
            &sample,
            THEOREM_ONE,
            0,
        )
        .unwrap();
        let ProveOutcome::Proven { theorem, .. } = outcome else {
            panic!("the benign transfer proves");
        };
        for node in &mut net.nodes {
            node.repo.add(theorem.clone()).unwrap();
        }
        // Doctor node 2's state so φ's totalSupply bound fails there.
        net.nodes[2]
            .world
            .accounts
            .get_mut(&token)
            .unwrap()
            .scalars
            .insert("totalSupply".into(), Word256::pow2(255));

        let report = net.submit(transfer(2, token, 20, 2), None).unwrap();
        assert_eq!(report.outcome, NodeOutcome::Committed { block: 0 });
        assert_eq!(
            report.node_outcomes,
            vec![
                NodeOutcome::Committed { block: 0 },
                NodeOutcome::Committed { block: 0 },
                NodeOutcome::Rejected(RejectReason::HypothesisFalse),
            ],
            "the divergent node rejects deterministically; honest nodes advance"
        );
        assert!(net.nodes[2].log.is_empty());
    }

    #[test]
    fn reject_reason_labels_round_trip() {
        for reason in [
            RejectReason::NoTheorem,
            RejectReason::HypothesisFalse,
            RejectReason::PathHashMismatch,
            RejectReason::TheoremUnproven,
            RejectReason::Reverted,
            RejectReason::StepLimit,
        ] {
            assert_eq!(reason.to_string().parse::<RejectReason>(), Ok(reason));
        }
        assert!("Nonsense".parse::<RejectReason>().is_err());
    }
}
