// SPDX-License-Identifier: Apache-2.0

//! One-shot workbench operations behind the `deploy`, `prove`, `submit`,
//! `inspect`, and `repo` verbs: a single world built from `--source` /
//! `--deploy` flags, theorem files on disk, and deterministic text dumps of
//! traces, SSA programs, verification conditions, repositories, and state.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use tct_core::interp::{
    dump_trace, ExecStatus, ExecutionResult, Interpreter, Transaction, WorldState,
};
use tct_core::minisol::{
    parse_hypothesis, parse_source, resolve, CodeRegistry, FunctionDef, ResolvedContract,
};
use tct_core::protocol::{ProtocolError, TheoremBundle};
use tct_core::repo::{Theorem, TheoremRepo};
use tct_core::trace::{extract_straightline, path_hash, SSAProgram};
use tct_core::vcgen::{build_vc, VCQuery, VcError};
use tct_core::word::Address;

use crate::scenario::{parse_directive, Directive, Handles};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum OpsError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn file_err(path: &Path, message: impl ToString) -> OpsError {
    OpsError::File { path: path.display().to_string(), message: message.to_string() }
}

// ---------------------------------------------------------------------------
// Theorem files
// ---------------------------------------------------------------------------

pub const THEOREM_FILE_SCHEMA: u32 = 1;

/// On-disk form of a proven theorem: the theorem itself plus the sample
/// transaction nodes replay to re-verify it. Deployment theorems carry no
/// sample and cannot be submitted to a network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremFile {
    pub schema: u32,
    pub theorem: Theorem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<Transaction>,
}

impl TheoremFile {
    pub fn new(theorem: Theorem, sample: Option<Transaction>) -> TheoremFile {
        TheoremFile { schema: THEOREM_FILE_SCHEMA, theorem, sample }
    }

    pub fn bundle(&self) -> Option<TheoremBundle> {
        self.sample.clone().map(|sample| TheoremBundle { sample })
    }
}

pub fn read_theorem_file(path: &Path) -> Result<TheoremFile, OpsError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let file: TheoremFile = serde_json::from_str(&text).map_err(|e| file_err(path, e))?;
    if file.schema != THEOREM_FILE_SCHEMA {
        return Err(file_err(
            path,
            format!("unsupported theorem file schema {}", file.schema),
        ));
    }
    let expected = Theorem::derive_id(
        &file.theorem.f,
        &file.theorem.hypothesis,
        &file.theorem.path_hash,
    );
    if file.theorem.id != expected {
        return Err(file_err(path, "theorem id does not match its content"));
    }
    Ok(file)
}

pub fn write_theorem_file(path: &Path, file: &TheoremFile) -> Result<(), OpsError> {
    let mut text =
        serde_json::to_string_pretty(file).expect("theorem files always serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| file_err(path, e))
}

// ---------------------------------------------------------------------------
// The workbench: one world, no network
// ---------------------------------------------------------------------------

/// A deployed contract's identity, as reported by the `deploy` verb.
#[derive(Debug, Clone)]
pub struct DeployedRef {
    pub contract: String,
    pub handle: String,
    pub address: Address,
}

/// A single local world for one-shot commands. Specs reuse the scenario
/// grammar minus the leading keyword: `--deploy` takes
/// `<Contract> <handle> (<args>) from <name>` and `--tx` takes
/// `<handle>.<function>(<args>) from <name> [hypothesis "..."]`.
pub struct Workbench {
    pub registry: CodeRegistry,
    pub world: WorldState,
    pub handles: Handles,
    pub next_tx: u64,
    pub step_limit: Option<usize>,
    pub debug_asserts: bool,
}

impl Default for Workbench {
    fn default() -> Self {
        Workbench::new()
    }
}

impl Workbench {
    pub fn new() -> Workbench {
        Workbench {
            registry: CodeRegistry::new(),
            world: WorldState::new(),
            handles: Handles::default(),
            next_tx: 1,
            step_limit: None,
            debug_asserts: false,
        }
    }

    fn interpreter(&self) -> Interpreter<'_> {
        let mut interp =
            Interpreter::new(&self.registry).with_debug_asserts(self.debug_asserts);
        if let Some(limit) = self.step_limit {
            interp = interp.with_step_limit(limit);
        }
        interp
    }

    pub fn load_source(&mut self, path: &Path) -> Result<usize, OpsError> {
        let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
        let parsed = parse_source(&text).map_err(|e| file_err(path, e))?;
        let program = resolve(&parsed).map_err(|e| file_err(path, e))?;
        let count = program.contracts.len();
        self.registry.insert_program(&program);
        Ok(count)
    }

    pub fn load_sources(&mut self, paths: &[impl AsRef<Path>]) -> Result<usize, OpsError> {
        let mut total = 0;
        for p in paths {
            total += self.load_source(p.as_ref())?;
        }
        Ok(total)
    }

    /// Parse a `--deploy` spec into its directive form.
    fn deploy_directive(spec: &str) -> Result<Directive, OpsError> {
        match parse_directive(&format!("deploy {}", spec.trim())) {
            Ok(d @ Directive::Deploy { .. }) => Ok(d),
            Ok(_) => unreachable!("a deploy line parses to a deploy directive"),
            Err(message) => Err(OpsError::Spec(format!("bad deploy spec `{spec}`: {message}"))),
        }
    }

    /// Parse a `--tx` spec into its directive form.
    fn tx_directive(spec: &str) -> Result<Directive, OpsError> {
        match parse_directive(&format!("submit {}", spec.trim())) {
            Ok(d @ Directive::Submit { .. }) => Ok(d),
            Ok(_) => unreachable!("a submit line parses to a submit directive"),
            Err(message) => Err(OpsError::Spec(format!("bad tx spec `{spec}`: {message}"))),
        }
    }

    /// Deploy per spec, applying the constructor's effects to the world.
    pub fn deploy(&mut self, spec: &str) -> Result<DeployedRef, OpsError> {
        let Directive::Deploy { contract, handle, args, from } = Self::deploy_directive(spec)?
        else {
            unreachable!()
        };
        let args = self.handles.eval_all(&args);
        let origin = self.handles.resolve(&from);
        let resolved = self
            .registry
            .by_name(&contract)
            .cloned()
            .ok_or_else(|| OpsError::Spec(format!("no contract named `{contract}` is loaded")))?;
        let (address, result) = self
            .interpreter()
            .deploy(&self.world, &resolved, &args, origin)
            .map_err(ProtocolError::from)?;
        if result.status != ExecStatus::Committed {
            return Err(OpsError::Protocol(ProtocolError::DeployFailed(result.status)));
        }
        self.world.apply(&result.delta, &self.registry);
        self.handles.bind_contract(&handle, address).map_err(OpsError::Spec)?;
        Ok(DeployedRef { contract, handle, address })
    }

    /// Build a transaction from a `--tx` spec. Returns the transaction and
    /// any inline hypothesis text.
    pub fn transaction(&mut self, spec: &str) -> Result<(Transaction, Option<String>), OpsError> {
        let Directive::Submit { callee, function, args, from, hypothesis } =
            Self::tx_directive(spec)?
        else {
            unreachable!()
        };
        let args = self.handles.eval_all(&args);
        let origin = self.handles.resolve(&from);
        let target = self.handles.get(&callee).ok_or_else(|| {
            OpsError::Spec(format!("`{callee}` is not a deployed contract handle"))
        })?;
        let id = self.next_tx;
        self.next_tx += 1;
        Ok((Transaction { id, origin, target, function, args }, hypothesis))
    }

    /// Execute a transaction against the current world (world unchanged).
    pub fn execute(&self, tx: &Transaction) -> Result<ExecutionResult, OpsError> {
        Ok(self.interpreter().execute(&self.world, tx).map_err(ProtocolError::from)?)
    }

    /// Run a constructor per deploy spec WITHOUT applying it — the raw
    /// execution, for inspecting deployment traces and obligations.
    pub fn constructor_run(
        &mut self,
        spec: &str,
    ) -> Result<(ResolvedContract, ExecutionResult), OpsError> {
        let Directive::Deploy { contract, args, from, .. } = Self::deploy_directive(spec)? else {
            unreachable!()
        };
        let args = self.handles.eval_all(&args);
        let origin = self.handles.resolve(&from);
        let resolved = self
            .registry
            .by_name(&contract)
            .cloned()
            .ok_or_else(|| OpsError::Spec(format!("no contract named `{contract}` is loaded")))?;
        let (_, result) = self
            .interpreter()
            .deploy(&self.world, &resolved, &args, origin)
            .map_err(ProtocolError::from)?;
        Ok((resolved, result))
    }

    /// Resolve a deploy spec to its raw pieces WITHOUT running anything —
    /// what a deployment proof needs.
    pub fn constructor_target(
        &mut self,
        spec: &str,
    ) -> Result<(ResolvedContract, Vec<tct_core::word::Word256>, Address), OpsError> {
        let Directive::Deploy { contract, args, from, .. } = Self::deploy_directive(spec)? else {
            unreachable!()
        };
        let args = self.handles.eval_all(&args);
        let origin = self.handles.resolve(&from);
        let resolved = self
            .registry
            .by_name(&contract)
            .cloned()
            .ok_or_else(|| OpsError::Spec(format!("no contract named `{contract}` is loaded")))?;
        Ok((resolved, args, origin))
    }

    /// The contract and callable behind a transaction target — used to
    /// parse hypotheses in the right scope.
    pub fn callable(
        &self,
        tx: &Transaction,
    ) -> Result<(&ResolvedContract, &FunctionDef), OpsError> {
        let account = self
            .world
            .account(&tx.target)
            .ok_or_else(|| OpsError::Spec(format!("no account at {}", tx.target)))?;
        let contract = self.registry.get(&account.code_hash).ok_or_else(|| {
            OpsError::Spec(format!("no code registered for account {}", tx.target))
        })?;
        let function = contract
            .function(&tx.function)
            .filter(|f| !f.is_constructor)
            .ok_or_else(|| {
                OpsError::Spec(format!("{} has no function `{}`", contract.name, tx.function))
            })?;
        Ok((contract, function))
    }
}

/// The constructor to parse deployment hypotheses against; contracts
/// without one get the same empty constructor deployment runs with.
pub fn constructor_def(contract: &ResolvedContract) -> FunctionDef {
    contract.constructor.clone().unwrap_or_else(|| FunctionDef {
        name: "constructor".to_string(),
        params: Vec::new(),
        returns: None,
        body: Vec::new(),
        preconditions: Vec::new(),
        postconditions: Vec::new(),
        modifies: None,
        is_constructor: true,
    })
}

// ---------------------------------------------------------------------------
// Deterministic dumps
// ---------------------------------------------------------------------------

pub fn status_label(status: ExecStatus) -> &'static str {
    match status {
        ExecStatus::Committed => "committed",
        ExecStatus::Reverted => "reverted",
        ExecStatus::StepLimitExceeded => "step-limit-exceeded",
    }
}

/// `inspect trace`: status, return value, path hash, then one line per event.
pub fn trace_dump(result: &ExecutionResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status: {}", status_label(result.status));
    match result.return_value {
        Some(v) => {
            let _ = writeln!(out, "return: {v}");
        }
        None => {
            let _ = writeln!(out, "return: -");
        }
    }
    match path_hash(&result.trace) {
        Ok(h) => {
            let _ = writeln!(out, "path-hash: {h}");
        }
        Err(e) => {
            let _ = writeln!(out, "path-hash: unavailable ({e})");
        }
    }
    out.push_str(&dump_trace(&result.trace));
    out
}

/// `inspect ssa`: the straight-line program extracted from a trace.
pub fn ssa_dump(result: &ExecutionResult, registry: &CodeRegistry) -> Result<String, OpsError> {
    let ssa = extract_straightline(&result.trace, registry).map_err(ProtocolError::from)?;
    Ok(ssa.dump())
}

/// Build the verification conditions for an executed path under a
/// hypothesis, exactly as proving would.
pub fn build_queries(
    result: &ExecutionResult,
    registry: &CodeRegistry,
    contract: &ResolvedContract,
    function: &FunctionDef,
    hypothesis: &str,
) -> Result<(SSAProgram, Vec<VCQuery>), OpsError> {
    let phi =
        parse_hypothesis(contract, function, hypothesis).map_err(ProtocolError::from)?;
    let ssa = extract_straightline(&result.trace, registry).map_err(ProtocolError::from)?;
    let queries = build_vc(&ssa, &phi, registry)?;
    Ok((ssa, queries))
}

/// `inspect vc`: every obligation, one block per goal.
pub fn vc_dump(queries: &[VCQuery]) -> String {
    let mut out = String::new();
    for (i, q) in queries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "== query {i}: {}{}",
            q.origin,
            if q.nonlinear { " (nonlinear)" } else { "" }
        );
        out.push_str(&q.dump());
    }
    out
}

/// One theorem as a printable tuple block.
pub fn theorem_dump(t: &Theorem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theorem {}", t.id);
    let _ = writeln!(out, "  f    ({}, {})", t.f.code_hash, t.f.function);
    let _ = writeln!(out, "  phi  {}", t.hypothesis);
    let _ = writeln!(out, "  h    {}", t.path_hash);
    for (i, e) in t.evidence.iter().enumerate() {
        let _ = writeln!(
            out,
            "  evidence[{i}] {} {} by {} @msg{}",
            e.goal, e.verdict, e.solver, e.checked_at
        );
    }
    out
}

/// `inspect repo` / the `repo` verb: one block per stored theorem, empty
/// output for an empty repository.
pub fn repo_dump(repo: &TheoremRepo) -> String {
    repo.iter().map(theorem_dump).collect()
}

/// `inspect state`: the world as canonical pretty JSON.
pub fn state_dump(world: &WorldState) -> String {
    let mut text =
        serde_json::to_string_pretty(world).expect("world states always serialize");
    text.push('\n');
    text
}
