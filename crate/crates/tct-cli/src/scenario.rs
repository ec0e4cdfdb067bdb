// SPDX-License-Identifier: Apache-2.0

//! The scenario language: a line-oriented script that drives a fresh
//! N-node network through deployments, theorem certifications, and
//! transaction submissions, with inline expectations.
//!
//! ```text
//! # comments and blank lines are skipped
//! source contracts/token.msol
//! deploy MultiVulnToken token (1000) from deployer
//! prove token.transferProxy(deployer, alice, 10, 1) from deployer hypothesis "..."
//! expect-stored
//! submit token.transferProxy(deployer, alice, 20, 2) from deployer
//! expect-commit
//! submit token.transferProxy(deployer, alice, 2**255+1, 2**255) from deployer
//! expect-reject NoTheorem
//! import-theorem theorems/transfer.json
//! snapshot
//! ```
//!
//! Names bind on first use: `deploy` binds its handle to the new contract
//! address; any other fresh name becomes an externally-owned account, with
//! addresses assigned in first-appearance order. Argument positions accept
//! handles, decimal or `0x` literals, `2**N`, and `+`/`-` chains of those.
//! `expect-commit` / `expect-reject` / `expect-stored` check the preceding
//! `submit` / `prove`, requiring unanimity across nodes; `snapshot` asserts
//! all nodes' serialized states are byte-identical and records them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tct_core::interp::Transaction;
use tct_core::minisol::{parse_source, resolve, CodeRegistry};
use tct_core::protocol::{
    CertifyReport, LookupCounters, Network, NodeOutcome, ProtocolError, RejectReason,
    SubmissionReport, TheoremOutcome, ValidationCounters,
};
use tct_core::solver::SolverConfig;
use tct_core::word::{Address, Digest, Word256};

use crate::ops;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{origin}:{line}: {message}")]
    Parse { origin: String, line: usize, message: String },
    #[error("line {line}: {message}")]
    Run { line: usize, message: String },
    #[error("line {line}: solver: {message}")]
    Solver { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Argument expressions
// ---------------------------------------------------------------------------

/// One argument atom: a literal word or a named handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Word(Word256),
    Handle(String),
}

/// A `+`/`-` chain of atoms, evaluated with wrapping word arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgExpr {
    /// `(subtract, atom)`; the first term is always added.
    pub terms: Vec<(bool, Atom)>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_atom(s: &str) -> Result<Atom, String> {
    let t = s.trim();
    if let Some(exp) = t.strip_prefix("2**") {
        let exp: u32 = exp
            .trim()
            .parse()
            .map_err(|_| format!("bad exponent in `{t}`"))?;
        if exp > 255 {
            return Err(format!("2**{exp} does not fit in a word"));
        }
        return Ok(Atom::Word(Word256::pow2(exp)));
    }
    if t.starts_with(|c: char| c.is_ascii_digit()) {
        return Word256::parse(t)
            .map(Atom::Word)
            .ok_or_else(|| format!("bad literal `{t}`"));
    }
    if is_ident(t) {
        return Ok(Atom::Handle(t.to_string()));
    }
    Err(format!("expected a literal or name, found `{t}`"))
}

fn parse_arg_expr(s: &str) -> Result<ArgExpr, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty argument".into());
    }
    let mut terms = Vec::new();
    let mut start = 0usize;
    let mut subtract = false;
    let bytes = t.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !t[start..i].trim().is_empty() {
            // `2**255` contains no sign characters, so any +/- after a
            // nonempty prefix is a binary operator.
            terms.push((subtract, parse_atom(&t[start..i])?));
            subtract = c == '-';
            start = i + 1;
        }
        i += 1;
    }
    terms.push((subtract, parse_atom(&t[start..])?));
    Ok(ArgExpr { terms })
}

// ---------------------------------------------------------------------------
// Directives
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Source { path: String },
    Deploy { contract: String, handle: String, args: Vec<ArgExpr>, from: String },
    Prove { callee: String, function: String, args: Vec<ArgExpr>, from: String, hypothesis: String },
    ImportTheorem { path: String },
    Submit {
        callee: String,
        function: String,
        args: Vec<ArgExpr>,
        from: String,
        hypothesis: Option<String>,
    },
    ExpectCommit,
    ExpectReject(RejectReason),
    ExpectStored,
    Snapshot,
}

/// One parsed scenario line with its source position and original text.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub number: usize,
    pub text: String,
    pub directive: Directive,
}

/// `head(arg, arg) rest` → (head, args, rest).
fn split_call(s: &str) -> Result<(&str, Vec<&str>, &str), String> {
    let open = s.find('(').ok_or("expected `(`")?;
    let close = s[open..].find(')').ok_or("expected `)`")? + open;
    let head = s[..open].trim();
    let inner = s[open + 1..close].trim();
    let args = if inner.is_empty() { Vec::new() } else { inner.split(',').collect() };
    Ok((head, args, s[close + 1..].trim()))
}

/// `from <name> [hypothesis "<text>"]` → (name, hypothesis).
fn parse_tail(rest: &str) -> Result<(String, Option<String>), String> {
    let rest = rest
        .strip_prefix("from")
        .ok_or("expected `from <name>` after the argument list")?
        .trim_start();
    let (name, rest) = match rest.find(char::is_whitespace) {
        Some(i) => (&rest[..i], rest[i..].trim_start()),
        None => (rest, ""),
    };
    if !is_ident(name) {
        return Err(format!("bad sender name `{name}`"));
    }
    if rest.is_empty() {
        return Ok((name.to_string(), None));
    }
    let quoted = rest
        .strip_prefix("hypothesis")
        .ok_or_else(|| format!("unexpected trailing `{rest}`"))?
        .trim_start();
    let inner = quoted
        .strip_prefix('"')
        .and_then(|q| q.strip_suffix('"'))
        .ok_or("hypothesis must be a double-quoted string ending the line")?;
    if inner.contains('"') {
        return Err("hypothesis text cannot contain `\"`".into());
    }
    Ok((name.to_string(), Some(inner.to_string())))
}

fn parse_args(raw: Vec<&str>) -> Result<Vec<ArgExpr>, String> {
    raw.into_iter().map(parse_arg_expr).collect()
}

pub(crate) fn parse_directive(text: &str) -> Result<Directive, String> {
    let (keyword, rest) = match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], text[i..].trim_start()),
        None => (text, ""),
    };
    match keyword {
        "source" => {
            if rest.is_empty() {
                return Err("expected a file path".into());
            }
            Ok(Directive::Source { path: rest.to_string() })
        }
        "import-theorem" => {
            if rest.is_empty() {
                return Err("expected a file path".into());
            }
            Ok(Directive::ImportTheorem { path: rest.to_string() })
        }
        "deploy" => {
            let (head, raw_args, tail) = split_call(rest)?;
            let mut words = head.split_whitespace();
            let contract = words.next().ok_or("expected a contract name")?;
            let handle = words.next().ok_or("expected a handle name")?;
            if words.next().is_some() {
                return Err("expected `deploy <Contract> <handle> (<args>) from <name>`".into());
            }
            if !is_ident(contract) || !is_ident(handle) {
                return Err("contract and handle must be identifiers".into());
            }
            let (from, hypothesis) = parse_tail(tail)?;
            if hypothesis.is_some() {
                return Err("deploy takes no hypothesis".into());
            }
            Ok(Directive::Deploy {
                contract: contract.to_string(),
                handle: handle.to_string(),
                args: parse_args(raw_args)?,
                from,
            })
        }
        "prove" | "submit" => {
            let (head, raw_args, tail) = split_call(rest)?;
            let (callee, function) = head
                .split_once('.')
                .ok_or("expected `<handle>.<function>(...)`")?;
            if !is_ident(callee.trim()) || !is_ident(function.trim()) {
                return Err("callee and function must be identifiers".into());
            }
            let (from, hypothesis) = parse_tail(tail)?;
            let args = parse_args(raw_args)?;
            if keyword == "prove" {
                let hypothesis = hypothesis.ok_or("prove requires `hypothesis \"...\"`")?;
                Ok(Directive::Prove {
                    callee: callee.trim().to_string(),
                    function: function.trim().to_string(),
                    args,
                    from,
                    hypothesis,
                })
            } else {
                Ok(Directive::Submit {
                    callee: callee.trim().to_string(),
                    function: function.trim().to_string(),
                    args,
                    from,
                    hypothesis,
                })
            }
        }
        "expect-commit" => {
            if !rest.is_empty() {
                return Err("expect-commit takes no arguments".into());
            }
            Ok(Directive::ExpectCommit)
        }
        "expect-stored" => {
            if !rest.is_empty() {
                return Err("expect-stored takes no arguments".into());
            }
            Ok(Directive::ExpectStored)
        }
        "expect-reject" => rest
            .parse::<RejectReason>()
            .map(Directive::ExpectReject)
            .map_err(|e| e.to_string()),
        "snapshot" => {
            if !rest.is_empty() {
                return Err("snapshot takes no arguments".into());
            }
            Ok(Directive::Snapshot)
        }
        other => Err(format!("unknown directive `{other}`")),
    }
}

/// Parse a scenario script. `origin` names the source in errors.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Vec<Line>, ScenarioError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let directive = parse_directive(trimmed).map_err(|message| ScenarioError::Parse {
            origin: origin.to_string(),
            line: idx + 1,
            message,
        })?;
        lines.push(Line { number: idx + 1, text: trimmed.to_string(), directive });
    }
    Ok(lines)
}

// ---------------------------------------------------------------------------
// Handles
// ---------------------------------------------------------------------------

/// Name → address binding. Contract handles bind at deployment; any other
/// fresh name becomes an externally-owned account, numbered in
/// first-appearance order so scenarios are address-deterministic.
#[derive(Debug, Default)]
pub struct Handles {
    bound: BTreeMap<String, Address>,
    eoas: u64,
}

const EOA_BASE: u64 = 0x1_0000_0000;

impl Handles {
    pub fn resolve(&mut self, name: &str) -> Address {
        if let Some(addr) = self.bound.get(name) {
            return *addr;
        }
        let addr = Address::from_counter(EOA_BASE + self.eoas);
        self.eoas += 1;
        self.bound.insert(name.to_string(), addr);
        addr
    }

    pub fn bind_contract(&mut self, name: &str, addr: Address) -> Result<(), String> {
        if self.bound.contains_key(name) {
            return Err(format!("handle `{name}` is already bound"));
        }
        self.bound.insert(name.to_string(), addr);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Address> {
        self.bound.get(name).copied()
    }

    pub fn eval(&mut self, expr: &ArgExpr) -> Word256 {
        let mut acc = Word256::ZERO;
        for (subtract, atom) in &expr.terms {
            let v = match atom {
                Atom::Word(w) => *w,
                Atom::Handle(name) => self.resolve(name).to_word(),
            };
            acc = if *subtract { acc.wrapping_sub(v) } else { acc.wrapping_add(v) };
        }
        acc
    }

    pub fn eval_all(&mut self, exprs: &[ArgExpr]) -> Vec<Word256> {
        exprs.iter().map(|e| self.eval(e)).collect()
    }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

pub struct RunnerConfig {
    pub nodes: usize,
    pub solver: SolverConfig,
    pub step_limit: Option<usize>,
    pub debug_asserts: bool,
    /// Directory `source` / `import-theorem` paths resolve against.
    pub base_dir: PathBuf,
}

impl RunnerConfig {
    /// Defaults for a scenario at `path`: 3 nodes, paths relative to the
    /// scenario's own directory.
    pub fn for_file(path: &Path, solver: SolverConfig) -> RunnerConfig {
        RunnerConfig {
            nodes: 3,
            solver,
            step_limit: None,
            debug_asserts: false,
            base_dir: path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf(),
        }
    }
}

/// One executed directive, with the counter state after it.
#[derive(Debug, Clone)]
pub struct LineRecord {
    pub number: usize,
    pub text: String,
    pub note: String,
    pub counters: Vec<ValidationCounters>,
    pub service_lookups: LookupCounters,
    pub issuer_solver_calls: u64,
}

/// Everything a scenario run produced. The full network is kept so callers
/// can inspect final worlds, repositories, and logs directly.
pub struct ScenarioOutcome {
    pub nodes: usize,
    pub records: Vec<LineRecord>,
    /// First failed expectation, if any; directives after it never ran.
    pub failure: Option<String>,
    pub submissions: Vec<(usize, SubmissionReport)>,
    pub certifications: Vec<(usize, CertifyReport)>,
    /// Snapshots taken by `snapshot` directives (line, per-node text).
    pub snapshots: Vec<(usize, Vec<String>)>,
    pub final_snapshots: Vec<String>,
    pub commits: u64,
    pub rejects: u64,
    pub theorems_stored: usize,
    pub node_solver_calls: u64,
    pub issuer_solver_calls: u64,
    pub net: Network,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

enum LastAction {
    Submit { outcome: NodeOutcome, unanimous: bool },
    Certify { outcome: TheoremOutcome, unanimous: bool },
}

struct Runner<'a> {
    cfg: &'a RunnerConfig,
    net: Network,
    handles: Handles,
    next_tx: u64,
    last: Option<LastAction>,
    records: Vec<LineRecord>,
    submissions: Vec<(usize, SubmissionReport)>,
    certifications: Vec<(usize, CertifyReport)>,
    snapshots: Vec<(usize, Vec<String>)>,
    commits: u64,
    rejects: u64,
    failure: Option<String>,
}

fn digest12(text: &str) -> String {
    Digest::of(text.as_bytes()).to_string()[..12].to_string()
}

fn short_id(id: &Digest) -> String {
    id.to_string()[..12].to_string()
}

impl<'a> Runner<'a> {
    fn protocol<T>(line: usize, result: Result<T, ProtocolError>) -> Result<T, ScenarioError> {
        result.map_err(|e| match e {
            ProtocolError::Solver(inner) => {
                ScenarioError::Solver { line, message: inner.to_string() }
            }
            other => ScenarioError::Run { line, message: other.to_string() },
        })
    }

    fn fresh_tx(&mut self, target: Address, function: &str, args: Vec<Word256>, from: Address) -> Transaction {
        let id = self.next_tx;
        self.next_tx += 1;
        Transaction { id, origin: from, target, function: function.to_string(), args }
    }

    /// Execute one directive; returns the report note, or an expectation
    /// failure description.
    fn step(&mut self, line: &Line) -> Result<Result<String, String>, ScenarioError> {
        match &line.directive {
            Directive::Source { path } => {
                let full = self.cfg.base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| ScenarioError::Run {
                    line: line.number,
                    message: format!("cannot read {}: {e}", full.display()),
                })?;
                let program = parse_source(&text)
                    .map_err(|e| ScenarioError::Run {
                        line: line.number,
                        message: format!("{path}: {e}"),
                    })
                    .and_then(|p| {
                        resolve(&p).map_err(|e| ScenarioError::Run {
                            line: line.number,
                            message: format!("{path}: {e}"),
                        })
                    })?;
                let count = program.contracts.len();
                self.net.registry.insert_program(&program);
                Ok(Ok(format!("ok ({count} contracts)")))
            }
            Directive::Deploy { contract, handle, args, from } => {
                let args = self.handles.eval_all(args);
                let origin = self.handles.resolve(from);
                let resolved = self
                    .net
                    .registry
                    .by_name(contract)
                    .cloned()
                    .ok_or_else(|| ScenarioError::Run {
                        line: line.number,
                        message: format!("no contract named `{contract}` is loaded"),
                    })?;
                let addr =
                    Self::protocol(line.number, self.net.deploy(&resolved, &args, origin))?;
                self.handles.bind_contract(handle, addr).map_err(|message| {
                    ScenarioError::Run { line: line.number, message }
                })?;
                Ok(Ok(format!("deployed {contract} at {addr}")))
            }
            Directive::Prove { callee, function, args, from, hypothesis } => {
                let args = self.handles.eval_all(args);
                let origin = self.handles.resolve(from);
                let target = self.handles.get(callee).ok_or_else(|| ScenarioError::Run {
                    line: line.number,
                    message: format!("`{callee}` is not a deployed contract handle"),
                })?;
                let sample = self.fresh_tx(target, function, args, origin);
                let report =
                    Self::protocol(line.number, self.net.certify(sample, hypothesis))?;
                let unanimous = report.node_results.iter().all(|r| *r == report.outcome);
                let note = match &report.outcome {
                    TheoremOutcome::Stored(id) => format!("stored theorem {}", short_id(id)),
                    TheoremOutcome::Rejected(reason) => format!("reject({reason})"),
                };
                self.last =
                    Some(LastAction::Certify { outcome: report.outcome.clone(), unanimous });
                self.certifications.push((line.number, report));
                Ok(Ok(note))
            }
            Directive::ImportTheorem { path } => {
                let full = self.cfg.base_dir.join(path);
                let file = ops::read_theorem_file(&full).map_err(|e| ScenarioError::Run {
                    line: line.number,
                    message: e.to_string(),
                })?;
                let bundle = file.bundle().ok_or_else(|| ScenarioError::Run {
                    line: line.number,
                    message: format!(
                        "{} carries no sample transaction; deployment theorems cannot be \
                         submitted to the network",
                        full.display()
                    ),
                })?;
                let report =
                    Self::protocol(line.number, self.net.submit_theorem(file.theorem, bundle))?;
                let unanimous = report.node_results.iter().all(|r| *r == report.outcome);
                let note = match &report.outcome {
                    TheoremOutcome::Stored(id) => format!("stored theorem {}", short_id(id)),
                    TheoremOutcome::Rejected(reason) => format!("reject({reason})"),
                };
                self.last =
                    Some(LastAction::Certify { outcome: report.outcome.clone(), unanimous });
                self.certifications.push((line.number, report));
                Ok(Ok(note))
            }
            Directive::Submit { callee, function, args, from, hypothesis } => {
                let args = self.handles.eval_all(args);
                let origin = self.handles.resolve(from);
                let target = self.handles.get(callee).ok_or_else(|| ScenarioError::Run {
                    line: line.number,
                    message: format!("`{callee}` is not a deployed contract handle"),
                })?;
                let tx = self.fresh_tx(target, function, args, origin);
                let report = Self::protocol(
                    line.number,
                    self.net.submit(tx, hypothesis.as_deref()),
                )?;
                match report.outcome {
                    NodeOutcome::Committed { .. } => self.commits += 1,
                    NodeOutcome::Rejected(_) => self.rejects += 1,
                }
                let mut note = report.outcome.to_string();
                if let Some(id) = &report.reused {
                    write!(note, " [reused {}]", short_id(id)).expect("string write");
                }
                if let Some(proof) = &report.proof {
                    write!(
                        note,
                        " [proved {} goals, {} solver calls]",
                        proof.goals.len(),
                        proof.solver_calls
                    )
                    .expect("string write");
                }
                self.last = Some(LastAction::Submit {
                    outcome: report.outcome.clone(),
                    unanimous: report.unanimous(),
                });
                self.submissions.push((line.number, report));
                Ok(Ok(note))
            }
            Directive::ExpectCommit => Ok(match &self.last {
                Some(LastAction::Submit { outcome: NodeOutcome::Committed { .. }, unanimous: true }) => {
                    Ok("ok".into())
                }
                Some(LastAction::Submit { outcome, unanimous }) => Err(format!(
                    "expected a unanimous commit, got {outcome}{}",
                    if *unanimous { "" } else { " (nodes disagree)" }
                )),
                _ => Err("expect-commit must follow a submit".into()),
            }),
            Directive::ExpectReject(reason) => Ok(match &self.last {
                Some(LastAction::Submit { outcome: NodeOutcome::Rejected(got), unanimous: true })
                    if got == reason =>
                {
                    Ok("ok".into())
                }
                Some(LastAction::Certify {
                    outcome: TheoremOutcome::Rejected(got),
                    unanimous: true,
                }) if got == reason => Ok("ok".into()),
                Some(LastAction::Submit { outcome, unanimous }) => Err(format!(
                    "expected reject({reason}), got {outcome}{}",
                    if *unanimous { "" } else { " (nodes disagree)" }
                )),
                Some(LastAction::Certify { outcome, .. }) => Err(format!(
                    "expected reject({reason}), got {}",
                    match outcome {
                        TheoremOutcome::Stored(id) => format!("stored theorem {}", short_id(id)),
                        TheoremOutcome::Rejected(r) => format!("reject({r})"),
                    }
                )),
                None => Err("expect-reject must follow a submit or prove".into()),
            }),
            Directive::ExpectStored => Ok(match &self.last {
                Some(LastAction::Certify { outcome: TheoremOutcome::Stored(_), unanimous: true }) => {
                    Ok("ok".into())
                }
                Some(LastAction::Certify { outcome: TheoremOutcome::Rejected(r), .. }) => {
                    Err(format!("expected the theorem stored, got reject({r})"))
                }
                Some(LastAction::Certify { unanimous: false, .. }) => {
                    Err("expected the theorem stored, but nodes disagree".into())
                }
                _ => Err("expect-stored must follow a prove or import-theorem".into()),
            }),
            Directive::Snapshot => {
                let snaps = self.net.snapshots();
                let identical = snaps.iter().all(|s| *s == snaps[0]);
                let digest = digest12(&snaps[0]);
                let count = snaps.len();
                self.snapshots.push((line.number, snaps));
                Ok(if identical {
                    Ok(format!("identical across {count} nodes ({digest})"))
                } else {
                    Err("node states diverged".into())
                })
            }
        }
    }

    fn record(&mut self, line: &Line, note: String) {
        self.records.push(LineRecord {
            number: line.number,
            text: line.text.clone(),
            note,
            counters: self.net.nodes.iter().map(|n| n.counters).collect(),
            service_lookups: self.net.nodes[0].lookup,
            issuer_solver_calls: self.net.issuer_solver_calls,
        });
    }
}

/// Run parsed scenario lines against a fresh network. Expectation failures
/// stop the run and land in [`ScenarioOutcome::failure`]; environment
/// problems (unreadable files, solver launch failures) are hard errors.
pub fn run_scenario(lines: &[Line], cfg: &RunnerConfig) -> Result<ScenarioOutcome, ScenarioError> {
    let mut net = Network::new(CodeRegistry::new(), cfg.nodes, cfg.solver.clone());
    net.step_limit = cfg.step_limit;
    net.debug_asserts = cfg.debug_asserts;
    let mut runner = Runner {
        cfg,
        net,
        handles: Handles::default(),
        next_tx: 1,
        last: None,
        records: Vec::new(),
        submissions: Vec::new(),
        certifications: Vec::new(),
        snapshots: Vec::new(),
        commits: 0,
        rejects: 0,
        failure: None,
    };
    for line in lines {
        match runner.step(line)? {
            Ok(note) => runner.record(line, note),
            Err(why) => {
                let message = format!("line {}: {why}", line.number);
                runner.record(line, format!("FAILED: {why}"));
                runner.failure = Some(message);
                break;
            }
        }
    }
    let net = runner.net;
    Ok(ScenarioOutcome {
        nodes: cfg.nodes,
        records: runner.records,
        failure: runner.failure,
        submissions: runner.submissions,
        certifications: runner.certifications,
        snapshots: runner.snapshots,
        final_snapshots: net.nodes.iter().map(|n| n.snapshot()).collect(),
        commits: runner.commits,
        rejects: runner.rejects,
        theorems_stored: net.nodes[0].repo.len(),
        node_solver_calls: net.nodes.iter().map(|n| n.counters.solver_calls).sum(),
        issuer_solver_calls: net.issuer_solver_calls,
        net,
    })
}

/// Parse and run a scenario file.
pub fn run_scenario_file(
    path: &Path,
    cfg: &RunnerConfig,
) -> Result<ScenarioOutcome, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    let lines = parse_scenario(&text, &path.display().to_string())?;
    run_scenario(&lines, cfg)
}

/// Deterministic scenario report: directives, outcomes, and the final
/// counter tallies. No timestamps, no absolute paths.
pub fn render_report(name: &str, outcome: &ScenarioOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {name} ({} nodes)", outcome.nodes);
    for record in &outcome.records {
        let _ = writeln!(out, "{:>4}  {}", record.number, record.text);
        let _ = writeln!(out, "      => {}", record.note);
    }
    match &outcome.failure {
        None => {
            let _ = writeln!(out, "result: pass");
        }
        Some(why) => {
            let _ = writeln!(out, "result: FAIL ({why})");
        }
    }
    let _ = writeln!(
        out,
        "commits={} rejects={} theorems-stored={} node-solver-calls={} issuer-solver-calls={}",
        outcome.commits,
        outcome.rejects,
        outcome.theorems_stored,
        outcome.node_solver_calls,
        outcome.issuer_solver_calls
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
    }

    fn cfg(nodes: usize) -> RunnerConfig {
        RunnerConfig {
            nodes,
            solver: SolverConfig::locate(None).expect("a solver is built alongside the tests"),
            step_limit: None,
            debug_asserts: false,
            base_dir: corpus_dir(),
        }
    }

    #[test]
    fn argument_expressions_cover_the_attack_values() {
        let e = parse_arg_expr("2**255+1").unwrap();
        let mut h = Handles::default();
        assert_eq!(h.eval(&e), Word256::pow2(255).wrapping_add(Word256::ONE));
        let e = parse_arg_expr("0x10 - 6").unwrap();
        assert_eq!(h.eval(&e), Word256::from_u64(10));
        assert!(parse_arg_expr("2**256").is_err());
        assert!(parse_arg_expr("").is_err());
    }

    #[test]
    fn handles_assign_eoas_in_first_appearance_order() {
        let mut h = Handles::default();
        let a = h.resolve("alice");
        let b = h.resolve("bob");
        assert_ne!(a, b);
        assert_eq!(h.resolve("alice"), a, "names are stable");
        h.bind_contract("pool", Address::from_counter(7)).unwrap();
        assert!(h.bind_contract("pool", Address::from_counter(8)).is_err());
    }

    #[test]
    fn directives_parse_and_misuse_is_reported() {
        let text = r#"
# setup
source contracts/token.msol
deploy MultiVulnToken token (1000) from deployer
submit token.transferProxy(deployer, alice, 10, 1) from deployer hypothesis "a < b"
prove token.transferProxy(deployer, alice, 10, 1) from deployer hypothesis "true"
expect-commit
expect-reject NoTheorem
expect-stored
snapshot
"#;
        let lines = parse_scenario(text, "inline").unwrap();
        assert_eq!(lines.len(), 8);
        assert!(matches!(lines[0].directive, Directive::Source { .. }));
        assert!(matches!(
            lines[2].directive,
            Directive::Submit { hypothesis: Some(_), .. }
        ));
        assert!(matches!(
            lines[5].directive,
            Directive::ExpectReject(RejectReason::NoTheorem)
        ));

        for bad in [
            "prove token.f(1) from a",                     // missing hypothesis
            "expect-reject BecauseISaidSo",                // unknown reason
            "teleport token to mars",                      // unknown directive
            "submit token.f(1) hypothesis \"x\"",          // missing from
            "deploy Token t (1) from a hypothesis \"x\"",  // deploy + hypothesis
        ] {
            assert!(
                parse_scenario(bad, "inline").is_err(),
                "`{bad}` should not parse"
            );
        }
    }

    #[test]
    fn a_rejection_scenario_runs_and_repeats_byte_identically() {
        let text = r#"
source contracts/token.msol
deploy MultiVulnToken token (1000) from deployer
submit token.transferProxy(deployer, attacker, 2**255+1, 2**255) from deployer
expect-reject NoTheorem
snapshot
"#;
        let lines = parse_scenario(text, "inline").unwrap();
        let first = run_scenario(&lines, &cfg(2)).unwrap();
        assert!(first.passed(), "{:?}", first.failure);
        assert_eq!(first.commits, 0);
        assert_eq!(first.rejects, 1);
        assert_eq!(first.node_solver_calls, 0);

        let second = run_scenario(&lines, &cfg(2)).unwrap();
        assert_eq!(
            render_report("inline", &first),
            render_report("inline", &second),
            "reports are byte-stable"
        );
        assert_eq!(first.final_snapshots, second.final_snapshots);
    }

    #[test]
    fn failed_expectations_stop_the_run() {
        let text = r#"
source contracts/token.msol
deploy MultiVulnToken token (1000) from deployer
submit token.transferProxy(deployer, alice, 10, 1) from deployer
expect-commit
snapshot
"#;
        let lines = parse_scenario(text, "inline").unwrap();
        let outcome = run_scenario(&lines, &cfg(2)).unwrap();
        assert!(!outcome.passed());
        let failure = outcome.failure.as_deref().unwrap();
        assert!(failure.contains("expected a unanimous commit"), "{failure}");
        // The snapshot directive after the failure never ran.
        assert!(outcome.snapshots.is_empty());
        assert_eq!(outcome.records.last().unwrap().note.contains("FAILED"), true);
    }

    #[test]
    fn an_empty_scenario_passes_with_an_empty_report() {
        let lines = parse_scenario("# nothing here\n\n", "inline").unwrap();
        assert!(lines.is_empty());
        let outcome = run_scenario(&lines, &cfg(1)).unwrap();
        assert!(outcome.passed());
        let report = render_report("empty", &outcome);
        assert!(report.contains("result: pass"));
        assert_eq!(outcome.commits + outcome.rejects, 0);
    }
}
