//! Path hashing and straight-line (SSA) extraction from execution traces.
//!
//! The path hash commits to the control-flow projection of a trace: event
//! tags, statement identities, branch outcomes, and callee code hashes —
//! never data values. Extraction replays the same trace symbolically against
//! the code registry, producing the straight-line program that proof
//! obligations are built from.

use std::collections::BTreeMap;
use std::fmt;

use crate::interp::TraceEvent;
use crate::minisol::{
    CodeRegistry, Expr, LValue, ResolvedContract, Sort, Stmt, StmtKind, TypeTag,
};
use crate::word::{Address, Digest, Word256};

// ---------------------------------------------------------------------------
// Statement identity
// ---------------------------------------------------------------------------

/// Anchors a trace event to code: the flattened contract's code hash, the
/// function name, and the function-local pre-order statement index.
/// `index == ENTRY_INDEX` marks the synthetic entry call site of a
/// transaction (there is no source statement for it).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatementId {
    pub code_hash: Digest,
    pub function: String,
    pub index: u32,
}

impl StatementId {
    pub const ENTRY_INDEX: u32 = u32::MAX;

    pub fn new(code_hash: Digest, function: &str, index: u32) -> StatementId {
        StatementId { code_hash, function: function.to_string(), index }
    }

    /// The synthetic id for a transaction's entry call site.
    pub fn entry(code_hash: Digest, function: &str) -> StatementId {
        StatementId::new(code_hash, function, StatementId::ENTRY_INDEX)
    }

    /// Canonical byte encoding (feeds path hashing): code hash (32 bytes),
    /// function-name length (u16 BE) and UTF-8 bytes, statement index
    /// (u32 BE).
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.code_hash.0);
        let name = self.function.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_be_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&self.index.to_be_bytes());
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hash = self.code_hash.to_string();
        // First 8 hex digits are plenty for human-readable dumps.
        let short = &hash[2..10];
        if self.index == StatementId::ENTRY_INDEX {
            write!(f, "{short}:{}#entry", self.function)
        } else {
            write!(f, "{short}:{}#{}", self.function, self.index)
        }
    }
}

// ---------------------------------------------------------------------------
// Path hashing
// ---------------------------------------------------------------------------

/// SHA-256 digest of a trace's control-flow projection. Two traces hash
/// equal iff their projections are byte-identical.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    serde::Serialize,
    serde::Deserialize,
)]
pub struct PathHash(pub Digest);

impl fmt::Display for PathHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("trace is incomplete (truncated or unbalanced calls)")]
    IncompleteTrace,
    #[error("trace ends in a revert; reverted executions carry no theorem")]
    RevertedTrace,
}

const TAG_ASSIGN: u8 = 0x01;
const TAG_STORAGE_WRITE: u8 = 0x02;
const TAG_STORAGE_READ: u8 = 0x03;
const TAG_BRANCH: u8 = 0x04;
const TAG_REQUIRE_PASS: u8 = 0x05;
const TAG_ASSERT_SITE: u8 = 0x06;
const TAG_CALL_ENTER: u8 = 0x07;
const TAG_CALL_EXIT: u8 = 0x08;
const TAG_REVERT: u8 = 0x09;

/// Is this trace complete — i.e. does it end in a revert or in balanced
/// normal completion? Step-limited (truncated) traces are incomplete.
fn completeness(trace: &[TraceEvent]) -> Result<bool, TraceError> {
    if trace.is_empty() {
        return Err(TraceError::IncompleteTrace);
    }
    let mut depth: i64 = 0;
    for (i, ev) in trace.iter().enumerate() {
        match ev {
            TraceEvent::CallEnter { .. } => depth += 1,
            TraceEvent::CallExit => depth -= 1,
            TraceEvent::Revert { .. } => {
                if i + 1 != trace.len() {
                    return Err(TraceError::IncompleteTrace);
                }
                return Ok(true); // complete, reverted
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(TraceError::IncompleteTrace);
    }
    Ok(false) // complete, normal
}

/// Compute the path hash of a complete trace (normal or reverted).
pub fn path_hash(trace: &[TraceEvent]) -> Result<PathHash, TraceError> {
    completeness(trace)?;
    let mut bytes = Vec::with_capacity(trace.len() * 48);
    for ev in trace {
        match ev {
            TraceEvent::Assign { stmt, .. } => {
                bytes.push(TAG_ASSIGN);
                stmt.encode_into(&mut bytes);
            }
            TraceEvent::StorageWrite { stmt, .. } => {
                bytes.push(TAG_STORAGE_WRITE);
                stmt.encode_into(&mut bytes);
            }
            TraceEvent::StorageRead { stmt, .. } => {
                bytes.push(TAG_STORAGE_READ);
                stmt.encode_into(&mut bytes);
            }
            TraceEvent::Branch { stmt, taken } => {
                bytes.push(TAG_BRANCH);
                stmt.encode_into(&mut bytes);
                bytes.push(u8::from(*taken));
            }
            TraceEvent::RequirePass { stmt } => {
                bytes.push(TAG_REQUIRE_PASS);
                stmt.encode_into(&mut bytes);
            }
            TraceEvent::AssertSite { stmt } => {
                bytes.push(TAG_ASSERT_SITE);
                stmt.encode_into(&mut bytes);
            }
            TraceEvent::CallEnter { stmt, code_hash, .. } => {
                bytes.push(TAG_CALL_ENTER);
                stmt.encode_into(&mut bytes);
                bytes.extend_from_slice(&code_hash.0);
            }
            TraceEvent::CallExit => {
                bytes.push(TAG_CALL_EXIT);
            }
            TraceEvent::Revert { stmt } => {
                bytes.push(TAG_REVERT);
                stmt.encode_into(&mut bytes);
            }
        }
    }
    Ok(PathHash(Digest::of(&bytes)))
}

// ---------------------------------------------------------------------------
// Symbolic expressions
// ---------------------------------------------------------------------------

/// Sort of an SSA symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsaSort {
    Int,
    Bool,
    Map,
}

impl SsaSort {
    pub fn describe(self) -> &'static str {
        match self {
            SsaSort::Int => "int",
            SsaSort::Bool => "bool",
            SsaSort::Map => "map",
        }
    }
}

/// Symbolic operators. Wrapping arithmetic appears only through `Add`,
/// `Sub`, `Mul` (and the totalized `Udiv`/`Umod`), never as raw machine
/// arithmetic; comparison/boolean operators are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SOp {
    Add,
    Sub,
    Mul,
    Udiv,
    Umod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Not,
    Implies,
}

/// A symbolic expression over versioned symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Int(Word256),
    Bool(bool),
    /// An int-, bool-, or map-sorted symbol from the SSA symbol table.
    Sym(String),
    /// `select(mapVersion, index)`.
    Select { map: Box<SExpr>, index: Box<SExpr> },
    /// `sum(mapVersion)` — the unbounded mathematical sum of the map.
    Sum(Box<SExpr>),
    /// The constant map sending every index to `0` (fresh-account storage).
    ConstMap(Word256),
    App(SOp, Vec<SExpr>),
    /// `forall var: address :: body` (used by property-origin goals).
    Forall { var: String, body: Box<SExpr> },
}

impl SExpr {
    pub fn sym(name: impl Into<String>) -> SExpr {
        SExpr::Sym(name.into())
    }

    pub fn eq(lhs: SExpr, rhs: SExpr) -> SExpr {
        SExpr::App(SOp::Eq, vec![lhs, rhs])
    }

    pub fn and(conjuncts: Vec<SExpr>) -> SExpr {
        match conjuncts.len() {
            0 => SExpr::Bool(true),
            1 => conjuncts.into_iter().next().unwrap(),
            _ => SExpr::App(SOp::And, conjuncts),
        }
    }

    pub fn not(e: SExpr) -> SExpr {
        SExpr::App(SOp::Not, vec![e])
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Int(w) => write!(f, "{w}"),
            SExpr::Bool(b) => write!(f, "{b}"),
            SExpr::Sym(s) => write!(f, "{s}"),
            SExpr::Select { map, index } => write!(f, "select({map}, {index})"),
            SExpr::Sum(map) => write!(f, "sum({map})"),
            SExpr::ConstMap(v) => write!(f, "const({v})"),
            SExpr::Forall { var, body } => write!(f, "(forall {var}: address :: {body})"),
            SExpr::App(op, args) => match op {
                SOp::Add | SOp::Sub | SOp::Mul | SOp::Udiv | SOp::Umod => {
                    let name = match op {
                        SOp::Add => "add",
                        SOp::Sub => "sub",
                        SOp::Mul => "mul",
                        SOp::Udiv => "udiv",
                        SOp::Umod => "umod",
                        _ => unreachable!(),
                    };
                    write!(f, "{name}({}, {})", args[0], args[1])
                }
                SOp::Not => write!(f, "!({})", args[0]),
                _ => {
                    let sym = match op {
                        SOp::Lt => "<",
                        SOp::Le => "<=",
                        SOp::Gt => ">",
                        SOp::Ge => ">=",
                        SOp::Eq => "==",
                        SOp::Ne => "!=",
                        SOp::And => "&&",
                        SOp::Or => "||",
                        SOp::Implies => "==>",
                        _ => unreachable!(),
                    };
                    let rendered: Vec<String> = args
                        .iter()
                        .map(|a| {
                            if matches!(a, SExpr::App(inner, _) if !matches!(inner, SOp::Not))
                                || matches!(a, SExpr::Forall { .. })
                            {
                                format!("({a})")
                            } else {
                                format!("{a}")
                            }
                        })
                        .collect();
                    write!(f, "{}", rendered.join(&format!(" {sym} ")))
                }
            },
        }
    }
}

// ---------------------------------------------------------------------------
// SSA program
// ---------------------------------------------------------------------------

/// Where a proof goal comes from (recorded in theorem evidence).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalOrigin {
    /// A source-level `assert` on the path.
    InlineAssert { stmt: StatementId },
    /// A contract invariant instantiated over final storage versions.
    Invariant { contract: String, index: usize },
    /// An entry-function or callee postcondition.
    Postcondition { contract: String, function: String, index: usize },
    /// A `#modifies` index-pattern obligation for one map write.
    ModifiesFrame { contract: String, function: String, slot: String },
}

impl fmt::Display for GoalOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalOrigin::InlineAssert { stmt } => write!(f, "assert@{stmt}"),
            GoalOrigin::Invariant { contract, index } => {
                write!(f, "invariant#{index}@{contract}")
            }
            GoalOrigin::Postcondition { contract, function, index } => {
                write!(f, "post#{index}@{contract}.{function}")
            }
            GoalOrigin::ModifiesFrame { contract, function, slot } => {
                write!(f, "modifies[{slot}]@{contract}.{function}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SsaStmt {
    /// Introduce a free symbol (parameter, initial storage version,
    /// account address, entry sender).
    DefineSymbol { name: String },
    /// A path assumption: passed require, taken branch condition, or
    /// call-target equation.
    AssumeExpr { expr: SExpr },
    /// `name := expr` for locals, scalar storage versions, and callee
    /// parameter bindings.
    AssignDef { name: String, expr: SExpr },
    /// `name := store(prior, index, value)` — a map version bump.
    MapStoreDef { name: String, prior: String, index: SExpr, value: SExpr },
    /// A proof goal at this point on the path.
    AssertGoal { expr: SExpr, origin: GoalOrigin },
}

/// One account observed by the trace, in first-touch order. Its address is
/// symbolic in the SSA (`acctK_addr`); the concrete address and code hash
/// are kept for protocol bookkeeping and evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountInfo {
    pub address: Address,
    pub code_hash: Digest,
}

/// One call frame of the path, in `CallEnter` order (frame 0 is the entry).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInfo {
    pub ordinal: usize,
    /// Index into [`SSAProgram::accounts`].
    pub account: usize,
    pub code_hash: Digest,
    pub function: String,
    /// The frame's `msg.sender` as a symbolic expression (the entry sender
    /// symbol, or the caller's account-address symbol).
    pub msg_sender: SExpr,
    /// Parameter symbols, in declaration order.
    pub param_symbols: Vec<String>,
}

/// One storage write on the path (scalar or map), for frame checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WriteRecord {
    /// Index into [`SSAProgram::stmts`] of the defining statement.
    pub ssa_index: usize,
    /// Frame that performed the write (index into `frames`).
    pub frame: usize,
    /// Account written (index into `accounts`).
    pub account: usize,
    pub slot: String,
    /// `None` for scalar writes; the symbolic index for map writes.
    pub index: Option<SExpr>,
}

/// Where a frame returned: postcondition goals for that frame anchor here,
/// instantiated over the storage-version snapshot at that point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitRecord {
    /// Goals anchor after `stmts[..ssa_index]`.
    pub ssa_index: usize,
    pub frame: usize,
    /// (account ordinal, slot) → version current at this exit.
    pub versions: BTreeMap<(usize, String), u32>,
}

/// The straight-line program extracted from one completed trace, plus the
/// structural metadata proof-obligation construction needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SSAProgram {
    pub stmts: Vec<SsaStmt>,
    pub symbols: BTreeMap<String, SsaSort>,
    pub accounts: Vec<AccountInfo>,
    pub frames: Vec<FrameInfo>,
    pub writes: Vec<WriteRecord>,
    pub call_exits: Vec<ExitRecord>,
    /// Final version of every touched (account ordinal, slot).
    pub final_versions: BTreeMap<(usize, String), u32>,
    /// True when the path is a constructor run (deployment).
    pub is_deployment: bool,
}

/// The symbol naming scheme. These are the single source of truth for
/// versioned names; proof-obligation construction uses them to mint initial
/// versions of slots the path never touched.
pub fn storage_symbol(account: usize, slot: &str, version: u32) -> String {
    format!("acct{account}_{slot}_v{version}")
}

pub fn account_address_symbol(account: usize) -> String {
    format!("acct{account}_addr")
}

pub const ENTRY_SENDER_SYMBOL: &str = "msg_sender";

impl SSAProgram {
    /// Deterministic textual dump: one line per SSA statement.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for stmt in &self.stmts {
            match stmt {
                SsaStmt::DefineSymbol { name } => {
                    let sort = self.symbols.get(name).copied().unwrap_or(SsaSort::Int);
                    out.push_str(&format!("symbol {name} : {}\n", sort.describe()));
                }
                SsaStmt::AssumeExpr { expr } => out.push_str(&format!("assume {expr}\n")),
                SsaStmt::AssignDef { name, expr } => {
                    out.push_str(&format!("{name} := {expr}\n"))
                }
                SsaStmt::MapStoreDef { name, prior, index, value } => {
                    out.push_str(&format!("{name} := store({prior}, {index}, {value})\n"))
                }
                SsaStmt::AssertGoal { expr, origin } => {
                    out.push_str(&format!("assert[{origin}] {expr}\n"))
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WellFormednessError {
    #[error("symbol `{0}` defined more than once")]
    Redefined(String),
    #[error("symbol `{0}` used before definition")]
    UsedBeforeDefinition(String),
    #[error("sort error: {0}")]
    SortError(String),
}

fn infer_sort(
    e: &SExpr,
    symbols: &BTreeMap<String, SsaSort>,
    defined: &BTreeMap<String, SsaSort>,
    bound: &mut Vec<String>,
) -> Result<SsaSort, WellFormednessError> {
    match e {
        SExpr::Int(_) => Ok(SsaSort::Int),
        SExpr::Bool(_) => Ok(SsaSort::Bool),
        SExpr::ConstMap(_) => Ok(SsaSort::Map),
        SExpr::Sym(name) => {
            if bound.contains(name) {
                return Ok(SsaSort::Int);
            }
            match defined.get(name) {
                Some(sort) => Ok(*sort),
                None => {
                    if symbols.contains_key(name) {
                        Err(WellFormednessError::UsedBeforeDefinition(name.clone()))
                    } else {
                        Err(WellFormednessError::SortError(format!(
                            "symbol `{name}` missing from the symbol table"
                        )))
                    }
                }
            }
        }
        SExpr::Select { map, index } => {
            let ms = infer_sort(map, symbols, defined, bound)?;
            let is = infer_sort(index, symbols, defined, bound)?;
            if ms != SsaSort::Map || is != SsaSort::Int {
                return Err(WellFormednessError::SortError(format!(
                    "select over {}/{}",
                    ms.describe(),
                    is.describe()
                )));
            }
            Ok(SsaSort::Int)
        }
        SExpr::Sum(map) => {
            let ms = infer_sort(map, symbols, defined, bound)?;
            if ms != SsaSort::Map {
                return Err(WellFormednessError::SortError("sum over a non-map".into()));
            }
            Ok(SsaSort::Int)
        }
        SExpr::Forall { var, body } => {
            bound.push(var.clone());
            let bs = infer_sort(body, symbols, defined, bound)?;
            bound.pop();
            if bs != SsaSort::Bool {
                return Err(WellFormednessError::SortError("forall body is not boolean".into()));
            }
            Ok(SsaSort::Bool)
        }
        SExpr::App(op, args) => {
            let sorts = args
                .iter()
                .map(|a| infer_sort(a, symbols, defined, bound))
                .collect::<Result<Vec<_>, _>>()?;
            let all = |want: SsaSort| sorts.iter().all(|s| *s == want);
            match op {
                SOp::Add | SOp::Sub | SOp::Mul | SOp::Udiv | SOp::Umod => {
                    if sorts.len() != 2 || !all(SsaSort::Int) {
                        return Err(WellFormednessError::SortError(format!(
                            "{op:?} expects two int operands"
                        )));
                    }
                    Ok(SsaSort::Int)
                }
                SOp::Lt | SOp::Le | SOp::Gt | SOp::Ge => {
                    if sorts.len() != 2 || !all(SsaSort::Int) {
                        return Err(WellFormednessError::SortError(format!(
                            "{op:?} expects two int operands"
                        )));
                    }
                    Ok(SsaSort::Bool)
                }
                SOp::Eq | SOp::Ne => {
                    if sorts.len() != 2 || sorts[0] != sorts[1] {
                        return Err(WellFormednessError::SortError(
                            "equality over mismatched sorts".into(),
                        ));
                    }
                    Ok(SsaSort::Bool)
                }
                SOp::And | SOp::Or => {
                    if sorts.is_empty() || !all(SsaSort::Bool) {
                        return Err(WellFormednessError::SortError(format!(
                            "{op:?} expects boolean operands"
                        )));
                    }
                    Ok(SsaSort::Bool)
                }
                SOp::Implies => {
                    if sorts.len() != 2 || !all(SsaSort::Bool) {
                        return Err(WellFormednessError::SortError(
                            "==> expects two boolean operands".into(),
                        ));
                    }
                    Ok(SsaSort::Bool)
                }
                SOp::Not => {
                    if sorts.len() != 1 || sorts[0] != SsaSort::Bool {
                        return Err(WellFormednessError::SortError(
                            "! expects one boolean operand".into(),
                        ));
                    }
                    Ok(SsaSort::Bool)
                }
            }
        }
    }
}

/// Check static single assignment, defined-before-use, and sort
/// correctness over the whole program.
pub fn check_well_formed(ssa: &SSAProgram) -> Result<(), WellFormednessError> {
    let mut defined: BTreeMap<String, SsaSort> = BTreeMap::new();
    let mut bound = Vec::new();
    let define = |name: &String,
                  defined: &mut BTreeMap<String, SsaSort>|
     -> Result<SsaSort, WellFormednessError> {
        let sort = ssa.symbols.get(name).copied().ok_or_else(|| {
            WellFormednessError::SortError(format!("symbol `{name}` missing from the symbol table"))
        })?;
        if defined.insert(name.clone(), sort).is_some() {
            return Err(WellFormednessError::Redefined(name.clone()));
        }
        Ok(sort)
    };
    for stmt in &ssa.stmts {
        match stmt {
            SsaStmt::DefineSymbol { name } => {
                define(name, &mut defined)?;
            }
            SsaStmt::AssumeExpr { expr } => {
                let sort = infer_sort(expr, &ssa.symbols, &defined, &mut bound)?;
                if sort != SsaSort::Bool {
                    return Err(WellFormednessError::SortError(
                        "assume of a non-boolean expression".into(),
                    ));
                }
            }
            SsaStmt::AssignDef { name, expr } => {
                let es = infer_sort(expr, &ssa.symbols, &defined, &mut bound)?;
                let ns = define(name, &mut defined)?;
                if es != ns {
                    return Err(WellFormednessError::SortError(format!(
                        "`{name}` declared {} but assigned {}",
                        ns.describe(),
                        es.describe()
                    )));
                }
            }
            SsaStmt::MapStoreDef { name, prior, index, value } => {
                let ps = infer_sort(&SExpr::sym(prior.clone()), &ssa.symbols, &defined, &mut bound)?;
                let is = infer_sort(index, &ssa.symbols, &defined, &mut bound)?;
                let vs = infer_sort(value, &ssa.symbols, &defined, &mut bound)?;
                let ns = define(name, &mut defined)?;
                if ps != SsaSort::Map || ns != SsaSort::Map || is != SsaSort::Int || vs != SsaSort::Int
                {
                    return Err(WellFormednessError::SortError(format!(
                        "store shape error at `{name}`"
                    )));
                }
            }
            SsaStmt::AssertGoal { expr, .. } => {
                let sort = infer_sort(expr, &ssa.symbols, &defined, &mut bound)?;
                if sort != SsaSort::Bool {
                    return Err(WellFormednessError::SortError(
                        "assert of a non-boolean expression".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("code hash {0} is not in the registry")]
    UnknownCode(Digest),
    #[error("contract {contract} has no function `{function}`")]
    UnknownFunction { contract: String, function: String },
    #[error("trace/code mismatch at event {index}: expected {expected}, found {found}")]
    TraceMismatch { index: usize, expected: String, found: String },
}

/// Extract the straight-line program of a completed, non-reverted trace.
///
/// The trace supplies control decisions (branch outcomes, call targets);
/// expressions are re-derived from the registry's statement ASTs, with map
/// indices kept symbolic. Inline `assert` sites become goals; all other
/// goal families are added by proof-obligation construction.
pub fn extract_straightline(
    trace: &[TraceEvent],
    registry: &CodeRegistry,
) -> Result<SSAProgram, ExtractError> {
    if completeness(trace)? {
        return Err(TraceError::RevertedTrace.into());
    }
    let mut ex = Extractor {
        registry,
        events: trace,
        pos: 0,
        stmts: Vec::new(),
        symbols: BTreeMap::new(),
        accounts: Vec::new(),
        contracts: Vec::new(),
        acct_index: BTreeMap::new(),
        versions: BTreeMap::new(),
        frames: Vec::new(),
        writes: Vec::new(),
        call_exits: Vec::new(),
        constructed: None,
        is_deployment: false,
    };
    ex.run()?;
    Ok(SSAProgram {
        stmts: ex.stmts,
        symbols: ex.symbols,
        accounts: ex.accounts,
        frames: ex.frames,
        writes: ex.writes,
        call_exits: ex.call_exits,
        final_versions: ex.versions,
        is_deployment: ex.is_deployment,
    })
}

/// A call frame during symbolic replay.
struct SymFrame<'a> {
    ordinal: usize,
    account: usize,
    contract: &'a ResolvedContract,
    function_name: String,
    msg_sender: SExpr,
    /// Local name → current SSA symbol.
    locals: BTreeMap<String, String>,
    /// Local name → number of definitions so far (for re-versioning).
    local_defs: BTreeMap<String, u32>,
}

impl SymFrame<'_> {
    /// SSA symbol for the next definition of local `name` in this frame.
    fn next_local_symbol(&mut self, name: &str) -> String {
        let n = self.local_defs.entry(name.to_string()).or_insert(0);
        *n += 1;
        let base = if self.ordinal == 0 {
            name.to_string()
        } else {
            format!("{name}_f{}", self.ordinal)
        };
        if *n == 1 {
            base
        } else {
            format!("{base}_{}", *n - 1)
        }
    }
}

enum SymFlow {
    Normal,
    Return,
}

struct Extractor<'a> {
    registry: &'a CodeRegistry,
    events: &'a [TraceEvent],
    pos: usize,
    stmts: Vec<SsaStmt>,
    symbols: BTreeMap<String, SsaSort>,
    accounts: Vec<AccountInfo>,
    contracts: Vec<&'a ResolvedContract>,
    acct_index: BTreeMap<Address, usize>,
    versions: BTreeMap<(usize, String), u32>,
    frames: Vec<FrameInfo>,
    writes: Vec<WriteRecord>,
    call_exits: Vec<ExitRecord>,
    /// Account ordinal whose initial storage is concretely fresh (the
    /// account being constructed, when the trace is a deployment).
    constructed: Option<usize>,
    is_deployment: bool,
}

impl<'a> Extractor<'a> {
    fn run(&mut self) -> Result<(), ExtractError> {
        let ev = self.next_control()?;
        let TraceEvent::CallEnter { callee, code_hash, function, .. } = ev else {
            return Err(self.mismatch("CallEnter (entry)", ev));
        };
        let contract = self.lookup_code(*code_hash)?;
        self.is_deployment = function == "constructor";
        let account = self.intern_account(*callee, contract);
        if self.is_deployment {
            self.constructed = Some(account);
        }
        let (params, body) = resolve_callable(contract, function)?;

        // Entry sender is a free symbol; entry parameters are free symbols
        // with their bare source names.
        self.define(ENTRY_SENDER_SYMBOL.to_string(), SsaSort::Int);
        let mut frame = SymFrame {
            ordinal: 0,
            account,
            contract,
            function_name: function.clone(),
            msg_sender: SExpr::sym(ENTRY_SENDER_SYMBOL),
            locals: BTreeMap::new(),
            local_defs: BTreeMap::new(),
        };
        let mut param_symbols = Vec::new();
        for (name, _ty) in params {
            let sym = frame.next_local_symbol(name);
            self.define(sym.clone(), SsaSort::Int);
            frame.locals.insert(name.clone(), sym.clone());
            param_symbols.push(sym);
        }
        self.frames.push(FrameInfo {
            ordinal: 0,
            account,
            code_hash: contract.code_hash,
            function: function.clone(),
            msg_sender: frame.msg_sender.clone(),
            param_symbols,
        });

        self.walk_block(&mut frame, body)?;
        let ev = self.next_control()?;
        if !matches!(ev, TraceEvent::CallExit) {
            return Err(self.mismatch("CallExit (entry)", ev));
        }
        self.call_exits.push(ExitRecord {
            ssa_index: self.stmts.len(),
            frame: 0,
            versions: self.versions.clone(),
        });
        // Nothing may trail the entry frame's exit.
        while let Some(ev) = self.events.get(self.pos) {
            if !matches!(ev, TraceEvent::StorageRead { .. }) {
                return Err(self.mismatch("end of trace", ev));
            }
            self.pos += 1;
        }
        Ok(())
    }

    // ---- event cursor -----------------------------------------------------

    /// Next control-relevant event (storage reads are data noise whose
    /// count varies with short-circuit evaluation; extraction skips them).
    fn next_control(&mut self) -> Result<&'a TraceEvent, ExtractError> {
        let events = self.events;
        while let Some(ev) = events.get(self.pos) {
            self.pos += 1;
            if !matches!(ev, TraceEvent::StorageRead { .. }) {
                return Ok(ev);
            }
        }
        Err(TraceError::IncompleteTrace.into())
    }

    fn mismatch(&self, expected: &str, found: &TraceEvent) -> ExtractError {
        ExtractError::TraceMismatch {
            index: self.pos.saturating_sub(1),
            expected: expected.to_string(),
            found: found.dump_line(),
        }
    }

    fn check_site(
        &self,
        ev: &TraceEvent,
        sid: &StatementId,
        frame: &SymFrame<'_>,
        stmt: &Stmt,
    ) -> Result<(), ExtractError> {
        let expected = StatementId::new(frame.contract.code_hash, &frame.function_name, stmt.id);
        if *sid != expected {
            return Err(ExtractError::TraceMismatch {
                index: self.pos.saturating_sub(1),
                expected: format!("event at {expected}"),
                found: ev.dump_line(),
            });
        }
        Ok(())
    }

    // ---- symbols ----------------------------------------------------------

    fn define(&mut self, name: String, sort: SsaSort) {
        self.symbols.insert(name.clone(), sort);
        self.stmts.push(SsaStmt::DefineSymbol { name });
    }

    fn lookup_code(&self, code_hash: Digest) -> Result<&'a ResolvedContract, ExtractError> {
        self.registry.get(&code_hash).ok_or(ExtractError::UnknownCode(code_hash))
    }

    /// Account ordinal for `addr`, interning (and defining its address
    /// symbol) on first touch.
    fn intern_account(&mut self, addr: Address, contract: &'a ResolvedContract) -> usize {
        if let Some(i) = self.acct_index.get(&addr) {
            return *i;
        }
        let ordinal = self.accounts.len();
        self.accounts.push(AccountInfo { address: addr, code_hash: contract.code_hash });
        self.contracts.push(contract);
        self.acct_index.insert(addr, ordinal);
        self.define(account_address_symbol(ordinal), SsaSort::Int);
        ordinal
    }

    fn slot_sort(&self, account: usize, slot: &str) -> SsaSort {
        match self.contracts[account].storage_sort(slot) {
            Some(Sort::Map) => SsaSort::Map,
            Some(Sort::Bool) => SsaSort::Bool,
            _ => SsaSort::Int,
        }
    }

    /// Current symbol for (account, slot), minting the initial version on
    /// first touch. A constructed account's initial state is concretely
    /// fresh: zero scalars and the constant-zero map.
    fn slot_symbol(&mut self, account: usize, slot: &str) -> String {
        let key = (account, slot.to_string());
        if let Some(v) = self.versions.get(&key) {
            return storage_symbol(account, slot, *v);
        }
        let sort = self.slot_sort(account, slot);
        let name = storage_symbol(account, slot, 0);
        self.symbols.insert(name.clone(), sort);
        if self.constructed == Some(account) {
            let init = match sort {
                SsaSort::Map => SExpr::ConstMap(Word256::ZERO),
                SsaSort::Bool => SExpr::Bool(false),
                SsaSort::Int => SExpr::Int(Word256::ZERO),
            };
            self.stmts.push(SsaStmt::AssignDef { name: name.clone(), expr: init });
        } else {
            self.stmts.push(SsaStmt::DefineSymbol { name: name.clone() });
        }
        self.versions.insert(key, 0);
        name
    }

    /// Bump (account, slot) to a fresh version symbol and return it.
    fn bump_slot(&mut self, account: usize, slot: &str) -> (String, String) {
        let prior = self.slot_symbol(account, slot);
        let key = (account, slot.to_string());
        let v = self.versions.get(&key).copied().unwrap_or(0) + 1;
        self.versions.insert(key, v);
        let name = storage_symbol(account, slot, v);
        let sort = self.slot_sort(account, slot);
        self.symbols.insert(name.clone(), sort);
        (prior, name)
    }

    // ---- expression translation -------------------------------------------

    fn translate(&mut self, frame: &SymFrame<'a>, e: &Expr) -> SExpr {
        match e {
            Expr::IntLit(w) => SExpr::Int(*w),
            Expr::BoolLit(b) => SExpr::Bool(*b),
            Expr::MsgSender => frame.msg_sender.clone(),
            Expr::Name(name) => {
                if let Some(sym) = frame.locals.get(name) {
                    return SExpr::sym(sym.clone());
                }
                SExpr::sym(self.slot_symbol(frame.account, name))
            }
            Expr::MapRead { slot, index } => {
                let idx = self.translate(frame, index);
                let map = self.slot_symbol(frame.account, slot);
                SExpr::Select { map: Box::new(SExpr::sym(map)), index: Box::new(idx) }
            }
            Expr::Not(inner) => SExpr::not(self.translate(frame, inner)),
            Expr::Binary { op, lhs, rhs } => {
                let l = self.translate(frame, lhs);
                let r = self.translate(frame, rhs);
                let sop = match op {
                    crate::minisol::BinOp::Add => SOp::Add,
                    crate::minisol::BinOp::Sub => SOp::Sub,
                    crate::minisol::BinOp::Mul => SOp::Mul,
                    crate::minisol::BinOp::Div => SOp::Udiv,
                    crate::minisol::BinOp::Mod => SOp::Umod,
                    crate::minisol::BinOp::Lt => SOp::Lt,
                    crate::minisol::BinOp::Le => SOp::Le,
                    crate::minisol::BinOp::Gt => SOp::Gt,
                    crate::minisol::BinOp::Ge => SOp::Ge,
                    crate::minisol::BinOp::Eq => SOp::Eq,
                    crate::minisol::BinOp::Ne => SOp::Ne,
                    crate::minisol::BinOp::And => SOp::And,
                    crate::minisol::BinOp::Or => SOp::Or,
                };
                SExpr::App(sop, vec![l, r])
            }
            Expr::Sum { .. } | Expr::Forall { .. } => {
                unreachable!("property expression on an executable path")
            }
        }
    }

    // ---- statement walk ----------------------------------------------------

    fn walk_block(
        &mut self,
        frame: &mut SymFrame<'a>,
        stmts: &'a [Stmt],
    ) -> Result<SymFlow, ExtractError> {
        for stmt in stmts {
            match self.walk_stmt(frame, stmt)? {
                SymFlow::Normal => {}
                SymFlow::Return => return Ok(SymFlow::Return),
            }
        }
        Ok(SymFlow::Normal)
    }

    fn walk_stmt(
        &mut self,
        frame: &mut SymFrame<'a>,
        stmt: &'a Stmt,
    ) -> Result<SymFlow, ExtractError> {
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                let expr = self.translate(frame, value);
                let ev = self.next_control()?;
                let TraceEvent::Assign { stmt: sid, .. } = ev else {
                    return Err(self.mismatch("Assign", ev));
                };
                self.check_site(ev, sid, frame, stmt)?;
                let sym = frame.next_local_symbol(name);
                self.symbols.insert(sym.clone(), SsaSort::Int);
                self.stmts.push(SsaStmt::AssignDef { name: sym.clone(), expr });
                frame.locals.insert(name.clone(), sym);
                Ok(SymFlow::Normal)
            }
            StmtKind::Assign { lhs, value } => {
                let expr = self.translate(frame, value);
                match lhs {
                    LValue::Name(name) if frame.locals.contains_key(name) => {
                        let ev = self.next_control()?;
                        let TraceEvent::Assign { stmt: sid, .. } = ev else {
                            return Err(self.mismatch("Assign", ev));
                        };
                        self.check_site(ev, sid, frame, stmt)?;
                        let sym = frame.next_local_symbol(name);
                        self.symbols.insert(sym.clone(), SsaSort::Int);
                        self.stmts.push(SsaStmt::AssignDef { name: sym.clone(), expr });
                        frame.locals.insert(name.clone(), sym);
                    }
                    LValue::Name(slot) => {
                        let ev = self.next_control()?;
                        let TraceEvent::StorageWrite { stmt: sid, index: None, .. } = ev else {
                            return Err(self.mismatch("StorageWrite (scalar)", ev));
                        };
                        self.check_site(ev, sid, frame, stmt)?;
                        let (_prior, name) = self.bump_slot(frame.account, slot);
                        self.stmts.push(SsaStmt::AssignDef { name, expr });
                        self.writes.push(WriteRecord {
                            ssa_index: self.stmts.len() - 1,
                            frame: frame.ordinal,
                            account: frame.account,
                            slot: slot.clone(),
                            index: None,
                        });
                    }
                    LValue::MapSlot { slot, index } => {
                        let idx = self.translate(frame, index);
                        let ev = self.next_control()?;
                        let TraceEvent::StorageWrite { stmt: sid, index: Some(_), .. } = ev
                        else {
                            return Err(self.mismatch("StorageWrite (map)", ev));
                        };
                        self.check_site(ev, sid, frame, stmt)?;
                        let (prior, name) = self.bump_slot(frame.account, slot);
                        self.stmts.push(SsaStmt::MapStoreDef {
                            name,
                            prior,
                            index: idx.clone(),
                            value: expr,
                        });
                        self.writes.push(WriteRecord {
                            ssa_index: self.stmts.len() - 1,
                            frame: frame.ordinal,
                            account: frame.account,
                            slot: slot.clone(),
                            index: Some(idx),
                        });
                    }
                }
                Ok(SymFlow::Normal)
            }
            StmtKind::Require { cond } => {
                let expr = self.translate(frame, cond);
                let ev = self.next_control()?;
                let TraceEvent::RequirePass { stmt: sid } = ev else {
                    return Err(self.mismatch("RequirePass", ev));
                };
                self.check_site(ev, sid, frame, stmt)?;
                self.stmts.push(SsaStmt::AssumeExpr { expr });
                Ok(SymFlow::Normal)
            }
            StmtKind::Assert { cond } => {
                let expr = self.translate(frame, cond);
                let ev = self.next_control()?;
                let TraceEvent::AssertSite { stmt: sid } = ev else {
                    return Err(self.mismatch("AssertSite", ev));
                };
                self.check_site(ev, sid, frame, stmt)?;
                let origin = GoalOrigin::InlineAssert { stmt: sid.clone() };
                self.stmts.push(SsaStmt::AssertGoal { expr, origin });
                Ok(SymFlow::Normal)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let cond_expr = self.translate(frame, cond);
                let ev = self.next_control()?;
                let TraceEvent::Branch { stmt: sid, taken } = ev else {
                    return Err(self.mismatch("Branch", ev));
                };
                self.check_site(ev, sid, frame, stmt)?;
                let taken = *taken;
                let assumed = if taken { cond_expr } else { SExpr::not(cond_expr) };
                self.stmts.push(SsaStmt::AssumeExpr { expr: assumed });
                if taken {
                    self.walk_block(frame, then_branch)
                } else {
                    self.walk_block(frame, else_branch)
                }
            }
            StmtKind::Call { target, args, .. } => {
                let target_expr = self.translate(frame, target);
                let mut arg_exprs = Vec::with_capacity(args.len());
                for a in args {
                    arg_exprs.push(self.translate(frame, a));
                }
                let ev = self.next_control()?;
                let TraceEvent::CallEnter { stmt: sid, callee, code_hash, function, .. } = ev
                else {
                    return Err(self.mismatch("CallEnter", ev));
                };
                self.check_site(ev, sid, frame, stmt)?;
                let callee_contract = self.lookup_code(*code_hash)?;
                let callee_account = self.intern_account(*callee, callee_contract);
                let (params, body) = resolve_callable(callee_contract, function)?;

                // Semantic link between the symbolic call target and the
                // callee's account identity (skipped when they are already
                // the same symbol, e.g. a `msg.sender` callback).
                let callee_sym = SExpr::sym(account_address_symbol(callee_account));
                if target_expr != callee_sym {
                    self.stmts.push(SsaStmt::AssumeExpr {
                        expr: SExpr::eq(target_expr, callee_sym),
                    });
                }

                let ordinal = self.frames.len();
                let mut callee_frame = SymFrame {
                    ordinal,
                    account: callee_account,
                    contract: callee_contract,
                    function_name: function.clone(),
                    msg_sender: SExpr::sym(account_address_symbol(frame.account)),
                    locals: BTreeMap::new(),
                    local_defs: BTreeMap::new(),
                };
                let mut param_symbols = Vec::new();
                for ((name, _ty), arg) in params.iter().zip(arg_exprs) {
                    let sym = callee_frame.next_local_symbol(name);
                    self.symbols.insert(sym.clone(), SsaSort::Int);
                    self.stmts.push(SsaStmt::AssignDef { name: sym.clone(), expr: arg });
                    callee_frame.locals.insert(name.clone(), sym.clone());
                    param_symbols.push(sym);
                }
                self.frames.push(FrameInfo {
                    ordinal,
                    account: callee_account,
                    code_hash: callee_contract.code_hash,
                    function: function.clone(),
                    msg_sender: callee_frame.msg_sender.clone(),
                    param_symbols,
                });

                self.walk_block(&mut callee_frame, body)?;
                let ev = self.next_control()?;
                if !matches!(ev, TraceEvent::CallExit) {
                    return Err(self.mismatch("CallExit", ev));
                }
                self.call_exits.push(ExitRecord {
                    ssa_index: self.stmts.len(),
                    frame: ordinal,
                    versions: self.versions.clone(),
                });
                Ok(SymFlow::Normal)
            }
            StmtKind::Return { .. } => Ok(SymFlow::Return),
        }
    }
}

/// Parameters and body for a named callable of `contract`; a missing
/// constructor is the empty callable.
fn resolve_callable<'a>(
    contract: &'a ResolvedContract,
    function: &str,
) -> Result<(&'a [(String, TypeTag)], &'a [Stmt]), ExtractError> {
    match contract.function(function) {
        Some(f) => Ok((&f.params, &f.body)),
        None if function == "constructor" => Ok((&[], &[])),
        None => Err(ExtractError::UnknownFunction {
            contract: contract.name.clone(),
            function: function.to_string(),
        }),
    }
}
