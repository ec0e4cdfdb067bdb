//! The transaction interpreter: deterministic execution with full trace
//! recording, wrapping 256-bit arithmetic, require/revert semantics, and
//! cross-contract calls that permit reentrancy.
//!
//! Executions never mutate the input world; effects are journaled against a
//! scratch copy and surface as a [`StateDelta`] that the caller commits (or
//! discards). A reverted or step-limited execution always yields an empty
//! delta.

pub mod eval;
pub mod world;

pub use world::{Account, DeltaWrite, StateDelta, WorldState};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::minisol::printer::expr_to_string;
use crate::minisol::{
    BinOp, CodeRegistry, Expr, FunctionDef, LValue, ResolvedContract, Sort, Stmt, StmtKind,
    TypeTag,
};
use crate::trace::StatementId;
use crate::word::{Address, Digest, Word256};

/// Default bound on trace length (events) per execution.
pub const DEFAULT_STEP_LIMIT: usize = 1_000_000;

/// Call-stack depth bound; exceeding it reverts at the call site.
pub const MAX_CALL_DEPTH: usize = 1024;

/// One transaction: `origin` is the externally-owned sender, `target` the
/// contract account whose `function` is invoked with `args` (addresses are
/// passed zero-extended to words).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    pub origin: Address,
    pub target: Address,
    pub function: String,
    pub args: Vec<Word256>,
}

/// One recorded execution event. The control-flow projection of these events
/// is what path hashing commits to; data values never enter the hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// A local binding (`let` or local reassignment); `expr` is the printed
    /// source expression the value came from.
    Assign { stmt: StatementId, local: String, expr: String },
    StorageWrite { stmt: StatementId, account: Address, slot: String, index: Option<Address> },
    StorageRead { stmt: StatementId, account: Address, slot: String, index: Option<Address> },
    Branch { stmt: StatementId, taken: bool },
    RequirePass { stmt: StatementId },
    /// An `assert` site passed over during execution (checked only in proofs,
    /// or concretely under the debug flag).
    AssertSite { stmt: StatementId },
    CallEnter {
        stmt: StatementId,
        caller: Address,
        callee: Address,
        code_hash: Digest,
        function: String,
    },
    CallExit,
    Revert { stmt: StatementId },
}

impl TraceEvent {
    /// One-line dump form; field order here is documented and stable.
    pub fn dump_line(&self) -> String {
        fn idx(index: &Option<Address>) -> String {
            match index {
                Some(a) => a.to_string(),
                None => "-".to_string(),
            }
        }
        match self {
            TraceEvent::Assign { stmt, local, expr } => {
                format!("Assign stmt={stmt} local={local} expr={expr}")
            }
            TraceEvent::StorageWrite { stmt, account, slot, index } => {
                format!(
                    "StorageWrite stmt={stmt} account={account} slot={slot} index={}",
                    idx(index)
                )
            }
            TraceEvent::StorageRead { stmt, account, slot, index } => {
                format!(
                    "StorageRead stmt={stmt} account={account} slot={slot} index={}",
                    idx(index)
                )
            }
            TraceEvent::Branch { stmt, taken } => format!("Branch stmt={stmt} taken={taken}"),
            TraceEvent::RequirePass { stmt } => format!("RequirePass stmt={stmt}"),
            TraceEvent::AssertSite { stmt } => format!("AssertSite stmt={stmt}"),
            TraceEvent::CallEnter { stmt, caller, callee, code_hash, function } => format!(
                "CallEnter stmt={stmt} caller={caller} callee={callee} code={code_hash} function={function}"
            ),
            TraceEvent::CallExit => "CallExit".to_string(),
            TraceEvent::Revert { stmt } => format!("Revert stmt={stmt}"),
        }
    }
}

/// Line-oriented trace dump, one event per line, trailing newline.
pub fn dump_trace(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for ev in trace {
        out.push_str(&ev.dump_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    Committed,
    Reverted,
    StepLimitExceeded,
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub trace: Vec<TraceEvent>,
    /// Net state effect; empty unless `status == Committed`.
    pub delta: StateDelta,
    /// Entry-function return value (booleans encode as 0/1 words).
    pub return_value: Option<Word256>,
}

/// Hard errors: ill-formed transactions and debug-mode check failures.
/// These are distinct from in-model reverts.
#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("no contract account at {0}")]
    UnknownAccount(Address),
    #[error("account {account} carries code hash {code_hash} missing from the registry")]
    UnknownCode { account: Address, code_hash: Digest },
    #[error("contract {contract} has no function `{function}`")]
    UnknownFunction { contract: String, function: String },
    #[error("{contract}.{function} expects {expected} argument(s), got {got}")]
    ArityMismatch { contract: String, function: String, expected: usize, got: usize },
    #[error("argument {position} of {contract}.{function} does not fit declared type {ty}")]
    BadArgument { contract: String, function: String, position: usize, ty: &'static str },
    #[error("debug assert failed at {stmt}: {expr}")]
    DebugAssertFailed { stmt: StatementId, expr: String },
    #[error("invariant violated after execution on {contract} at {account}: {invariant}")]
    DebugInvariantViolated { contract: String, account: Address, invariant: String },
}

/// A concrete runtime value. Sorts are statically checked, so the shape of
/// every expression is known; addresses travel as 160-bit-fitting ints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CVal {
    Int(Word256),
    Bool(bool),
}

impl CVal {
    pub fn as_word(self) -> Word256 {
        match self {
            CVal::Int(w) => w,
            CVal::Bool(true) => Word256::ONE,
            CVal::Bool(false) => Word256::ZERO,
        }
    }

    fn truth(self) -> bool {
        match self {
            CVal::Bool(b) => b,
            CVal::Int(w) => !w.is_zero(),
        }
    }
}

pub struct Interpreter<'a> {
    registry: &'a CodeRegistry,
    pub step_limit: usize,
    pub debug_asserts: bool,
}

impl<'a> Interpreter<'a> {
    pub fn new(registry: &'a CodeRegistry) -> Interpreter<'a> {
        Interpreter { registry, step_limit: DEFAULT_STEP_LIMIT, debug_asserts: false }
    }

    pub fn with_debug_asserts(mut self, on: bool) -> Interpreter<'a> {
        self.debug_asserts = on;
        self
    }

    pub fn with_step_limit(mut self, limit: usize) -> Interpreter<'a> {
        self.step_limit = limit;
        self
    }

    /// Execute `tx` against `world` (never mutated). The entry call emits a
    /// `CallEnter`, so every frame in the trace is call-bracketed.
    pub fn execute(
        &self,
        world: &WorldState,
        tx: &Transaction,
    ) -> Result<ExecutionResult, ExecError> {
        let account = world.account(&tx.target).ok_or(ExecError::UnknownAccount(tx.target))?;
        let contract = self.registry.get(&account.code_hash).ok_or(ExecError::UnknownCode {
            account: tx.target,
            code_hash: account.code_hash,
        })?;
        let function = contract
            .function(&tx.function)
            .filter(|f| !f.is_constructor)
            .ok_or_else(|| ExecError::UnknownFunction {
                contract: contract.name.clone(),
                function: tx.function.clone(),
            })?;
        check_entry_args(contract, function, &tx.args)?;

        let mut ctx = ExecCtx::new(self, world.clone());
        let entry = StatementId::entry(contract.code_hash, &tx.function);
        let args: Vec<CVal> = tx.args.iter().map(|w| CVal::Int(*w)).collect();
        let outcome = ctx.run_call(entry, tx.origin, tx.target, contract, function, args);
        self.finish(ctx, outcome, Vec::new())
    }

    /// Deploy `contract`, allocating a fresh address from the world counter.
    /// On revert no account is created and the world is unchanged.
    pub fn deploy(
        &self,
        world: &WorldState,
        contract: &ResolvedContract,
        args: &[Word256],
        sender: Address,
    ) -> Result<(Address, ExecutionResult), ExecError> {
        let address = Address::from_counter(world.next_fresh);
        let result = self.deploy_at(world, contract, args, sender, address)?;
        Ok((address, result))
    }

    /// Deploy at an explicit (vacant, counter-shaped) address — used when
    /// replaying a deployment whose address was allocated elsewhere.
    pub fn deploy_at(
        &self,
        world: &WorldState,
        contract: &ResolvedContract,
        args: &[Word256],
        sender: Address,
        address: Address,
    ) -> Result<ExecutionResult, ExecError> {
        assert!(
            world.account(&address).is_none(),
            "deploy address {address} is already occupied"
        );
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
        check_entry_args(contract, ctor, args)?;

        let mut ctx = ExecCtx::new(self, world.clone());
        ctx.scratch.accounts.insert(address, Account::fresh(contract));
        if let Some(counter) = address.counter() {
            ctx.scratch.next_fresh = ctx.scratch.next_fresh.max(counter + 1);
        }
        ctx.touched.insert(address);
        let entry = StatementId::entry(contract.code_hash, "constructor");
        let argvals: Vec<CVal> = args.iter().map(|w| CVal::Int(*w)).collect();
        let outcome = ctx.run_call(entry, sender, address, contract, ctor, argvals);
        self.finish(ctx, outcome, vec![(address, contract.code_hash)])
    }

    fn finish(
        &self,
        ctx: ExecCtx<'a, '_>,
        outcome: Result<Option<CVal>, Interrupt>,
        created: Vec<(Address, Digest)>,
    ) -> Result<ExecutionResult, ExecError> {
        match outcome {
            Ok(ret) => {
                if self.debug_asserts {
                    self.check_touched_invariants(&ctx)?;
                }
                let mut writes: Vec<DeltaWrite> = ctx
                    .journal
                    .into_iter()
                    .filter(|(_, (before, after))| before != after)
                    .map(|((account, slot, index), (before, after))| DeltaWrite {
                        account,
                        slot,
                        index,
                        before,
                        after,
                    })
                    .collect();
                writes.sort_by(|a, b| {
                    (a.account, &a.slot, a.index).cmp(&(b.account, &b.slot, b.index))
                });
                Ok(ExecutionResult {
                    status: ExecStatus::Committed,
                    trace: ctx.trace,
                    delta: StateDelta { created, writes },
                    return_value: ret.map(CVal::as_word),
                })
            }
            Err(Interrupt::Revert) => Ok(ExecutionResult {
                status: ExecStatus::Reverted,
                trace: ctx.trace,
                delta: StateDelta::default(),
                return_value: None,
            }),
            Err(Interrupt::StepLimit) => Ok(ExecutionResult {
                status: ExecStatus::StepLimitExceeded,
                trace: ctx.trace,
                delta: StateDelta::default(),
                return_value: None,
            }),
            Err(Interrupt::Fatal(e)) => Err(e),
        }
    }

    fn check_touched_invariants(&self, ctx: &ExecCtx<'a, '_>) -> Result<(), ExecError> {
        for addr in &ctx.touched {
            let Some(account) = ctx.scratch.account(addr) else { continue };
            let Some(contract) = self.registry.get(&account.code_hash) else { continue };
            for inv in &contract.invariants {
                let holds = eval::eval_invariant(&ctx.scratch, *addr, contract, inv)
                    .unwrap_or(false);
                if !holds {
                    return Err(ExecError::DebugInvariantViolated {
                        contract: contract.name.clone(),
                        account: *addr,
                        invariant: expr_to_string(inv),
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_entry_args(
    contract: &ResolvedContract,
    function: &FunctionDef,
    args: &[Word256],
) -> Result<(), ExecError> {
    if args.len() != function.params.len() {
        return Err(ExecError::ArityMismatch {
            contract: contract.name.clone(),
            function: function.name.clone(),
            expected: function.params.len(),
            got: args.len(),
        });
    }
    for (i, ((_, ty), arg)) in function.params.iter().zip(args).enumerate() {
        if *ty == TypeTag::Address && !arg.fits_address() {
            return Err(ExecError::BadArgument {
                contract: contract.name.clone(),
                function: function.name.clone(),
                position: i,
                ty: ty.keyword(),
            });
        }
    }
    Ok(())
}

/// Non-local exits during statement execution. `Revert` and `StepLimit`
/// unwind the whole transaction; `Fatal` carries debug-mode failures out as
/// hard errors.
enum Interrupt {
    Revert,
    StepLimit,
    Fatal(ExecError),
}

/// Normal statement flow: fall through, or return from the current frame.
enum Flow {
    Normal,
    Return(Option<CVal>),
}

struct Frame<'a> {
    account: Address,
    code: &'a ResolvedContract,
    function: &'a FunctionDef,
    msg_sender: Address,
    locals: BTreeMap<String, CVal>,
}

struct ExecCtx<'a, 'b> {
    interp: &'b Interpreter<'a>,
    scratch: WorldState,
    trace: Vec<TraceEvent>,
    /// (account, slot, index) → (first before, latest after).
    journal: BTreeMap<(Address, String, Option<Address>), (Word256, Word256)>,
    touched: BTreeSet<Address>,
    depth: usize,
}

impl<'a, 'b> ExecCtx<'a, 'b> {
    fn new(interp: &'b Interpreter<'a>, scratch: WorldState) -> ExecCtx<'a, 'b> {
        ExecCtx {
            interp,
            scratch,
            trace: Vec::new(),
            journal: BTreeMap::new(),
            touched: BTreeSet::new(),
            depth: 0,
        }
    }

    fn emit(&mut self, ev: TraceEvent) -> Result<(), Interrupt> {
        if self.trace.len() >= self.interp.step_limit {
            return Err(Interrupt::StepLimit);
        }
        self.trace.push(ev);
        Ok(())
    }

    /// Run one call frame: emit `CallEnter`, execute the body, emit
    /// `CallExit` on normal completion. The callee must already be resolved
    /// and arity-checked by the caller.
    ///
    /// Call stacks may legitimately reach [`MAX_CALL_DEPTH`]; the native
    /// stack is grown on demand so that bound, not thread stack size, is
    /// what limits nesting.
    fn run_call(
        &mut self,
        site: StatementId,
        caller: Address,
        callee: Address,
        contract: &'a ResolvedContract,
        function: &'a FunctionDef,
        args: Vec<CVal>,
    ) -> Result<Option<CVal>, Interrupt> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
            self.run_call_inner(site, caller, callee, contract, function, args)
        })
    }

    fn run_call_inner(
        &mut self,
        site: StatementId,
        caller: Address,
        callee: Address,
        contract: &'a ResolvedContract,
        function: &'a FunctionDef,
        args: Vec<CVal>,
    ) -> Result<Option<CVal>, Interrupt> {
        self.emit(TraceEvent::CallEnter {
            stmt: site,
            caller,
            callee,
            code_hash: contract.code_hash,
            function: function.name.clone(),
        })?;
        let body: &'a [Stmt] = &function.body;
        let mut frame = Frame {
            account: callee,
            code: contract,
            function,
            msg_sender: caller,
            locals: function
                .params
                .iter()
                .zip(args)
                .map(|((name, _), v)| (name.clone(), v))
                .collect(),
        };
        self.depth += 1;
        let flow = self.exec_block(&mut frame, body);
        self.depth -= 1;
        let flow = flow?;
        self.emit(TraceEvent::CallExit)?;
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Normal => None,
        })
    }

    fn exec_block(&mut self, frame: &mut Frame<'a>, stmts: &'a [Stmt]) -> Result<Flow, Interrupt> {
        for stmt in stmts {
            match self.exec_stmt(frame, stmt)? {
                Flow::Normal => {}
                ret @ Flow::Return(_) => return Ok(ret),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, frame: &mut Frame<'a>, stmt: &'a Stmt) -> Result<Flow, Interrupt> {
        let sid = StatementId::new(frame.code.code_hash, &frame.function.name, stmt.id);
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                let v = self.eval(frame, &sid, value, false)?;
                self.emit(TraceEvent::Assign {
                    stmt: sid,
                    local: name.clone(),
                    expr: expr_to_string(value),
                })?;
                frame.locals.insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            StmtKind::Assign { lhs, value } => {
                let v = self.eval(frame, &sid, value, false)?;
                match lhs {
                    LValue::Name(name) if frame.locals.contains_key(name) => {
                        self.emit(TraceEvent::Assign {
                            stmt: sid,
                            local: name.clone(),
                            expr: expr_to_string(value),
                        })?;
                        frame.locals.insert(name.clone(), v);
                    }
                    LValue::Name(slot) => {
                        self.emit(TraceEvent::StorageWrite {
                            stmt: sid,
                            account: frame.account,
                            slot: slot.clone(),
                            index: None,
                        })?;
                        self.write_slot(frame.account, slot, None, v.as_word());
                    }
                    LValue::MapSlot { slot, index } => {
                        let idx = self.eval(frame, &sid, index, false)?.as_word().to_address();
                        self.emit(TraceEvent::StorageWrite {
                            stmt: sid,
                            account: frame.account,
                            slot: slot.clone(),
                            index: Some(idx),
                        })?;
                        self.write_slot(frame.account, slot, Some(idx), v.as_word());
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Require { cond } => {
                let c = self.eval(frame, &sid, cond, false)?;
                if c.truth() {
                    self.emit(TraceEvent::RequirePass { stmt: sid })?;
                    Ok(Flow::Normal)
                } else {
                    self.emit(TraceEvent::Revert { stmt: sid })?;
                    Err(Interrupt::Revert)
                }
            }
            StmtKind::Assert { cond } => {
                self.emit(TraceEvent::AssertSite { stmt: sid.clone() })?;
                if self.interp.debug_asserts {
                    // Quiet evaluation: the debug check must not perturb the
                    // trace (and thus the path hash).
                    let c = self.eval(frame, &sid, cond, true)?;
                    if !c.truth() {
                        return Err(Interrupt::Fatal(ExecError::DebugAssertFailed {
                            stmt: sid,
                            expr: expr_to_string(cond),
                        }));
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let taken = self.eval(frame, &sid, cond, false)?.truth();
                self.emit(TraceEvent::Branch { stmt: sid, taken })?;
                if taken {
                    self.exec_block(frame, then_branch)
                } else {
                    self.exec_block(frame, else_branch)
                }
            }
            StmtKind::Call { target, function, args } => {
                let target_addr = self.eval(frame, &sid, target, false)?.as_word().to_address();
                let mut argvals = Vec::with_capacity(args.len());
                for a in args {
                    argvals.push(self.eval(frame, &sid, a, false)?);
                }
                // Resolve the callee against current (scratch) world state. A
                // call that cannot be completed — no account, unknown
                // function, bad arity, an argument outside its declared
                // address range, or call-depth exhaustion — reverts the
                // whole transaction at this site.
                let resolved = self.resolve_callee(target_addr, function, argvals.len());
                match resolved {
                    Some((contract, fdef))
                        if self.depth < MAX_CALL_DEPTH
                            && fdef.params.iter().zip(&argvals).all(|((_, ty), v)| {
                                *ty != TypeTag::Address || v.as_word().fits_address()
                            }) =>
                    {
                        self.run_call(
                            sid,
                            frame.account,
                            target_addr,
                            contract,
                            fdef,
                            argvals,
                        )?;
                        Ok(Flow::Normal)
                    }
                    _ => {
                        self.emit(TraceEvent::Revert { stmt: sid })?;
                        Err(Interrupt::Revert)
                    }
                }
            }
            StmtKind::Return { value } => {
                let v = match value {
                    Some(e) => Some(self.eval(frame, &sid, e, false)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
        }
    }

    fn resolve_callee(
        &self,
        addr: Address,
        function: &str,
        arity: usize,
    ) -> Option<(&'a ResolvedContract, &'a FunctionDef)> {
        let account = self.scratch.account(&addr)?;
        let contract = self.interp.registry.get(&account.code_hash)?;
        let fdef = contract.function(function).filter(|f| !f.is_constructor)?;
        if fdef.params.len() != arity {
            return None;
        }
        Some((contract, fdef))
    }

    fn write_slot(&mut self, account: Address, slot: &str, index: Option<Address>, value: Word256) {
        let before = {
            let acct = self.scratch.account(&account).expect("write to existing account");
            match index {
                None => acct.scalar(slot),
                Some(idx) => acct.map_entry(slot, idx),
            }
        };
        let entry = self
            .journal
            .entry((account, slot.to_string(), index))
            .or_insert((before, before));
        entry.1 = value;
        let acct = self.scratch.accounts.get_mut(&account).expect("write to existing account");
        match index {
            None => acct.set_scalar(slot, value),
            Some(idx) => acct.set_map_entry(slot, idx, value),
        }
        self.touched.insert(account);
    }

    /// Evaluate an executable-grammar expression in `frame`. Storage reads
    /// emit `StorageRead` events tagged with the enclosing statement, unless
    /// `quiet` (debug-mode assert checking must not perturb the trace).
    /// Division or remainder by zero reverts the transaction.
    fn eval(
        &mut self,
        frame: &Frame<'a>,
        sid: &StatementId,
        e: &Expr,
        quiet: bool,
    ) -> Result<CVal, Interrupt> {
        match e {
            Expr::IntLit(w) => Ok(CVal::Int(*w)),
            Expr::BoolLit(b) => Ok(CVal::Bool(*b)),
            Expr::MsgSender => Ok(CVal::Int(frame.msg_sender.to_word())),
            Expr::Name(name) => {
                if let Some(v) = frame.locals.get(name) {
                    return Ok(*v);
                }
                // Statically resolved: a non-local name is a scalar slot of
                // the executing contract.
                if !quiet {
                    self.emit(TraceEvent::StorageRead {
                        stmt: sid.clone(),
                        account: frame.account,
                        slot: name.clone(),
                        index: None,
                    })?;
                }
                let raw = self
                    .scratch
                    .account(&frame.account)
                    .expect("executing frame has an account")
                    .scalar(name);
                match frame.code.storage_sort(name) {
                    Some(Sort::Bool) => Ok(CVal::Bool(!raw.is_zero())),
                    _ => Ok(CVal::Int(raw)),
                }
            }
            Expr::MapRead { slot, index } => {
                let idx = self.eval(frame, sid, index, quiet)?.as_word().to_address();
                if !quiet {
                    self.emit(TraceEvent::StorageRead {
                        stmt: sid.clone(),
                        account: frame.account,
                        slot: slot.clone(),
                        index: Some(idx),
                    })?;
                }
                let v = self
                    .scratch
                    .account(&frame.account)
                    .expect("executing frame has an account")
                    .map_entry(slot, idx);
                Ok(CVal::Int(v))
            }
            Expr::Not(inner) => {
                let v = self.eval(frame, sid, inner, quiet)?;
                Ok(CVal::Bool(!v.truth()))
            }
            Expr::Binary { op, lhs, rhs } => {
                // Short-circuit boolean connectives are control flow: a
                // skipped operand performs none of its storage reads.
                if *op == BinOp::And {
                    let l = self.eval(frame, sid, lhs, quiet)?;
                    if !l.truth() {
                        return Ok(CVal::Bool(false));
                    }
                    let r = self.eval(frame, sid, rhs, quiet)?;
                    return Ok(CVal::Bool(r.truth()));
                }
                if *op == BinOp::Or {
                    let l = self.eval(frame, sid, lhs, quiet)?;
                    if l.truth() {
                        return Ok(CVal::Bool(true));
                    }
                    let r = self.eval(frame, sid, rhs, quiet)?;
                    return Ok(CVal::Bool(r.truth()));
                }
                let l = self.eval(frame, sid, lhs, quiet)?;
                let r = self.eval(frame, sid, rhs, quiet)?;
                let (a, b) = (l.as_word(), r.as_word());
                let out = match op {
                    BinOp::Add => CVal::Int(a.wrapping_add(b)),
                    BinOp::Sub => CVal::Int(a.wrapping_sub(b)),
                    BinOp::Mul => CVal::Int(a.wrapping_mul(b)),
                    BinOp::Div => match a.checked_div(b) {
                        Some(q) => CVal::Int(q),
                        None => return Err(self.divide_by_zero(sid, quiet)),
                    },
                    BinOp::Mod => match a.checked_rem(b) {
                        Some(m) => CVal::Int(m),
                        None => return Err(self.divide_by_zero(sid, quiet)),
                    },
                    BinOp::Lt => CVal::Bool(a.0 < b.0),
                    BinOp::Le => CVal::Bool(a.0 <= b.0),
                    BinOp::Gt => CVal::Bool(a.0 > b.0),
                    BinOp::Ge => CVal::Bool(a.0 >= b.0),
                    BinOp::Eq => CVal::Bool(l == r),
                    BinOp::Ne => CVal::Bool(l != r),
                    BinOp::And | BinOp::Or => unreachable!("handled above"),
                };
                Ok(out)
            }
            Expr::Sum { .. } | Expr::Forall { .. } => {
                unreachable!("property expression in executable position (rejected at resolve)")
            }
        }
    }

    fn divide_by_zero(&mut self, sid: &StatementId, quiet: bool) -> Interrupt {
        if quiet {
            // Inside a debug-mode assert check: surface as a check failure
            // rather than silently changing control flow.
            return Interrupt::Fatal(ExecError::DebugAssertFailed {
                stmt: sid.clone(),
                expr: "division by zero while checking assert".to_string(),
            });
        }
        match self.emit(TraceEvent::Revert { stmt: sid.clone() }) {
            Ok(()) => Interrupt::Revert,
            Err(limit) => limit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::eval::eval_invariant;
    use super::*;
    use crate::minisol::{parse_source, resolve};

    const TOKEN: &str = include_str!("../../../../corpus/contracts/token.msol");
    const ATTACK: &str = include_str!("../../../../corpus/contracts/attack.msol");

    fn compile(sources: &[&str]) -> CodeRegistry {
        let combined = sources.join("\n");
        let program = resolve(&parse_source(&combined).unwrap()).unwrap();
        let mut registry = CodeRegistry::new();
        registry.insert_program(&program);
        registry
    }

    fn eoa(k: u64) -> Address {
        Address::from_counter(0x1_0000_0000 + k)
    }

    fn tx(origin: Address, target: Address, function: &str, args: Vec<Word256>) -> Transaction {
        Transaction { id: 0, origin, target, function: function.to_string(), args }
    }

    /// Token deployed by alice with supply 1000, committed to the world.
    fn token_world(registry: &CodeRegistry) -> (WorldState, Address) {
        let token = registry.by_name("MultiVulnToken").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(registry);
        let (addr, r) =
            interp.deploy(&world, token, &[Word256::from_u64(1000)], eoa(0)).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        world.apply(&r.delta, registry);
        (world, addr)
    }

    #[test]
    fn transfer_proxy_overflow_commits_with_wrapped_values() {
        let registry = compile(&[TOKEN]);
        let (mut world, token_addr) = token_world(&registry);
        let token = registry.by_name("MultiVulnToken").unwrap();
        let (alice, bob) = (eoa(0), eoa(1));

        // Before the attack both declared invariants hold concretely.
        for inv in &token.invariants {
            assert!(eval_invariant(&world, token_addr, token, inv).unwrap());
        }

        // _fee + _value wraps: 2^255 + (2^255 + 1) == 1 (mod 2^256), so the
        // balance guard compares against 1 instead of ~2^256.
        let value = Word256::pow2(255).wrapping_add(Word256::ONE);
        let fee = Word256::pow2(255);
        let interp = Interpreter::new(&registry);
        let r = interp
            .execute(
                &world,
                &tx(
                    alice,
                    token_addr,
                    "transferProxy",
                    vec![alice.to_word(), bob.to_word(), value, fee],
                ),
            )
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        assert_eq!(r.return_value, Some(Word256::ONE)); // returns true

        // Net delta: alice written twice coalesces, totalSupply untouched.
        assert_eq!(r.delta.writes.len(), 2);
        let w_alice = &r.delta.writes[0];
        assert_eq!(w_alice.index, Some(alice));
        assert_eq!(w_alice.before, Word256::from_u64(1000));
        assert_eq!(w_alice.after, Word256::pow2(255).wrapping_add(Word256::from_u64(999)));
        let w_bob = &r.delta.writes[1];
        assert_eq!(w_bob.index, Some(bob));
        assert_eq!(w_bob.before, Word256::ZERO);
        assert_eq!(w_bob.after, value);

        world.apply(&r.delta, &registry);
        // The unbounded sum now exceeds totalSupply: supply was minted from
        // nothing and the declared invariants are concretely false.
        let sum_inv = &token.invariants[0];
        assert!(!eval_invariant(&world, token_addr, token, sum_inv).unwrap());
    }

    #[test]
    fn debug_mode_catches_the_overflow_commit() {
        let registry = compile(&[TOKEN]);
        let (world, token_addr) = token_world(&registry);
        let alice = eoa(0);
        let value = Word256::pow2(255).wrapping_add(Word256::ONE);
        let fee = Word256::pow2(255);
        let interp = Interpreter::new(&registry).with_debug_asserts(true);
        let err = interp
            .execute(
                &world,
                &tx(
                    alice,
                    token_addr,
                    "transferProxy",
                    vec![alice.to_word(), eoa(1).to_word(), value, fee],
                ),
            )
            .unwrap_err();
        assert!(matches!(err, ExecError::DebugInvariantViolated { .. }), "{err}");
    }

    #[test]
    fn reentrancy_attack_drains_and_inflates() {
        let registry = compile(&[TOKEN, ATTACK]);
        let (mut world, token_addr) = token_world(&registry);
        let token = registry.by_name("MultiVulnToken").unwrap();
        let attacker_code = registry.by_name("ReentrancyAttack").unwrap();
        let (alice, mallory, loot) = (eoa(0), eoa(2), eoa(3));
        let interp = Interpreter::new(&registry);

        let (attacker_addr, r) = interp
            .deploy(&world, attacker_code, &[token_addr.to_word(), loot.to_word()], mallory)
            .unwrap();
        world.apply(&r.delta, &registry);
        // Seed the attacker contract with 5 tokens.
        let r = interp
            .execute(
                &world,
                &tx(
                    alice,
                    token_addr,
                    "transferProxy",
                    vec![
                        alice.to_word(),
                        attacker_addr.to_word(),
                        Word256::from_u64(5),
                        Word256::ZERO,
                    ],
                ),
            )
            .unwrap();
        world.apply(&r.delta, &registry);

        let r = interp
            .execute(&world, &tx(mallory, attacker_addr, "attack", vec![]))
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);

        // One attack frame, ten clear frames (original + nine re-entries),
        // ten notification callbacks: 21 call entries.
        let enters: Vec<&str> = r
            .trace
            .iter()
            .filter_map(|ev| match ev {
                TraceEvent::CallEnter { function, .. } => Some(function.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(enters.len(), 21);
        assert_eq!(enters.iter().filter(|f| **f == "clear").count(), 10);
        assert_eq!(enters.iter().filter(|f| **f == "receiveNotification").count(), 10);

        world.apply(&r.delta, &registry);
        let token_acct = world.account(&token_addr).unwrap();
        // Each clear pass moved the still-standing balance of 5: 10 × 5.
        assert_eq!(token_acct.map_entry("balances", loot), Word256::from_u64(50));
        assert_eq!(token_acct.map_entry("balances", attacker_addr), Word256::ZERO);
        // Zero-valued entries are dropped, keeping map support canonical.
        assert!(!token_acct.maps["balances"].contains_key(&attacker_addr));
        // 45 tokens appeared out of thin air; the sum invariant is broken.
        let sum_inv = &token.invariants[0];
        assert!(!eval_invariant(&world, token_addr, token, sum_inv).unwrap());
    }

    #[test]
    fn revert_rolls_back_earlier_writes() {
        // clear() writes the destination balance before the notification
        // call; an EOA sender has no receiveNotification, so the call fails
        // and the whole transaction must unwind.
        let registry = compile(&[TOKEN]);
        let (world, token_addr) = token_world(&registry);
        let alice = eoa(0);
        let interp = Interpreter::new(&registry);
        let before = world.canonical_json();
        let r = interp
            .execute(&world, &tx(alice, token_addr, "clear", vec![eoa(1).to_word()]))
            .unwrap();
        assert_eq!(r.status, ExecStatus::Reverted);
        assert!(r.delta.is_empty());
        assert!(matches!(r.trace.last(), Some(TraceEvent::Revert { .. })));
        let mut world2 = world.clone();
        world2.apply(&r.delta, &registry);
        assert_eq!(world2.canonical_json(), before);
    }

    #[test]
    fn failing_require_reverts_with_empty_delta() {
        let registry = compile(&[TOKEN]);
        let (world, token_addr) = token_world(&registry);
        let r = Interpreter::new(&registry)
            .execute(
                &world,
                &tx(
                    eoa(0),
                    token_addr,
                    "transferProxy",
                    vec![
                        eoa(0).to_word(),
                        eoa(1).to_word(),
                        Word256::from_u64(5000),
                        Word256::ZERO,
                    ],
                ),
            )
            .unwrap();
        assert_eq!(r.status, ExecStatus::Reverted);
        assert!(r.delta.is_empty());
    }

    #[test]
    fn deploy_revert_creates_no_account() {
        let src = "contract Picky { uint256 x; constructor(uint256 v) { require(v > 0); x = v; } }";
        let registry = compile(&[src]);
        let picky = registry.by_name("Picky").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, picky, &[Word256::ZERO], eoa(0)).unwrap();
        assert_eq!(r.status, ExecStatus::Reverted);
        assert!(r.delta.is_empty());
        world.apply(&r.delta, &registry);
        assert!(world.account(&addr).is_none());
        assert_eq!(world.next_fresh, 1);

        // The same deploy with a passing argument allocates the same address.
        let (addr2, r2) = interp.deploy(&world, picky, &[Word256::ONE], eoa(0)).unwrap();
        assert_eq!(addr2, addr);
        assert_eq!(r2.status, ExecStatus::Committed);
        world.apply(&r2.delta, &registry);
        assert_eq!(world.account(&addr).unwrap().scalar("x"), Word256::ONE);
    }

    const PINGER: &str = "contract Pinger {
        address peer;
        function setPeer(address p) { peer = p; }
        function ping() { call peer.ping(); }
    }";

    #[test]
    fn call_depth_exhaustion_reverts() {
        let registry = compile(&[PINGER]);
        let pinger = registry.by_name("Pinger").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, pinger, &[], eoa(0)).unwrap();
        world.apply(&r.delta, &registry);
        let r = interp
            .execute(&world, &tx(eoa(0), addr, "setPeer", vec![addr.to_word()]))
            .unwrap();
        world.apply(&r.delta, &registry);

        let r = interp.execute(&world, &tx(eoa(0), addr, "ping", vec![])).unwrap();
        assert_eq!(r.status, ExecStatus::Reverted);
        assert!(r.delta.is_empty());
        let enters =
            r.trace.iter().filter(|ev| matches!(ev, TraceEvent::CallEnter { .. })).count();
        assert_eq!(enters, MAX_CALL_DEPTH);
    }

    #[test]
    fn step_limit_truncates_the_trace() {
        let registry = compile(&[PINGER]);
        let pinger = registry.by_name("Pinger").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, pinger, &[], eoa(0)).unwrap();
        world.apply(&r.delta, &registry);
        let r = interp
            .execute(&world, &tx(eoa(0), addr, "setPeer", vec![addr.to_word()]))
            .unwrap();
        world.apply(&r.delta, &registry);

        let limited = Interpreter::new(&registry).with_step_limit(50);
        let r = limited.execute(&world, &tx(eoa(0), addr, "ping", vec![])).unwrap();
        assert_eq!(r.status, ExecStatus::StepLimitExceeded);
        assert!(r.delta.is_empty());
        assert_eq!(r.trace.len(), 50);
    }

    #[test]
    fn debug_asserts_fail_only_under_the_flag() {
        let src = "contract Checked {
            uint256 x;
            function bump(uint256 v) { assert(x + v >= x); x = x + v; }
        }";
        let registry = compile(&[src]);
        let checked = registry.by_name("Checked").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, checked, &[], eoa(0)).unwrap();
        world.apply(&r.delta, &registry);
        let r = interp
            .execute(&world, &tx(eoa(0), addr, "bump", vec![Word256::from_u64(5)]))
            .unwrap();
        world.apply(&r.delta, &registry);

        // Without the flag the assert is a site marker only; the wrapped
        // write commits.
        let wrap = tx(eoa(0), addr, "bump", vec![Word256::MAX]);
        let r = interp.execute(&world, &wrap).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        assert!(r.trace.iter().any(|ev| matches!(ev, TraceEvent::AssertSite { .. })));

        let debug = Interpreter::new(&registry).with_debug_asserts(true);
        let err = debug.execute(&world, &wrap).unwrap_err();
        assert!(matches!(err, ExecError::DebugAssertFailed { .. }), "{err}");

        // The quiet debug evaluation must not perturb the recorded trace.
        let quiet_ok = debug
            .execute(&world, &tx(eoa(0), addr, "bump", vec![Word256::from_u64(7)]))
            .unwrap();
        let plain_ok = interp
            .execute(&world, &tx(eoa(0), addr, "bump", vec![Word256::from_u64(7)]))
            .unwrap();
        assert_eq!(dump_trace(&quiet_ok.trace), dump_trace(&plain_ok.trace));
    }

    #[test]
    fn division_by_zero_reverts() {
        let src = "contract Div {
            function quot(uint256 a, uint256 b) returns (uint256) { return a / b; }
            function rem(uint256 a, uint256 b) returns (uint256) { return a % b; }
        }";
        let registry = compile(&[src]);
        let div = registry.by_name("Div").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, div, &[], eoa(0)).unwrap();
        world.apply(&r.delta, &registry);
        for f in ["quot", "rem"] {
            let r = interp
                .execute(&world, &tx(eoa(0), addr, f, vec![Word256::ONE, Word256::ZERO]))
                .unwrap();
            assert_eq!(r.status, ExecStatus::Reverted, "{f}");
            assert!(matches!(r.trace.last(), Some(TraceEvent::Revert { .. })));
        }
        let r = interp
            .execute(
                &world,
                &tx(eoa(0), addr, "quot", vec![Word256::from_u64(7), Word256::from_u64(2)]),
            )
            .unwrap();
        assert_eq!(r.return_value, Some(Word256::from_u64(3)));
    }

    #[test]
    fn net_zero_writes_vanish_from_the_delta() {
        let src = "contract Wiggle {
            uint256 x;
            function wiggle() { x = x + 1; x = x - 1; }
        }";
        let registry = compile(&[src]);
        let wiggle = registry.by_name("Wiggle").unwrap();
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, wiggle, &[], eoa(0)).unwrap();
        world.apply(&r.delta, &registry);
        let r = interp.execute(&world, &tx(eoa(0), addr, "wiggle", vec![])).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        assert!(r.delta.is_empty(), "{:?}", r.delta);
        // The trace still shows both writes: the path is not the delta.
        let writes =
            r.trace.iter().filter(|ev| matches!(ev, TraceEvent::StorageWrite { .. })).count();
        assert_eq!(writes, 2);
    }

    #[test]
    fn executions_are_deterministic() {
        let run = || {
            let registry = compile(&[TOKEN, ATTACK]);
            let (mut world, token_addr) = token_world(&registry);
            let attacker_code = registry.by_name("ReentrancyAttack").unwrap();
            let interp = Interpreter::new(&registry);
            let (attacker_addr, r) = interp
                .deploy(&world, attacker_code, &[token_addr.to_word(), eoa(3).to_word()], eoa(2))
                .unwrap();
            world.apply(&r.delta, &registry);
            let r = interp
                .execute(
                    &world,
                    &tx(
                        eoa(0),
                        token_addr,
                        "transferProxy",
                        vec![
                            eoa(0).to_word(),
                            attacker_addr.to_word(),
                            Word256::from_u64(5),
                            Word256::ZERO,
                        ],
                    ),
                )
                .unwrap();
            world.apply(&r.delta, &registry);
            let r = interp
                .execute(&world, &tx(eoa(2), attacker_addr, "attack", vec![]))
                .unwrap();
            world.apply(&r.delta, &registry);
            (dump_trace(&r.trace), world.canonical_json())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn entry_validation_is_a_hard_error() {
        let registry = compile(&[TOKEN]);
        let (world, token_addr) = token_world(&registry);
        let interp = Interpreter::new(&registry);

        let err = interp
            .execute(&world, &tx(eoa(0), eoa(5), "transferProxy", vec![]))
            .unwrap_err();
        assert!(matches!(err, ExecError::UnknownAccount(_)), "{err}");

        let err = interp
            .execute(&world, &tx(eoa(0), token_addr, "mintForFree", vec![]))
            .unwrap_err();
        assert!(matches!(err, ExecError::UnknownFunction { .. }), "{err}");

        // Constructors are not callable as transaction entry points.
        let err = interp
            .execute(&world, &tx(eoa(0), token_addr, "constructor", vec![Word256::ONE]))
            .unwrap_err();
        assert!(matches!(err, ExecError::UnknownFunction { .. }), "{err}");

        let err = interp
            .execute(&world, &tx(eoa(0), token_addr, "balanceOf", vec![]))
            .unwrap_err();
        assert!(matches!(err, ExecError::ArityMismatch { .. }), "{err}");

        // An address-typed argument must fit in 160 bits.
        let err = interp
            .execute(&world, &tx(eoa(0), token_addr, "balanceOf", vec![Word256::pow2(200)]))
            .unwrap_err();
        assert!(matches!(err, ExecError::BadArgument { .. }), "{err}");

        let ok = interp
            .execute(&world, &tx(eoa(0), token_addr, "balanceOf", vec![eoa(0).to_word()]))
            .unwrap();
        assert_eq!(ok.return_value, Some(Word256::from_u64(1000)));
    }
}
