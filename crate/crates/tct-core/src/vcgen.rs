// SPDX-License-Identifier: Apache-2.0

//! Proof-obligation construction.
//!
//! [`build_vc`] turns one straight-line SSA program (extracted from a
//! concrete execution trace) plus a hypothesis into a list of
//! [`VCQuery`]s — one per goal, each self-contained and independently
//! dischargeable. The script shared by the queries is assembled once, in
//! a fixed order:
//!
//! 1. account-address symbols, their 160-bit ranges, and pairwise
//!    distinctness;
//! 2. the entry sender and entry parameters with their type ranges;
//! 3. initial storage versions for **every** slot of every account on the
//!    path — zero-valued definitions for the account a deployment
//!    constructs, range assumptions otherwise;
//! 4. the hypothesis;
//! 5. unless the path is a deployment, every account's contract
//!    invariants over initial versions;
//! 6. the entry function's preconditions;
//! 7. the SSA body in path order: definitions, path conditions
//!    (passed requires, taken branches, call-target equations), and map
//!    stores.
//!
//! Goals are anchored where they arise: inline asserts and `#modifies`
//! index obligations at their statement, callee postconditions at their
//! frame's exit, the entry function's postconditions at the path's end,
//! and finally every account's invariants over final storage versions.
//! A discharged goal continues down the path as a `lemma` assumption, so
//! each query's script is a prefix of the next one's (assumption
//! monotonicity), and the query count obeys
//!
//! ```text
//! #queries = #inline-asserts + #postconditions-on-path
//!          + #map-index-frames + #final-invariants
//! ```
//!
//! Callee preconditions are neither assumed nor asserted: the callee body
//! is inlined, so nothing is proved *from* the precondition, and the
//! caller makes no modular-correctness claim about its calls.
//!
//! An undeclared write under a `#modifies` annotation is not a proof
//! goal but a construction error ([`VcError::ModifiesViolation`]): the
//! path is structurally outside its declared frame and no theorem about
//! it should exist.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::minisol::{
    BinOp, CodeRegistry, Expr, ModifiesEntry, ResolvedContract, Sort, TypeTag,
};
use crate::trace::{
    account_address_symbol, storage_symbol, ExitRecord, GoalOrigin, SExpr, SOp, SsaSort, SsaStmt,
    SSAProgram, WriteRecord, ENTRY_SENDER_SYMBOL,
};
use crate::word::{Digest, Word256};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcError {
    /// The path writes a slot its function's `#modifies` clause does not
    /// declare.
    #[error("{contract}.{function} writes undeclared slot {slot}")]
    ModifiesViolation {
        contract: String,
        function: String,
        slot: String,
    },
    /// A property references a name that is neither a parameter, a bound
    /// variable, nor a storage slot of the contract it belongs to.
    #[error("unbound name `{name}` in {context}")]
    UnboundSymbol { name: String, context: String },
    /// A property uses an expression at the wrong sort (e.g. a map slot
    /// where a scalar is required).
    #[error("sort error in {context}: {message}")]
    SortMismatch { context: String, message: String },
    /// The SSA references a code hash the registry does not hold.
    #[error("code hash {0} not in registry")]
    MissingCode(Digest),
}

// ---------------------------------------------------------------------------
// Script items and queries
// ---------------------------------------------------------------------------

/// Why an assumption is in the script (kept for dumps and evidence; the
/// solver treats all kinds identically).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumeKind {
    /// The theorem's applicability condition.
    Hypothesis,
    /// A contract invariant over initial storage versions.
    Invariant,
    /// An entry-function precondition.
    Precondition,
    /// A type range (word width, address width, map value bounds).
    Range,
    /// Pairwise distinctness of account addresses.
    Distinct,
    /// An SSA definition `name == expr`.
    Definition,
    /// A path condition: passed require, taken branch, call-target
    /// equation.
    Path,
    /// An already-discharged goal carried forward.
    Lemma,
}

impl fmt::Display for AssumeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AssumeKind::Hypothesis => "hypothesis",
            AssumeKind::Invariant => "invariant",
            AssumeKind::Precondition => "precondition",
            AssumeKind::Range => "range",
            AssumeKind::Distinct => "distinct",
            AssumeKind::Definition => "definition",
            AssumeKind::Path => "path",
            AssumeKind::Lemma => "lemma",
        };
        f.write_str(s)
    }
}

/// One line of a verification script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptItem {
    Decl {
        name: String,
        sort: SsaSort,
    },
    Assume {
        kind: AssumeKind,
        expr: SExpr,
    },
    /// `name := store(prior, index, value)` — declares `name` and defines
    /// it in one step.
    MapStore {
        name: String,
        prior: String,
        index: SExpr,
        value: SExpr,
    },
}

impl fmt::Display for ScriptItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptItem::Decl { name, sort } => write!(f, "decl {name} : {}", sort.describe()),
            ScriptItem::Assume { kind, expr } => write!(f, "assume[{kind}] {expr}"),
            ScriptItem::MapStore {
                name,
                prior,
                index,
                value,
            } => write!(f, "def {name} := store({prior}, {index}, {value})"),
        }
    }
}

/// One self-contained proof obligation: prove `goal` from `items`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VCQuery {
    pub origin: GoalOrigin,
    pub items: Vec<ScriptItem>,
    pub goal: SExpr,
    /// True when the script or goal multiplies, divides, or takes the
    /// remainder of two non-constant operands; drives solver logic choice
    /// and timeout.
    pub nonlinear: bool,
}

impl VCQuery {
    /// Stable, line-oriented text form (goldens, `inspect vc`).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&item.to_string());
            out.push('\n');
        }
        out.push_str(&format!("goal[{}] {}", self.origin, self.goal));
        out.push('\n');
        out
    }
}

// ---------------------------------------------------------------------------
// Small expression builders
// ---------------------------------------------------------------------------

fn app(op: SOp, args: Vec<SExpr>) -> SExpr {
    SExpr::App(op, args)
}

fn le(a: SExpr, b: SExpr) -> SExpr {
    app(SOp::Le, vec![a, b])
}

fn lt(a: SExpr, b: SExpr) -> SExpr {
    app(SOp::Lt, vec![a, b])
}

fn zero() -> SExpr {
    SExpr::Int(Word256::ZERO)
}

/// `0 <= e < 2^160`.
fn in_address_range(e: SExpr) -> SExpr {
    SExpr::and(vec![
        le(zero(), e.clone()),
        lt(e, SExpr::Int(Word256::pow2(160))),
    ])
}

/// `0 <= e <= 2^256 - 1` (the upper bound is the max word, which fits).
fn in_word_range(e: SExpr) -> SExpr {
    SExpr::and(vec![
        le(zero(), e.clone()),
        le(e, SExpr::Int(Word256::MAX)),
    ])
}

// ---------------------------------------------------------------------------
// Property translation
// ---------------------------------------------------------------------------

/// Where a property's names resolve: one account's contract, an optional
/// parameter binding, an optional `msg.sender`, and a storage-version
/// snapshot (`None` = initial versions).
struct PropScope<'a, 'v> {
    account: usize,
    contract: &'a ResolvedContract,
    /// Source parameter name → SSA symbol.
    params: Vec<(&'a str, &'a str)>,
    msg_sender: Option<&'a SExpr>,
    versions: Option<&'v BTreeMap<(usize, String), u32>>,
    /// Names this scope's errors are attributed to.
    context: String,
}

impl PropScope<'_, '_> {
    fn version(&self, slot: &str) -> u32 {
        self.versions
            .and_then(|m| m.get(&(self.account, slot.to_string())).copied())
            .unwrap_or(0)
    }

    fn slot_sym(&self, slot: &str) -> SExpr {
        SExpr::sym(storage_symbol(self.account, slot, self.version(slot)))
    }
}

fn binop_sop(op: BinOp) -> SOp {
    match op {
        BinOp::Add => SOp::Add,
        BinOp::Sub => SOp::Sub,
        BinOp::Mul => SOp::Mul,
        BinOp::Div => SOp::Udiv,
        BinOp::Mod => SOp::Umod,
        BinOp::Lt => SOp::Lt,
        BinOp::Le => SOp::Le,
        BinOp::Gt => SOp::Gt,
        BinOp::Ge => SOp::Ge,
        BinOp::Eq => SOp::Eq,
        BinOp::Ne => SOp::Ne,
        BinOp::And => SOp::And,
        BinOp::Or => SOp::Or,
    }
}

/// Translate a source-level property expression (invariant, pre/post,
/// hypothesis, or `#modifies` index pattern) into the SSA vocabulary.
/// `bound` carries enclosing `forall` bindings (source name → symbol).
fn translate_prop(
    scope: &PropScope<'_, '_>,
    e: &Expr,
    bound: &mut Vec<(String, String)>,
) -> Result<SExpr, VcError> {
    match e {
        Expr::IntLit(w) => Ok(SExpr::Int(*w)),
        Expr::BoolLit(b) => Ok(SExpr::Bool(*b)),
        Expr::Name(n) => {
            if let Some((_, sym)) = bound.iter().rev().find(|(src, _)| src == n) {
                return Ok(SExpr::sym(sym.clone()));
            }
            if let Some((_, sym)) = scope.params.iter().find(|(src, _)| *src == n.as_str()) {
                return Ok(SExpr::sym(*sym));
            }
            match scope.contract.storage_sort(n) {
                Some(Sort::Map) => Err(VcError::SortMismatch {
                    context: scope.context.clone(),
                    message: format!("map `{n}` used as a scalar"),
                }),
                Some(_) => Ok(scope.slot_sym(n)),
                None => Err(VcError::UnboundSymbol {
                    name: n.clone(),
                    context: scope.context.clone(),
                }),
            }
        }
        Expr::MsgSender => scope.msg_sender.cloned().ok_or_else(|| VcError::UnboundSymbol {
            name: "msg.sender".into(),
            context: scope.context.clone(),
        }),
        Expr::MapRead { slot, index } => {
            if scope.contract.storage_sort(slot) != Some(Sort::Map) {
                return Err(VcError::SortMismatch {
                    context: scope.context.clone(),
                    message: format!("`{slot}` indexed but is not a map"),
                });
            }
            let idx = translate_prop(scope, index, bound)?;
            Ok(SExpr::Select {
                map: Box::new(scope.slot_sym(slot)),
                index: Box::new(idx),
            })
        }
        Expr::Sum { slot } => {
            if scope.contract.storage_sort(slot) != Some(Sort::Map) {
                return Err(VcError::SortMismatch {
                    context: scope.context.clone(),
                    message: format!("sum over `{slot}` which is not a map"),
                });
            }
            Ok(SExpr::Sum(Box::new(scope.slot_sym(slot))))
        }
        Expr::Forall { var, body } => {
            let sym = format!("q{}_{var}", bound.len());
            bound.push((var.clone(), sym.clone()));
            let inner = translate_prop(scope, body, bound);
            bound.pop();
            let inner = inner?;
            // The quantifier ranges over addresses; bake the range guard
            // in so the symbolic form is self-contained.
            let guarded = app(
                SOp::Implies,
                vec![in_address_range(SExpr::sym(sym.clone())), inner],
            );
            Ok(SExpr::Forall {
                var: sym,
                body: Box::new(guarded),
            })
        }
        Expr::Binary { op, lhs, rhs } => {
            let l = translate_prop(scope, lhs, bound)?;
            let r = translate_prop(scope, rhs, bound)?;
            Ok(app(binop_sop(*op), vec![l, r]))
        }
        Expr::Not(inner) => Ok(SExpr::not(translate_prop(scope, inner, bound)?)),
    }
}

// ---------------------------------------------------------------------------
// Nonlinearity scan
// ---------------------------------------------------------------------------

fn expr_nonlinear(e: &SExpr) -> bool {
    match e {
        SExpr::Int(_) | SExpr::Bool(_) | SExpr::Sym(_) | SExpr::ConstMap(_) => false,
        SExpr::Select { map, index } => expr_nonlinear(map) || expr_nonlinear(index),
        SExpr::Sum(m) => expr_nonlinear(m),
        SExpr::Forall { body, .. } => expr_nonlinear(body),
        SExpr::App(op, args) => {
            let own = matches!(op, SOp::Mul | SOp::Udiv | SOp::Umod)
                && args.iter().filter(|a| !matches!(a, SExpr::Int(_))).count() > 1;
            own || args.iter().any(expr_nonlinear)
        }
    }
}

fn item_nonlinear(item: &ScriptItem) -> bool {
    match item {
        ScriptItem::Decl { .. } => false,
        ScriptItem::Assume { expr, .. } => expr_nonlinear(expr),
        ScriptItem::MapStore { index, value, .. } => {
            expr_nonlinear(index) || expr_nonlinear(value)
        }
    }
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

struct PendingGoal {
    origin: GoalOrigin,
    /// The goal is proved from `items[..prefix]`.
    prefix: usize,
    goal: SExpr,
}

struct Builder<'a> {
    ssa: &'a SSAProgram,
    /// Per-account resolved contracts (parallel to `ssa.accounts`).
    contracts: Vec<&'a ResolvedContract>,
    items: Vec<ScriptItem>,
    declared: BTreeSet<String>,
    /// Initial-version symbols the preamble fully defined (deployment
    /// zero state); their duplicate definitions in the SSA body are
    /// skipped.
    predefined: BTreeSet<String>,
    goals: Vec<PendingGoal>,
}

impl<'a> Builder<'a> {
    fn decl(&mut self, name: &str, sort: SsaSort) {
        if self.declared.insert(name.to_string()) {
            self.items.push(ScriptItem::Decl {
                name: name.to_string(),
                sort,
            });
        }
    }

    fn assume(&mut self, kind: AssumeKind, expr: SExpr) {
        self.items.push(ScriptItem::Assume { kind, expr });
    }

    fn goal(&mut self, origin: GoalOrigin, goal: SExpr) {
        self.goals.push(PendingGoal {
            origin,
            prefix: self.items.len(),
            goal,
        });
    }

    /// Parameter binding, pre/posts, and frame clause of one callable;
    /// all empty for a declaration-free default constructor.
    fn callable(
        &self,
        account: usize,
        function: &str,
    ) -> (
        &'a [(String, TypeTag)],
        &'a [Expr],
        &'a [Expr],
        Option<&'a [ModifiesEntry]>,
    ) {
        match self.contracts[account].function(function) {
            Some(f) => (
                &f.params,
                &f.preconditions,
                &f.postconditions,
                f.modifies.as_deref(),
            ),
            None => (&[], &[], &[], None),
        }
    }

    /// Scope for properties attached to `frame` (pre/posts, modifies
    /// patterns): parameters bind to the frame's symbols, `msg.sender`
    /// to the frame's sender expression.
    fn frame_scope<'v>(
        &self,
        frame: usize,
        versions: Option<&'v BTreeMap<(usize, String), u32>>,
        context: String,
    ) -> PropScope<'a, 'v> {
        let ssa = self.ssa;
        let fi = &ssa.frames[frame];
        let (params, _, _, _) = self.callable(fi.account, &fi.function);
        let bound: Vec<(&str, &str)> = params
            .iter()
            .map(|(n, _)| n.as_str())
            .zip(fi.param_symbols.iter().map(|s| s.as_str()))
            .collect();
        PropScope {
            account: fi.account,
            contract: self.contracts[fi.account],
            params: bound,
            msg_sender: Some(&fi.msg_sender),
            versions,
            context,
        }
    }

    /// Scope for one contract's invariants: storage only.
    fn invariant_scope<'v>(
        &self,
        account: usize,
        versions: Option<&'v BTreeMap<(usize, String), u32>>,
        context: String,
    ) -> PropScope<'a, 'v> {
        PropScope {
            account,
            contract: self.contracts[account],
            params: Vec::new(),
            msg_sender: None,
            versions,
            context,
        }
    }

    // -- preamble ----------------------------------------------------------

    fn emit_preamble(&mut self, hypothesis: &Expr) -> Result<(), VcError> {
        // Account addresses: declarations, ranges, pairwise distinctness.
        for k in 0..self.ssa.accounts.len() {
            let sym = account_address_symbol(k);
            self.decl(&sym, SsaSort::Int);
            self.assume(AssumeKind::Range, in_address_range(SExpr::sym(sym)));
        }
        for i in 0..self.ssa.accounts.len() {
            for j in (i + 1)..self.ssa.accounts.len() {
                self.assume(
                    AssumeKind::Distinct,
                    app(
                        SOp::Ne,
                        vec![
                            SExpr::sym(account_address_symbol(i)),
                            SExpr::sym(account_address_symbol(j)),
                        ],
                    ),
                );
            }
        }

        // Entry sender.
        self.decl(ENTRY_SENDER_SYMBOL, SsaSort::Int);
        self.assume(
            AssumeKind::Range,
            in_address_range(SExpr::sym(ENTRY_SENDER_SYMBOL)),
        );

        // Entry parameters with their type ranges.
        let entry = &self.ssa.frames[0];
        let (params, _, _, _) = self.callable(entry.account, &entry.function);
        for (sym, (name, ty)) in entry.param_symbols.iter().zip(params) {
            match ty {
                TypeTag::Uint256 => {
                    self.decl(sym, SsaSort::Int);
                    self.assume(AssumeKind::Range, in_word_range(SExpr::sym(sym.clone())));
                }
                TypeTag::Address => {
                    self.decl(sym, SsaSort::Int);
                    self.assume(
                        AssumeKind::Range,
                        in_address_range(SExpr::sym(sym.clone())),
                    );
                }
                TypeTag::Bool => self.decl(sym, SsaSort::Bool),
                TypeTag::Map => {
                    return Err(VcError::SortMismatch {
                        context: format!("parameter `{name}`"),
                        message: "map-typed parameters are not supported".into(),
                    })
                }
            }
        }

        // Initial storage versions for every slot of every account. The
        // account a deployment constructs starts from defined zero
        // state; anything pre-existing gets type-range assumptions.
        for (k, contract) in self.contracts.clone().into_iter().enumerate() {
            let constructed = self.ssa.is_deployment && k == 0;
            for decl in &contract.storage {
                let sym = storage_symbol(k, &decl.name, 0);
                let sort = match decl.ty {
                    TypeTag::Uint256 | TypeTag::Address => SsaSort::Int,
                    TypeTag::Bool => SsaSort::Bool,
                    TypeTag::Map => SsaSort::Map,
                };
                self.decl(&sym, sort);
                if constructed {
                    self.predefined.insert(sym.clone());
                    let fresh = match decl.ty {
                        TypeTag::Uint256 | TypeTag::Address => zero(),
                        TypeTag::Bool => SExpr::Bool(false),
                        TypeTag::Map => SExpr::ConstMap(Word256::ZERO),
                    };
                    self.assume(
                        AssumeKind::Definition,
                        SExpr::eq(SExpr::sym(sym), fresh),
                    );
                } else {
                    match decl.ty {
                        TypeTag::Uint256 => {
                            self.assume(AssumeKind::Range, in_word_range(SExpr::sym(sym)))
                        }
                        TypeTag::Address => self
                            .assume(AssumeKind::Range, in_address_range(SExpr::sym(sym))),
                        TypeTag::Bool => {}
                        TypeTag::Map => {
                            // Every stored value is a word: forall i ::
                            // 0 <= select(m, i) <= MAX. No index guard —
                            // absent entries read as 0.
                            let var = "qv".to_string();
                            let sel = SExpr::Select {
                                map: Box::new(SExpr::sym(sym)),
                                index: Box::new(SExpr::sym(var.clone())),
                            };
                            self.assume(
                                AssumeKind::Range,
                                SExpr::Forall {
                                    var,
                                    body: Box::new(in_word_range(sel)),
                                },
                            );
                        }
                    }
                }
            }
        }

        // Hypothesis: entry-frame vocabulary over initial versions.
        let scope = self.frame_scope(0, None, "hypothesis".into());
        let h = translate_prop(&scope, hypothesis, &mut Vec::new())?;
        self.assume(AssumeKind::Hypothesis, h);

        // Invariants over initial versions — except under deployment,
        // where no prior state exists to satisfy them.
        if !self.ssa.is_deployment {
            for k in 0..self.contracts.len() {
                let contract = self.contracts[k];
                for (i, inv) in contract.invariants.iter().enumerate() {
                    let scope = self.invariant_scope(
                        k,
                        None,
                        format!("invariant #{i} of {}", contract.name),
                    );
                    let t = translate_prop(&scope, inv, &mut Vec::new())?;
                    self.assume(AssumeKind::Invariant, t);
                }
            }
        }

        // Entry preconditions.
        let entry = &self.ssa.frames[0];
        let (_, pres, _, _) = self.callable(entry.account, &entry.function);
        for (i, pre) in pres.iter().enumerate() {
            let scope = self.frame_scope(0, None, format!("precondition #{i}"));
            let t = translate_prop(&scope, pre, &mut Vec::new())?;
            self.assume(AssumeKind::Precondition, t);
        }

        Ok(())
    }

    // -- path events -------------------------------------------------------

    /// Postcondition goals for the frame exiting at `exit`, instantiated
    /// over that exit's storage-version snapshot. Discharged posts carry
    /// forward as lemmas.
    fn fire_exit(&mut self, exit: &ExitRecord) -> Result<(), VcError> {
        let ssa = self.ssa;
        let fi = &ssa.frames[exit.frame];
        let (_, _, posts, _) = self.callable(fi.account, &fi.function);
        let contract_name = self.contracts[fi.account].name.clone();
        for (i, post) in posts.iter().enumerate() {
            let scope = self.frame_scope(
                exit.frame,
                Some(&exit.versions),
                format!("postcondition #{i} of {}.{}", contract_name, fi.function),
            );
            let t = translate_prop(&scope, post, &mut Vec::new())?;
            self.goal(
                GoalOrigin::Postcondition {
                    contract: contract_name.clone(),
                    function: fi.function.clone(),
                    index: i,
                },
                t.clone(),
            );
            self.assume(AssumeKind::Lemma, t);
        }
        Ok(())
    }

    /// Frame-clause check for one storage write. An undeclared slot is a
    /// construction error; a declared map slot with index patterns yields
    /// an equality goal against the written index.
    fn check_write(
        &mut self,
        write: &WriteRecord,
        versions: &BTreeMap<(usize, String), u32>,
    ) -> Result<(), VcError> {
        let ssa = self.ssa;
        let fi = &ssa.frames[write.frame];
        let (_, _, _, modifies) = self.callable(fi.account, &fi.function);
        let Some(entries) = modifies else {
            return Ok(()); // unannotated: unrestricted
        };
        let matching: Vec<&ModifiesEntry> =
            entries.iter().filter(|e| e.slot == write.slot).collect();
        let contract_name = self.contracts[fi.account].name.clone();
        if matching.is_empty() {
            return Err(VcError::ModifiesViolation {
                contract: contract_name,
                function: fi.function.clone(),
                slot: write.slot.clone(),
            });
        }
        let Some(widx) = &write.index else {
            return Ok(()); // scalar write: the slot match is the whole check
        };
        if matching.iter().any(|e| e.index.is_none()) {
            return Ok(()); // whole-map declaration covers every index
        }
        let mut alts = Vec::new();
        for entry in matching {
            let pattern = entry.index.as_ref().expect("filtered above");
            let scope = self.frame_scope(
                write.frame,
                Some(versions),
                format!("modifies pattern for {}", write.slot),
            );
            let p = translate_prop(&scope, pattern, &mut Vec::new())?;
            alts.push(SExpr::eq(widx.clone(), p));
        }
        let goal = if alts.len() == 1 {
            alts.pop().expect("nonempty")
        } else {
            app(SOp::Or, alts)
        };
        self.goal(
            GoalOrigin::ModifiesFrame {
                contract: contract_name,
                function: fi.function.clone(),
                slot: write.slot.clone(),
            },
            goal,
        );
        Ok(())
    }

    fn emit_stmt(&mut self, stmt: &SsaStmt) {
        match stmt {
            SsaStmt::DefineSymbol { name } => {
                let sort = self
                    .ssa
                    .symbols
                    .get(name)
                    .copied()
                    .unwrap_or(SsaSort::Int);
                self.decl(name, sort);
            }
            SsaStmt::AssumeExpr { expr } => self.assume(AssumeKind::Path, expr.clone()),
            SsaStmt::AssignDef { name, expr } => {
                if self.predefined.contains(name) {
                    return; // the preamble already defined this zero state
                }
                let sort = self
                    .ssa
                    .symbols
                    .get(name)
                    .copied()
                    .unwrap_or(SsaSort::Int);
                self.decl(name, sort);
                self.assume(
                    AssumeKind::Definition,
                    SExpr::eq(SExpr::sym(name.clone()), expr.clone()),
                );
            }
            SsaStmt::MapStoreDef {
                name,
                prior,
                index,
                value,
            } => {
                self.declared.insert(name.clone());
                self.items.push(ScriptItem::MapStore {
                    name: name.clone(),
                    prior: prior.clone(),
                    index: index.clone(),
                    value: value.clone(),
                });
            }
            SsaStmt::AssertGoal { expr, origin } => {
                self.goal(origin.clone(), expr.clone());
                self.assume(AssumeKind::Lemma, expr.clone());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Build the proof obligations for one extracted path under `hypothesis`.
///
/// The hypothesis is an entry-frame property (over entry parameters,
/// `msg.sender`, and entry-contract storage at its initial versions).
/// Errors are construction-level: unknown code, unbound names in
/// properties, or a write outside its function's declared frame.
pub fn build_vc(
    ssa: &SSAProgram,
    hypothesis: &Expr,
    registry: &CodeRegistry,
) -> Result<Vec<VCQuery>, VcError> {
    let contracts: Vec<&ResolvedContract> = ssa
        .accounts
        .iter()
        .map(|a| {
            registry
                .get(&a.code_hash)
                .ok_or(VcError::MissingCode(a.code_hash))
        })
        .collect::<Result<_, _>>()?;

    let mut b = Builder {
        ssa,
        contracts,
        items: Vec::new(),
        declared: BTreeSet::new(),
        predefined: BTreeSet::new(),
        goals: Vec::new(),
    };

    b.emit_preamble(hypothesis)?;

    // Body walk. Exit records anchor before their statement index; a
    // write's frame check happens where its defining statement lands.
    // `cur_versions` tracks storage versions along the path so modifies
    // patterns read the state in effect at the write.
    let mut cur_versions: BTreeMap<(usize, String), u32> = BTreeMap::new();
    let mut exits = ssa.call_exits.iter().peekable();
    let mut writes = ssa.writes.iter().peekable();
    for (i, stmt) in ssa.stmts.iter().enumerate() {
        while exits.peek().is_some_and(|e| e.ssa_index == i) {
            let e = exits.next().expect("peeked");
            b.fire_exit(e)?;
        }
        let mut bumps: Vec<(usize, String)> = Vec::new();
        while writes.peek().is_some_and(|w| w.ssa_index == i) {
            let w = writes.next().expect("peeked");
            b.check_write(w, &cur_versions)?;
            bumps.push((w.account, w.slot.clone()));
        }
        b.emit_stmt(stmt);
        for key in bumps {
            *cur_versions.entry(key).or_insert(0) += 1;
        }
    }
    // Entry exit (and any exit anchored past the last statement).
    for e in exits {
        b.fire_exit(e)?;
    }

    // Every account's invariants over final storage versions.
    for k in 0..b.contracts.len() {
        let contract = b.contracts[k];
        for (i, inv) in contract.invariants.iter().enumerate() {
            let scope = b.invariant_scope(
                k,
                Some(&ssa.final_versions),
                format!("invariant #{i} of {}", contract.name),
            );
            let t = translate_prop(&scope, inv, &mut Vec::new())?;
            b.goal(
                GoalOrigin::Invariant {
                    contract: contract.name.clone(),
                    index: i,
                },
                t,
            );
        }
    }

    let items = b.items;
    Ok(b.goals
        .into_iter()
        .map(|g| {
            let slice = items[..g.prefix].to_vec();
            let nonlinear =
                slice.iter().any(item_nonlinear) || expr_nonlinear(&g.goal);
            VCQuery {
                origin: g.origin,
                items: slice,
                goal: g.goal,
                nonlinear,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{ExecStatus, Interpreter, Transaction, WorldState};
    use crate::minisol::{parse_hypothesis, parse_source, resolve};
    use crate::trace::extract_straightline;
    use crate::word::Address;

    const TOKEN: &str = include_str!("../../../corpus/contracts/token.msol");
    const ATTACK: &str = include_str!("../../../corpus/contracts/attack.msol");
    const WALLET: &str = include_str!("../../../corpus/contracts/wallet.msol");
    const AMM: &str = include_str!("../../../corpus/contracts/amm.msol");

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

    /// Deploy `contract_name` with `args`, commit, then run one call and
    /// extract its SSA. Panics if anything reverts.
    fn run_and_extract(
        registry: &CodeRegistry,
        contract_name: &str,
        deploy_args: &[Word256],
        function: &str,
        call_args: Vec<Word256>,
        sender: Address,
    ) -> SSAProgram {
        let contract = registry.by_name(contract_name).unwrap().clone();
        let mut world = WorldState::new();
        let interp = Interpreter::new(registry);
        let (addr, r) = interp.deploy(&world, &contract, deploy_args, eoa(0)).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        world.apply(&r.delta, registry);
        let r = interp
            .execute(&world, &tx(sender, addr, function, call_args))
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        extract_straightline(&r.trace, registry).unwrap()
    }

    fn transfer_proxy_ssa(value: Word256, fee: Word256) -> (CodeRegistry, SSAProgram) {
        let registry = compile(&[TOKEN]);
        let (alice, bob) = (eoa(0), eoa(1));
        let ssa = run_and_extract(
            &registry,
            "MultiVulnToken",
            &[Word256::from_u64(1000)],
            "transferProxy",
            vec![alice.to_word(), bob.to_word(), value, fee],
            alice,
        );
        (registry, ssa)
    }

    fn dump_lines(q: &VCQuery) -> Vec<String> {
        q.dump().lines().map(str::to_string).collect()
    }

    #[test]
    fn wrapping_transfer_yields_exactly_the_two_invariant_queries() {
        let (registry, ssa) = transfer_proxy_ssa(
            Word256::pow2(255).wrapping_add(Word256::ONE),
            Word256::pow2(255),
        );
        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(
            qs[0].origin,
            GoalOrigin::Invariant { contract: "MultiVulnToken".into(), index: 0 }
        );
        assert_eq!(
            qs[1].origin,
            GoalOrigin::Invariant { contract: "MultiVulnToken".into(), index: 1 }
        );
        // Both goals sit at the end of the same path: identical scripts.
        assert_eq!(qs[0].items, qs[1].items);
        // Three map stores bump balances to v3; totalSupply is untouched.
        assert_eq!(
            qs[0].goal.to_string(),
            "sum(acct0_balances_v3) == acct0_totalSupply_v0"
        );
        // Pure 256-bit add/sub path: linear.
        assert!(!qs[0].nonlinear);
        assert!(!qs[1].nonlinear);
    }

    #[test]
    fn assumptions_come_in_the_normative_order() {
        let (registry, ssa) = transfer_proxy_ssa(Word256::from_u64(10), Word256::ONE);
        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        let lines = dump_lines(&qs[0]);
        assert_eq!(lines[0], "decl acct0_addr : int");

        let pos = |needle: &str| lines.iter().position(|l| l.starts_with(needle));
        let hyp = pos("assume[hypothesis]").expect("hypothesis present");
        let inv = pos("assume[invariant]").expect("invariants present");
        let path = pos("assume[path]").expect("path conditions present");
        let store = pos("def ").expect("map stores present");
        assert!(hyp < inv, "hypothesis precedes invariants");
        assert!(inv < path, "invariants precede the body");
        assert!(inv < store, "invariants precede map stores");

        // Initial-version range assumptions precede the hypothesis.
        let range = pos("assume[range]").expect("ranges present");
        assert!(range < hyp);

        assert_eq!(
            lines.iter().filter(|l| l.starts_with("assume[invariant]")).count(),
            2
        );
        // transferProxy declares no preconditions.
        assert!(pos("assume[precondition]").is_none());
    }

    #[test]
    fn deployment_proves_invariants_without_assuming_any() {
        let registry = compile(&[TOKEN]);
        let token = registry.by_name("MultiVulnToken").unwrap().clone();
        let world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (_, r) = interp
            .deploy(&world, &token, &[Word256::from_u64(777)], eoa(0))
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        let ssa = extract_straightline(&r.trace, &registry).unwrap();
        assert!(ssa.is_deployment);

        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert_eq!(qs.len(), 2, "both invariants are deployment goals");
        let dump = qs[1].dump();
        assert!(
            !dump.contains("assume[invariant]"),
            "deployment must not assume invariants:\n{dump}"
        );
        // Fresh storage is defined, not ranged.
        assert!(dump.contains("assume[definition] acct0_totalSupply_v0 == 0"));
        assert!(dump.contains("assume[definition] acct0_balances_v0 == const(0)"));
        // The constructor writes both slots once.
        assert!(dump.contains("goal[invariant#1@MultiVulnToken]"));
        assert!(qs[0].goal.to_string().contains("acct0_balances_v1"));
    }

    #[test]
    fn undeclared_write_fails_construction() {
        let registry = compile(&[WALLET]);
        let ssa = run_and_extract(
            &registry,
            "WalletLike",
            &[],
            "fallbackEntry",
            vec![Word256::from_u64(777)],
            eoa(8),
        );
        let err = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap_err();
        assert_eq!(
            err,
            VcError::ModifiesViolation {
                contract: "WalletLike".into(),
                function: "fallbackEntry".into(),
                slot: "owner".into(),
            }
        );
    }

    #[test]
    fn declared_write_set_off_path_builds_cleanly() {
        let registry = compile(&[WALLET]);
        let ssa = run_and_extract(
            &registry,
            "WalletLike",
            &[],
            "fallbackEntry",
            vec![Word256::from_u64(5)],
            eoa(8),
        );
        // Branch not taken, nothing written, no properties to prove.
        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert!(qs.is_empty());
    }

    #[test]
    fn map_write_under_an_index_pattern_yields_an_equality_goal() {
        let registry = compile(&[WALLET]);
        let ssa = run_and_extract(
            &registry,
            "WalletLike",
            &[],
            "deposit",
            vec![Word256::from_u64(40)],
            eoa(8),
        );
        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(
            qs[0].origin,
            GoalOrigin::ModifiesFrame {
                contract: "WalletLike".into(),
                function: "deposit".into(),
                slot: "deposits".into(),
            }
        );
        // The written index is msg.sender and so is the declared pattern.
        assert_eq!(qs[0].goal.to_string(), "msg_sender == msg_sender");
        // The goal anchors before the store itself lands.
        assert!(!qs[0]
            .items
            .iter()
            .any(|i| matches!(i, ScriptItem::MapStore { .. })));
    }

    #[test]
    fn inline_assert_is_a_truncated_nonlinear_query() {
        let registry = compile(&[AMM]);
        let pool = registry.by_name("ConstantProductPair").unwrap().clone();
        let alice = eoa(0);
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (addr, r) = interp.deploy(&world, &pool, &[], alice).unwrap();
        world.apply(&r.delta, &registry);
        let r = interp
            .execute(
                &world,
                &tx(
                    alice,
                    addr,
                    "addLiquidity",
                    vec![
                        Word256::from_u64(1000),
                        Word256::from_u64(1000),
                        Word256::from_u64(1000),
                    ],
                ),
            )
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        world.apply(&r.delta, &registry);
        let r = interp
            .execute(
                &world,
                &tx(
                    alice,
                    addr,
                    "swap",
                    vec![Word256::from_u64(250), Word256::ZERO, Word256::ONE],
                ),
            )
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        let ssa = extract_straightline(&r.trace, &registry).unwrap();

        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert_eq!(qs.len(), 2, "one inline assert, one final invariant");
        assert!(matches!(qs[0].origin, GoalOrigin::InlineAssert { .. }));
        assert!(qs[0].nonlinear, "reserve product is nonlinear");

        // Assumption monotonicity: the assert's script is a strict prefix
        // of the invariant's, and the discharged assert carries forward
        // as a lemma.
        let n = qs[0].items.len();
        assert!(n < qs[1].items.len());
        assert_eq!(qs[0].items[..], qs[1].items[..n]);
        assert_eq!(
            qs[1].items[n],
            ScriptItem::Assume { kind: AssumeKind::Lemma, expr: qs[0].goal.clone() }
        );

        // Untouched liquidity book: final invariant over initial versions.
        assert_eq!(
            qs[1].goal.to_string(),
            "sum(acct0_liquidity_v0) == acct0_liquiditySupply_v0"
        );
        // Scalar writes covered by the declared frame: no modifies goals.
        assert!(!qs
            .iter()
            .any(|q| matches!(q.origin, GoalOrigin::ModifiesFrame { .. })));
    }

    #[test]
    fn postconditions_anchor_at_their_frame_exits() {
        let source = r#"
contract Vault {
    uint256 stash;

    #pre _v > 0
    #post stash == _v
    function put(uint256 _v) {
        stash = _v;
    }
}

contract Driver {
    #pre _v < 100
    #post true
    function drive(address _vault, uint256 _v) {
        call _vault.put(_v);
    }
}
"#;
        let registry = compile(&[source]);
        let vault = registry.by_name("Vault").unwrap().clone();
        let driver = registry.by_name("Driver").unwrap().clone();
        let alice = eoa(0);
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (vault_addr, r) = interp.deploy(&world, &vault, &[], alice).unwrap();
        world.apply(&r.delta, &registry);
        let (driver_addr, r) = interp.deploy(&world, &driver, &[], alice).unwrap();
        world.apply(&r.delta, &registry);
        let r = interp
            .execute(
                &world,
                &tx(
                    alice,
                    driver_addr,
                    "drive",
                    vec![vault_addr.to_word(), Word256::from_u64(42)],
                ),
            )
            .unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        let ssa = extract_straightline(&r.trace, &registry).unwrap();

        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(
            qs[0].origin,
            GoalOrigin::Postcondition {
                contract: "Vault".into(),
                function: "put".into(),
                index: 0,
            }
        );
        assert_eq!(qs[0].goal.to_string(), "acct1_stash_v1 == _v_f1");
        assert_eq!(
            qs[1].origin,
            GoalOrigin::Postcondition {
                contract: "Driver".into(),
                function: "drive".into(),
                index: 0,
            }
        );
        assert!(qs[0].items.len() < qs[1].items.len());
        // The callee post carries forward as a lemma for the entry post.
        assert!(qs[1].items.contains(&ScriptItem::Assume {
            kind: AssumeKind::Lemma,
            expr: qs[0].goal.clone(),
        }));

        // Entry preconditions are assumed; callee preconditions are
        // neither assumed nor asserted.
        let dump = qs[1].dump();
        let pres: Vec<&str> = dump
            .lines()
            .filter(|l| l.starts_with("assume[precondition]"))
            .collect();
        assert_eq!(pres, vec!["assume[precondition] _v < 100"]);
    }

    #[test]
    fn hypothesis_binds_parameters_and_initial_scalars() {
        let registry = compile(&[TOKEN]);
        let token = registry.by_name("MultiVulnToken").unwrap().clone();
        let f = token.function("transferProxy").unwrap();
        let phi =
            parse_hypothesis(&token, f, "_value < 100 && totalSupply <= 1000000").unwrap();

        let (alice, bob) = (eoa(0), eoa(1));
        let ssa = run_and_extract(
            &registry,
            "MultiVulnToken",
            &[Word256::from_u64(1000)],
            "transferProxy",
            vec![alice.to_word(), bob.to_word(), Word256::from_u64(10), Word256::ONE],
            alice,
        );
        let qs = build_vc(&ssa, &phi, &registry).unwrap();
        assert!(qs[0]
            .dump()
            .contains("assume[hypothesis] (_value < 100) && (acct0_totalSupply_v0 <= 1000000)"));
    }

    #[test]
    fn reentrant_path_obeys_the_query_count_law() {
        let registry = compile(&[TOKEN, ATTACK]);
        let token = registry.by_name("MultiVulnToken").unwrap().clone();
        let attacker_code = registry.by_name("ReentrancyAttack").unwrap().clone();
        let (alice, mallory, loot) = (eoa(0), eoa(2), eoa(3));
        let mut world = WorldState::new();
        let interp = Interpreter::new(&registry);
        let (token_addr, r) = interp
            .deploy(&world, &token, &[Word256::from_u64(1000)], alice)
            .unwrap();
        world.apply(&r.delta, &registry);
        let (attacker_addr, r) = interp
            .deploy(&world, &attacker_code, &[token_addr.to_word(), loot.to_word()], mallory)
            .unwrap();
        world.apply(&r.delta, &registry);
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
        let ssa = extract_straightline(&r.trace, &registry).unwrap();

        // No asserts, no posts, no annotated frames on the path; the
        // token's two invariants are the only goals even across twenty
        // nested frames.
        let qs = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        assert_eq!(qs.len(), 2);
        assert!(qs
            .iter()
            .all(|q| matches!(&q.origin, GoalOrigin::Invariant { contract, .. } if contract == "MultiVulnToken")));
    }

    #[test]
    fn unbound_property_names_are_reported() {
        let (registry, ssa) = transfer_proxy_ssa(Word256::from_u64(10), Word256::ONE);
        let err = build_vc(&ssa, &Expr::Name("bogus".into()), &registry).unwrap_err();
        assert_eq!(
            err,
            VcError::UnboundSymbol { name: "bogus".into(), context: "hypothesis".into() }
        );
    }
}
