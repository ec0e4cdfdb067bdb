// SPDX-License-Identifier: Apache-2.0

//! Name resolution, inheritance flattening, type checking, statement
//! numbering, and code hashing.
//!
//! A resolved contract is self-contained: storage, invariants, and
//! functions accumulated from its bases, every statement numbered in
//! pre-order within its function, and a code hash over the canonical
//! (name-sorted) print of the flattened contract.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::word::Digest;

use super::ast::*;
use super::printer;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("contract `{contract}`: unknown base `{base}` (bases must be declared earlier in the file)")]
    UnknownBase { contract: String, base: String },
    #[error("contract `{contract}`: storage `{name}` declared more than once across the hierarchy")]
    DuplicateStorage { contract: String, name: String },
    #[error("contract `{contract}`: override of `{function}` changes the signature")]
    OverrideSignatureMismatch { contract: String, function: String },
    #[error("contract `{contract}`: override of `{function}` writes outside the base modifies set")]
    OverrideWeakensSpec { contract: String, function: String },
    #[error("{context}: line {line}: {msg}")]
    TypeError {
        context: String,
        line: u32,
        msg: String,
    },
}

/// Semantic sort of a MiniSol expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Int,
    Addr,
    Bool,
    Map,
}

impl Sort {
    pub fn describe(self) -> &'static str {
        match self {
            Sort::Int => "uint256",
            Sort::Addr => "address",
            Sort::Bool => "bool",
            Sort::Map => "map(address => uint256)",
        }
    }

    fn of_type(ty: TypeTag) -> Sort {
        match ty {
            TypeTag::Uint256 => Sort::Int,
            TypeTag::Address => Sort::Addr,
            TypeTag::Bool => Sort::Bool,
            TypeTag::Map => Sort::Map,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedContract {
    pub name: String,
    pub storage: Vec<StorageDecl>,
    pub invariants: Vec<Expr>,
    pub constructor: Option<FunctionDef>,
    pub functions: Vec<FunctionDef>,
    /// Canonical print of the flattened contract (functions name-sorted).
    pub canonical_text: String,
    /// SHA-256 of `canonical_text`; identifies this code everywhere.
    pub code_hash: Digest,
}

impl ResolvedContract {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        if name == "constructor" {
            return self.constructor.as_ref();
        }
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn storage_sort(&self, slot: &str) -> Option<Sort> {
        self.storage
            .iter()
            .find(|d| d.name == slot)
            .map(|d| Sort::of_type(d.ty))
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedProgram {
    pub contracts: Vec<ResolvedContract>,
    pub source_hash: Digest,
}

impl ResolvedProgram {
    pub fn contract(&self, name: &str) -> Option<&ResolvedContract> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn by_code_hash(&self, hash: &Digest) -> Option<&ResolvedContract> {
        self.contracts.iter().find(|c| &c.code_hash == hash)
    }
}

/// Resolve a parsed source unit: flatten inheritance, type-check,
/// number statements, and compute code hashes.
pub fn resolve(unit: &SourceUnit) -> Result<ResolvedProgram, ResolveError> {
    let mut resolved: Vec<ResolvedContract> = Vec::new();
    for def in &unit.contracts {
        let contract = resolve_contract(def, &resolved)?;
        resolved.push(contract);
    }
    Ok(ResolvedProgram {
        contracts: resolved,
        source_hash: unit.source_hash,
    })
}

fn resolve_contract(
    def: &ContractDef,
    earlier: &[ResolvedContract],
) -> Result<ResolvedContract, ResolveError> {
    let mut storage: Vec<StorageDecl> = Vec::new();
    let mut invariants: Vec<Expr> = Vec::new();
    let mut functions: Vec<FunctionDef> = Vec::new();

    for base_name in &def.bases {
        let base = earlier
            .iter()
            .find(|c| c.name == *base_name)
            .ok_or_else(|| ResolveError::UnknownBase {
                contract: def.name.clone(),
                base: base_name.clone(),
            })?;
        for decl in &base.storage {
            if storage.iter().any(|d| d.name == decl.name) {
                return Err(ResolveError::DuplicateStorage {
                    contract: def.name.clone(),
                    name: decl.name.clone(),
                });
            }
            storage.push(decl.clone());
        }
        invariants.extend(base.invariants.iter().cloned());
        for f in &base.functions {
            merge_function(&def.name, &mut functions, f.clone())?;
        }
    }

    for decl in &def.storage {
        if storage.iter().any(|d| d.name == decl.name) {
            return Err(ResolveError::DuplicateStorage {
                contract: def.name.clone(),
                name: decl.name.clone(),
            });
        }
        storage.push(decl.clone());
    }
    invariants.extend(def.invariants.iter().cloned());
    for f in &def.functions {
        merge_function(&def.name, &mut functions, f.clone())?;
    }

    // Constructors are not inherited: a contract deploys with its own
    // constructor or plain zero-initialized storage.
    let constructor = def.constructor.clone();

    let mut flattened = ContractDef {
        name: def.name.clone(),
        bases: Vec::new(),
        storage,
        invariants,
        constructor,
        functions,
    };

    number_statements(&mut flattened);
    check_contract_types(&flattened)?;

    let canonical_text = printer::print_contract(&flattened, true);
    let code_hash = Digest::of(canonical_text.as_bytes());
    Ok(ResolvedContract {
        name: flattened.name,
        storage: flattened.storage,
        invariants: flattened.invariants,
        constructor: flattened.constructor,
        functions: flattened.functions,
        canonical_text,
        code_hash,
    })
}

/// Add `incoming` to the accumulated function list, treating a name
/// collision as an override: the signature must match, pre/post
/// accumulate, and a declared modifies set must stay within the base's.
fn merge_function(
    contract: &str,
    functions: &mut Vec<FunctionDef>,
    mut incoming: FunctionDef,
) -> Result<(), ResolveError> {
    let Some(pos) = functions.iter().position(|f| f.name == incoming.name) else {
        functions.push(incoming);
        return Ok(());
    };
    let base = &functions[pos];
    let base_param_types: Vec<TypeTag> = base.params.iter().map(|(_, t)| *t).collect();
    let incoming_param_types: Vec<TypeTag> = incoming.params.iter().map(|(_, t)| *t).collect();
    if base_param_types != incoming_param_types || base.returns != incoming.returns {
        return Err(ResolveError::OverrideSignatureMismatch {
            contract: contract.to_string(),
            function: incoming.name,
        });
    }
    match (&base.modifies, &incoming.modifies) {
        (Some(base_set), Some(own_set)) => {
            let covered = |entry: &ModifiesEntry| {
                base_set.iter().any(|b| {
                    b.slot == entry.slot
                        && (b.index.is_none()
                            || b.index.as_ref().map(printer::expr_to_string)
                                == entry.index.as_ref().map(printer::expr_to_string))
                })
            };
            if !own_set.iter().all(covered) {
                return Err(ResolveError::OverrideWeakensSpec {
                    contract: contract.to_string(),
                    function: incoming.name,
                });
            }
        }
        (Some(base_set), None) => {
            // An unannotated override inherits the base frame rather
            // than silently discarding it.
            incoming.modifies = Some(base_set.clone());
        }
        (None, _) => {}
    }
    let mut pre = base.preconditions.clone();
    pre.extend(incoming.preconditions);
    incoming.preconditions = pre;
    let mut post = base.postconditions.clone();
    post.extend(incoming.postconditions);
    incoming.postconditions = post;
    functions[pos] = incoming;
    Ok(())
}

/// Assign pre-order, 0-based statement ids within each function
/// (constructor included). Ids are stable because they derive from the
/// flattened syntax tree alone.
fn number_statements(contract: &mut ContractDef) {
    fn walk(stmts: &mut [Stmt], next: &mut u32) {
        for s in stmts {
            s.id = *next;
            *next += 1;
            if let StmtKind::If {
                then_branch,
                else_branch,
                ..
            } = &mut s.kind
            {
                walk(then_branch, next);
                walk(else_branch, next);
            }
        }
    }
    let mut funcs: Vec<&mut FunctionDef> = contract.constructor.iter_mut().collect();
    funcs.extend(contract.functions.iter_mut());
    for f in funcs {
        let mut next = 0;
        walk(&mut f.body, &mut next);
    }
}

// ----- type checking -----

struct Checker<'a> {
    contract: &'a ContractDef,
    context: String,
    /// Params and locals currently visible, in declaration order.
    vars: Vec<(String, Sort)>,
}

impl<'a> Checker<'a> {
    fn err<T>(&self, line: u32, msg: impl Into<String>) -> Result<T, ResolveError> {
        Err(ResolveError::TypeError {
            context: self.context.clone(),
            line,
            msg: msg.into(),
        })
    }

    fn storage_sort(&self, name: &str) -> Option<Sort> {
        self.contract
            .storage
            .iter()
            .find(|d| d.name == name)
            .map(|d| Sort::of_type(d.ty))
    }

    fn var_sort(&self, name: &str) -> Option<Sort> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }

    fn declare(&mut self, line: u32, name: &str, sort: Sort) -> Result<(), ResolveError> {
        if self.var_sort(name).is_some() || self.storage_sort(name).is_some() {
            return self.err(
                line,
                format!("`{name}` shadows an existing parameter, local, or storage slot"),
            );
        }
        self.vars.push((name.to_string(), sort));
        Ok(())
    }

    /// Infer the sort of `e`. `properties` enables `sum`/`forall`,
    /// which are meaningful only in invariants and pre/postconditions.
    fn infer(&self, e: &Expr, line: u32, properties: bool) -> Result<Sort, ResolveError> {
        match e {
            Expr::IntLit(_) => Ok(Sort::Int),
            Expr::BoolLit(_) => Ok(Sort::Bool),
            Expr::MsgSender => Ok(Sort::Addr),
            Expr::Name(n) => {
                if let Some(s) = self.var_sort(n) {
                    return Ok(s);
                }
                match self.storage_sort(n) {
                    Some(Sort::Map) => {
                        self.err(line, format!("map `{n}` needs an index here"))
                    }
                    Some(s) => Ok(s),
                    None => self.err(line, format!("unknown name `{n}`")),
                }
            }
            Expr::MapRead { slot, index } => {
                match self.storage_sort(slot) {
                    Some(Sort::Map) => {}
                    Some(_) => return self.err(line, format!("`{slot}` is not a map")),
                    None => return self.err(line, format!("unknown map `{slot}`")),
                }
                let idx = self.infer(index, line, properties)?;
                if idx != Sort::Addr {
                    return self.err(
                        line,
                        format!("map index must be an address, found {}", idx.describe()),
                    );
                }
                Ok(Sort::Int)
            }
            Expr::Sum { slot } => {
                if !properties {
                    return self.err(line, "sum(...) is only allowed in properties");
                }
                match self.storage_sort(slot) {
                    Some(Sort::Map) => Ok(Sort::Int),
                    _ => self.err(line, format!("sum expects a map, `{slot}` is not one")),
                }
            }
            Expr::Forall { var, body } => {
                if !properties {
                    return self.err(line, "forall is only allowed in properties");
                }
                let mut inner = Checker {
                    contract: self.contract,
                    context: self.context.clone(),
                    vars: self.vars.clone(),
                };
                inner.declare(line, var, Sort::Addr)?;
                let b = inner.infer(body, line, properties)?;
                if b != Sort::Bool {
                    return self.err(line, "forall body must be boolean");
                }
                Ok(Sort::Bool)
            }
            Expr::Not(inner) => {
                let s = self.infer(inner, line, properties)?;
                if s != Sort::Bool {
                    return self.err(line, "`!` expects a boolean");
                }
                Ok(Sort::Bool)
            }
            Expr::Binary { op, lhs, rhs } => {
                let l = self.infer(lhs, line, properties)?;
                let r = self.infer(rhs, line, properties)?;
                if op.is_arithmetic() {
                    if l != Sort::Int || r != Sort::Int {
                        return self.err(
                            line,
                            format!("`{}` expects uint256 operands", op.symbol()),
                        );
                    }
                    return Ok(Sort::Int);
                }
                if op.is_boolean() {
                    if l != Sort::Bool || r != Sort::Bool {
                        return self.err(
                            line,
                            format!("`{}` expects boolean operands", op.symbol()),
                        );
                    }
                    return Ok(Sort::Bool);
                }
                match op {
                    BinOp::Eq | BinOp::Ne => {
                        if l != r || l == Sort::Map || l == Sort::Bool {
                            return self.err(
                                line,
                                format!(
                                    "`{}` compares two uint256 or two address values, found {} and {}",
                                    op.symbol(),
                                    l.describe(),
                                    r.describe()
                                ),
                            );
                        }
                        Ok(Sort::Bool)
                    }
                    _ => {
                        // Ordered comparisons are numeric only.
                        if l != Sort::Int || r != Sort::Int {
                            return self.err(
                                line,
                                format!("`{}` expects uint256 operands", op.symbol()),
                            );
                        }
                        Ok(Sort::Bool)
                    }
                }
            }
        }
    }

    fn expect(
        &self,
        e: &Expr,
        line: u32,
        properties: bool,
        want: Sort,
        what: &str,
    ) -> Result<(), ResolveError> {
        let got = self.infer(e, line, properties)?;
        if got != want {
            return self.err(
                line,
                format!("{what} must be {}, found {}", want.describe(), got.describe()),
            );
        }
        Ok(())
    }

    fn check_stmts(&mut self, stmts: &[Stmt], returns: Option<TypeTag>) -> Result<(), ResolveError> {
        let depth = self.vars.len();
        for s in stmts {
            match &s.kind {
                StmtKind::Let { name, value } => {
                    let sort = self.infer(value, s.line, false)?;
                    if sort != Sort::Int && sort != Sort::Addr {
                        return self.err(
                            s.line,
                            format!("a local must hold uint256 or address, found {}", sort.describe()),
                        );
                    }
                    self.declare(s.line, name, sort)?;
                }
                StmtKind::Assign { lhs, value } => match lhs {
                    LValue::Name(n) => {
                        let target = if let Some(sort) = self.storage_sort(n) {
                            if sort == Sort::Map {
                                return self.err(s.line, format!("map `{n}` needs an index"));
                            }
                            sort
                        } else if let Some(sort) = self.var_sort(n) {
                            sort
                        } else {
                            return self.err(s.line, format!("unknown assignment target `{n}`"));
                        };
                        self.expect(value, s.line, false, target, "assigned value")?;
                    }
                    LValue::MapSlot { slot, index } => {
                        match self.storage_sort(slot) {
                            Some(Sort::Map) => {}
                            _ => return self.err(s.line, format!("`{slot}` is not a map")),
                        }
                        self.expect(index, s.line, false, Sort::Addr, "map index")?;
                        self.expect(value, s.line, false, Sort::Int, "stored value")?;
                    }
                },
                StmtKind::Require { cond } | StmtKind::Assert { cond } => {
                    self.expect(cond, s.line, false, Sort::Bool, "condition")?;
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.expect(cond, s.line, false, Sort::Bool, "condition")?;
                    self.check_stmts(then_branch, returns)?;
                    self.check_stmts(else_branch, returns)?;
                }
                StmtKind::Call { target, args, .. } => {
                    self.expect(target, s.line, false, Sort::Addr, "call target")?;
                    for a in args {
                        let sort = self.infer(a, s.line, false)?;
                        if sort != Sort::Int && sort != Sort::Addr {
                            return self.err(
                                s.line,
                                "call arguments must be uint256 or address values",
                            );
                        }
                    }
                }
                StmtKind::Return { value } => match (returns, value) {
                    (None, None) => {}
                    (None, Some(_)) => {
                        return self.err(s.line, "this function does not return a value")
                    }
                    (Some(_), None) => {
                        return self.err(s.line, "this function must return a value")
                    }
                    (Some(ty), Some(v)) => {
                        self.expect(v, s.line, false, Sort::of_type(ty), "return value")?;
                    }
                },
            }
        }
        self.vars.truncate(depth);
        Ok(())
    }
}

fn check_contract_types(contract: &ContractDef) -> Result<(), ResolveError> {
    // Invariants see storage only (plus quantified variables).
    for inv in &contract.invariants {
        let checker = Checker {
            contract,
            context: format!("contract `{}` invariant", contract.name),
            vars: Vec::new(),
        };
        checker.expect(inv, 0, true, Sort::Bool, "invariant")?;
    }

    let mut funcs: Vec<&FunctionDef> = contract.constructor.iter().collect();
    funcs.extend(contract.functions.iter());
    for f in funcs {
        let context = format!("contract `{}` function `{}`", contract.name, f.name);
        let mut checker = Checker {
            contract,
            context: context.clone(),
            vars: Vec::new(),
        };
        for (name, ty) in &f.params {
            let sort = Sort::of_type(*ty);
            if sort != Sort::Int && sort != Sort::Addr {
                return checker.err(0, format!("parameter `{name}` must be uint256 or address"));
            }
            checker.declare(0, name, sort)?;
        }
        for pre in &f.preconditions {
            checker.expect(pre, 0, true, Sort::Bool, "precondition")?;
        }
        for post in &f.postconditions {
            checker.expect(post, 0, true, Sort::Bool, "postcondition")?;
        }
        if let Some(entries) = &f.modifies {
            for entry in entries {
                match checker.storage_sort(&entry.slot) {
                    None => {
                        return checker.err(
                            0,
                            format!("#modifies names unknown storage `{}`", entry.slot),
                        )
                    }
                    Some(Sort::Map) => {
                        if let Some(index) = &entry.index {
                            checker.expect(index, 0, false, Sort::Addr, "#modifies index")?;
                        }
                    }
                    Some(_) => {
                        if entry.index.is_some() {
                            return checker.err(
                                0,
                                format!("storage `{}` is scalar and takes no index", entry.slot),
                            );
                        }
                    }
                }
            }
        }
        checker.check_stmts(&f.body, f.returns)?;
    }
    Ok(())
}

/// Map each code hash to its resolved contract, for execution-time
/// lookup. Later insertions with the same hash are idempotent because
/// the hash is content-derived.
#[derive(Debug, Clone, Default)]
pub struct CodeRegistry {
    contracts: BTreeMap<Digest, ResolvedContract>,
}

impl CodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_program(&mut self, program: &ResolvedProgram) {
        for c in &program.contracts {
            self.contracts.insert(c.code_hash, c.clone());
        }
    }

    pub fn insert(&mut self, contract: ResolvedContract) {
        self.contracts.insert(contract.code_hash, contract);
    }

    pub fn get(&self, hash: &Digest) -> Option<&ResolvedContract> {
        self.contracts.get(hash)
    }

    pub fn by_name(&self, name: &str) -> Option<&ResolvedContract> {
        self.contracts.values().find(|c| c.name == name)
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_source;
    use super::*;

    fn resolve_text(src: &str) -> Result<ResolvedProgram, ResolveError> {
        resolve(&parse_source(src).unwrap())
    }

    #[test]
    fn token_hierarchy_flattens() {
        let program =
            resolve_text(include_str!("../../../../corpus/contracts/token.msol")).unwrap();
        let token = program.contract("MultiVulnToken").unwrap();
        let slots: Vec<&str> = token.storage.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(slots, vec!["totalSupply", "balances"]);
        assert_eq!(token.invariants.len(), 2);
        assert!(token.function("balanceOf").is_some());
        assert!(token.function("transferProxy").is_some());
        assert!(token.function("clear").is_some());
        assert!(token.constructor.is_some());
    }

    #[test]
    fn derived_erc20_inherits_exactly_two_invariants() {
        let program =
            resolve_text(include_str!("../../../../corpus/contracts/erc20.msol")).unwrap();
        let coin = program.contract("SimpleERC20").unwrap();
        assert_eq!(coin.invariants.len(), 2);
        assert_eq!(
            printer::expr_to_string(&coin.invariants[0]),
            "sum(balances) == totalSupply"
        );
    }

    #[test]
    fn invariants_reference_only_declared_storage() {
        for src in [
            include_str!("../../../../corpus/contracts/token.msol"),
            include_str!("../../../../corpus/contracts/erc20.msol"),
            include_str!("../../../../corpus/contracts/amm.msol"),
            include_str!("../../../../corpus/contracts/wallet.msol"),
            include_str!("../../../../corpus/contracts/attack.msol"),
        ] {
            // Resolution type-checks invariants against flattened
            // storage, so success is the property.
            resolve_text(src).unwrap();
        }
    }

    #[test]
    fn statement_ids_are_preorder_per_function() {
        let program =
            resolve_text(include_str!("../../../../corpus/contracts/wallet.msol")).unwrap();
        let wallet = program.contract("WalletLike").unwrap();
        let fallback = wallet.function("fallbackEntry").unwrap();
        // if (id 0) { owner = msg.sender (id 1) }
        assert_eq!(fallback.body[0].id, 0);
        match &fallback.body[0].kind {
            StmtKind::If { then_branch, .. } => assert_eq!(then_branch[0].id, 1),
            other => panic!("expected if, got {other:?}"),
        }
        let deposit = wallet.function("deposit").unwrap();
        assert_eq!(deposit.body[0].id, 0);
        assert_eq!(deposit.body[1].id, 1);
    }

    #[test]
    fn code_hash_ignores_function_declaration_order() {
        let a = resolve_text("contract C { uint256 x; function f() { x = 1; } function g() { x = 2; } }")
            .unwrap();
        let b = resolve_text("contract C { uint256 x; function g() { x = 2; } function f() { x = 1; } }")
            .unwrap();
        assert_eq!(
            a.contract("C").unwrap().code_hash,
            b.contract("C").unwrap().code_hash
        );
    }

    #[test]
    fn code_hash_depends_on_annotations() {
        let a = resolve_text("#invariant x == x\ncontract C { uint256 x; }").unwrap();
        let b = resolve_text("contract C { uint256 x; }").unwrap();
        assert_ne!(
            a.contract("C").unwrap().code_hash,
            b.contract("C").unwrap().code_hash
        );
    }

    #[test]
    fn unknown_base_rejected() {
        let err = resolve_text("contract A : Missing {}").unwrap_err();
        assert!(matches!(err, ResolveError::UnknownBase { .. }));
    }

    #[test]
    fn base_must_come_first() {
        let err = resolve_text("contract A : B {}\ncontract B {}").unwrap_err();
        assert!(matches!(err, ResolveError::UnknownBase { .. }));
    }

    #[test]
    fn storage_redeclaration_rejected() {
        let err = resolve_text("contract A { uint256 x; }\ncontract B : A { uint256 x; }")
            .unwrap_err();
        assert!(matches!(err, ResolveError::DuplicateStorage { .. }));
    }

    #[test]
    fn override_replaces_and_keeps_signature() {
        let program = resolve_text(
            "contract A { uint256 x; function f(uint256 v) { x = v; } }\n\
             contract B : A { function f(uint256 v) { x = v + 1; } }",
        )
        .unwrap();
        let b = program.contract("B").unwrap();
        assert_eq!(b.functions.len(), 1);
        assert!(b.canonical_text.contains("v + 1"));
    }

    #[test]
    fn override_signature_mismatch_rejected() {
        let err = resolve_text(
            "contract A { uint256 x; function f(uint256 v) { x = v; } }\n\
             contract B : A { function f(address v) { x = 1; } }",
        )
        .unwrap_err();
        assert!(matches!(err, ResolveError::OverrideSignatureMismatch { .. }));
    }

    #[test]
    fn override_widening_modifies_rejected() {
        let err = resolve_text(
            "contract A { uint256 x; uint256 y;\n#modifies x\nfunction f() { x = 1; } }\n\
             contract B : A {\n#modifies x, y\nfunction f() { y = 1; } }",
        )
        .unwrap_err();
        assert!(matches!(err, ResolveError::OverrideWeakensSpec { .. }));
    }

    #[test]
    fn unannotated_override_inherits_base_frame() {
        let program = resolve_text(
            "contract A { uint256 x;\n#modifies x\nfunction f() { x = 1; } }\n\
             contract B : A { function f() { x = 2; } }",
        )
        .unwrap();
        let f = program.contract("B").unwrap().function("f").unwrap();
        let m = f.modifies.as_ref().unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].slot, "x");
    }

    #[test]
    fn pre_and_post_accumulate_on_override() {
        let program = resolve_text(
            "contract A { uint256 x;\n#pre v > 0\nfunction f(uint256 v) { x = v; } }\n\
             contract B : A {\n#pre v < 10\nfunction f(uint256 v) { x = v; } }",
        )
        .unwrap();
        let f = program.contract("B").unwrap().function("f").unwrap();
        assert_eq!(f.preconditions.len(), 2);
    }

    #[test]
    fn sum_outside_properties_rejected() {
        let err = resolve_text(
            "contract A { map(address => uint256) m; uint256 x; function f() { x = sum(m); } }",
        )
        .unwrap_err();
        assert!(matches!(err, ResolveError::TypeError { .. }));
    }

    #[test]
    fn map_index_must_be_address() {
        let err = resolve_text(
            "contract A { map(address => uint256) m; uint256 x; function f() { x = m[1]; } }",
        )
        .unwrap_err();
        match err {
            ResolveError::TypeError { msg, .. } => assert!(msg.contains("address")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn shadowing_rejected() {
        let err = resolve_text(
            "contract A { uint256 x; function f(uint256 v) { let x = v; x = 1; } }",
        )
        .unwrap_err();
        match err {
            ResolveError::TypeError { msg, .. } => assert!(msg.contains("shadows")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn arithmetic_on_addresses_rejected() {
        let err = resolve_text(
            "contract A { uint256 x; function f(address a) { x = a + 1; } }",
        )
        .unwrap_err();
        assert!(matches!(err, ResolveError::TypeError { .. }));
    }

    #[test]
    fn registry_lookup_by_hash_and_name() {
        let program =
            resolve_text(include_str!("../../../../corpus/contracts/token.msol")).unwrap();
        let mut registry = CodeRegistry::new();
        registry.insert_program(&program);
        assert_eq!(registry.len(), 3);
        let token = program.contract("MultiVulnToken").unwrap();
        assert_eq!(
            registry.get(&token.code_hash).unwrap().name,
            "MultiVulnToken"
        );
        assert!(registry.by_name("StandardToken").is_some());
    }
}
