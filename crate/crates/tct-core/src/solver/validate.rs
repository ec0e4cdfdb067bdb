//! Counterexample validation.
//!
//! A `sat` answer from the ground form is only a *candidate*. Before it is
//! reported, the assignment must (1) concretely satisfy every assumption of
//! the query and concretely falsify the goal under exact big-integer
//! semantics, and (2) replay through the real interpreter — a world built
//! from the model, the modeled sender and arguments — to a committed
//! execution with the same path hash the query was extracted from. Anything
//! short of that is reported as unknown, never as a counterexample.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::interp::{ExecStatus, Interpreter, Transaction};
use crate::interp::world::{Account, WorldState};
use crate::minisol::{CodeRegistry, TypeTag};
use crate::trace::{
    account_address_symbol, path_hash, storage_symbol, PathHash, SExpr, SOp, SSAProgram,
    ENTRY_SENDER_SYMBOL,
};
use crate::vcgen::{AssumeKind, ScriptItem, VCQuery};
use crate::word::{Address, Word256};

use super::Model;

/// What a counterexample must replay against: the code registry, the SSA
/// program the query came from, and the path hash its theorem would carry.
pub struct ReplayContext<'a> {
    pub registry: &'a CodeRegistry,
    pub ssa: &'a SSAProgram,
    pub path_hash: PathHash,
}

/// A finite map with a uniform default outside its explicit entries.
#[derive(Debug, Clone, PartialEq, Eq)]
struct FiniteMap {
    default: BigUint,
    entries: BTreeMap<BigUint, BigUint>,
}

impl FiniteMap {
    fn select(&self, idx: &BigUint) -> BigUint {
        self.entries.get(idx).cloned().unwrap_or_else(|| self.default.clone())
    }

    fn store(&self, idx: BigUint, val: BigUint) -> FiniteMap {
        let mut next = self.clone();
        next.entries.insert(idx, val);
        next
    }

    /// Entries normalized by dropping ones equal to the default.
    fn normalized(&self) -> BTreeMap<BigUint, BigUint> {
        self.entries.iter().filter(|(_, v)| **v != self.default).map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Int(BigUint),
    Truth(bool),
    Map(FiniteMap),
}

struct Valuation {
    vars: BTreeMap<String, Val>,
}

fn biguint_of(w: Word256) -> BigUint {
    BigUint::parse_bytes(w.to_string().as_bytes(), 10).expect("word renders as decimal")
}

fn word_bound() -> BigUint {
    BigUint::one() << 256
}

impl Valuation {
    fn from_model(model: &Model) -> Valuation {
        let mut vars = BTreeMap::new();
        for (name, w) in &model.ints {
            vars.insert(name.clone(), Val::Int(biguint_of(*w)));
        }
        for (name, b) in &model.bools {
            vars.insert(name.clone(), Val::Truth(*b));
        }
        for (name, entries) in &model.maps {
            let map = FiniteMap {
                default: BigUint::zero(),
                entries: entries
                    .iter()
                    .map(|(i, v)| (biguint_of(*i), biguint_of(*v)))
                    .collect(),
            };
            vars.insert(name.clone(), Val::Map(map));
        }
        Valuation { vars }
    }

    fn int(&self, e: &SExpr) -> Result<BigUint, String> {
        match self.eval(e)? {
            Val::Int(n) => Ok(n),
            other => Err(format!("expected an integer, got {other:?} for {e}")),
        }
    }

    fn truth(&self, e: &SExpr) -> Result<bool, String> {
        match self.eval(e)? {
            Val::Truth(b) => Ok(b),
            other => Err(format!("expected a boolean, got {other:?} for {e}")),
        }
    }

    fn map(&self, e: &SExpr) -> Result<FiniteMap, String> {
        match self.eval(e)? {
            Val::Map(m) => Ok(m),
            other => Err(format!("expected a map, got {other:?} for {e}")),
        }
    }

    /// Candidate witnesses for a quantified address variable: every explicit
    /// map key, every integer scalar in scope, and one address carrying the
    /// default entry of every map.
    fn quantifier_universe(&self) -> Vec<BigUint> {
        let mut keys: Vec<BigUint> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for val in self.vars.values() {
            match val {
                Val::Map(m) => {
                    for k in m.entries.keys() {
                        if seen.insert(k.clone()) {
                            keys.push(k.clone());
                        }
                    }
                }
                Val::Int(n) => {
                    if seen.insert(n.clone()) {
                        keys.push(n.clone());
                    }
                }
                Val::Truth(_) => {}
            }
        }
        let address_bound = BigUint::one() << 160;
        let mut fresh = BigUint::zero();
        while seen.contains(&fresh) {
            fresh += 1u8;
        }
        if fresh < address_bound {
            keys.push(fresh);
        }
        keys
    }

    fn eval(&self, e: &SExpr) -> Result<Val, String> {
        let modulus = word_bound();
        match e {
            SExpr::Int(w) => Ok(Val::Int(biguint_of(*w))),
            SExpr::Bool(b) => Ok(Val::Truth(*b)),
            SExpr::Sym(s) => {
                self.vars.get(s).cloned().ok_or_else(|| format!("unbound symbol {s}"))
            }
            SExpr::Select { map, index } => {
                let m = self.map(map)?;
                let i = self.int(index)?;
                Ok(Val::Int(m.select(&i)))
            }
            SExpr::Sum(map) => {
                let m = self.map(map)?;
                if !m.default.is_zero() {
                    return Err("sum of a map with a nonzero default".into());
                }
                Ok(Val::Int(m.entries.values().sum()))
            }
            SExpr::ConstMap(v) => Ok(Val::Map(FiniteMap {
                default: biguint_of(*v),
                entries: BTreeMap::new(),
            })),
            SExpr::Forall { var, body } => {
                for witness in self.quantifier_universe() {
                    let mut inner = Valuation { vars: self.vars.clone() };
                    inner.vars.insert(var.clone(), Val::Int(witness));
                    if !inner.truth(body)? {
                        return Ok(Val::Truth(false));
                    }
                }
                Ok(Val::Truth(true))
            }
            SExpr::App(op, args) => match op {
                SOp::Add | SOp::Sub | SOp::Mul => {
                    let a = self.int(&args[0])?;
                    let b = self.int(&args[1])?;
                    let n = match op {
                        SOp::Add => (a + b) % &modulus,
                        SOp::Sub => (a + &modulus - (b % &modulus)) % &modulus,
                        SOp::Mul => (a * b) % &modulus,
                        _ => unreachable!(),
                    };
                    Ok(Val::Int(n))
                }
                SOp::Udiv | SOp::Umod => {
                    let a = self.int(&args[0])?;
                    let b = self.int(&args[1])?;
                    let n = if b.is_zero() {
                        BigUint::zero()
                    } else if *op == SOp::Udiv {
                        a / b
                    } else {
                        a % b
                    };
                    Ok(Val::Int(n))
                }
                SOp::Lt | SOp::Le | SOp::Gt | SOp::Ge => {
                    let a = self.int(&args[0])?;
                    let b = self.int(&args[1])?;
                    let t = match op {
                        SOp::Lt => a < b,
                        SOp::Le => a <= b,
                        SOp::Gt => a > b,
                        SOp::Ge => a >= b,
                        _ => unreachable!(),
                    };
                    Ok(Val::Truth(t))
                }
                SOp::Eq | SOp::Ne => {
                    let a = self.eval(&args[0])?;
                    let b = self.eval(&args[1])?;
                    let same = match (a, b) {
                        (Val::Int(x), Val::Int(y)) => x == y,
                        (Val::Truth(x), Val::Truth(y)) => x == y,
                        (Val::Map(x), Val::Map(y)) => {
                            x.default == y.default && x.normalized() == y.normalized()
                        }
                        _ => return Err(format!("comparison across sorts in {e}")),
                    };
                    Ok(Val::Truth(if *op == SOp::Eq { same } else { !same }))
                }
                SOp::And => {
                    for a in args {
                        if !self.truth(a)? {
                            return Ok(Val::Truth(false));
                        }
                    }
                    Ok(Val::Truth(true))
                }
                SOp::Or => {
                    for a in args {
                        if self.truth(a)? {
                            return Ok(Val::Truth(true));
                        }
                    }
                    Ok(Val::Truth(false))
                }
                SOp::Not => Ok(Val::Truth(!self.truth(&args[0])?)),
                SOp::Implies => {
                    let a = self.truth(&args[0])?;
                    let b = self.truth(&args[1])?;
                    Ok(Val::Truth(!a || b))
                }
            },
        }
    }
}

/// Walk the query under the model: definitions bind, stores build maps, every
/// other assumption must hold, and the goal must come out false.
fn check_items(query: &VCQuery, model: &Model) -> Result<(), String> {
    let mut vals = Valuation::from_model(model);
    for item in &query.items {
        match item {
            ScriptItem::Decl { name, .. } => {
                // Free declarations were seeded from the model; defined ones
                // get their value when their definition assume is reached.
                let _ = name;
            }
            ScriptItem::Assume { kind: AssumeKind::Definition, expr } => {
                if let SExpr::App(SOp::Eq, args) = expr {
                    if let (Some(SExpr::Sym(n)), Some(rhs)) = (args.first(), args.get(1)) {
                        let v = vals.eval(rhs)?;
                        vals.vars.insert(n.clone(), v);
                        continue;
                    }
                }
                if !vals.truth(expr)? {
                    return Err(format!("definition assumption failed: {expr}"));
                }
            }
            ScriptItem::Assume { kind, expr } => {
                if !vals.truth(expr)? {
                    return Err(format!("{kind} assumption fails under the model: {expr}"));
                }
            }
            ScriptItem::MapStore { name, prior, index, value } => {
                let m = vals.map(&SExpr::sym(prior.clone()))?;
                let i = vals.int(index)?;
                let v = vals.int(value)?;
                vals.vars.insert(name.clone(), Val::Map(m.store(i, v)));
            }
        }
    }
    if vals.truth(&query.goal)? {
        return Err("goal still holds under the model".into());
    }
    Ok(())
}

fn model_address(model: &Model, name: &str) -> Result<Address, String> {
    let w = model
        .ints
        .get(name)
        .ok_or_else(|| format!("model is missing the address {name}"))?;
    if !w.fits_address() {
        return Err(format!("{name} = {w} is not an address"));
    }
    Ok(w.to_address())
}

fn model_word(model: &Model, name: &str) -> Result<Word256, String> {
    if let Some(w) = model.ints.get(name) {
        return Ok(*w);
    }
    if let Some(b) = model.bools.get(name) {
        return Ok(if *b { Word256::ONE } else { Word256::ZERO });
    }
    Err(format!("model is missing a value for {name}"))
}

/// Rebuild the modeled world and transaction, run the real interpreter, and
/// require a committed execution with the expected path hash.
fn replay(ctx: &ReplayContext<'_>, model: &Model) -> Result<(), String> {
    let ssa = ctx.ssa;
    let mut world = WorldState::new();
    for (k, info) in ssa.accounts.iter().enumerate() {
        if ssa.is_deployment && k == 0 {
            continue; // created by the deployment itself
        }
        let contract = ctx
            .registry
            .get(&info.code_hash)
            .ok_or_else(|| format!("account {k} code is not in the registry"))?;
        let mut account = Account::fresh(contract);
        for decl in &contract.storage {
            let symbol = storage_symbol(k, &decl.name, 0);
            match decl.ty {
                TypeTag::Uint256 | TypeTag::Address => {
                    account.set_scalar(&decl.name, model_word(model, &symbol)?);
                }
                TypeTag::Bool => {
                    account.set_scalar(&decl.name, model_word(model, &symbol)?);
                }
                TypeTag::Map => {
                    if let Some(entries) = model.maps.get(&symbol) {
                        for (idx, val) in entries {
                            if val.is_zero() {
                                continue;
                            }
                            if !idx.fits_address() {
                                return Err(format!("map index {idx} is not an address"));
                            }
                            account.set_map_entry(&decl.name, idx.to_address(), *val);
                        }
                    }
                }
            }
        }
        let addr = model_address(model, &account_address_symbol(k))?;
        if world.accounts.insert(addr, account).is_some() {
            return Err(format!("two accounts share the address {addr}"));
        }
    }
    let origin = model_address(model, ENTRY_SENDER_SYMBOL)?;
    let entry = &ssa.frames[0];
    let mut args = Vec::new();
    for p in &entry.param_symbols {
        args.push(model_word(model, p)?);
    }
    let interpreter = Interpreter::new(ctx.registry);
    let entry_address = model_address(model, &account_address_symbol(0))?;
    let result = if ssa.is_deployment {
        if world.accounts.contains_key(&entry_address) {
            return Err("deployment address collides with an existing account".into());
        }
        let contract = ctx
            .registry
            .get(&ssa.accounts[0].code_hash)
            .ok_or("deployed code is not in the registry")?;
        interpreter
            .deploy_at(&world, contract, &args, origin, entry_address)
            .map_err(|e| format!("replay failed to start: {e}"))?
    } else {
        let tx = Transaction {
            id: 0,
            origin,
            target: entry_address,
            function: entry.function.clone(),
            args,
        };
        interpreter.execute(&world, &tx).map_err(|e| format!("replay failed to start: {e}"))?
    };
    if result.status != ExecStatus::Committed {
        return Err(format!("replay ended {:?} instead of committing", result.status));
    }
    let replayed = path_hash(&result.trace).map_err(|e| format!("replay trace unhashable: {e}"))?;
    if replayed != ctx.path_hash {
        return Err("replay took a different path than the query describes".into());
    }
    Ok(())
}

/// Full confirmation: concrete evaluation plus interpreter replay.
pub(crate) fn confirm(
    query: &VCQuery,
    ctx: &ReplayContext<'_>,
    model: &Model,
) -> Result<(), String> {
    check_items(query, model)?;
    replay(ctx, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::GoalOrigin;

    #[test]
    fn item_walk_accepts_a_refuting_assignment_and_rejects_a_satisfying_one() {
        // items: x declared, assume x < 10, y := add(x, 1); goal: y <= 5.
        let query = VCQuery {
            origin: GoalOrigin::Invariant { contract: "T".into(), index: 0 },
            items: vec![
                ScriptItem::Decl { name: "x".into(), sort: crate::trace::SsaSort::Int },
                ScriptItem::Assume {
                    kind: AssumeKind::Range,
                    expr: SExpr::App(
                        SOp::Lt,
                        vec![SExpr::sym("x"), SExpr::Int(Word256::from_u64(10))],
                    ),
                },
                ScriptItem::Decl { name: "y".into(), sort: crate::trace::SsaSort::Int },
                ScriptItem::Assume {
                    kind: AssumeKind::Definition,
                    expr: SExpr::eq(
                        SExpr::sym("y"),
                        SExpr::App(
                            SOp::Add,
                            vec![SExpr::sym("x"), SExpr::Int(Word256::from_u64(1))],
                        ),
                    ),
                },
            ],
            goal: SExpr::App(SOp::Le, vec![SExpr::sym("y"), SExpr::Int(Word256::from_u64(5))]),
            nonlinear: false,
        };
        let refuting = Model {
            ints: [("x".to_string(), Word256::from_u64(7))].into(),
            bools: BTreeMap::new(),
            maps: BTreeMap::new(),
            sums: BTreeMap::new(),
        };
        check_items(&query, &refuting).expect("x=7 refutes y<=5");
        let satisfying = Model {
            ints: [("x".to_string(), Word256::from_u64(2))].into(),
            bools: BTreeMap::new(),
            maps: BTreeMap::new(),
            sums: BTreeMap::new(),
        };
        let err = check_items(&query, &satisfying).unwrap_err();
        assert!(err.contains("goal still holds"), "{err}");
        let out_of_range = Model {
            ints: [("x".to_string(), Word256::from_u64(11))].into(),
            bools: BTreeMap::new(),
            maps: BTreeMap::new(),
            sums: BTreeMap::new(),
        };
        let err = check_items(&query, &out_of_range).unwrap_err();
        assert!(err.contains("assumption fails"), "{err}");
    }

    #[test]
    fn quantified_goals_check_against_explicit_keys_and_one_fresh_address() {
        // goal: forall a :: bal[a] <= 50, with bal = {3: 60}. The explicit
        // key refutes it; with 60 -> 40 it holds.
        let goal = SExpr::Forall {
            var: "qa".into(),
            body: Box::new(SExpr::App(
                SOp::Le,
                vec![
                    SExpr::Select {
                        map: Box::new(SExpr::sym("bal")),
                        index: Box::new(SExpr::sym("qa")),
                    },
                    SExpr::Int(Word256::from_u64(50)),
                ],
            )),
        };
        let query = VCQuery {
            origin: GoalOrigin::Invariant { contract: "T".into(), index: 1 },
            items: vec![ScriptItem::Decl { name: "bal".into(), sort: crate::trace::SsaSort::Map }],
            goal,
            nonlinear: false,
        };
        let hot = Model {
            ints: BTreeMap::new(),
            bools: BTreeMap::new(),
            maps: [(
                "bal".to_string(),
                vec![(Word256::from_u64(3), Word256::from_u64(60))],
            )]
            .into(),
            sums: BTreeMap::new(),
        };
        check_items(&query, &hot).expect("entry 60 refutes the bound");
        let cool = Model {
            ints: BTreeMap::new(),
            bools: BTreeMap::new(),
            maps: [(
                "bal".to_string(),
                vec![(Word256::from_u64(3), Word256::from_u64(40))],
            )]
            .into(),
            sums: BTreeMap::new(),
        };
        assert!(check_items(&query, &cool).is_err());
    }
}
