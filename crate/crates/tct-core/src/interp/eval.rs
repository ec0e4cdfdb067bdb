//! Concrete evaluation of property-grammar and hypothesis-grammar
//! expressions against world state.
//!
//! Semantics mirror the prover's: `+`, `-`, `*` wrap modulo 2^256 at each
//! application; `/` and `%` are Euclidean; `sum(map)` is the unbounded
//! mathematical sum of the map's finite support; comparisons compare
//! unreduced integers. `forall x: address` is checked over every address in
//! the account's map supports plus one fresh absent address (sufficient for
//! properties that only index maps at the bound variable).

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::minisol::{BinOp, Expr, FunctionDef, ResolvedContract};
use crate::word::{Address, Word256};

use super::world::{Account, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PropEvalError {
    #[error("division or remainder by zero")]
    DivisionByZero,
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("{0} is not available in this context")]
    Unsupported(&'static str),
}

/// Error from concretely checking a hypothesis φ against a state; any error
/// means "not applicable here", never "applicable".
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HypothesisEvalError {
    #[error("hypothesis evaluation failed: {0}")]
    Eval(#[from] PropEvalError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PVal {
    Int(BigUint),
    Bool(bool),
}

impl PVal {
    fn int(self) -> Result<BigUint, PropEvalError> {
        match self {
            PVal::Int(v) => Ok(v),
            PVal::Bool(_) => Err(PropEvalError::Unsupported("boolean in integer position")),
        }
    }

    fn truth(self) -> Result<bool, PropEvalError> {
        match self {
            PVal::Bool(b) => Ok(b),
            PVal::Int(_) => Err(PropEvalError::Unsupported("integer in boolean position")),
        }
    }
}

struct PropEnv<'e> {
    /// Scalar slots of the subject account (empty when no account applies).
    scalars: Option<&'e BTreeMap<String, Word256>>,
    /// Map slots; `None` forbids map reads / sum / forall (hypothesis mode).
    maps: Option<&'e BTreeMap<String, BTreeMap<Address, Word256>>>,
    /// Entry-function parameters (hypothesis mode).
    params: BTreeMap<String, Word256>,
    sender: Option<Address>,
    /// Quantifier bindings.
    bound: BTreeMap<String, BigUint>,
}

fn two_pow_256() -> BigUint {
    BigUint::one() << 256u32
}

fn word_to_big(w: Word256) -> BigUint {
    BigUint::from_bytes_be(&w.0.to_big_endian())
}

fn big_to_address(v: &BigUint) -> Address {
    let bytes = v.to_bytes_be();
    assert!(bytes.len() <= 20, "address-sorted value exceeds 160 bits");
    let mut out = [0u8; 20];
    out[20 - bytes.len()..].copy_from_slice(&bytes);
    Address(out)
}

fn eval_prop(e: &Expr, env: &mut PropEnv<'_>) -> Result<PVal, PropEvalError> {
    match e {
        Expr::IntLit(w) => Ok(PVal::Int(word_to_big(*w))),
        Expr::BoolLit(b) => Ok(PVal::Bool(*b)),
        Expr::MsgSender => match env.sender {
            Some(a) => Ok(PVal::Int(word_to_big(a.to_word()))),
            None => Err(PropEvalError::Unsupported("msg.sender")),
        },
        Expr::Name(name) => {
            if let Some(v) = env.bound.get(name) {
                return Ok(PVal::Int(v.clone()));
            }
            if let Some(v) = env.params.get(name) {
                return Ok(PVal::Int(word_to_big(*v)));
            }
            if let Some(scalars) = env.scalars {
                if let Some(v) = scalars.get(name) {
                    return Ok(PVal::Int(word_to_big(*v)));
                }
            }
            Err(PropEvalError::Unbound(name.clone()))
        }
        Expr::MapRead { slot, index } => {
            let maps = env.maps.ok_or(PropEvalError::Unsupported("map reads"))?;
            let idx = eval_prop(index, env)?.int()?;
            let map = maps
                .get(slot)
                .ok_or_else(|| PropEvalError::Unbound(slot.clone()))?;
            let v = map
                .get(&big_to_address(&idx))
                .copied()
                .unwrap_or(Word256::ZERO);
            Ok(PVal::Int(word_to_big(v)))
        }
        Expr::Sum { slot } => {
            let maps = env.maps.ok_or(PropEvalError::Unsupported("sum"))?;
            let map = maps
                .get(slot)
                .ok_or_else(|| PropEvalError::Unbound(slot.clone()))?;
            let mut total = BigUint::zero();
            for v in map.values() {
                total += word_to_big(*v);
            }
            Ok(PVal::Int(total))
        }
        Expr::Forall { var, body } => {
            let maps = env.maps.ok_or(PropEvalError::Unsupported("forall"))?;
            // Candidate set: every address in any map's support, plus one
            // fresh absent address standing in for "everything else".
            let mut candidates: Vec<Address> =
                maps.values().flat_map(|m| m.keys().copied()).collect();
            candidates.sort();
            candidates.dedup();
            let mut fresh_counter = u64::MAX;
            loop {
                let candidate = Address::from_counter(fresh_counter);
                if !candidates.contains(&candidate) {
                    candidates.push(candidate);
                    break;
                }
                fresh_counter -= 1;
            }
            for addr in candidates {
                env.bound.insert(var.clone(), word_to_big(addr.to_word()));
                let holds = eval_prop(body, env)?.truth()?;
                env.bound.remove(var);
                if !holds {
                    return Ok(PVal::Bool(false));
                }
            }
            Ok(PVal::Bool(true))
        }
        Expr::Not(inner) => Ok(PVal::Bool(!eval_prop(inner, env)?.truth()?)),
        Expr::Binary { op, lhs, rhs } => {
            match op {
                BinOp::And => {
                    let l = eval_prop(lhs, env)?.truth()?;
                    if !l {
                        return Ok(PVal::Bool(false));
                    }
                    return Ok(PVal::Bool(eval_prop(rhs, env)?.truth()?));
                }
                BinOp::Or => {
                    let l = eval_prop(lhs, env)?.truth()?;
                    if l {
                        return Ok(PVal::Bool(true));
                    }
                    return Ok(PVal::Bool(eval_prop(rhs, env)?.truth()?));
                }
                _ => {}
            }
            let l = eval_prop(lhs, env)?;
            let r = eval_prop(rhs, env)?;
            if matches!(op, BinOp::Eq | BinOp::Ne) {
                let eq = l == r;
                return Ok(PVal::Bool(if *op == BinOp::Eq { eq } else { !eq }));
            }
            let a = l.int()?;
            let b = r.int()?;
            let m = two_pow_256();
            let out = match op {
                BinOp::Add => PVal::Int((a + b) % &m),
                BinOp::Sub => {
                    // (a - b) mod 2^256, computed without going negative.
                    PVal::Int(((a % &m) + &m - (b % &m)) % &m)
                }
                BinOp::Mul => PVal::Int((a * b) % &m),
                BinOp::Div => {
                    if b.is_zero() {
                        return Err(PropEvalError::DivisionByZero);
                    }
                    PVal::Int(a / b)
                }
                BinOp::Mod => {
                    if b.is_zero() {
                        return Err(PropEvalError::DivisionByZero);
                    }
                    PVal::Int(a % b)
                }
                BinOp::Lt => PVal::Bool(a < b),
                BinOp::Le => PVal::Bool(a <= b),
                BinOp::Gt => PVal::Bool(a > b),
                BinOp::Ge => PVal::Bool(a >= b),
                BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!("handled above"),
            };
            Ok(out)
        }
    }
}

/// Check one contract invariant concretely against `account`'s storage.
pub fn eval_invariant(
    world: &WorldState,
    account: Address,
    _contract: &ResolvedContract,
    invariant: &Expr,
) -> Result<bool, PropEvalError> {
    let acct: &Account = world
        .account(&account)
        .ok_or(PropEvalError::Unsupported("invariant on a missing account"))?;
    let mut env = PropEnv {
        scalars: Some(&acct.scalars),
        maps: Some(&acct.maps),
        params: BTreeMap::new(),
        sender: None,
        bound: BTreeMap::new(),
    };
    eval_prop(invariant, &mut env)?.truth()
}

/// Concretely evaluate a hypothesis φ for a call of `function` on the
/// contract account at `target` with `args` and `sender`. φ may reference
/// entry-function parameters, the entry contract's scalar storage,
/// `msg.sender`, and literals; any evaluation error means "not applicable".
pub fn eval_hypothesis(
    world: &WorldState,
    target: Address,
    function: &FunctionDef,
    args: &[Word256],
    sender: Address,
    phi: &Expr,
) -> Result<bool, HypothesisEvalError> {
    if args.len() != function.params.len() {
        return Err(PropEvalError::Unsupported("argument arity mismatch").into());
    }
    let scalars = world.account(&target).map(|a| &a.scalars);
    let params: BTreeMap<String, Word256> = function
        .params
        .iter()
        .zip(args)
        .map(|((name, _), v)| (name.clone(), *v))
        .collect();
    let mut env = PropEnv {
        scalars,
        maps: None,
        params,
        sender: Some(sender),
        bound: BTreeMap::new(),
    };
    let verdict = eval_prop(phi, &mut env)?.truth()?;
    Ok(verdict)
}
