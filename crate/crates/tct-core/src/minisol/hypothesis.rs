// SPDX-License-Identifier: Apache-2.0

//! The hypothesis sublanguage.
//!
//! A hypothesis φ(v, s) must be cheap to evaluate on any node against
//! concrete transaction arguments and current chain state, so it is
//! restricted to boolean/arithmetic combinations of: integer and
//! boolean literals, `msg.sender`, entry-function parameters, and the
//! entry contract's scalar storage slots. Quantifiers, `sum`, and map
//! reads are rejected — those belong in declared properties, not in
//! applicability conditions.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{BinOp, Expr, FunctionDef};
use super::parser::{parse_expression_text, ParseError};
use super::resolve::{ResolvedContract, Sort};
use crate::word::Word256;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HypothesisError {
    #[error("hypothesis does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("hypothesis is outside the allowed grammar: {0}")]
    Grammar(String),
}

/// Check `expr` against the hypothesis grammar for `function` of
/// `contract`, returning an error naming the first offending construct.
pub fn check_hypothesis(
    contract: &ResolvedContract,
    function: &FunctionDef,
    expr: &Expr,
) -> Result<(), HypothesisError> {
    let sort = infer(contract, function, expr)?;
    if sort != Sort::Bool {
        return Err(HypothesisError::Grammar(format!(
            "hypothesis must be boolean, found {}",
            sort.describe()
        )));
    }
    Ok(())
}

/// Parse and grammar-check a hypothesis text in one step.
pub fn parse_hypothesis(
    contract: &ResolvedContract,
    function: &FunctionDef,
    text: &str,
) -> Result<Expr, HypothesisError> {
    let expr = parse_expression_text(text)?;
    check_hypothesis(contract, function, &expr)?;
    Ok(expr)
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HypothesisEvalError {
    #[error("hypothesis divides by zero")]
    DivisionByZero,
    #[error("hypothesis names `{0}`, which has no concrete value here")]
    Unbound(String),
    #[error("hypothesis mixes sorts at `{0}`")]
    SortMismatch(String),
}

enum Value {
    Word(Word256),
    Truth(bool),
}

/// Evaluate a grammar-checked hypothesis against a concrete transaction:
/// `sender` and `args` come from the transaction, `scalars` is the entry
/// account's scalar storage. Division by zero is an error — a theorem whose
/// applicability cannot be decided is skipped, never assumed.
pub fn eval_hypothesis(
    function: &FunctionDef,
    expr: &Expr,
    sender: Word256,
    args: &[Word256],
    scalars: &BTreeMap<String, Word256>,
) -> Result<bool, HypothesisEvalError> {
    match eval(function, expr, sender, args, scalars)? {
        Value::Truth(b) => Ok(b),
        Value::Word(_) => Err(HypothesisEvalError::SortMismatch(format!(
            "{}",
            super::printer::expr_to_string(expr)
        ))),
    }
}

fn eval(
    function: &FunctionDef,
    e: &Expr,
    sender: Word256,
    args: &[Word256],
    scalars: &BTreeMap<String, Word256>,
) -> Result<Value, HypothesisEvalError> {
    let word = |e: &Expr| -> Result<Word256, HypothesisEvalError> {
        match eval(function, e, sender, args, scalars)? {
            Value::Word(w) => Ok(w),
            Value::Truth(_) => Err(HypothesisEvalError::SortMismatch(
                super::printer::expr_to_string(e),
            )),
        }
    };
    let truth = |e: &Expr| -> Result<bool, HypothesisEvalError> {
        match eval(function, e, sender, args, scalars)? {
            Value::Truth(b) => Ok(b),
            Value::Word(_) => Err(HypothesisEvalError::SortMismatch(
                super::printer::expr_to_string(e),
            )),
        }
    };
    match e {
        Expr::IntLit(w) => Ok(Value::Word(*w)),
        Expr::BoolLit(b) => Ok(Value::Truth(*b)),
        Expr::MsgSender => Ok(Value::Word(sender)),
        Expr::Name(n) => {
            if let Some(pos) = function.params.iter().position(|(p, _)| p == n) {
                return args
                    .get(pos)
                    .copied()
                    .map(Value::Word)
                    .ok_or_else(|| HypothesisEvalError::Unbound(n.clone()));
            }
            scalars
                .get(n)
                .copied()
                .map(Value::Word)
                .ok_or_else(|| HypothesisEvalError::Unbound(n.clone()))
        }
        Expr::MapRead { slot, .. } => Err(HypothesisEvalError::Unbound(slot.clone())),
        Expr::Sum { .. } | Expr::Forall { .. } => {
            Err(HypothesisEvalError::SortMismatch(super::printer::expr_to_string(e)))
        }
        Expr::Not(inner) => Ok(Value::Truth(!truth(inner)?)),
        Expr::Binary { op, lhs, rhs } => {
            if op.is_boolean() {
                let l = truth(lhs)?;
                return Ok(Value::Truth(match op {
                    BinOp::And => l && truth(rhs)?,
                    BinOp::Or => l || truth(rhs)?,
                    _ => unreachable!(),
                }));
            }
            let l = word(lhs)?;
            let r = word(rhs)?;
            Ok(match op {
                BinOp::Add => Value::Word(l.wrapping_add(r)),
                BinOp::Sub => Value::Word(l.wrapping_sub(r)),
                BinOp::Mul => Value::Word(l.wrapping_mul(r)),
                BinOp::Div => {
                    Value::Word(l.checked_div(r).ok_or(HypothesisEvalError::DivisionByZero)?)
                }
                BinOp::Mod => {
                    Value::Word(l.checked_rem(r).ok_or(HypothesisEvalError::DivisionByZero)?)
                }
                BinOp::Lt => Value::Truth(l < r),
                BinOp::Le => Value::Truth(l <= r),
                BinOp::Gt => Value::Truth(l > r),
                BinOp::Ge => Value::Truth(l >= r),
                BinOp::Eq => Value::Truth(l == r),
                BinOp::Ne => Value::Truth(l != r),
                BinOp::And | BinOp::Or => unreachable!(),
            })
        }
    }
}

fn infer(
    contract: &ResolvedContract,
    function: &FunctionDef,
    e: &Expr,
) -> Result<Sort, HypothesisError> {
    let fail = |msg: String| Err(HypothesisError::Grammar(msg));
    match e {
        Expr::IntLit(_) => Ok(Sort::Int),
        Expr::BoolLit(_) => Ok(Sort::Bool),
        Expr::MsgSender => Ok(Sort::Addr),
        Expr::Name(n) => {
            if let Some((_, ty)) = function.params.iter().find(|(p, _)| p == n) {
                return Ok(match ty {
                    super::ast::TypeTag::Uint256 => Sort::Int,
                    super::ast::TypeTag::Address => Sort::Addr,
                    _ => return fail(format!("parameter `{n}` has an unsupported sort")),
                });
            }
            match contract.storage_sort(n) {
                Some(Sort::Int) => Ok(Sort::Int),
                Some(Sort::Addr) => Ok(Sort::Addr),
                Some(Sort::Map) => fail(format!(
                    "`{n}` is a map; hypotheses may reference scalar storage only"
                )),
                Some(Sort::Bool) => fail(format!("`{n}` has an unsupported sort")),
                None => fail(format!(
                    "`{n}` is neither a parameter of `{}` nor scalar storage of `{}`",
                    function.name, contract.name
                )),
            }
        }
        Expr::MapRead { slot, .. } => fail(format!(
            "map read `{slot}[...]` is not allowed in a hypothesis"
        )),
        Expr::Sum { .. } => fail("sum(...) is not allowed in a hypothesis".into()),
        Expr::Forall { .. } => fail("forall is not allowed in a hypothesis".into()),
        Expr::Not(inner) => {
            let s = infer(contract, function, inner)?;
            if s != Sort::Bool {
                return fail("`!` expects a boolean".into());
            }
            Ok(Sort::Bool)
        }
        Expr::Binary { op, lhs, rhs } => {
            let l = infer(contract, function, lhs)?;
            let r = infer(contract, function, rhs)?;
            if op.is_arithmetic() {
                if l != Sort::Int || r != Sort::Int {
                    return fail(format!("`{}` expects uint256 operands", op.symbol()));
                }
                return Ok(Sort::Int);
            }
            if op.is_boolean() {
                if l != Sort::Bool || r != Sort::Bool {
                    return fail(format!("`{}` expects boolean operands", op.symbol()));
                }
                return Ok(Sort::Bool);
            }
            match op {
                BinOp::Eq | BinOp::Ne => {
                    if l != r || l == Sort::Map || l == Sort::Bool {
                        return fail(format!(
                            "`{}` compares two uint256 or two address values",
                            op.symbol()
                        ));
                    }
                    Ok(Sort::Bool)
                }
                _ => {
                    if l != Sort::Int || r != Sort::Int {
                        return fail(format!("`{}` expects uint256 operands", op.symbol()));
                    }
                    Ok(Sort::Bool)
                }
            }
        }
    }
}
