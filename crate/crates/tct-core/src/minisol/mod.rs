// SPDX-License-Identifier: Apache-2.0

//! MiniSol: the contract language frontend.
//!
//! Pipeline: [`parser::parse_source`] text → syntax tree,
//! [`resolve::resolve`] → flattened, type-checked, statement-numbered
//! contracts with code hashes, [`printer`] → the canonical text those
//! hashes commit to. [`hypothesis`] carries the restricted grammar for
//! theorem applicability conditions.

pub mod ast;
pub mod hypothesis;
mod lexer;
pub mod parser;
pub mod printer;
pub mod resolve;

pub use ast::{
    BinOp, ContractDef, Expr, FunctionDef, LValue, ModifiesEntry, SourceUnit, StorageDecl, Stmt,
    StmtKind, TypeTag,
};
pub use hypothesis::{
    check_hypothesis, eval_hypothesis, parse_hypothesis, HypothesisError, HypothesisEvalError,
};
pub use printer::expr_to_string;
pub use parser::{parse_expression_text, parse_source, ParseError};
pub use resolve::{
    resolve, CodeRegistry, ResolveError, ResolvedContract, ResolvedProgram, Sort,
};
