// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for MiniSol. LL-style with single-token
//! lookahead; the grammar is documented in `docs/minisol-grammar.md`.

use thiserror::Error;

use crate::word::Digest;

use super::ast::*;
use super::lexer::{lex, Tok, Token};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: u32,
        col: u32,
        expected: String,
        found: String,
    },
    #[error("line {line}: duplicate {what} `{name}`")]
    DuplicateName {
        line: u32,
        name: String,
        what: &'static str,
    },
    #[error("line {line}: unknown type `{name}`")]
    UnknownType { line: u32, name: String },
    #[error("{line}:{col}: integer literal out of range: `{literal}`")]
    BadLiteral {
        line: u32,
        col: u32,
        literal: String,
    },
}

/// Parse a complete source file into a [`SourceUnit`].
pub fn parse_source(text: &str) -> Result<SourceUnit, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut contracts: Vec<ContractDef> = Vec::new();
    loop {
        let mut pending = Pending::default();
        parser.parse_annotations(&mut pending)?;
        if parser.peek_is(&Tok::Eof) {
            if !pending.is_empty() {
                return Err(parser.unexpected("`contract` after annotations"));
            }
            break;
        }
        let contract = parser.parse_contract(pending)?;
        if contracts.iter().any(|c| c.name == contract.name) {
            return Err(ParseError::DuplicateName {
                line: parser.current_line(),
                name: contract.name,
                what: "contract",
            });
        }
        contracts.push(contract);
    }
    Ok(SourceUnit {
        contracts,
        source_hash: Digest::of(text.as_bytes()),
    })
}

/// Parse a standalone boolean/arithmetic expression (hypothesis texts,
/// scenario files, CLI arguments). The whole input must be one expression.
pub fn parse_expression_text(text: &str) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.parse_expr()?;
    parser.expect(&Tok::Eof, "end of expression")?;
    Ok(expr)
}

/// Annotations collected while scanning toward the item they precede.
#[derive(Default)]
struct Pending {
    invariants: Vec<Expr>,
    preconditions: Vec<Expr>,
    postconditions: Vec<Expr>,
    modifies: Option<Vec<ModifiesEntry>>,
    first_line: Option<u32>,
}

impl Pending {
    fn is_empty(&self) -> bool {
        self.invariants.is_empty()
            && self.preconditions.is_empty()
            && self.postconditions.is_empty()
            && self.modifies.is_none()
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_is(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn current_line(&self) -> u32 {
        self.tokens[self.pos].line
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek() == tok {
            Ok(self.advance())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(_) => {
                let t = self.advance();
                match t.tok {
                    Tok::Ident(name) => Ok(name),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.unexpected(what)),
        }
    }

    // ----- annotations -----

    fn parse_annotations(&mut self, pending: &mut Pending) -> Result<(), ParseError> {
        loop {
            let kind = match self.peek() {
                Tok::HashInvariant | Tok::HashPre | Tok::HashPost | Tok::HashModifies => {
                    self.peek().clone()
                }
                _ => return Ok(()),
            };
            let t = self.advance();
            pending.first_line.get_or_insert(t.line);
            match kind {
                Tok::HashInvariant => {
                    let e = self.parse_expr()?;
                    pending.invariants.push(e);
                }
                Tok::HashPre => {
                    let e = self.parse_expr()?;
                    pending.preconditions.push(e);
                }
                Tok::HashPost => {
                    let e = self.parse_expr()?;
                    pending.postconditions.push(e);
                }
                Tok::HashModifies => {
                    let entries = self.parse_modifies_list()?;
                    if pending.modifies.is_some() {
                        return Err(ParseError::DuplicateName {
                            line: t.line,
                            name: "#modifies".into(),
                            what: "annotation",
                        });
                    }
                    pending.modifies = Some(entries);
                }
                _ => unreachable!(),
            }
            self.expect(&Tok::EndOfAnnotation, "end of annotation line")?;
        }
    }

    fn parse_modifies_list(&mut self) -> Result<Vec<ModifiesEntry>, ParseError> {
        let mut entries = Vec::new();
        if self.peek_is(&Tok::EndOfAnnotation) {
            return Ok(entries); // declared-empty frame
        }
        loop {
            let slot = self.expect_ident("a storage name in #modifies")?;
            let index = if self.peek_is(&Tok::LBracket) {
                self.advance();
                let e = self.parse_expr()?;
                self.expect(&Tok::RBracket, "`]`")?;
                Some(e)
            } else {
                None
            };
            entries.push(ModifiesEntry { slot, index });
            if self.peek_is(&Tok::Comma) {
                self.advance();
            } else {
                return Ok(entries);
            }
        }
    }

    // ----- contracts and members -----

    fn parse_contract(&mut self, pending: Pending) -> Result<ContractDef, ParseError> {
        if !pending.preconditions.is_empty()
            || !pending.postconditions.is_empty()
            || pending.modifies.is_some()
        {
            let t = &self.tokens[self.pos];
            return Err(ParseError::Syntax {
                line: pending.first_line.unwrap_or(t.line),
                col: 1,
                expected: "only #invariant annotations before a contract".into(),
                found: "#pre/#post/#modifies".into(),
            });
        }
        self.expect(&Tok::Contract, "`contract`")?;
        let name = self.expect_ident("a contract name")?;
        let mut bases = Vec::new();
        if self.peek_is(&Tok::Colon) {
            self.advance();
            loop {
                bases.push(self.expect_ident("a base contract name")?);
                if self.peek_is(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::LBrace, "`{`")?;

        let mut storage: Vec<StorageDecl> = Vec::new();
        let mut functions: Vec<FunctionDef> = Vec::new();
        let mut constructor: Option<FunctionDef> = None;

        loop {
            let mut member_pending = Pending::default();
            self.parse_annotations(&mut member_pending)?;
            if self.peek_is(&Tok::RBrace) {
                if !member_pending.is_empty() {
                    return Err(self.unexpected("a function or constructor after annotations"));
                }
                self.advance();
                break;
            }
            if !member_pending.invariants.is_empty() {
                let t = &self.tokens[self.pos];
                return Err(ParseError::Syntax {
                    line: member_pending.first_line.unwrap_or(t.line),
                    col: 1,
                    expected: "#invariant only before a contract".into(),
                    found: "#invariant inside a contract body".into(),
                });
            }
            match self.peek().clone() {
                Tok::Uint256 | Tok::AddressTy | Tok::BoolTy | Tok::Map => {
                    if !member_pending.is_empty() {
                        return Err(self.unexpected("a function or constructor after annotations"));
                    }
                    let line = self.current_line();
                    let ty = self.parse_type()?;
                    let slot = self.expect_ident("a storage name")?;
                    self.expect(&Tok::Semi, "`;`")?;
                    if storage.iter().any(|s| s.name == slot) {
                        return Err(ParseError::DuplicateName {
                            line,
                            name: slot,
                            what: "storage declaration",
                        });
                    }
                    storage.push(StorageDecl { name: slot, ty });
                }
                Tok::Constructor => {
                    let line = self.current_line();
                    let func = self.parse_function(member_pending, true)?;
                    if constructor.is_some() {
                        return Err(ParseError::DuplicateName {
                            line,
                            name: "constructor".into(),
                            what: "constructor",
                        });
                    }
                    constructor = Some(func);
                }
                Tok::Function => {
                    let line = self.current_line();
                    let func = self.parse_function(member_pending, false)?;
                    if functions.iter().any(|f| f.name == func.name) {
                        return Err(ParseError::DuplicateName {
                            line,
                            name: func.name,
                            what: "function",
                        });
                    }
                    functions.push(func);
                }
                Tok::Ident(name) => {
                    let line = self.current_line();
                    return Err(ParseError::UnknownType { line, name });
                }
                _ => return Err(self.unexpected("a storage declaration, constructor, or function")),
            }
        }

        Ok(ContractDef {
            name,
            bases,
            storage,
            invariants: pending.invariants,
            constructor,
            functions,
        })
    }

    fn parse_type(&mut self) -> Result<TypeTag, ParseError> {
        match self.peek().clone() {
            Tok::Uint256 => {
                self.advance();
                Ok(TypeTag::Uint256)
            }
            Tok::AddressTy => {
                self.advance();
                Ok(TypeTag::Address)
            }
            Tok::BoolTy => {
                self.advance();
                Ok(TypeTag::Bool)
            }
            Tok::Map => {
                self.advance();
                self.expect(&Tok::LParen, "`(` after `map`")?;
                self.expect(&Tok::AddressTy, "`address` as the map key type")?;
                self.expect(&Tok::FatArrow, "`=>`")?;
                self.expect(&Tok::Uint256, "`uint256` as the map value type")?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(TypeTag::Map)
            }
            Tok::Ident(name) => Err(ParseError::UnknownType {
                line: self.current_line(),
                name,
            }),
            _ => Err(self.unexpected("a type")),
        }
    }

    fn parse_function(
        &mut self,
        pending: Pending,
        is_constructor: bool,
    ) -> Result<FunctionDef, ParseError> {
        let name = if is_constructor {
            self.expect(&Tok::Constructor, "`constructor`")?;
            "constructor".to_string()
        } else {
            self.expect(&Tok::Function, "`function`")?;
            self.expect_ident("a function name")?
        };
        self.expect(&Tok::LParen, "`(`")?;
        let mut params: Vec<(String, TypeTag)> = Vec::new();
        if !self.peek_is(&Tok::RParen) {
            loop {
                let line = self.current_line();
                let ty = self.parse_type()?;
                let pname = self.expect_ident("a parameter name")?;
                if params.iter().any(|(existing, _)| *existing == pname) {
                    return Err(ParseError::DuplicateName {
                        line,
                        name: pname,
                        what: "parameter",
                    });
                }
                params.push((pname, ty));
                if self.peek_is(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen, "`)`")?;
        let returns = if self.peek_is(&Tok::Returns) {
            self.advance();
            self.expect(&Tok::LParen, "`(`")?;
            let ty = self.parse_type()?;
            self.expect(&Tok::RParen, "`)`")?;
            Some(ty)
        } else {
            None
        };
        let body = self.parse_block()?;
        Ok(FunctionDef {
            name,
            params,
            returns,
            body,
            preconditions: pending.preconditions,
            postconditions: pending.postconditions,
            modifies: pending.modifies,
            is_constructor,
        })
    }

    // ----- statements -----

    fn parse_block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.peek_is(&Tok::RBrace) {
            stmts.push(self.parse_stmt()?);
        }
        self.advance();
        Ok(stmts)
    }

    fn parse_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.current_line();
        let kind = match self.peek().clone() {
            Tok::Let => {
                self.advance();
                let name = self.expect_ident("a local name")?;
                self.expect(&Tok::Assign, "`=`")?;
                let value = self.parse_expr()?;
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Let { name, value }
            }
            Tok::Require => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let cond = self.parse_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Require { cond }
            }
            Tok::Assert => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let cond = self.parse_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Assert { cond }
            }
            Tok::If => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let cond = self.parse_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                let then_branch = self.parse_block()?;
                let else_branch = if self.peek_is(&Tok::Else) {
                    self.advance();
                    self.parse_block()?
                } else {
                    Vec::new()
                };
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Tok::Call => {
                self.advance();
                let target = self.parse_primary()?;
                self.expect(&Tok::Dot, "`.` after the call target")?;
                let function = self.expect_ident("a function name")?;
                self.expect(&Tok::LParen, "`(`")?;
                let mut args = Vec::new();
                if !self.peek_is(&Tok::RParen) {
                    loop {
                        args.push(self.parse_expr()?);
                        if self.peek_is(&Tok::Comma) {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RParen, "`)`")?;
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Call {
                    target,
                    function,
                    args,
                }
            }
            Tok::Return => {
                self.advance();
                let value = if self.peek_is(&Tok::Semi) {
                    None
                } else {
                    Some(self.parse_expr()?)
                };
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Return { value }
            }
            Tok::Ident(_) => {
                let name = self.expect_ident("a name")?;
                let lhs = if self.peek_is(&Tok::LBracket) {
                    self.advance();
                    let index = self.parse_expr()?;
                    self.expect(&Tok::RBracket, "`]`")?;
                    LValue::MapSlot { slot: name, index }
                } else {
                    LValue::Name(name)
                };
                self.expect(&Tok::Assign, "`=`")?;
                let value = self.parse_expr()?;
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Assign { lhs, value }
            }
            _ => return Err(self.unexpected("a statement")),
        };
        Ok(Stmt { id: 0, line, kind })
    }

    // ----- expressions -----

    pub(super) fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek_is(&Tok::OrOr) {
            self.advance();
            let rhs = self.parse_and()?;
            lhs = Expr::Binary {
                op: BinOp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_cmp()?;
        while self.peek_is(&Tok::AndAnd) {
            self.advance();
            let rhs = self.parse_cmp()?;
            lhs = Expr::Binary {
                op: BinOp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_addsub()?;
        let op = match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.parse_addsub()?;
        Ok(Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    fn parse_addsub(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_muldiv()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_muldiv()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn parse_muldiv(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_pow()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_pow()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    /// `**` is a literal-only constructor (`2**255`), folded at parse time
    /// with wrapping multiplication; it binds tighter than `*` and is
    /// right-associative.
    fn parse_pow(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_unary()?;
        if !self.peek_is(&Tok::StarStar) {
            return Ok(lhs);
        }
        let t = self.advance();
        let rhs = self.parse_pow()?;
        match (&lhs, &rhs) {
            (Expr::IntLit(base), Expr::IntLit(exp)) => {
                Ok(Expr::IntLit(base.wrapping_pow(*exp)))
            }
            _ => Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                expected: "integer literals on both sides of `**`".into(),
                found: "a non-literal operand".into(),
            }),
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_is(&Tok::Bang) {
            self.advance();
            let inner = self.parse_unary()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::IntLit(v))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::BoolLit(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::BoolLit(false))
            }
            Tok::Msg => {
                self.advance();
                self.expect(&Tok::Dot, "`.` after `msg`")?;
                let field = self.expect_ident("`sender`")?;
                if field != "sender" {
                    return Err(self.unexpected("`sender`"));
                }
                Ok(Expr::MsgSender)
            }
            Tok::Sum => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let slot = self.expect_ident("a map name")?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::Sum { slot })
            }
            Tok::Forall => {
                self.advance();
                let var = self.expect_ident("a bound variable name")?;
                self.expect(&Tok::Colon, "`:`")?;
                self.expect(&Tok::AddressTy, "`address` (the only quantified sort)")?;
                self.expect(&Tok::ColonColon, "`::`")?;
                let body = self.parse_expr()?;
                Ok(Expr::Forall {
                    var,
                    body: Box::new(body),
                })
            }
            Tok::Ident(_) => {
                let name = self.expect_ident("a name")?;
                if self.peek_is(&Tok::LBracket) {
                    self.advance();
                    let index = self.parse_expr()?;
                    self.expect(&Tok::RBracket, "`]`")?;
                    Ok(Expr::MapRead {
                        slot: name,
                        index: Box::new(index),
                    })
                } else {
                    Ok(Expr::Name(name))
                }
            }
            Tok::LParen => {
                self.advance();
                let e = self.parse_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}
