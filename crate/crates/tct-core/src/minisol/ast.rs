// SPDX-License-Identifier: Apache-2.0

//! Abstract syntax for MiniSol: a small contract language with storage
//! maps, require/assert, if/else, external calls, and property annotations
//! (`#invariant`, `#pre`, `#post`, `#modifies`). Loops are deliberately
//! absent; iteration arises only through reentrant external calls.

use crate::word::{Digest, Word256};

/// A parsed source file: an ordered list of contracts plus the digest of
/// the source text it came from.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub contracts: Vec<ContractDef>,
    pub source_hash: Digest,
}

impl SourceUnit {
    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ContractDef {
    pub name: String,
    /// Base contracts, leftmost first; each must be declared earlier in the
    /// unit.
    pub bases: Vec<String>,
    pub storage: Vec<StorageDecl>,
    /// Contract invariants, in declaration order (own only; bases are
    /// accumulated during resolution).
    pub invariants: Vec<Expr>,
    pub constructor: Option<FunctionDef>,
    pub functions: Vec<FunctionDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageDecl {
    pub name: String,
    pub ty: TypeTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeTag {
    Uint256,
    Address,
    Bool,
    /// `map(address => uint256)`; storage-only, no nesting.
    Map,
}

impl TypeTag {
    pub fn keyword(self) -> &'static str {
        match self {
            TypeTag::Uint256 => "uint256",
            TypeTag::Address => "address",
            TypeTag::Bool => "bool",
            TypeTag::Map => "map(address => uint256)",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<(String, TypeTag)>,
    pub returns: Option<TypeTag>,
    pub body: Vec<Stmt>,
    pub preconditions: Vec<Expr>,
    pub postconditions: Vec<Expr>,
    /// `None` means unannotated (no frame obligations); `Some(vec![])` is a
    /// declared-empty frame (the function claims to write nothing).
    pub modifies: Option<Vec<ModifiesEntry>>,
    pub is_constructor: bool,
}

#[derive(Debug, Clone)]
pub struct ModifiesEntry {
    pub slot: String,
    /// For map slots, the declared index pattern (hypothesis-grammar
    /// expression); a bare name covers every index.
    pub index: Option<Expr>,
}

/// One statement. `id` is the function-local pre-order index assigned
/// during resolution (0 until then); `line` is the 1-based source line.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub id: u32,
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    /// `let x = e;`
    Let { name: String, value: Expr },
    /// `x = e;` — the left side is classified against storage declarations
    /// during resolution (local vs. scalar slot).
    Assign { lhs: LValue, value: Expr },
    /// `require(e);` — false aborts and rolls back the transaction.
    Require { cond: Expr },
    /// `assert(e);` — recorded as a proof goal; never evaluated during
    /// normal execution (zero runtime cost), only under a debug flag.
    Assert { cond: Expr },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    /// `call target.function(args);` — external call, callee resolved from
    /// world state at runtime; a failing callee reverts the whole
    /// transaction.
    Call {
        target: Expr,
        function: String,
        args: Vec<Expr>,
    },
    Return { value: Option<Expr> },
}

#[derive(Debug, Clone)]
pub enum LValue {
    /// Local variable or scalar storage slot.
    Name(String),
    /// Map slot entry: `balances[index]`.
    MapSlot { slot: String, index: Expr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    IntLit(Word256),
    BoolLit(bool),
    /// Parameter, local, or scalar storage read, resolved by name.
    Name(String),
    MsgSender,
    MapRead { slot: String, index: Box<Expr> },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Not(Box<Expr>),
    /// `sum(mapName)` — property positions only.
    Sum { slot: String },
    /// `forall x: address :: body` — property positions only.
    Forall { var: String, body: Box<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}
