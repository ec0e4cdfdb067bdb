// SPDX-License-Identifier: Apache-2.0

//! Canonical printer for MiniSol syntax trees.
//!
//! The printed form is re-parseable and deterministic: it is the basis
//! for contract code hashes, canonical hypothesis texts, and golden
//! dumps, so any change here changes every derived digest.

use super::ast::*;

/// Binding strength used to decide where parentheses are required.
/// Mirrors the parser's precedence ladder; higher binds tighter.
fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

/// `min_prec` is the loosest precedence printable without parentheses
/// in the current hole. Comparisons are non-chaining, so a comparison
/// child of a comparison is always wrapped.
fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::IntLit(v) => out.push_str(&v.to_string()),
        Expr::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Name(n) => out.push_str(n),
        Expr::MsgSender => out.push_str("msg.sender"),
        Expr::MapRead { slot, index } => {
            out.push_str(slot);
            out.push('[');
            write_expr(out, index, 0);
            out.push(']');
        }
        Expr::Sum { slot } => {
            out.push_str("sum(");
            out.push_str(slot);
            out.push(')');
        }
        Expr::Not(inner) => {
            out.push('!');
            // `!` accepts only a unary/primary operand.
            let needs = matches!(**inner, Expr::Binary { .. } | Expr::Forall { .. });
            if needs {
                out.push('(');
                write_expr(out, inner, 0);
                out.push(')');
            } else {
                write_expr(out, inner, 0);
            }
        }
        Expr::Forall { var, body } => {
            // A quantifier swallows everything to its right, so it is
            // parenthesized whenever it sits inside a larger expression.
            let needs = min_prec > 0;
            if needs {
                out.push('(');
            }
            out.push_str("forall ");
            out.push_str(var);
            out.push_str(": address :: ");
            write_expr(out, body, 0);
            if needs {
                out.push(')');
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = prec(*op);
            let needs = p < min_prec;
            if needs {
                out.push('(');
            }
            // Left-associative chains reuse the level on the left and
            // demand strictly tighter binding on the right; comparisons
            // demand strictly tighter binding on both sides.
            let lhs_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, lhs, lhs_min);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, p + 1);
            if needs {
                out.push(')');
            }
        }
    }
}

fn write_indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    write_indent(out, depth);
    match &s.kind {
        StmtKind::Let { name, value } => {
            out.push_str("let ");
            out.push_str(name);
            out.push_str(" = ");
            write_expr(out, value, 0);
            out.push_str(";\n");
        }
        StmtKind::Assign { lhs, value } => {
            match lhs {
                LValue::Name(n) => out.push_str(n),
                LValue::MapSlot { slot, index } => {
                    out.push_str(slot);
                    out.push('[');
                    write_expr(out, index, 0);
                    out.push(']');
                }
            }
            out.push_str(" = ");
            write_expr(out, value, 0);
            out.push_str(";\n");
        }
        StmtKind::Require { cond } => {
            out.push_str("require(");
            write_expr(out, cond, 0);
            out.push_str(");\n");
        }
        StmtKind::Assert { cond } => {
            out.push_str("assert(");
            write_expr(out, cond, 0);
            out.push_str(");\n");
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if (");
            write_expr(out, cond, 0);
            out.push_str(") {\n");
            for st in then_branch {
                write_stmt(out, st, depth + 1);
            }
            write_indent(out, depth);
            out.push('}');
            if !else_branch.is_empty() {
                out.push_str(" else {\n");
                for st in else_branch {
                    write_stmt(out, st, depth + 1);
                }
                write_indent(out, depth);
                out.push('}');
            }
            out.push('\n');
        }
        StmtKind::Call {
            target,
            function,
            args,
        } => {
            out.push_str("call ");
            write_expr(out, target, 6);
            out.push('.');
            out.push_str(function);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push_str(");\n");
        }
        StmtKind::Return { value } => {
            out.push_str("return");
            if let Some(v) = value {
                out.push(' ');
                write_expr(out, v, 0);
            }
            out.push_str(";\n");
        }
    }
}

pub fn print_function(out: &mut String, f: &FunctionDef, depth: usize) {
    for pre in &f.preconditions {
        write_indent(out, depth);
        out.push_str("#pre ");
        write_expr(out, pre, 0);
        out.push('\n');
    }
    for post in &f.postconditions {
        write_indent(out, depth);
        out.push_str("#post ");
        write_expr(out, post, 0);
        out.push('\n');
    }
    if let Some(entries) = &f.modifies {
        write_indent(out, depth);
        out.push_str("#modifies");
        for (i, entry) in entries.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { ", " });
            out.push_str(&entry.slot);
            if let Some(index) = &entry.index {
                out.push('[');
                write_expr(out, index, 0);
                out.push(']');
            }
        }
        out.push('\n');
    }
    write_indent(out, depth);
    if f.is_constructor {
        out.push_str("constructor(");
    } else {
        out.push_str("function ");
        out.push_str(&f.name);
        out.push('(');
    }
    for (i, (name, ty)) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(ty.keyword());
        out.push(' ');
        out.push_str(name);
    }
    out.push(')');
    if let Some(ty) = &f.returns {
        out.push_str(" returns (");
        out.push_str(ty.keyword());
        out.push(')');
    }
    out.push_str(" {\n");
    for st in &f.body {
        write_stmt(out, st, depth + 1);
    }
    write_indent(out, depth);
    out.push_str("}\n");
}

/// Print one contract. `sort_functions` selects the canonical ordering
/// used for code hashing (name-sorted, declaration order otherwise).
pub fn print_contract(c: &ContractDef, sort_functions: bool) -> String {
    let mut out = String::new();
    for inv in &c.invariants {
        out.push_str("#invariant ");
        write_expr(&mut out, inv, 0);
        out.push('\n');
    }
    out.push_str("contract ");
    out.push_str(&c.name);
    if !c.bases.is_empty() {
        out.push_str(" : ");
        out.push_str(&c.bases.join(", "));
    }
    out.push_str(" {\n");
    for decl in &c.storage {
        write_indent(&mut out, 1);
        out.push_str(decl.ty.keyword());
        out.push(' ');
        out.push_str(&decl.name);
        out.push_str(";\n");
    }
    if let Some(ctor) = &c.constructor {
        out.push('\n');
        print_function(&mut out, ctor, 1);
    }
    let mut funcs: Vec<&FunctionDef> = c.functions.iter().collect();
    if sort_functions {
        funcs.sort_by(|a, b| a.name.cmp(&b.name));
    }
    for f in funcs {
        out.push('\n');
        print_function(&mut out, f, 1);
    }
    out.push_str("}\n");
    out
}

/// Print a whole source unit in declaration order (used by the
/// parse–print round-trip property, not by code hashing).
pub fn print_source_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for (i, c) in unit.contracts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_contract(c, false));
    }
    out
}
