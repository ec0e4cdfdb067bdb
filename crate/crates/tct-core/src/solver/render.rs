//! SMT-LIB rendering of proof queries.
//!
//! Every query can be checked in two forms. The **quantified** form keeps the
//! wrapping operators and map sums as uninterpreted functions constrained by
//! universally quantified axioms; an `unsat` answer is a proof of the goal.
//! The **ground** form defines the wrapping operators arithmetically, replaces
//! positive-polarity quantifiers by finitely many instances at the address
//! terms the path actually names, and asks for a model; a `sat` answer yields
//! a candidate counterexample which is then evaluated concretely and replayed
//! through the interpreter before it is believed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::trace::{SExpr, SOp, SsaSort};
use crate::vcgen::{AssumeKind, ScriptItem, VCQuery};

const TWO_E_160: &str = "1461501637330902918203684832716283019655932542976";
const TWO_E_255: &str =
    "57896044618658097711785492504343953926634992332820282019728792003956564819968";
const TWO_E_256: &str =
    "115792089237316195423570985008687907853269984665640564039457584007913129639936";

/// Source identifiers that would collide with SMT-LIB builtins or with the
/// symbols the prelude defines. Colliding names are suffixed with `!r`, which
/// is a legal SMT-LIB symbol character but cannot appear in a source name, so
/// the renaming is collision-free.
fn needs_rename(name: &str) -> bool {
    matches!(
        name,
        "add"
            | "sub"
            | "mul"
            | "udiv"
            | "umod"
            | "sum"
            | "select"
            | "store"
            | "mod"
            | "div"
            | "ite"
            | "true"
            | "false"
            | "and"
            | "or"
            | "not"
            | "xor"
            | "distinct"
            | "forall"
            | "exists"
            | "let"
            | "as"
            | "assert"
            | "abs"
            | "Int"
            | "Bool"
            | "Array"
            | "TwoE160"
            | "TwoE255"
            | "TwoE256"
            | "par"
            | "NUMERAL"
            | "DECIMAL"
            | "STRING"
            | "_"
    )
}

fn smt_name(name: &str) -> String {
    if needs_rename(name) {
        format!("{name}!r")
    } else {
        name.to_string()
    }
}

fn render_expr(e: &SExpr, out: &mut String) {
    match e {
        SExpr::Int(w) => {
            let _ = write!(out, "{w}");
        }
        SExpr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        SExpr::Sym(s) => out.push_str(&smt_name(s)),
        SExpr::Select { map, index } => {
            out.push_str("(select ");
            render_expr(map, out);
            out.push(' ');
            render_expr(index, out);
            out.push(')');
        }
        SExpr::Sum(map) => {
            out.push_str("(sum ");
            render_expr(map, out);
            out.push(')');
        }
        SExpr::ConstMap(v) => {
            let _ = write!(out, "((as const (Array Int Int)) {v})");
        }
        SExpr::Forall { var, body } => {
            let _ = write!(out, "(forall (({} Int)) ", smt_name(var));
            render_expr(body, out);
            out.push(')');
        }
        SExpr::App(op, args) => {
            let head = match op {
                SOp::Add => "add",
                SOp::Sub => "sub",
                SOp::Mul => "mul",
                SOp::Udiv => "udiv",
                SOp::Umod => "umod",
                SOp::Lt => "<",
                SOp::Le => "<=",
                SOp::Gt => ">",
                SOp::Ge => ">=",
                SOp::Eq => "=",
                SOp::Ne => "distinct",
                SOp::And => "and",
                SOp::Or => "or",
                SOp::Not => "not",
                SOp::Implies => "=>",
            };
            out.push('(');
            out.push_str(head);
            for a in args {
                out.push(' ');
                render_expr(a, out);
            }
            out.push(')');
        }
    }
}

fn expr_text(e: &SExpr) -> String {
    let mut s = String::new();
    render_expr(e, &mut s);
    s
}

fn collect_syms(e: &SExpr, out: &mut std::collections::BTreeSet<String>) {
    match e {
        SExpr::Sym(s) => {
            out.insert(s.clone());
        }
        SExpr::Int(_) | SExpr::Bool(_) | SExpr::ConstMap(_) => {}
        SExpr::Select { map, index } => {
            collect_syms(map, out);
            collect_syms(index, out);
        }
        SExpr::Sum(m) => collect_syms(m, out),
        SExpr::Forall { body, .. } => collect_syms(body, out),
        SExpr::App(_, args) => {
            for a in args {
                collect_syms(a, out);
            }
        }
    }
}

pub(crate) fn contains_forall(e: &SExpr) -> bool {
    match e {
        SExpr::Forall { .. } => true,
        SExpr::Int(_) | SExpr::Bool(_) | SExpr::Sym(_) | SExpr::ConstMap(_) => false,
        SExpr::Select { map, index } => contains_forall(map) || contains_forall(index),
        SExpr::Sum(m) => contains_forall(m),
        SExpr::App(_, args) => args.iter().any(contains_forall),
    }
}

/// Capture-avoiding substitution of `term` for the free symbol `var`.
fn subst(e: &SExpr, var: &str, term: &SExpr) -> SExpr {
    match e {
        SExpr::Sym(s) if s == var => term.clone(),
        SExpr::Int(_) | SExpr::Bool(_) | SExpr::Sym(_) | SExpr::ConstMap(_) => e.clone(),
        SExpr::Select { map, index } => SExpr::Select {
            map: Box::new(subst(map, var, term)),
            index: Box::new(subst(index, var, term)),
        },
        SExpr::Sum(m) => SExpr::Sum(Box::new(subst(m, var, term))),
        SExpr::Forall { var: v, body } => {
            if v == var {
                e.clone()
            } else {
                SExpr::Forall { var: v.clone(), body: Box::new(subst(body, var, term)) }
            }
        }
        SExpr::App(op, args) => {
            SExpr::App(*op, args.iter().map(|a| subst(a, var, term)).collect())
        }
    }
}

/// Replace every *positive-polarity* universal quantifier by the conjunction
/// of its instances at `terms`. Negative- or mixed-polarity quantifiers are
/// left in place (the solver existentializes them itself). Instantiating a
/// positive quantifier weakens the formula, which is the sound direction both
/// for assumptions the model must satisfy and for a goal that is later
/// negated to search for a counterexample.
pub(crate) fn ground_positive(e: &SExpr, terms: &[SExpr]) -> SExpr {
    fn walk(e: &SExpr, terms: &[SExpr], positive: bool) -> SExpr {
        match e {
            SExpr::Forall { var, body } if positive => {
                let instances: Vec<SExpr> = terms
                    .iter()
                    .map(|t| walk(&subst(body, var, t), terms, true))
                    .collect();
                SExpr::and(instances)
            }
            SExpr::Forall { .. } => e.clone(),
            SExpr::App(SOp::Not, args) => {
                SExpr::App(SOp::Not, args.iter().map(|a| walk(a, terms, !positive)).collect())
            }
            SExpr::App(SOp::Implies, args) if args.len() == 2 => SExpr::App(
                SOp::Implies,
                vec![walk(&args[0], terms, !positive), walk(&args[1], terms, positive)],
            ),
            SExpr::App(op @ (SOp::And | SOp::Or), args) => {
                SExpr::App(*op, args.iter().map(|a| walk(a, terms, positive)).collect())
            }
            // Equality between boolean subformulas is both-polarity; leave any
            // quantifier under it untouched. All other expressions cannot
            // contain a boolean quantifier below an arithmetic operator, so a
            // plain clone is exact.
            _ => e.clone(),
        }
    }
    walk(e, terms, true)
}

/// Structural facts about one query that both rendering phases need.
struct Shape {
    /// Decl names later pinned by a definition assume or introduced as stores.
    defined: BTreeSet<String>,
    /// Unpinned scalar declarations (model inputs), in declaration order.
    free_scalars: Vec<(String, SsaSort)>,
    /// Map version symbol -> the version it was stored from.
    parent: BTreeMap<String, String>,
    /// Every map-sorted symbol, in introduction order.
    map_symbols: Vec<String>,
    /// Unpinned initial map versions (model inputs), in declaration order.
    free_roots: Vec<String>,
    /// Index terms used against each map lineage, keyed by root symbol,
    /// deduplicated by rendered text, in first-use order.
    candidates: BTreeMap<String, Vec<SExpr>>,
    sums_used: bool,
}

impl Shape {
    fn of(query: &VCQuery) -> Shape {
        let mut shape = Shape {
            defined: BTreeSet::new(),
            free_scalars: Vec::new(),
            parent: BTreeMap::new(),
            map_symbols: Vec::new(),
            free_roots: Vec::new(),
            candidates: BTreeMap::new(),
            sums_used: false,
        };
        let mut decls: Vec<(String, SsaSort)> = Vec::new();
        for item in &query.items {
            match item {
                ScriptItem::Decl { name, sort } => {
                    decls.push((name.clone(), *sort));
                    if *sort == SsaSort::Map {
                        shape.map_symbols.push(name.clone());
                    }
                }
                ScriptItem::Assume { kind: AssumeKind::Definition, expr } => {
                    if let SExpr::App(SOp::Eq, args) = expr {
                        if let Some(SExpr::Sym(n)) = args.first() {
                            shape.defined.insert(n.clone());
                        }
                    }
                }
                ScriptItem::Assume { .. } => {}
                ScriptItem::MapStore { name, prior, .. } => {
                    shape.defined.insert(name.clone());
                    shape.parent.insert(name.clone(), prior.clone());
                    shape.map_symbols.push(name.clone());
                }
            }
        }
        for (name, sort) in &decls {
            if shape.defined.contains(name) {
                continue;
            }
            if *sort == SsaSort::Map {
                shape.free_roots.push(name.clone());
            } else {
                shape.free_scalars.push((name.clone(), *sort));
            }
        }
        for item in &query.items {
            match item {
                ScriptItem::Assume { expr, .. } => shape.scan(expr),
                ScriptItem::MapStore { name, index, value, .. } => {
                    let prior = shape.parent[name].clone();
                    let root = shape.root_of(&prior);
                    shape.add_candidate(root, index);
                    shape.scan(index);
                    shape.scan(value);
                }
                ScriptItem::Decl { .. } => {}
            }
        }
        shape.scan(&query.goal);
        // Index terms read inside quantifier bodies mention the bound
        // variable; they are not ground and cannot serve as instantiation
        // points or model probes.
        let declared: BTreeSet<String> = decls
            .iter()
            .map(|(n, _)| n.clone())
            .chain(shape.parent.keys().cloned())
            .collect();
        for terms in shape.candidates.values_mut() {
            terms.retain(|t| {
                let mut names = BTreeSet::new();
                collect_syms(t, &mut names);
                names.iter().all(|n| declared.contains(n))
            });
        }
        shape
    }

    fn root_of(&self, name: &str) -> String {
        let mut cur = name;
        while let Some(p) = self.parent.get(cur) {
            cur = p;
        }
        cur.to_string()
    }

    fn add_candidate(&mut self, root: String, term: &SExpr) {
        let text = expr_text(term);
        let list = self.candidates.entry(root).or_default();
        if !list.iter().any(|t| expr_text(t) == text) {
            list.push(term.clone());
        }
    }

    fn scan(&mut self, e: &SExpr) {
        match e {
            SExpr::Int(_) | SExpr::Bool(_) | SExpr::Sym(_) | SExpr::ConstMap(_) => {}
            SExpr::Select { map, index } => {
                if let SExpr::Sym(m) = map.as_ref() {
                    let root = self.root_of(m);
                    self.add_candidate(root, index);
                }
                self.scan(map);
                self.scan(index);
            }
            SExpr::Sum(m) => {
                self.sums_used = true;
                self.scan(m);
            }
            SExpr::Forall { body, .. } => self.scan(body),
            SExpr::App(_, args) => {
                for a in args {
                    self.scan(a);
                }
            }
        }
    }

    /// Union of all candidate terms across roots (instantiation universe),
    /// excluding any term that mentions a quantified variable (those arise
    /// from selects inside quantifier bodies and are not ground).
    fn all_ground_candidates(&self) -> Vec<SExpr> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for terms in self.candidates.values() {
            for t in terms {
                let text = expr_text(t);
                if seen.insert(text) {
                    out.push(t.clone());
                }
            }
        }
        out
    }
}

fn sort_text(sort: SsaSort) -> &'static str {
    match sort {
        SsaSort::Int => "Int",
        SsaSort::Bool => "Bool",
        SsaSort::Map => "(Array Int Int)",
    }
}

fn push_constant_defs(s: &mut String) {
    let _ = writeln!(s, "(define-fun TwoE160 () Int {TWO_E_160})");
    let _ = writeln!(s, "(define-fun TwoE255 () Int {TWO_E_255})");
    let _ = writeln!(s, "(define-fun TwoE256 () Int {TWO_E_256})");
}

/// Per-map-version facts in the quantified phase: entry values are words, and
/// (when sums appear) no entry exceeds the map's sum. Both are patterned on
/// `(select M a)` so they fire only where the query reads the map.
fn push_map_helpers(s: &mut String, name: &str, sums_used: bool) {
    let m = smt_name(name);
    let _ = writeln!(
        s,
        "(assert (forall ((a Int)) (! (and (<= 0 (select {m} a)) (< (select {m} a) TwoE256)) :pattern ((select {m} a)))))"
    );
    if sums_used {
        let _ = writeln!(
            s,
            "(assert (forall ((a Int)) (! (<= (select {m} a) (sum {m})) :pattern ((select {m} a)))))"
        );
    }
}

fn push_store_ground_sum(s: &mut String, name: &str, prior: &str, index: &SExpr, value: &SExpr) {
    let _ = writeln!(
        s,
        "(assert (= (sum {}) (- (+ (sum {}) {}) (select {} {}))))",
        smt_name(name),
        smt_name(prior),
        expr_text(value),
        smt_name(prior),
        expr_text(index),
    );
}

fn push_map_store(s: &mut String, name: &str, prior: &str, index: &SExpr, value: &SExpr) {
    let _ = writeln!(s, "(declare-const {} (Array Int Int))", smt_name(name));
    let _ = writeln!(
        s,
        "(assert (= {} (store {} {} {})))",
        smt_name(name),
        smt_name(prior),
        expr_text(index),
        expr_text(value),
    );
}

/// The quantified form of a query. `unsat` on this script proves the goal.
pub struct Phase1Script {
    pub text: String,
}

pub fn quantified_script(query: &VCQuery) -> Phase1Script {
    let shape = Shape::of(query);
    let mut s = String::new();
    s.push_str("(set-logic ALL)\n");
    push_constant_defs(&mut s);
    let _ = writeln!(s, "(declare-fun add (Int Int) Int)");
    let _ = writeln!(s, "(declare-fun sub (Int Int) Int)");
    let _ = writeln!(s, "(declare-fun mul (Int Int) Int)");
    let _ = writeln!(s, "(declare-fun udiv (Int Int) Int)");
    let _ = writeln!(s, "(declare-fun umod (Int Int) Int)");
    let _ = writeln!(
        s,
        "(assert (forall ((a Int) (b Int)) (! (= (add a b) (mod (+ a b) TwoE256)) :pattern ((add a b)))))"
    );
    let _ = writeln!(
        s,
        "(assert (forall ((a Int) (b Int)) (! (= (sub a b) (mod (- a b) TwoE256)) :pattern ((sub a b)))))"
    );
    let _ = writeln!(
        s,
        "(assert (forall ((a Int) (b Int)) (! (= (mul a b) (mod (* a b) TwoE256)) :pattern ((mul a b)))))"
    );
    let _ = writeln!(
        s,
        "(assert (forall ((a Int) (b Int)) (! (=> (not (= b 0)) (= (udiv a b) (div a b))) :pattern ((udiv a b)))))"
    );
    let _ = writeln!(
        s,
        "(assert (forall ((a Int) (b Int)) (! (=> (not (= b 0)) (= (umod a b) (mod a b))) :pattern ((umod a b)))))"
    );
    if shape.sums_used {
        let _ = writeln!(s, "(declare-fun sum ((Array Int Int)) Int)");
        let _ = writeln!(
            s,
            "(assert (forall ((m (Array Int Int)) (a Int) (v Int)) (! (= (sum (store m a v)) (- (+ (sum m) v) (select m a))) :pattern ((sum (store m a v))) :pattern ((store m a v)))))"
        );
        let _ = writeln!(
            s,
            "(assert (forall ((m (Array Int Int))) (! (=> (forall ((a Int)) (<= 0 (select m a))) (forall ((a Int)) (<= (select m a) (sum m)))) :pattern ((sum m)))))"
        );
        let _ = writeln!(s, "(assert (= (sum ((as const (Array Int Int)) 0)) 0))");
    }
    for item in &query.items {
        match item {
            ScriptItem::Decl { name, sort } => {
                let _ = writeln!(s, "(declare-const {} {})", smt_name(name), sort_text(*sort));
                if *sort == SsaSort::Map {
                    push_map_helpers(&mut s, name, shape.sums_used);
                }
            }
            ScriptItem::Assume { kind, expr } => {
                let _ = writeln!(s, "; assume[{kind}]");
                let _ = writeln!(s, "(assert {})", expr_text(expr));
            }
            ScriptItem::MapStore { name, prior, index, value } => {
                push_map_store(&mut s, name, prior, index, value);
                push_map_helpers(&mut s, name, shape.sums_used);
                if shape.sums_used {
                    push_store_ground_sum(&mut s, name, prior, index, value);
                }
            }
        }
    }
    let _ = writeln!(s, "; negated goal");
    let _ = writeln!(s, "(assert (not {}))", expr_text(&query.goal));
    s.push_str("(check-sat)\n");
    Phase1Script { text: s }
}

/// One term requested from the model, in `(get-value ...)` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryTerm {
    /// A free scalar input (by its program-side symbol name).
    Scalar { name: String, sort: SsaSort },
    /// The concrete value of one candidate index term of `root`.
    MapIndex { root: String },
    /// The entry of `root` at the immediately preceding index term.
    MapValue { root: String },
    /// The mathematical sum of `root`.
    MapSum { root: String },
}

/// The ground form of a query plus the model-extraction schedule.
pub struct Phase2Script {
    pub text: String,
    pub queried: Vec<QueryTerm>,
    /// True when the goal itself is quantified; `unsat` on the ground form
    /// then proves only the tested instances and is reported as unknown.
    pub goal_quantified: bool,
}

pub fn ground_script(query: &VCQuery) -> Phase2Script {
    let shape = Shape::of(query);
    let terms = shape.all_ground_candidates();
    let mut s = String::new();
    s.push_str("(set-option :produce-models true)\n");
    s.push_str("(set-logic ALL)\n");
    push_constant_defs(&mut s);
    let _ = writeln!(s, "(define-fun add ((a Int) (b Int)) Int (mod (+ a b) TwoE256))");
    let _ = writeln!(s, "(define-fun sub ((a Int) (b Int)) Int (mod (- a b) TwoE256))");
    let _ = writeln!(s, "(define-fun mul ((a Int) (b Int)) Int (mod (* a b) TwoE256))");
    let _ = writeln!(s, "(define-fun udiv ((a Int) (b Int)) Int (ite (= b 0) 0 (div a b)))");
    let _ = writeln!(s, "(define-fun umod ((a Int) (b Int)) Int (ite (= b 0) 0 (mod a b)))");
    if shape.sums_used {
        let _ = writeln!(s, "(declare-fun sum ((Array Int Int)) Int)");
        let _ = writeln!(s, "(assert (= (sum ((as const (Array Int Int)) 0)) 0))");
    }
    // Quantified assumptions are grounded at the end of the script, where
    // every symbol a candidate term mentions is already declared.
    let mut deferred: Vec<(&AssumeKind, &SExpr)> = Vec::new();
    for item in &query.items {
        match item {
            ScriptItem::Decl { name, sort } => {
                let _ = writeln!(s, "(declare-const {} {})", smt_name(name), sort_text(*sort));
            }
            ScriptItem::Assume { kind, expr } => {
                if contains_forall(expr) {
                    deferred.push((kind, expr));
                } else {
                    let _ = writeln!(s, "; assume[{kind}]");
                    let _ = writeln!(s, "(assert {})", expr_text(expr));
                }
            }
            ScriptItem::MapStore { name, prior, index, value } => {
                push_map_store(&mut s, name, prior, index, value);
                if shape.sums_used {
                    push_store_ground_sum(&mut s, name, prior, index, value);
                }
            }
        }
    }
    for (kind, expr) in deferred {
        let grounded = ground_positive(expr, &terms);
        let _ = writeln!(s, "; grounded assume[{kind}]");
        let _ = writeln!(s, "(assert {})", expr_text(&grounded));
    }
    if shape.sums_used {
        for root in &shape.free_roots {
            let m = smt_name(root);
            let _ = writeln!(s, "(assert (<= 0 (sum {m})))");
            // The named entries are pairwise-distinct-aware and must fit
            // under the sum, or no finite map realizes the model.
            if let Some(cands) = shape.candidates.get(root) {
                if !cands.is_empty() {
                    let mut parts: Vec<String> = Vec::new();
                    for (i, t) in cands.iter().enumerate() {
                        let sel = format!("(select {m} {})", expr_text(t));
                        if i == 0 {
                            parts.push(sel);
                        } else {
                            let guards: Vec<String> = cands[..i]
                                .iter()
                                .map(|p| format!("(= {} {})", expr_text(t), expr_text(p)))
                                .collect();
                            let dup = if guards.len() == 1 {
                                guards.into_iter().next().unwrap()
                            } else {
                                format!("(or {})", guards.join(" "))
                            };
                            parts.push(format!("(ite {dup} 0 {sel})"));
                        }
                    }
                    let total = if parts.len() == 1 {
                        parts.into_iter().next().unwrap()
                    } else {
                        format!("(+ {})", parts.join(" "))
                    };
                    let _ = writeln!(s, "(assert (<= {total} (sum {m})))");
                }
            }
        }
    }
    let goal_quantified = contains_forall(&query.goal);
    let grounded_goal = ground_positive(&query.goal, &terms);
    let _ = writeln!(s, "; negated goal");
    let _ = writeln!(s, "(assert (not {}))", expr_text(&grounded_goal));
    s.push_str("(check-sat)\n");

    let mut queried = Vec::new();
    let mut value_terms: Vec<String> = Vec::new();
    for (name, sort) in &shape.free_scalars {
        queried.push(QueryTerm::Scalar { name: name.clone(), sort: *sort });
        value_terms.push(smt_name(name));
    }
    for root in &shape.free_roots {
        let m = smt_name(root);
        if let Some(cands) = shape.candidates.get(root) {
            for t in cands {
                queried.push(QueryTerm::MapIndex { root: root.clone() });
                value_terms.push(expr_text(t));
                queried.push(QueryTerm::MapValue { root: root.clone() });
                value_terms.push(format!("(select {m} {})", expr_text(t)));
            }
        }
        if shape.sums_used {
            queried.push(QueryTerm::MapSum { root: root.clone() });
            value_terms.push(format!("(sum {m})"));
        }
    }
    if !value_terms.is_empty() {
        let _ = writeln!(s, "(get-value ({}))", value_terms.join(" "));
    }
    Phase2Script { text: s, queried, goal_quantified }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::GoalOrigin;
    use crate::word::Word256;

    fn sym(n: &str) -> SExpr {
        SExpr::sym(n)
    }

    #[test]
    fn positive_quantifiers_ground_to_instance_conjunctions() {
        let body = SExpr::App(
            SOp::Le,
            vec![
                SExpr::Int(Word256::ZERO),
                SExpr::Select { map: Box::new(sym("m")), index: Box::new(sym("qv")) },
            ],
        );
        let forall = SExpr::Forall { var: "qv".into(), body: Box::new(body) };
        let grounded = ground_positive(&forall, &[sym("a"), sym("b")]);
        assert_eq!(expr_text(&grounded), "(and (<= 0 (select m a)) (<= 0 (select m b)))");
        // Under negation the quantifier must survive untouched.
        let negated = SExpr::not(forall);
        let kept = ground_positive(&negated, &[sym("a")]);
        assert_eq!(expr_text(&kept), "(not (forall ((qv Int)) (<= 0 (select m qv))))");
    }

    #[test]
    fn reserved_source_names_are_rendered_with_a_suffix() {
        let e = SExpr::App(SOp::Lt, vec![sym("sum"), sym("balance")]);
        assert_eq!(expr_text(&e), "(< sum!r balance)");
    }

    #[test]
    fn ground_script_defers_quantified_assumptions_past_declarations() {
        // A quantified assumption over a map, where the only candidate index
        // is declared *after* the assumption — grounding in place would
        // reference an undeclared symbol.
        let range_body = SExpr::App(
            SOp::Le,
            vec![
                SExpr::Int(Word256::ZERO),
                SExpr::Select { map: Box::new(sym("bal0")), index: Box::new(sym("qv")) },
            ],
        );
        let query = VCQuery {
            origin: GoalOrigin::Invariant { contract: "T".into(), index: 0 },
            items: vec![
                ScriptItem::Decl { name: "bal0".into(), sort: SsaSort::Map },
                ScriptItem::Assume {
                    kind: AssumeKind::Range,
                    expr: SExpr::Forall { var: "qv".into(), body: Box::new(range_body) },
                },
                ScriptItem::Decl { name: "late".into(), sort: SsaSort::Int },
                ScriptItem::Assume {
                    kind: AssumeKind::Path,
                    expr: SExpr::App(
                        SOp::Lt,
                        vec![
                            SExpr::Select {
                                map: Box::new(sym("bal0")),
                                index: Box::new(sym("late")),
                            },
                            SExpr::Int(Word256::from_u64(5)),
                        ],
                    ),
                },
            ],
            goal: SExpr::App(SOp::Lt, vec![sym("late"), SExpr::Int(Word256::from_u64(9))]),
            nonlinear: false,
        };
        let script = ground_script(&query);
        let decl_pos = script.text.find("(declare-const late Int)").unwrap();
        let grounded_pos = script.text.find("; grounded assume[range]").unwrap();
        assert!(
            grounded_pos > decl_pos,
            "grounded instance must come after the symbols it mentions"
        );
        assert!(!script.goal_quantified);
    }
}
