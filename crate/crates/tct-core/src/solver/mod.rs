//! Two-phase SMT checking of proof queries, with validated counterexamples.
//!
//! Phase one renders the query with wrapping arithmetic and map sums as
//! axiomatized uninterpreted functions and asks the solver to refute the
//! negated goal; `unsat` proves the goal outright. When that is inconclusive,
//! phase two re-renders the query in a ground form — wrapping operators
//! defined arithmetically, positive quantifiers instantiated at the address
//! terms the path names — and asks for a model. A `sat` answer is treated as
//! a *candidate* counterexample only: it must evaluate the whole query
//! concretely (assumptions true, goal false) and replay through the real
//! interpreter to the same path hash before it is reported. Ground `unsat`
//! still proves quantifier-free goals, because every ground addition is true
//! of real executions; for quantified goals it proves only the instances and
//! is reported as unknown.

mod model;
mod process;
mod render;
mod validate;

use std::path::{Path, PathBuf};

pub use model::Model;
pub use render::{ground_script, quantified_script, Phase1Script, Phase2Script, QueryTerm};
pub use validate::ReplayContext;

use crate::vcgen::VCQuery;

/// Per-query time budget, before the nonlinear extension.
pub const DEFAULT_LINEAR_TIMEOUT_MS: u64 = 5_000;
/// Budget for queries flagged as nonlinear (multiplication or division of
/// symbolic operands).
pub const DEFAULT_NONLINEAR_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("no usable solver; tried: {0}")]
    NotFound(String),
    #[error("failed to launch solver {program}: {source}")]
    Launch {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver produced no verdict; stderr: {stderr:?}")]
    NoVerdict { stderr: String },
}

/// An external SMT solver plus its per-query time budgets. The solver must
/// speak SMT-LIB 2 on stdin (`-in`) and honor `-t:<ms>` soft timeouts.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub command: PathBuf,
    /// First line of `--version`, recorded into theorem evidence.
    pub identity: String,
    pub timeout_linear_ms: u64,
    pub timeout_nonlinear_ms: u64,
}

impl SolverConfig {
    /// Find a solver: an explicit path if given, else `$TCT_SOLVER`, else an
    /// `smtshim` next to (or one directory above) the running executable,
    /// else `z3` on the PATH. Each candidate must answer `--version` to be
    /// accepted; when an explicit path is given, nothing else is tried.
    pub fn locate(explicit: Option<&Path>) -> Result<SolverConfig, SolverError> {
        let mut candidates: Vec<PathBuf> = Vec::new();
        if let Some(p) = explicit {
            candidates.push(p.to_path_buf());
        } else {
            if let Ok(from_env) = std::env::var("TCT_SOLVER") {
                if !from_env.is_empty() {
                    candidates.push(PathBuf::from(from_env));
                }
            }
            if let Ok(exe) = std::env::current_exe() {
                if let Some(dir) = exe.parent() {
                    candidates.push(dir.join("smtshim"));
                    if let Some(up) = dir.parent() {
                        candidates.push(up.join("smtshim"));
                    }
                }
            }
            candidates.push(PathBuf::from("z3"));
        }
        let mut tried = Vec::new();
        for candidate in candidates {
            if let Some(identity) = process::probe_version(&candidate) {
                return Ok(SolverConfig {
                    command: candidate,
                    identity,
                    timeout_linear_ms: DEFAULT_LINEAR_TIMEOUT_MS,
                    timeout_nonlinear_ms: DEFAULT_NONLINEAR_TIMEOUT_MS,
                });
            }
            tried.push(candidate.display().to_string());
        }
        Err(SolverError::NotFound(tried.join(", ")))
    }
}

/// The outcome of checking one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// The goal holds on every state and input the assumptions admit.
    Proven,
    /// A concrete assignment that satisfies every assumption, falsifies the
    /// goal, and replays through the interpreter on the same path.
    Counterexample(Box<Model>),
    /// Nothing was established either way.
    Unknown { reason: String },
}

impl Verdict {
    pub fn describe(&self) -> &'static str {
        match self {
            Verdict::Proven => "proven",
            Verdict::Counterexample(_) => "counterexample",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub verdict: Verdict,
    /// External solver invocations consumed by this query (0, 1, or 2).
    pub solver_calls: u32,
    pub detail: String,
}

fn unknown(solver_calls: u32, reason: &str) -> QueryOutcome {
    QueryOutcome {
        verdict: Verdict::Unknown { reason: reason.to_string() },
        solver_calls,
        detail: reason.to_string(),
    }
}

/// First verdict token of a run. A killed run counts as `unknown`; a run
/// that completed without any verdict token is a solver defect.
fn read_verdict(run: &process::SolverRun) -> Result<&'static str, SolverError> {
    if run.killed {
        return Ok("unknown");
    }
    for line in run.stdout.lines() {
        match line.trim() {
            "sat" => return Ok("sat"),
            "unsat" => return Ok("unsat"),
            "unknown" => return Ok("unknown"),
            _ => continue,
        }
    }
    Err(SolverError::NoVerdict { stderr: run.stderr.clone() })
}

/// Check one query end to end. Solver launch failures are hard errors;
/// everything else degrades to an honest verdict.
pub fn check_query(
    config: &SolverConfig,
    query: &VCQuery,
    ctx: &ReplayContext<'_>,
) -> Result<QueryOutcome, SolverError> {
    let timeout =
        if query.nonlinear { config.timeout_nonlinear_ms } else { config.timeout_linear_ms };
    if timeout == 0 {
        return Ok(unknown(0, "no time budget for solving"));
    }

    let phase1 = render::quantified_script(query);
    let run1 = process::run(&config.command, &phase1.text, timeout)?;
    if read_verdict(&run1)? == "unsat" {
        return Ok(QueryOutcome {
            verdict: Verdict::Proven,
            solver_calls: 1,
            detail: "proved on the quantified form".into(),
        });
    }

    let phase2 = render::ground_script(query);
    let run2 = process::run(&config.command, &phase2.text, timeout)?;
    match read_verdict(&run2)? {
        "unsat" => {
            if phase2.goal_quantified {
                Ok(unknown(
                    2,
                    "ground form closed, but its instances do not cover the quantified goal",
                ))
            } else {
                Ok(QueryOutcome {
                    verdict: Verdict::Proven,
                    solver_calls: 2,
                    detail: "proved on the ground form".into(),
                })
            }
        }
        "sat" => {
            let assembled = model::response_values(&run2.stdout, phase2.queried.len())
                .and_then(|values| model::assemble(&phase2.queried, values));
            match assembled {
                Err(why) => Ok(unknown(2, &format!("candidate model unreadable: {why}"))),
                Ok(candidate) => match validate::confirm(query, ctx, &candidate) {
                    Ok(()) => Ok(QueryOutcome {
                        verdict: Verdict::Counterexample(Box::new(candidate)),
                        solver_calls: 2,
                        detail: "counterexample validated concretely and replayed".into(),
                    }),
                    Err(why) => Ok(unknown(2, &format!("candidate model rejected: {why}"))),
                },
            }
        }
        _ => Ok(unknown(2, "solver answered unknown on both forms")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{ExecStatus, Interpreter, Transaction, WorldState};
    use crate::minisol::{parse_hypothesis, parse_source, resolve, CodeRegistry, Expr};
    use crate::trace::{extract_straightline, path_hash, PathHash, SSAProgram};
    use crate::vcgen::build_vc;
    use crate::word::{Address, Word256};
    use num_bigint::BigUint;

    const TOKEN: &str = include_str!("../../../../corpus/contracts/token.msol");
    const AMM: &str = include_str!("../../../../corpus/contracts/amm.msol");

    const TWO_E_255: &str =
        "57896044618658097711785492504343953926634992332820282019728792003956564819968";

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

    /// Deploy, run the setup calls, then run the final call and return its
    /// SSA and path hash.
    fn prepare(
        registry: &CodeRegistry,
        contract_name: &str,
        deploy_args: &[Word256],
        setup: &[(&str, Vec<Word256>, Address)],
        function: &str,
        args: Vec<Word256>,
        sender: Address,
    ) -> (SSAProgram, PathHash) {
        let contract = registry.by_name(contract_name).unwrap().clone();
        let mut world = WorldState::new();
        let interp = Interpreter::new(registry);
        let (addr, r) = interp.deploy(&world, &contract, deploy_args, eoa(0)).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        world.apply(&r.delta, registry);
        for (f, a, s) in setup {
            let tx = Transaction {
                id: 0,
                origin: *s,
                target: addr,
                function: f.to_string(),
                args: a.clone(),
            };
            let r = interp.execute(&world, &tx).unwrap();
            assert_eq!(r.status, ExecStatus::Committed, "setup call {f} must commit");
            world.apply(&r.delta, registry);
        }
        let tx = Transaction { id: 0, origin: sender, target: addr, function: function.into(), args };
        let r = interp.execute(&world, &tx).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        let hash = path_hash(&r.trace).unwrap();
        (extract_straightline(&r.trace, registry).unwrap(), hash)
    }

    fn live_config() -> SolverConfig {
        SolverConfig::locate(None).expect("a solver binary must be discoverable for these tests")
    }

    fn theorem_one_hypothesis(registry: &CodeRegistry) -> Expr {
        let token = registry.by_name("MultiVulnToken").unwrap();
        let f = token.function("transferProxy").unwrap();
        parse_hypothesis(
            token,
            f,
            &format!(
                "0 <= totalSupply && totalSupply < {TWO_E_255} && \
                 0 <= _value && _value < {TWO_E_255} && \
                 0 <= _fee && _fee < {TWO_E_255}"
            ),
        )
        .unwrap()
    }

    fn biguint(w: Word256) -> BigUint {
        BigUint::parse_bytes(w.to_string().as_bytes(), 10).unwrap()
    }

    #[test]
    fn transfer_proxy_invariants_prove_on_the_quantified_form() {
        let registry = compile(&[TOKEN]);
        let (alice, bob) = (eoa(0), eoa(1));
        let (ssa, hash) = prepare(
            &registry,
            "MultiVulnToken",
            &[Word256::from_u64(1000)],
            &[],
            "transferProxy",
            vec![alice.to_word(), bob.to_word(), Word256::from_u64(10), Word256::ONE],
            alice,
        );
        let hypothesis = theorem_one_hypothesis(&registry);
        let queries = build_vc(&ssa, &hypothesis, &registry).unwrap();
        assert_eq!(queries.len(), 2);
        let config = live_config();
        let ctx = ReplayContext { registry: &registry, ssa: &ssa, path_hash: hash };
        for q in &queries {
            let outcome = check_query(&config, q, &ctx).unwrap();
            assert_eq!(
                outcome.verdict,
                Verdict::Proven,
                "query {:?} should prove; got {}",
                q.origin,
                outcome.detail
            );
            assert_eq!(outcome.solver_calls, 1, "expected a phase-1 proof");
        }
    }

    #[test]
    fn forced_true_hypothesis_yields_a_validated_wraparound_model() {
        let registry = compile(&[TOKEN]);
        let (alice, bob) = (eoa(0), eoa(1));
        // The wrap is only reachable when _fee + _value exceeds the word
        // range; a benign concrete run still fixes the same path.
        let (ssa, hash) = prepare(
            &registry,
            "MultiVulnToken",
            &[Word256::from_u64(1000)],
            &[],
            "transferProxy",
            vec![alice.to_word(), bob.to_word(), Word256::from_u64(10), Word256::ONE],
            alice,
        );
        let queries = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        let sum_query = &queries[0];
        let mut config = live_config();
        // The quantified form cannot prove a refutable goal; shrink its
        // budget so the test spends its time in the ground phase.
        config.timeout_linear_ms = 1_500;
        let ctx = ReplayContext { registry: &registry, ssa: &ssa, path_hash: hash };
        let outcome = check_query(&config, sum_query, &ctx).unwrap();
        assert_eq!(outcome.solver_calls, 2);
        let Verdict::Counterexample(model) = outcome.verdict else {
            panic!("expected a counterexample, got {}: {}", outcome.verdict.describe(), outcome.detail);
        };
        let value = biguint(model.ints["_value"]);
        let fee = biguint(model.ints["_fee"]);
        let wrapped = (&value + &fee) % (BigUint::from(1u8) << 256);
        assert!(
            value.clone() + fee.clone() >= (BigUint::from(1u8) << 256),
            "the model must wrap the fee+value sum; got _value={value}, _fee={fee}"
        );
        assert!(wrapped < value, "add(_fee, _value) < _value must hold in the model");
    }

    #[test]
    fn pinned_amm_product_assertion_is_not_refuted() {
        let registry = compile(&[AMM]);
        let lp = eoa(3);
        let (ssa, hash) = prepare(
            &registry,
            "ConstantProductPair",
            &[],
            &[(
                "addLiquidity",
                vec![Word256::from_u64(1000), Word256::from_u64(1000), Word256::from_u64(1000)],
                lp,
            )],
            "swap",
            vec![Word256::from_u64(250), Word256::ZERO, Word256::ONE],
            lp,
        );
        let pair = registry.by_name("ConstantProductPair").unwrap();
        let swap = pair.function("swap").unwrap();
        let hypothesis = parse_hypothesis(
            pair,
            swap,
            "reserveA == 1000 && reserveB == 1000 && dxIn == 250 && feeNum == 0",
        )
        .unwrap();
        let queries = build_vc(&ssa, &hypothesis, &registry).unwrap();
        let product = queries
            .iter()
            .find(|q| matches!(q.origin, crate::trace::GoalOrigin::InlineAssert { .. }))
            .expect("the zero-fee branch carries the product assertion");
        assert!(product.nonlinear);
        let mut config = live_config();
        config.timeout_nonlinear_ms = 10_000;
        let ctx = ReplayContext { registry: &registry, ssa: &ssa, path_hash: hash };
        let outcome = check_query(&config, product, &ctx).unwrap();
        assert!(
            !matches!(outcome.verdict, Verdict::Counterexample(_)),
            "a pinned exact swap preserves the product; got {}",
            outcome.detail
        );
    }

    #[test]
    fn zero_timeout_reports_unknown_without_spawning() {
        let registry = compile(&[TOKEN]);
        let (alice, bob) = (eoa(0), eoa(1));
        let (ssa, hash) = prepare(
            &registry,
            "MultiVulnToken",
            &[Word256::from_u64(1000)],
            &[],
            "transferProxy",
            vec![alice.to_word(), bob.to_word(), Word256::from_u64(10), Word256::ONE],
            alice,
        );
        let queries = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        let config = SolverConfig {
            command: PathBuf::from("/nonexistent/never-a-solver"),
            identity: "none".into(),
            timeout_linear_ms: 0,
            timeout_nonlinear_ms: 0,
        };
        let ctx = ReplayContext { registry: &registry, ssa: &ssa, path_hash: hash };
        let outcome = check_query(&config, &queries[0], &ctx).unwrap();
        assert!(matches!(outcome.verdict, Verdict::Unknown { .. }));
        assert_eq!(outcome.solver_calls, 0);
    }

    #[test]
    fn an_unusable_solver_path_is_rejected_without_fallback() {
        let err = SolverConfig::locate(Some(Path::new("/nonexistent/never-a-solver")))
            .expect_err("an explicit bad path must not fall back");
        assert!(matches!(err, SolverError::NotFound(_)));
    }

    #[test]
    fn discovery_finds_a_live_solver_with_an_identity() {
        let config = live_config();
        assert!(!config.identity.is_empty());
        assert_eq!(config.timeout_linear_ms, DEFAULT_LINEAR_TIMEOUT_MS);
        assert_eq!(config.timeout_nonlinear_ms, DEFAULT_NONLINEAR_TIMEOUT_MS);
    }

    #[test]
    fn rendered_scripts_are_deterministic() {
        let registry = compile(&[TOKEN]);
        let (alice, bob) = (eoa(0), eoa(1));
        let (ssa, _) = prepare(
            &registry,
            "MultiVulnToken",
            &[Word256::from_u64(1000)],
            &[],
            "transferProxy",
            vec![alice.to_word(), bob.to_word(), Word256::from_u64(10), Word256::ONE],
            alice,
        );
        let queries = build_vc(&ssa, &Expr::BoolLit(true), &registry).unwrap();
        let a = quantified_script(&queries[0]).text;
        let b = quantified_script(&queries[0]).text;
        assert_eq!(a, b);
        assert!(a.starts_with("(set-logic ALL)\n"));
        assert!(a.trim_end().ends_with("(check-sat)"));
        assert!(a.contains("(assert (not "));
        assert!(a.contains("(sum (store m a v))"), "sum-update axiom must be present");
        let g1 = ground_script(&queries[0]).text;
        let g2 = ground_script(&queries[0]).text;
        assert_eq!(g1, g2);
        assert!(g1.contains("(define-fun add ((a Int) (b Int)) Int (mod (+ a b) TwoE256))"));
        assert!(g1.contains("(get-value ("));
    }
}
