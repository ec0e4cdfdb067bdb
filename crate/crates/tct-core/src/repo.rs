// SPDX-License-Identifier: Apache-2.0

//! The theorem repository.
//!
//! A theorem τ = (f, φ, h) certifies one execution path of one function: `f`
//! names the code (by code hash, so identical deployments share theorems) and
//! the entry function, `φ` is the hypothesis under which the path's proof
//! obligations were discharged, and `h` is the hash of that path. The repo
//! stores proven theorems, persists them as canonical JSON, and answers
//! applicability queries: given a transaction and the current world, return
//! the stored theorems whose `f` matches and whose `φ` is concretely true.
//! Path-hash confirmation is *not* part of applicability — it requires
//! executing the transaction, which is the caller's job.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::interp::{Transaction, WorldState};
use crate::minisol::{eval_hypothesis, parse_expression_text, CodeRegistry};
use crate::trace::PathHash;
use crate::word::Digest;

/// On-disk schema version of the repository file.
pub const REPO_SCHEMA_VERSION: u32 = 1;

/// The code-and-function a theorem certifies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FunctionRef {
    pub code_hash: Digest,
    pub function: String,
}

/// One discharged proof obligation: which goal, what the solver said, which
/// solver said it, and when.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    /// Rendered goal origin, e.g. `invariant#0@MultiVulnToken`.
    pub goal: String,
    /// Verdict label; must be `proven` for a storable theorem.
    pub verdict: String,
    /// Solver identity line.
    pub solver: String,
    /// Seconds since the Unix epoch at check time.
    pub checked_at: u64,
}

pub const PROVEN: &str = "proven";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theorem {
    /// Content-derived identity over (f, φ, h).
    pub id: Digest,
    pub f: FunctionRef,
    /// Hypothesis in canonical expression text.
    pub hypothesis: String,
    pub path_hash: PathHash,
    pub evidence: Vec<EvidenceEntry>,
}

impl Theorem {
    pub fn derive_id(f: &FunctionRef, hypothesis: &str, path_hash: &PathHash) -> Digest {
        let preimage = format!(
            "tct-theorem-v{REPO_SCHEMA_VERSION}\n{}\n{}\n{}\n{}\n",
            f.code_hash, f.function, hypothesis, path_hash.0
        );
        Digest::of(preimage.as_bytes())
    }

    pub fn new(
        f: FunctionRef,
        hypothesis: String,
        path_hash: PathHash,
        evidence: Vec<EvidenceEntry>,
    ) -> Theorem {
        let id = Theorem::derive_id(&f, &hypothesis, &path_hash);
        Theorem { id, f, hypothesis, path_hash, evidence }
    }

    /// Byte equality of the recorded path hash against an executed one.
    pub fn confirm(&self, h: &PathHash) -> bool {
        self.path_hash == *h
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("theorem evidence for {goal} is `{verdict}`, not `proven`")]
    IncompleteEvidence { goal: String, verdict: String },
    #[error("failed to persist the theorem repository at {path}: {message}")]
    Persistence { path: PathBuf, message: String },
    #[error("theorem repository at {path} is corrupt: {message}")]
    Corrupt { path: PathBuf, message: String },
}

/// Stored theorems in insertion order, with a function-ref index and an
/// optional persistence file. All mutation goes through [`TheoremRepo::add`],
/// which persists before returning.
#[derive(Debug, Clone)]
pub struct TheoremRepo {
    path: Option<PathBuf>,
    theorems: Vec<Theorem>,
    index: BTreeMap<FunctionRef, Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RepoFile {
    schema: u32,
    theorems: Vec<Theorem>,
}

impl TheoremRepo {
    /// A repo with no persistence file (protocol nodes hold their repos as
    /// deterministic local state derived from the message stream).
    pub fn in_memory() -> TheoremRepo {
        TheoremRepo { path: None, theorems: Vec::new(), index: BTreeMap::new() }
    }

    /// A repo bound to `path`, loading its contents when the file exists.
    pub fn open(path: &Path) -> Result<TheoremRepo, RepoError> {
        let mut repo = TheoremRepo {
            path: Some(path.to_path_buf()),
            theorems: Vec::new(),
            index: BTreeMap::new(),
        };
        if !path.exists() {
            return Ok(repo);
        }
        let corrupt = |message: String| RepoError::Corrupt { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path)
            .map_err(|e| corrupt(format!("unreadable: {e}")))?;
        let file: RepoFile =
            serde_json::from_str(&text).map_err(|e| corrupt(format!("bad JSON: {e}")))?;
        if file.schema != REPO_SCHEMA_VERSION {
            return Err(corrupt(format!(
                "schema {} where {REPO_SCHEMA_VERSION} was expected",
                file.schema
            )));
        }
        for theorem in file.theorems {
            let expected =
                Theorem::derive_id(&theorem.f, &theorem.hypothesis, &theorem.path_hash);
            if theorem.id != expected {
                return Err(corrupt(format!(
                    "theorem id {} does not match its content",
                    theorem.id
                )));
            }
            if let Some(bad) = theorem.evidence.iter().find(|e| e.verdict != PROVEN) {
                return Err(corrupt(format!(
                    "stored theorem {} carries a non-proven goal {}",
                    theorem.id, bad.goal
                )));
            }
            if parse_expression_text(&theorem.hypothesis).is_err() {
                return Err(corrupt(format!(
                    "theorem {} carries an unparseable hypothesis",
                    theorem.id
                )));
            }
            repo.insert(theorem);
        }
        Ok(repo)
    }

    pub fn len(&self) -> usize {
        self.theorems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theorems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Theorem> {
        self.theorems.iter()
    }

    pub fn get(&self, id: &Digest) -> Option<&Theorem> {
        self.theorems.iter().find(|t| t.id == *id)
    }

    /// How many stored theorems share a function reference — the number of
    /// hypotheses one applicability lookup evaluates.
    pub fn keyed_count(&self, f: &FunctionRef) -> usize {
        self.index.get(f).map_or(0, Vec::len)
    }

    fn insert(&mut self, theorem: Theorem) {
        let pos = self.theorems.len();
        self.index.entry(theorem.f.clone()).or_default().push(pos);
        self.theorems.push(theorem);
    }

    /// Idempotent insert of a fully proven theorem; persisted before
    /// returning. The id is content-derived, so a duplicate submission
    /// returns the same id and leaves the repo unchanged.
    pub fn add(&mut self, theorem: Theorem) -> Result<Digest, RepoError> {
        if let Some(bad) = theorem.evidence.iter().find(|e| e.verdict != PROVEN) {
            return Err(RepoError::IncompleteEvidence {
                goal: bad.goal.clone(),
                verdict: bad.verdict.clone(),
            });
        }
        let id = Theorem::derive_id(&theorem.f, &theorem.hypothesis, &theorem.path_hash);
        if self.theorems.iter().any(|t| t.id == id) {
            return Ok(id);
        }
        let theorem = Theorem { id, ..theorem };
        self.insert(theorem);
        self.persist()?;
        Ok(id)
    }

    /// All stored theorems matching the transaction's code and function whose
    /// hypothesis evaluates concretely true over (args, sender, entry-account
    /// scalars), in insertion order. A hypothesis that fails to evaluate
    /// (division by zero) skips that theorem. No path-hash check happens
    /// here: hashes come from execution.
    pub fn find_applicable(
        &self,
        tx: &Transaction,
        world: &WorldState,
        registry: &CodeRegistry,
    ) -> Vec<&Theorem> {
        let Some(account) = world.account(&tx.target) else {
            return Vec::new();
        };
        let Some(contract) = registry.get(&account.code_hash) else {
            return Vec::new();
        };
        let Some(function) = contract.function(&tx.function) else {
            return Vec::new();
        };
        let fref =
            FunctionRef { code_hash: account.code_hash, function: tx.function.clone() };
        let Some(positions) = self.index.get(&fref) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for &pos in positions {
            let theorem = &self.theorems[pos];
            let Ok(phi) = parse_expression_text(&theorem.hypothesis) else {
                continue;
            };
            match eval_hypothesis(
                function,
                &phi,
                tx.origin.to_word(),
                &tx.args,
                &account.scalars,
            ) {
                Ok(true) => out.push(theorem),
                Ok(false) | Err(_) => {}
            }
        }
        out
    }

    /// The canonical serialization: sorted keys, stable field set, schema
    /// version first-class. Two repos with the same theorems in the same
    /// order serialize byte-identically.
    pub fn canonical_json(&self) -> String {
        let file =
            RepoFile { schema: REPO_SCHEMA_VERSION, theorems: self.theorems.clone() };
        let value = serde_json::to_value(&file).expect("repository always serializes");
        let mut text =
            serde_json::to_string_pretty(&value).expect("json value always prints");
        text.push('\n');
        text
    }

    fn persist(&self) -> Result<(), RepoError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let fail = |message: String| RepoError::Persistence { path: path.clone(), message };
        let parent = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent).map_err(|e| fail(e.to_string()))?;
        let mut tmp =
            tempfile::NamedTempFile::new_in(&parent).map_err(|e| fail(e.to_string()))?;
        tmp.write_all(self.canonical_json().as_bytes())
            .map_err(|e| fail(e.to_string()))?;
        tmp.persist(path).map_err(|e| fail(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{ExecStatus, Interpreter};
    use crate::minisol::{parse_source, resolve};
    use crate::trace::path_hash;
    use crate::word::{Address, Word256};

    const TOKEN: &str = include_str!("../../../corpus/contracts/token.msol");

    fn eoa(k: u64) -> Address {
        Address::from_counter(0x1_0000_0000 + k)
    }

    fn registry() -> CodeRegistry {
        let program = resolve(&parse_source(TOKEN).unwrap()).unwrap();
        let mut registry = CodeRegistry::new();
        registry.insert_program(&program);
        registry
    }

    /// A deployed token world plus the benign transferProxy hash.
    fn token_world(registry: &CodeRegistry) -> (WorldState, Address, PathHash) {
        let contract = registry.by_name("MultiVulnToken").unwrap().clone();
        let mut world = WorldState::new();
        let interp = Interpreter::new(registry);
        let (addr, r) =
            interp.deploy(&world, &contract, &[Word256::from_u64(1000)], eoa(0)).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        world.apply(&r.delta, registry);
        let tx = benign_tx(addr);
        let r = interp.execute(&world, &tx).unwrap();
        assert_eq!(r.status, ExecStatus::Committed);
        let h = path_hash(&r.trace).unwrap();
        (world, addr, h)
    }

    fn benign_tx(target: Address) -> Transaction {
        Transaction {
            id: 1,
            origin: eoa(0),
            target,
            function: "transferProxy".into(),
            args: vec![
                eoa(0).to_word(),
                eoa(1).to_word(),
                Word256::from_u64(10),
                Word256::ONE,
            ],
        }
    }

    fn theorem_one(registry: &CodeRegistry, h: PathHash) -> Theorem {
        let code_hash = registry.by_name("MultiVulnToken").unwrap().code_hash;
        Theorem::new(
            FunctionRef { code_hash, function: "transferProxy".into() },
            "0 <= totalSupply && totalSupply < 2 ** 255 && 0 <= _value && _value < 2 ** 255 && 0 <= _fee && _fee < 2 ** 255"
                .into(),
            h,
            vec![
                EvidenceEntry {
                    goal: "invariant#0@MultiVulnToken".into(),
                    verdict: PROVEN.into(),
                    solver: "test-solver".into(),
                    checked_at: 1,
                },
                EvidenceEntry {
                    goal: "invariant#1@MultiVulnToken".into(),
                    verdict: PROVEN.into(),
                    solver: "test-solver".into(),
                    checked_at: 1,
                },
            ],
        )
    }

    #[test]
    fn insertion_is_idempotent_by_content() {
        let registry = registry();
        let (_, _, h) = token_world(&registry);
        let mut repo = TheoremRepo::in_memory();
        let first = repo.add(theorem_one(&registry, h)).unwrap();
        let second = repo.add(theorem_one(&registry, h)).unwrap();
        assert_eq!(first, second);
        assert_eq!(repo.len(), 1);
        assert!(repo.get(&first).is_some());
    }

    #[test]
    fn unproven_evidence_is_rejected() {
        let registry = registry();
        let (_, _, h) = token_world(&registry);
        let mut theorem = theorem_one(&registry, h);
        theorem.evidence[1].verdict = "unknown".into();
        let err = TheoremRepo::in_memory().add(theorem).unwrap_err();
        assert!(matches!(err, RepoError::IncompleteEvidence { .. }));
    }

    #[test]
    fn applicability_follows_the_hypothesis_concretely() {
        let registry = registry();
        let (world, addr, h) = token_world(&registry);
        let mut repo = TheoremRepo::in_memory();
        repo.add(theorem_one(&registry, h)).unwrap();

        let benign = benign_tx(addr);
        let found = repo.find_applicable(&benign, &world, &registry);
        assert_eq!(found.len(), 1);
        assert!(found[0].confirm(&h));

        // The wraparound attack violates φ: _value = 2^255 + 1, _fee = 2^255.
        let mut hostile = benign.clone();
        hostile.args[2] = Word256::pow2(255).wrapping_add(Word256::ONE);
        hostile.args[3] = Word256::pow2(255);
        assert!(repo.find_applicable(&hostile, &world, &registry).is_empty());

        // A different function of the same contract matches nothing.
        let mut other = benign.clone();
        other.function = "clear".into();
        other.args = vec![eoa(1).to_word()];
        assert!(repo.find_applicable(&other, &world, &registry).is_empty());

        // An unknown target matches nothing.
        let mut lost = benign;
        lost.target = eoa(9);
        assert!(repo.find_applicable(&lost, &world, &registry).is_empty());
    }

    #[test]
    fn eval_errors_skip_the_theorem_rather_than_failing() {
        let registry = registry();
        let (world, addr, h) = token_world(&registry);
        let code_hash = registry.by_name("MultiVulnToken").unwrap().code_hash;
        let divides = Theorem::new(
            FunctionRef { code_hash, function: "transferProxy".into() },
            "_value / _fee == 10".into(),
            h,
            vec![],
        );
        let always = Theorem::new(
            FunctionRef { code_hash, function: "transferProxy".into() },
            "true".into(),
            h,
            vec![],
        );
        let mut repo = TheoremRepo::in_memory();
        repo.add(divides).unwrap();
        repo.add(always.clone()).unwrap();
        let mut zero_fee = benign_tx(addr);
        zero_fee.args[3] = Word256::ZERO;
        let found = repo.find_applicable(&zero_fee, &world, &registry);
        assert_eq!(found.len(), 1, "the dividing theorem is skipped, not fatal");
        assert_eq!(found[0].id, always.id);
    }

    #[test]
    fn candidates_arrive_in_insertion_order() {
        let registry = registry();
        let (world, addr, h) = token_world(&registry);
        let code_hash = registry.by_name("MultiVulnToken").unwrap().code_hash;
        let make = |phi: &str| {
            Theorem::new(
                FunctionRef { code_hash, function: "transferProxy".into() },
                phi.into(),
                h,
                vec![],
            )
        };
        let mut repo = TheoremRepo::in_memory();
        let later = repo.add(make("_value < 100")).unwrap();
        let earlier = repo.add(make("_value < 1000")).unwrap();
        let found = repo.find_applicable(&benign_tx(addr), &world, &registry);
        assert_eq!(
            found.iter().map(|t| t.id).collect::<Vec<_>>(),
            vec![later, earlier],
            "insertion order, not lexical order"
        );
    }

    #[test]
    fn persistence_round_trips_byte_identically() {
        let registry = registry();
        let (_, _, h) = token_world(&registry);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.json");
        let mut repo = TheoremRepo::open(&path).unwrap();
        assert!(repo.is_empty());
        repo.add(theorem_one(&registry, h)).unwrap();
        let reloaded = TheoremRepo::open(&path).unwrap();
        assert_eq!(repo.len(), reloaded.len());
        assert_eq!(repo.canonical_json(), reloaded.canonical_json());
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            repo.canonical_json(),
            "the file holds exactly the canonical serialization"
        );
        let ids: Vec<_> = repo.iter().map(|t| t.id).collect();
        let reloaded_ids: Vec<_> = reloaded.iter().map(|t| t.id).collect();
        assert_eq!(ids, reloaded_ids);
    }

    #[test]
    fn tampered_files_are_reported_corrupt() {
        let registry = registry();
        let (_, _, h) = token_world(&registry);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.json");
        let mut repo = TheoremRepo::open(&path).unwrap();
        repo.add(theorem_one(&registry, h)).unwrap();
        let tampered = std::fs::read_to_string(&path)
            .unwrap()
            .replace("2 ** 255", "2 ** 254");
        std::fs::write(&path, tampered).unwrap();
        let err = TheoremRepo::open(&path).unwrap_err();
        assert!(matches!(err, RepoError::Corrupt { .. }), "{err}");
    }
}
