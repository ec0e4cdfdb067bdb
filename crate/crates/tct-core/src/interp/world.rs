//! World state: contract accounts, slot-level storage, state deltas, and
//! canonical snapshot serialization.
//!
//! Externally-owned senders are plain addresses and never appear in the
//! account map; only deployed contracts do. Map storage keeps finite support
//! with zero entries removed, so two worlds are semantically equal iff their
//! canonical serializations are byte-identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::minisol::{CodeRegistry, ResolvedContract, TypeTag};
use crate::word::{Address, Digest, Word256};

/// One deployed contract account: the code hash of its flattened contract
/// plus storage whose slots exactly match the contract's declarations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub code_hash: Digest,
    /// Scalar slots (uint256 / address / bool), all carried as words.
    pub scalars: BTreeMap<String, Word256>,
    /// Map slots, finite support only: absent entries read as zero and
    /// writing zero removes the entry.
    pub maps: BTreeMap<String, BTreeMap<Address, Word256>>,
}

impl Account {
    /// A fresh account for `contract` with every declared slot present and
    /// zero-initialized (maps start empty).
    pub fn fresh(contract: &ResolvedContract) -> Account {
        let mut scalars = BTreeMap::new();
        let mut maps = BTreeMap::new();
        for decl in &contract.storage {
            match decl.ty {
                TypeTag::Map => {
                    maps.insert(decl.name.clone(), BTreeMap::new());
                }
                _ => {
                    scalars.insert(decl.name.clone(), Word256::ZERO);
                }
            }
        }
        Account { code_hash: contract.code_hash, scalars, maps }
    }

    pub fn scalar(&self, slot: &str) -> Word256 {
        self.scalars.get(slot).copied().unwrap_or(Word256::ZERO)
    }

    pub fn map_entry(&self, slot: &str, index: Address) -> Word256 {
        self.maps
            .get(slot)
            .and_then(|m| m.get(&index))
            .copied()
            .unwrap_or(Word256::ZERO)
    }

    pub fn set_scalar(&mut self, slot: &str, value: Word256) {
        self.scalars.insert(slot.to_string(), value);
    }

    pub fn set_map_entry(&mut self, slot: &str, index: Address, value: Word256) {
        let map = self.maps.entry(slot.to_string()).or_default();
        if value.is_zero() {
            map.remove(&index);
        } else {
            map.insert(index, value);
        }
    }
}

/// The chain state: deployed accounts plus the counter backing fresh-address
/// allocation for deployments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub accounts: BTreeMap<Address, Account>,
    pub next_fresh: u64,
}

impl Default for WorldState {
    fn default() -> Self {
        WorldState::new()
    }
}

impl WorldState {
    pub fn new() -> WorldState {
        WorldState { accounts: BTreeMap::new(), next_fresh: 1 }
    }

    /// Allocate the next fresh address (used for deployments).
    pub fn allocate(&mut self) -> Address {
        let addr = Address::from_counter(self.next_fresh);
        self.next_fresh += 1;
        addr
    }

    pub fn account(&self, addr: &Address) -> Option<&Account> {
        self.accounts.get(addr)
    }

    /// Canonical snapshot: sorted-key pretty JSON with a trailing newline.
    /// Equal worlds produce byte-identical snapshots.
    pub fn canonical_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("world state always serializes");
        text.push('\n');
        text
    }

    /// Apply a committed delta. Created accounts are materialized from the
    /// registry (their storage layout comes from the flattened contract);
    /// writes then land slot by slot.
    pub fn apply(&mut self, delta: &StateDelta, registry: &CodeRegistry) {
        for (addr, code_hash) in &delta.created {
            let contract = registry
                .get(code_hash)
                .expect("delta references a contract missing from the code registry");
            self.accounts.insert(*addr, Account::fresh(contract));
            if let Some(counter) = addr.counter() {
                self.next_fresh = self.next_fresh.max(counter + 1);
            }
        }
        for w in &delta.writes {
            let account = self
                .accounts
                .get_mut(&w.account)
                .expect("delta write targets a missing account");
            match w.index {
                None => account.set_scalar(&w.slot, w.after),
                Some(index) => account.set_map_entry(&w.slot, index, w.after),
            }
        }
    }
}

/// One net slot change: `before` is the value at transaction entry, `after`
/// the value at commit. No-op writes (`before == after`) are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaWrite {
    pub account: Address,
    pub slot: String,
    pub index: Option<Address>,
    pub before: Word256,
    pub after: Word256,
}

/// Net effect of one committed execution: accounts created (deployments)
/// and slot-level before/after pairs, sorted by (account, slot, index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct StateDelta {
    pub created: Vec<(Address, Digest)>,
    pub writes: Vec<DeltaWrite>,
}

impl StateDelta {
    pub fn is_empty(&self) -> bool {
        self.created.is_empty() && self.writes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minisol::{parse_source, resolve};

    fn token_registry() -> (CodeRegistry, ResolvedContract) {
        let source = include_str!("../../../../corpus/contracts/token.msol");
        let program = resolve(&parse_source(source).unwrap()).unwrap();
        let token = program.contract("MultiVulnToken").unwrap().clone();
        let mut registry = CodeRegistry::new();
        registry.insert_program(&program);
        (registry, token)
    }

    #[test]
    fn fresh_account_has_exactly_the_declared_slots() {
        let (_, token) = token_registry();
        let account = Account::fresh(&token);
        assert_eq!(
            account.scalars.keys().collect::<Vec<_>>(),
            vec!["totalSupply"]
        );
        assert_eq!(account.maps.keys().collect::<Vec<_>>(), vec!["balances"]);
        assert_eq!(account.scalar("totalSupply"), Word256::ZERO);
    }

    #[test]
    fn zero_map_writes_remove_entries() {
        let (_, token) = token_registry();
        let mut account = Account::fresh(&token);
        let a = Address::from_counter(7);
        account.set_map_entry("balances", a, Word256::from_u64(5));
        assert_eq!(account.map_entry("balances", a), Word256::from_u64(5));
        account.set_map_entry("balances", a, Word256::ZERO);
        assert!(account.maps["balances"].is_empty());
        assert_eq!(account.map_entry("balances", a), Word256::ZERO);
    }

    #[test]
    fn allocate_advances_and_apply_bumps_the_counter() {
        let (registry, token) = token_registry();
        let mut world = WorldState::new();
        let a1 = world.allocate();
        assert_eq!(a1, Address::from_counter(1));
        assert_eq!(world.next_fresh, 2);

        let delta = StateDelta {
            created: vec![(Address::from_counter(5), token.code_hash)],
            writes: vec![DeltaWrite {
                account: Address::from_counter(5),
                slot: "totalSupply".to_string(),
                index: None,
                before: Word256::ZERO,
                after: Word256::from_u64(9),
            }],
        };
        let mut other = WorldState::new();
        other.apply(&delta, &registry);
        assert_eq!(other.next_fresh, 6);
        assert_eq!(
            other.account(&Address::from_counter(5)).unwrap().scalar("totalSupply"),
            Word256::from_u64(9)
        );
    }

    #[test]
    fn canonical_snapshots_are_stable_and_order_insensitive() {
        let (registry, token) = token_registry();
        let addr = Address::from_counter(1);
        let delta = StateDelta {
            created: vec![(addr, token.code_hash)],
            writes: vec![
                DeltaWrite {
                    account: addr,
                    slot: "balances".to_string(),
                    index: Some(Address::from_counter(9)),
                    before: Word256::ZERO,
                    after: Word256::from_u64(1),
                },
                DeltaWrite {
                    account: addr,
                    slot: "balances".to_string(),
                    index: Some(Address::from_counter(3)),
                    before: Word256::ZERO,
                    after: Word256::from_u64(2),
                },
            ],
        };
        let mut w1 = WorldState::new();
        w1.apply(&delta, &registry);
        // Same writes in reverse order.
        let mut rev = delta.clone();
        rev.writes.reverse();
        let mut w2 = WorldState::new();
        w2.apply(&rev, &registry);
        assert_eq!(w1.canonical_json(), w2.canonical_json());
        // Round-trips through serde.
        let back: WorldState = serde_json::from_str(&w1.canonical_json()).unwrap();
        assert_eq!(back, w1);
    }
}
