//! Candidate-model extraction from `get-value` responses.
//!
//! The ground script requests values positionally: free scalars first, then
//! per map root the (index, entry) pairs for every candidate index term and
//! finally the map's sum. The response is parsed positionally against that
//! schedule, and the gap between the reported sum and the named entries is
//! placed as a single residue entry at a fresh address, so the finite map the
//! validator and the interpreter see has exactly the sum the solver reported.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::trace::SsaSort;
use crate::word::Word256;

use super::render::QueryTerm;

/// A validated counterexample assignment: one value per free input of the
/// query, finite map contents (including any residue entry standing in for
/// all unnamed addresses), and the reported map sums, in decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub ints: BTreeMap<String, Word256>,
    pub bools: BTreeMap<String, bool>,
    /// Map root symbol -> (index, value) entries sorted by index.
    pub maps: BTreeMap<String, Vec<(Word256, Word256)>>,
    /// Map root symbol -> the mathematical sum the solver assigned.
    pub sums: BTreeMap<String, String>,
}

impl Model {
    pub fn render_text(&self) -> String {
        let mut lines = Vec::new();
        for (name, v) in &self.ints {
            lines.push(format!("{name} = {v}"));
        }
        for (name, v) in &self.bools {
            lines.push(format!("{name} = {v}"));
        }
        for (name, entries) in &self.maps {
            for (idx, val) in entries {
                lines.push(format!("{name}[{idx}] = {val}"));
            }
        }
        for (name, total) in &self.sums {
            lines.push(format!("sum({name}) = {total}"));
        }
        lines.join("\n")
    }
}

/// One parsed scalar from the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScalarVal {
    Num(BigUint),
    Truth(bool),
}

#[derive(Debug, Clone)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut in_string = false;
    for c in text.chars() {
        if in_string {
            if c == '"' {
                in_string = false;
                cur.push(c);
                tokens.push(std::mem::take(&mut cur));
            } else {
                cur.push(c);
            }
            continue;
        }
        match c {
            '"' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                in_string = true;
                cur.push(c);
            }
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

fn parse_sx(tokens: &[String], pos: &mut usize) -> Result<Sx, String> {
    if *pos >= tokens.len() {
        return Err("unexpected end of solver response".into());
    }
    let tok = &tokens[*pos];
    *pos += 1;
    if tok == "(" {
        let mut items = Vec::new();
        loop {
            if *pos >= tokens.len() {
                return Err("unbalanced parenthesis in solver response".into());
            }
            if tokens[*pos] == ")" {
                *pos += 1;
                return Ok(Sx::List(items));
            }
            items.push(parse_sx(tokens, pos)?);
        }
    } else if tok == ")" {
        Err("stray closing parenthesis in solver response".into())
    } else {
        Ok(Sx::Atom(tok.clone()))
    }
}

fn scalar_of(sx: &Sx) -> Result<ScalarVal, String> {
    match sx {
        Sx::Atom(a) if a == "true" => Ok(ScalarVal::Truth(true)),
        Sx::Atom(a) if a == "false" => Ok(ScalarVal::Truth(false)),
        Sx::Atom(a) => a
            .parse::<BigUint>()
            .map(ScalarVal::Num)
            .map_err(|_| format!("unexpected model atom {a:?}")),
        Sx::List(items) => {
            // `(- n)` — a negative literal; no value in these queries may be
            // negative, so reject it outright.
            if items.len() == 2 {
                if let Sx::Atom(head) = &items[0] {
                    if head == "-" {
                        return Err("solver assigned a negative value".into());
                    }
                }
            }
            Err("unexpected compound model value".into())
        }
    }
}

/// Extract the positional values from everything following the `sat` line.
/// `(error ...)` lists are skipped; anything else at the top level must be a
/// `get-value` response list of `(term value)` pairs.
pub(crate) fn response_values(stdout: &str, expected: usize) -> Result<Vec<ScalarVal>, String> {
    let mut after_verdict = String::new();
    let mut seen_verdict = false;
    for line in stdout.lines() {
        if seen_verdict {
            after_verdict.push_str(line);
            after_verdict.push('\n');
        } else if line.trim() == "sat" {
            seen_verdict = true;
        }
    }
    if !seen_verdict {
        return Err("no sat verdict preceding model values".into());
    }
    let tokens = tokenize(&after_verdict);
    let mut pos = 0;
    let mut values = Vec::new();
    while pos < tokens.len() {
        let sx = parse_sx(&tokens, &mut pos)?;
        let Sx::List(items) = sx else {
            return Err("top-level atom in solver response".into());
        };
        if let Some(Sx::Atom(head)) = items.first() {
            if head == "error" {
                continue;
            }
        }
        for pair in &items {
            let Sx::List(parts) = pair else {
                return Err("malformed value pair in solver response".into());
            };
            let value = parts.last().ok_or("empty value pair in solver response")?;
            values.push(scalar_of(value)?);
        }
    }
    if values.len() != expected {
        return Err(format!(
            "solver returned {} values where {expected} were requested",
            values.len()
        ));
    }
    Ok(values)
}

fn word_of(n: &BigUint, what: &str) -> Result<Word256, String> {
    Word256::parse(&n.to_string()).ok_or_else(|| format!("{what} {n} exceeds the word range"))
}

/// Pair the positional values with the request schedule and build the model.
pub(crate) fn assemble(queried: &[QueryTerm], values: Vec<ScalarVal>) -> Result<Model, String> {
    assert_eq!(queried.len(), values.len());
    let mut ints = BTreeMap::new();
    let mut bools = BTreeMap::new();
    let mut entries: BTreeMap<String, BTreeMap<BigUint, BigUint>> = BTreeMap::new();
    let mut sums: BTreeMap<String, BigUint> = BTreeMap::new();
    let mut pending_index: Option<(String, BigUint)> = None;
    for (term, value) in queried.iter().zip(values) {
        match term {
            QueryTerm::Scalar { name, sort } => match (sort, value) {
                (SsaSort::Int, ScalarVal::Num(n)) => {
                    ints.insert(name.clone(), word_of(&n, name)?);
                }
                (SsaSort::Bool, ScalarVal::Truth(b)) => {
                    bools.insert(name.clone(), b);
                }
                _ => return Err(format!("model value for {name} has the wrong sort")),
            },
            QueryTerm::MapIndex { root } => {
                let ScalarVal::Num(n) = value else {
                    return Err(format!("non-numeric index value for {root}"));
                };
                pending_index = Some((root.clone(), n));
            }
            QueryTerm::MapValue { root } => {
                let ScalarVal::Num(n) = value else {
                    return Err(format!("non-numeric entry value for {root}"));
                };
                let (pending_root, idx) =
                    pending_index.take().ok_or("entry value without a preceding index")?;
                if &pending_root != root {
                    return Err("entry value paired against the wrong map".into());
                }
                let slot = entries.entry(root.clone()).or_default();
                if let Some(prev) = slot.get(&idx) {
                    if *prev != n {
                        return Err(format!(
                            "model assigns two values to {root}[{idx}]: {prev} and {n}"
                        ));
                    }
                } else {
                    slot.insert(idx, n);
                }
            }
            QueryTerm::MapSum { root } => {
                let ScalarVal::Num(n) = value else {
                    return Err(format!("non-numeric sum value for {root}"));
                };
                sums.insert(root.clone(), n);
            }
        }
    }

    let mut maps = BTreeMap::new();
    let mut sum_texts = BTreeMap::new();
    let address_bound = BigUint::from(1u8) << 160;
    for (root, mut map) in entries {
        if let Some(total) = sums.get(&root) {
            let placed: BigUint = map.values().cloned().sum();
            if placed > *total {
                return Err(format!(
                    "named entries of {root} exceed its reported sum ({placed} > {total})"
                ));
            }
            let residue = total - &placed;
            if !residue.is_zero() {
                let word_bound = BigUint::from(1u8) << 256;
                if residue >= word_bound {
                    return Err(format!(
                        "no single entry can hold the residue {residue} of {root}"
                    ));
                }
                let mut fresh = BigUint::zero();
                while map.contains_key(&fresh) {
                    fresh += 1u8;
                }
                if fresh >= address_bound {
                    return Err(format!("no fresh address left for the residue of {root}"));
                }
                map.insert(fresh, residue);
            }
        }
        let mut list = Vec::new();
        for (idx, val) in &map {
            if *idx >= address_bound {
                return Err(format!("map index {idx} of {root} is not an address"));
            }
            list.push((word_of(idx, "map index")?, word_of(val, "map entry")?));
        }
        maps.insert(root, list);
    }
    for (root, total) in sums {
        // A root with a sum but no named entries still needs its residue
        // realized.
        if !maps.contains_key(&root) {
            let mut list = Vec::new();
            if !total.is_zero() {
                let word_bound = BigUint::from(1u8) << 256;
                if total >= word_bound {
                    return Err(format!("no single entry can hold the sum {total} of {root}"));
                }
                list.push((Word256::ZERO, word_of(&total, "map entry")?));
            }
            maps.insert(root.clone(), list);
        }
        sum_texts.insert(root, total.to_string());
    }
    Ok(Model { ints, bools, maps, sums: sum_texts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse_positionally_and_skip_error_noise() {
        let stdout = "sat\n(error \"line 3: ignored\")\n((a 3)\n ((select m 4) 7)\n (b true)\n ((sum m) 10))\n";
        let values = response_values(stdout, 4).unwrap();
        assert_eq!(
            values,
            vec![
                ScalarVal::Num(BigUint::from(3u8)),
                ScalarVal::Num(BigUint::from(7u8)),
                ScalarVal::Truth(true),
                ScalarVal::Num(BigUint::from(10u8)),
            ]
        );
        assert!(response_values("unsat\n", 0).is_err());
        assert!(response_values(stdout, 3).is_err(), "count mismatch must be rejected");
        assert!(
            response_values("sat\n((a (- 5)))\n", 1).is_err(),
            "negative values must be rejected"
        );
    }

    #[test]
    fn residue_lands_on_a_fresh_address() {
        let queried = vec![
            QueryTerm::MapIndex { root: "bal0".into() },
            QueryTerm::MapValue { root: "bal0".into() },
            QueryTerm::MapSum { root: "bal0".into() },
        ];
        let values = vec![
            ScalarVal::Num(BigUint::from(5u8)),
            ScalarVal::Num(BigUint::from(30u8)),
            ScalarVal::Num(BigUint::from(100u8)),
        ];
        let model = assemble(&queried, values).unwrap();
        let entries = &model.maps["bal0"];
        assert_eq!(
            entries,
            &vec![
                (Word256::ZERO, Word256::from_u64(70)),
                (Word256::from_u64(5), Word256::from_u64(30)),
            ]
        );
        assert_eq!(model.sums["bal0"], "100");
    }

    #[test]
    fn conflicting_duplicate_entries_are_rejected() {
        let queried = vec![
            QueryTerm::MapIndex { root: "m".into() },
            QueryTerm::MapValue { root: "m".into() },
            QueryTerm::MapIndex { root: "m".into() },
            QueryTerm::MapValue { root: "m".into() },
        ];
        let values = vec![
            ScalarVal::Num(BigUint::from(1u8)),
            ScalarVal::Num(BigUint::from(2u8)),
            ScalarVal::Num(BigUint::from(1u8)),
            ScalarVal::Num(BigUint::from(3u8)),
        ];
        assert!(assemble(&queried, values).is_err());
    }
}
