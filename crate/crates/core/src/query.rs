//! Query terms for distributed query planning.
//!
//! A query is named by its relation set: sorted relation names joined by
//! `+` (`Employees+Project`). A join condition names the attributes the two
//! inputs share, joined by `&`, or `cross` when they share none. Schema,
//! placement, capabilities and selections are read from facts of the
//! problem's initial state:
//!
//! ```text
//! (attribute Employees ssn)  (stored-at Employees HQ-db)
//! (capability HQ-db join)    (selection Employees dept)
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::model::GroundAtom;
use crate::symbol::Symbol;

pub const CROSS: &str = "cross";

/// Relations named by a query term, in term order.
pub fn relations_of(q: &Symbol) -> Vec<Symbol> {
    q.as_str().split('+').map(Symbol::new).collect()
}

/// Canonical term for a relation set.
pub fn query_term<'a>(rels: impl IntoIterator<Item = &'a Symbol>) -> Symbol {
    let set: BTreeSet<&str> = rels.into_iter().map(|r| r.as_str()).collect();
    Symbol::new(&set.into_iter().collect::<Vec<_>>().join("+"))
}

/// Attributes named by a join condition; empty for a cross product.
pub fn join_attributes(jc: &Symbol) -> Vec<Symbol> {
    if jc.as_str() == CROSS {
        Vec::new()
    } else {
        jc.as_str().split('&').map(Symbol::new).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryWorld {
    pub attributes: BTreeMap<Symbol, BTreeSet<Symbol>>,
    pub stored_at: BTreeMap<Symbol, Symbol>,
    pub capabilities: BTreeSet<(Symbol, Symbol)>,
    pub selections: BTreeMap<Symbol, Symbol>,
}

impl QueryWorld {
    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a GroundAtom>) -> Self {
        let mut w = QueryWorld::default();
        for f in facts {
            match (f.predicate.as_str(), f.args.as_slice()) {
                ("attribute", [r, a]) => {
                    w.attributes.entry(r.clone()).or_default().insert(a.clone());
                }
                ("stored-at", [r, s]) => {
                    w.stored_at.insert(r.clone(), s.clone());
                }
                ("capability", [s, c]) => {
                    w.capabilities.insert((s.clone(), c.clone()));
                }
                ("selection", [r, a]) => {
                    w.selections.insert(r.clone(), a.clone());
                }
                _ => {}
            }
        }
        w
    }

    pub fn has_capability(&self, source: &Symbol, capability: &str) -> bool {
        self.capabilities
            .iter()
            .any(|(s, c)| s == source && c.as_str() == capability)
    }

    /// The relation set of a well-formed term: known relations, no
    /// repeats, canonical order.
    pub fn relation_set(&self, q: &Symbol) -> Option<BTreeSet<Symbol>> {
        let rels = relations_of(q);
        let set: BTreeSet<Symbol> = rels.iter().cloned().collect();
        let known = rels.iter().all(|r| self.attributes.contains_key(r));
        (known && set.len() == rels.len() && query_term(&set) == *q).then_some(set)
    }

    fn attrs_of(&self, rels: &BTreeSet<Symbol>) -> BTreeSet<Symbol> {
        rels.iter()
            .filter_map(|r| self.attributes.get(r))
            .flatten()
            .cloned()
            .collect()
    }

    /// The condition for joining two relation sets.
    pub fn join_condition(&self, a: &BTreeSet<Symbol>, b: &BTreeSet<Symbol>) -> Symbol {
        let (xa, xb) = (self.attrs_of(a), self.attrs_of(b));
        let shared: Vec<&str> = xa.intersection(&xb).map(|s| s.as_str()).collect();
        if shared.is_empty() {
            Symbol::new(CROSS)
        } else {
            Symbol::new(&shared.join("&"))
        }
    }

    /// `q` is the join of the disjoint queries `qa` and `qb` under `jc`.
    pub fn is_join_query(&self, q: &Symbol, jc: &Symbol, qa: &Symbol, qb: &Symbol) -> bool {
        let (Some(s), Some(a), Some(b)) = (self.relation_set(q), self.relation_set(qa), self.relation_set(qb)) else {
            return false;
        };
        a.is_disjoint(&b) && a.union(&b).cloned().collect::<BTreeSet<_>>() == s && self.join_condition(&a, &b) == *jc
    }

    /// `source` can answer `q` by itself: it stores every relation, and
    /// evaluates joins when there is more than one.
    pub fn source_accepts(&self, q: &Symbol, source: &Symbol) -> bool {
        let Some(rels) = self.relation_set(q) else {
            return false;
        };
        rels.iter().all(|r| self.stored_at.get(r) == Some(source))
            && (rels.len() == 1 || self.has_capability(source, "join"))
    }

    /// The two ways of re-associating `upper` = join(q1, jc1, a1, b1) over
    /// `lower` = join(q2, jc2, a2, b2), where q2 is a1 or b1. Each result is
    /// `(new upper, new lower)` as `[query, condition, left, right]`.
    pub fn swap_joins(&self, upper: [&Symbol; 4], lower: [&Symbol; 4]) -> Vec<([Symbol; 4], [Symbol; 4])> {
        let [q1, jc1, a1, b1] = upper;
        let [q2, jc2, a2, b2] = lower;
        if !self.is_join_query(q1, jc1, a1, b1) || !self.is_join_query(q2, jc2, a2, b2) {
            return Vec::new();
        }
        let other = if a1 == q2 {
            b1
        } else if b1 == q2 {
            a1
        } else {
            return Vec::new();
        };
        let set = |q: &Symbol| self.relation_set(q).expect("checked by is_join_query");
        let x = set(other);
        let mut out = Vec::new();
        for (keep, rest) in [(a2, b2), (b2, a2)] {
            let inner: BTreeSet<Symbol> = set(keep).union(&x).cloned().collect();
            let inner_q = query_term(&inner);
            let inner_jc = self.join_condition(&set(keep), &x);
            let outer_jc = self.join_condition(&inner, &set(rest));
            out.push((
                [q1.clone(), outer_jc, inner_q.clone(), rest.clone()],
                [inner_q, inner_jc, keep.clone(), other.clone()],
            ));
        }
        out
    }
}
