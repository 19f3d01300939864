//! Source statistics for query cost estimation.
//!
//! ```text
//! (catalog company
//!   (source HQ-db :transfer 1 :capabilities (join))
//!   (source Branch-db :transfer 2)
//!   (relation Employees :at HQ-db :tuples 1000
//!     :attributes ((name 1000) (ssn 1000))))
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::model::GroundAtom;
use crate::sexpr::{keyword_slots, parse_one, ParseError, Pos, Sexp};
use crate::symbol::Symbol;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceInfo {
    /// Cost of shipping one tuple to the mediator.
    pub transfer: BigRational,
    pub capabilities: BTreeSet<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationInfo {
    pub source: Symbol,
    pub tuples: u64,
    /// Distinct-value count per attribute.
    pub distinct: BTreeMap<Symbol, u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog {
    pub name: Symbol,
    pub sources: BTreeMap<Symbol, SourceInfo>,
    pub relations: BTreeMap<Symbol, RelationInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("relation {relation} is placed at unknown source {site}")]
    UnknownSource { relation: String, site: String },
    #[error("relation {relation}: attribute {attribute} has {distinct} distinct values but only {tuples} tuples")]
    TooManyDistinct {
        relation: String,
        attribute: String,
        distinct: u64,
        tuples: u64,
    },
    #[error("relation {0} is defined twice")]
    DuplicateRelation(String),
    #[error("source {0} is defined twice")]
    DuplicateSource(String),
    #[error("relation {0} has no source")]
    Unplaced(String),
}

fn err(pos: Pos, msg: impl Into<String>) -> CatalogError {
    CatalogError::Parse(ParseError::new(pos, msg))
}

fn number(s: &Sexp) -> Result<u64, CatalogError> {
    s.expect_atom("a count")?
        .as_str()
        .parse()
        .map_err(|_| err(s.pos(), format!("expected a nonnegative integer, found `{s}`")))
}

fn rational(s: &Sexp) -> Result<BigRational, CatalogError> {
    let r = s
        .expect_atom("a rate")?
        .as_number()
        .ok_or_else(|| err(s.pos(), format!("expected a number, found `{s}`")))?;
    if *r.numer() < 0 {
        return Err(err(s.pos(), "transfer cost must be nonnegative"));
    }
    Ok(BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
}

fn single<'a>(vals: &[&'a Sexp], key: &str, pos: Pos) -> Result<&'a Sexp, CatalogError> {
    match vals {
        [v] => Ok(v),
        _ => Err(err(pos, format!("{key} takes one value"))),
    }
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let top = parse_one(text)?;
        let items = top.expect_list("a catalog")?;
        if !items.first().is_some_and(|h| h.is_keyword("catalog")) {
            return Err(err(top.pos(), "expected (catalog name ...)"));
        }
        let name = items
            .get(1)
            .ok_or_else(|| err(top.pos(), "catalog needs a name"))?
            .expect_atom("a catalog name")?
            .clone();
        let mut cat = Catalog {
            name,
            ..Catalog::default()
        };
        for entry in &items[2..] {
            let parts = entry.expect_list("a source or relation entry")?;
            let (Some(head), Some(id)) = (parts.first(), parts.get(1)) else {
                return Err(err(entry.pos(), "entries need a kind and a name"));
            };
            let id = id.expect_atom("a name")?.clone();
            let slots = keyword_slots(&parts[2..])?;
            if head.is_keyword("source") {
                let mut info = SourceInfo {
                    transfer: BigRational::from_integer(BigInt::from(1)),
                    capabilities: BTreeSet::new(),
                };
                for (key, vals, pos) in slots {
                    match key.as_str() {
                        ":transfer" => info.transfer = rational(single(&vals, &key, pos)?)?,
                        ":capabilities" => {
                            let v = single(&vals, &key, pos)?;
                            if !v.is_nil() {
                                for c in v.expect_list("a capability list")? {
                                    info.capabilities.insert(Symbol::new(
                                        &c.expect_atom("a capability")?.as_str().to_ascii_lowercase(),
                                    ));
                                }
                            }
                        }
                        other => return Err(err(pos, format!("unknown source slot `{other}`"))),
                    }
                }
                if cat.sources.insert(id.clone(), info).is_some() {
                    return Err(CatalogError::DuplicateSource(id.to_string()));
                }
            } else if head.is_keyword("relation") {
                let mut source = None;
                let mut tuples = 0;
                let mut distinct = BTreeMap::new();
                for (key, vals, pos) in slots {
                    match key.as_str() {
                        ":at" => source = Some(single(&vals, &key, pos)?.expect_atom("a source")?.clone()),
                        ":tuples" => tuples = number(single(&vals, &key, pos)?)?,
                        ":attributes" => {
                            let v = single(&vals, &key, pos)?;
                            if !v.is_nil() {
                                for a in v.expect_list("an attribute list")? {
                                    match a.expect_list("(attribute distinct-count)")? {
                                        [n, d] => {
                                            distinct.insert(n.expect_atom("an attribute")?.clone(), number(d)?);
                                        }
                                        _ => return Err(err(a.pos(), "expected (attribute distinct-count)")),
                                    }
                                }
                            }
                        }
                        other => return Err(err(pos, format!("unknown relation slot `{other}`"))),
                    }
                }
                let source = source.ok_or_else(|| CatalogError::Unplaced(id.to_string()))?;
                let info = RelationInfo {
                    source,
                    tuples,
                    distinct,
                };
                if cat.relations.insert(id.clone(), info).is_some() {
                    return Err(CatalogError::DuplicateRelation(id.to_string()));
                }
            } else {
                return Err(err(head.pos(), format!("unknown catalog entry `{head}`")));
            }
        }
        cat.check()?;
        Ok(cat)
    }

    /// Every relation sits at a known source and no attribute has more
    /// distinct values than its relation has tuples.
    pub fn check(&self) -> Result<(), CatalogError> {
        for (r, info) in &self.relations {
            if !self.sources.contains_key(&info.source) {
                return Err(CatalogError::UnknownSource {
                    relation: r.to_string(),
                    site: info.source.to_string(),
                });
            }
            for (a, &d) in &info.distinct {
                if d > info.tuples {
                    return Err(CatalogError::TooManyDistinct {
                        relation: r.to_string(),
                        attribute: a.to_string(),
                        distinct: d,
                        tuples: info.tuples,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn print(&self) -> String {
        let mut out = format!("(catalog {}\n", self.name);
        for (s, info) in &self.sources {
            let _ = write!(out, "  (source {s} :transfer {}", info.transfer);
            if !info.capabilities.is_empty() {
                let caps: Vec<&str> = info.capabilities.iter().map(|c| c.as_str()).collect();
                let _ = write!(out, " :capabilities ({})", caps.join(" "));
            }
            out.push_str(")\n");
        }
        for (r, info) in &self.relations {
            let attrs: Vec<String> = info.distinct.iter().map(|(a, d)| format!("({a} {d})")).collect();
            let _ = writeln!(
                out,
                "  (relation {r} :at {} :tuples {} :attributes ({}))",
                info.source,
                info.tuples,
                attrs.join(" ")
            );
        }
        out.push_str(")\n");
        out
    }

    /// The catalog as initial-state facts: schema facts read by the query
    /// domain plus `tuples`, `distinct` and `transfer` statistics.
    pub fn to_facts(&self) -> Vec<GroundAtom> {
        let mut out = Vec::new();
        let atom = |p: &str, args: Vec<String>| GroundAtom {
            predicate: Symbol::new(p),
            args: args.iter().map(|a| Symbol::new(a)).collect(),
        };
        for (s, info) in &self.sources {
            out.push(atom("transfer", vec![s.to_string(), info.transfer.to_string()]));
            for c in &info.capabilities {
                out.push(atom("capability", vec![s.to_string(), c.to_string()]));
            }
        }
        for (r, info) in &self.relations {
            out.push(atom("stored-at", vec![r.to_string(), info.source.to_string()]));
            out.push(atom("tuples", vec![r.to_string(), info.tuples.to_string()]));
            for (a, d) in &info.distinct {
                out.push(atom("attribute", vec![r.to_string(), a.to_string()]));
                out.push(atom("distinct", vec![r.to_string(), a.to_string(), d.to_string()]));
            }
        }
        out
    }

    /// Rebuilds a catalog from facts written by [`Catalog::to_facts`].
    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a GroundAtom>) -> Result<Catalog, CatalogError> {
        let mut cat = Catalog {
            name: Symbol::new("facts"),
            ..Catalog::default()
        };
        let mut placed = BTreeMap::new();
        let mut tuples = BTreeMap::new();
        let mut distinct: BTreeMap<Symbol, BTreeMap<Symbol, u64>> = BTreeMap::new();
        let bad = |f: &GroundAtom| err(Pos::default(), format!("malformed statistics fact {f}"));
        let source = |cat: &mut Catalog, s: &Symbol| {
            cat.sources.entry(s.clone()).or_insert_with(|| SourceInfo {
                transfer: BigRational::from_integer(BigInt::from(1)),
                capabilities: BTreeSet::new(),
            });
        };
        for f in facts {
            match (f.predicate.as_str(), f.args.as_slice()) {
                ("transfer", [s, t]) => {
                    let r = t.as_number().ok_or_else(|| bad(f))?;
                    source(&mut cat, s);
                    cat.sources.get_mut(s).unwrap().transfer =
                        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
                }
                ("capability", [s, c]) => {
                    source(&mut cat, s);
                    cat.sources.get_mut(s).unwrap().capabilities.insert(c.clone());
                }
                ("stored-at", [r, s]) => {
                    source(&mut cat, s);
                    placed.insert(r.clone(), s.clone());
                }
                ("tuples", [r, n]) => {
                    tuples.insert(r.clone(), n.as_str().parse::<u64>().map_err(|_| bad(f))?);
                }
                ("distinct", [r, a, n]) => {
                    let n = n.as_str().parse::<u64>().map_err(|_| bad(f))?;
                    distinct.entry(r.clone()).or_default().insert(a.clone(), n);
                }
                _ => {}
            }
        }
        for (r, n) in tuples {
            let source = placed.remove(&r).ok_or_else(|| CatalogError::Unplaced(r.to_string()))?;
            cat.relations.insert(
                r.clone(),
                RelationInfo {
                    source,
                    tuples: n,
                    distinct: distinct.remove(&r).unwrap_or_default(),
                },
            );
        }
        cat.check()?;
        Ok(cat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const COMPANY: &str = "(catalog company
      (source HQ-db :transfer 1 :capabilities (join))
      (source Branch-db :transfer 2)
      (relation Employees :at HQ-db :tuples 1000 :attributes ((name 1000) (ssn 1000) (dept 20)))
      (relation Payroll :at HQ-db :tuples 1000 :attributes ((ssn 1000) (salary 200)))
      (relation Project :at Branch-db :tuples 400 :attributes ((name 300) (proj 40))))";

    #[test]
    fn parse_print_round_trip() {
        let c = Catalog::parse(COMPANY).unwrap();
        assert_eq!(c.relations.len(), 3);
        assert!(c.sources["HQ-db"].capabilities.contains("join"));
        assert_eq!(Catalog::parse(&c.print()).unwrap(), c);
        let mut again = Catalog::from_facts(&c.to_facts()).unwrap();
        again.name = c.name.clone();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_inconsistent_statistics() {
        let bad = "(catalog x (source s) (relation R :at s :tuples 5 :attributes ((a 6))))";
        assert!(matches!(Catalog::parse(bad), Err(CatalogError::TooManyDistinct { .. })));
        let bad = "(catalog x (relation R :at s :tuples 5))";
        assert!(matches!(Catalog::parse(bad), Err(CatalogError::UnknownSource { .. })));
        let bad = "(catalog x (source s) (relation R :tuples 5))";
        assert!(matches!(Catalog::parse(bad), Err(CatalogError::Unplaced(_))));
    }
}
