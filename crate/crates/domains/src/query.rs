//! Distributed query planning: random parses of a conjunctive query into
//! retrieve and join steps, the interpreted relations the operators and
//! rules consult, and a chain-query generator over a random catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use pbr_core::cost::{Catalog, RelationInfo, SourceInfo};
use pbr_core::model::{GroundAtom, ProblemSpec, StaticRelations};
use pbr_core::query::{query_term, QueryWorld};
use pbr_core::rules::InterpretedPredicate;
use pbr_core::symbol::Symbol;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::{call, check_range, Call, GenParams, PackError};

/// `join-query` and `source-acceptable-query` over the problem's schema.
pub fn statics(problem: &ProblemSpec) -> StaticRelations {
    let world = Arc::new(QueryWorld::from_facts(&problem.init));
    let mut s = StaticRelations::default();
    let w = world.clone();
    s.insert(
        "source-acceptable-query",
        Arc::new(move |a: &[Symbol]| a.len() == 2 && w.source_accepts(&a[0], &a[1])),
    );
    s.insert(
        "join-query",
        Arc::new(move |a: &[Symbol]| a.len() == 4 && world.is_join_query(&a[0], &a[1], &a[2], &a[3])),
    );
    s
}

/// `(capability ?source ?c)`: the plan's initial state lists the capability.
pub fn capability_predicate() -> InterpretedPredicate {
    InterpretedPredicate::test("capability", 2, |plan, a| match (a[0].as_const(), a[1].as_const()) {
        (Some(s), Some(c)) => plan
            .init_state()
            .contains(&GroundAtom::new("capability", &[s.as_str(), c.as_str()])),
        _ => false,
    })
}

/// A join tree over base relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinTree {
    Leaf(Symbol),
    Join(Box<JoinTree>, Box<JoinTree>),
}

impl JoinTree {
    pub fn join(a: JoinTree, b: JoinTree) -> JoinTree {
        JoinTree::Join(Box::new(a), Box::new(b))
    }

    pub fn relations(&self) -> BTreeSet<Symbol> {
        match self {
            JoinTree::Leaf(r) => [r.clone()].into(),
            JoinTree::Join(a, b) => a.relations().union(&b.relations()).cloned().collect(),
        }
    }

    /// A random tree over `rels`: shuffle, then split at a random point,
    /// recursively. Cross products are allowed.
    pub fn random(rels: &[Symbol], rng: &mut dyn RngCore) -> JoinTree {
        let mut order = rels.to_vec();
        order.shuffle(rng);
        fn build(rels: &[Symbol], rng: &mut dyn RngCore) -> JoinTree {
            if rels.len() == 1 {
                return JoinTree::Leaf(rels[0].clone());
            }
            let k = rng.gen_range(1..rels.len());
            let left = build(&rels[..k], rng);
            let right = build(&rels[k..], rng);
            JoinTree::join(left, right)
        }
        build(&order, rng)
    }

    /// Retrieve each base relation at its source, then join bottom up,
    /// left subtree first.
    pub fn calls(&self, world: &QueryWorld) -> Result<Vec<Call>, PackError> {
        fn go(t: &JoinTree, w: &QueryWorld, out: &mut Vec<Call>) -> Result<BTreeSet<Symbol>, PackError> {
            match t {
                JoinTree::Leaf(r) => {
                    let src = w
                        .stored_at
                        .get(r)
                        .ok_or_else(|| PackError::UnknownRelation(r.to_string()))?;
                    out.push(call("retrieve", &[r, src]));
                    Ok([r.clone()].into())
                }
                JoinTree::Join(a, b) => {
                    let ra = go(a, w, out)?;
                    let rb = go(b, w, out)?;
                    let jc = w.join_condition(&ra, &rb);
                    let all: BTreeSet<Symbol> = ra.union(&rb).cloned().collect();
                    out.push(call(
                        "join",
                        &[&query_term(&all), &jc, &query_term(&ra), &query_term(&rb)],
                    ));
                    Ok(all)
                }
            }
        }
        let mut out = Vec::new();
        go(self, world, &mut out)?;
        Ok(out)
    }
}

impl fmt::Display for JoinTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JoinTree::Leaf(r) => write!(f, "{r}"),
            JoinTree::Join(a, b) => write!(f, "({a} {b})"),
        }
    }
}

/// The single `(available sims Q)` goal and the relations it names.
pub fn goal_relations(problem: &ProblemSpec) -> Result<Vec<Symbol>, PackError> {
    let [g] = problem.goal.as_slice() else {
        return Err(PackError::Unsupported("a query problem has exactly one goal".into()));
    };
    match (g.predicate.as_str(), g.args.as_slice()) {
        ("available", [site, q]) if site.as_str() == "sims" => {
            let world = QueryWorld::from_facts(&problem.init);
            let rels = pbr_core::query::relations_of(q);
            if let Some(r) = rels.iter().find(|r| !world.stored_at.contains_key(*r)) {
                return Err(PackError::UnknownRelation(r.to_string()));
            }
            if world.relation_set(q).is_none() {
                return Err(PackError::UnsupportedGoal { goal: g.to_string() });
            }
            Ok(rels)
        }
        _ => Err(PackError::UnsupportedGoal { goal: g.to_string() }),
    }
}

/// A random parse of the goal query.
pub fn initial(problem: &ProblemSpec, rng: &mut dyn RngCore) -> Result<Vec<Call>, PackError> {
    let rels = goal_relations(problem)?;
    let world = QueryWorld::from_facts(&problem.init);
    JoinTree::random(&rels, rng).calls(&world)
}

/// Problem for `query` over `catalog`, with one equality selection per
/// listed relation and every source available.
pub fn problem_for(name: &str, catalog: &Catalog, query: &[&str], selections: &[(&str, &str)]) -> ProblemSpec {
    let mut init: BTreeSet<GroundAtom> = catalog.to_facts().into_iter().collect();
    for s in catalog.sources.keys() {
        init.insert(GroundAtom::new("source-available", &[s.as_str()]));
    }
    for (r, a) in selections {
        init.insert(GroundAtom::new("selection", &[r, a]));
    }
    let rels: Vec<Symbol> = query.iter().map(|r| Symbol::new(r)).collect();
    let q = query_term(&rels);
    ProblemSpec {
        name: Symbol::new(name),
        domain: Symbol::new("query"),
        objects: Vec::new(),
        sorts: BTreeMap::new(),
        init,
        goal: vec![GroundAtom::new("available", &["sims", q.as_str()])],
    }
}

/// A chain query `R1 ⋈ R2 ⋈ ... ⋈ Rn`: `Ri` and `Ri+1` share attribute
/// `ki`, and each `Ri` has a selection on its own attribute `si`.
/// Relations are placed on random sources `S1..Sm`; `S1` evaluates joins,
/// the others do so with probability one half.
pub fn generate(params: &GenParams, rng: &mut dyn RngCore) -> Result<ProblemSpec, PackError> {
    let n = params.size;
    let m = params.sources.unwrap_or(2);
    check_range("relations", n, 1, 30, "1..=30")?;
    check_range("sources", m, 1, 8, "1..=8")?;
    let mut sources = BTreeMap::new();
    for j in 1..=m {
        let mut capabilities = BTreeSet::new();
        if j == 1 || rng.gen_bool(0.5) {
            capabilities.insert(Symbol::new("join"));
        }
        let transfer = BigRational::from_integer(rng.gen_range(1..=3).into());
        sources.insert(Symbol::new(&format!("S{j}")), SourceInfo { transfer, capabilities });
    }
    let mut relations = BTreeMap::new();
    let mut selections = Vec::new();
    for i in 1..=n {
        let r = format!("R{i}");
        let tuples: u64 = rng.gen_range(100..=5000);
        let mut distinct = BTreeMap::new();
        if i > 1 {
            distinct.insert(Symbol::new(&format!("k{}", i - 1)), rng.gen_range(10..=tuples));
        }
        if i < n {
            distinct.insert(Symbol::new(&format!("k{i}")), rng.gen_range(10..=tuples));
        }
        let sel = format!("s{i}");
        distinct.insert(Symbol::new(&sel), rng.gen_range(2..=50));
        let source = Symbol::new(&format!("S{}", rng.gen_range(1..=m)));
        relations.insert(
            Symbol::new(&r),
            RelationInfo {
                source,
                tuples,
                distinct,
            },
        );
        selections.push((r, sel));
    }
    let catalog = Catalog {
        name: Symbol::new(&format!("chain-{n}")),
        sources,
        relations,
    };
    catalog.check()?;
    let names: Vec<String> = (1..=n).map(|i| format!("R{i}")).collect();
    let query: Vec<&str> = names.iter().map(String::as_str).collect();
    let sel: Vec<(&str, &str)> = selections.iter().map(|(r, a)| (r.as_str(), a.as_str())).collect();
    Ok(problem_for(&format!("query-{n}"), &catalog, &query, &sel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn company() -> Catalog {
        Catalog::parse(include_str!("../packs/query/catalog.pbr")).unwrap()
    }

    #[test]
    fn leftmost_company_parse() {
        let p = problem_for("company", &company(), &["Employees", "Payroll", "Project"], &[]);
        let world = QueryWorld::from_facts(&p.init);
        let leaf = |r: &str| JoinTree::Leaf(Symbol::new(r));
        let tree = JoinTree::join(JoinTree::join(leaf("Employees"), leaf("Project")), leaf("Payroll"));
        let calls: Vec<String> = tree
            .calls(&world)
            .unwrap()
            .iter()
            .map(|(n, a)| format!("{n} {}", a.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")))
            .collect();
        assert_eq!(
            calls,
            [
                "retrieve Employees HQ-db",
                "retrieve Project Branch-db",
                "join Employees+Project name Employees Project",
                "retrieve Payroll HQ-db",
                "join Employees+Payroll+Project ssn Employees+Project Payroll",
            ]
        );
    }

    #[test]
    fn random_trees_cover_the_query() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rels: Vec<Symbol> = ["A", "B", "C", "D"].iter().map(|s| Symbol::new(s)).collect();
        for _ in 0..20 {
            let t = JoinTree::random(&rels, &mut rng);
            assert_eq!(t.relations(), rels.iter().cloned().collect());
        }
    }

    #[test]
    fn unknown_relation() {
        let p = problem_for("bad", &company(), &["Employees", "Nope"], &[]);
        assert!(matches!(goal_relations(&p), Err(PackError::UnknownRelation(r)) if r == "Nope"));
    }

    #[test]
    fn generated_chain_is_consistent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let p = generate(&GenParams::new(4), &mut rng).unwrap();
        let cat = Catalog::from_facts(&p.init).unwrap();
        assert_eq!(cat.relations.len(), 4);
        assert_eq!(cat.sources.len(), 2);
        let w = QueryWorld::from_facts(&p.init);
        assert_eq!(w.selections.len(), 4);
        assert_eq!(goal_relations(&p).unwrap().len(), 4);
    }
}
