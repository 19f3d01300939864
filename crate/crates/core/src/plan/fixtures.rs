//! Small plans shared by unit tests.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{CausalLink, OrderingOrigin, PartialPlan, StepId};
use crate::model::{
    instantiate_by_name, parse_domain, DomainSpec, GroundAction, GroundAtom, StaticRelations, Universes,
};
use crate::symbol::Symbol;

pub const BLOCKS_DOMAIN: &str = r#"
(domain blocks)
(define (operator STACK)
  :parameters (?X ?Y ?Z)
  :precondition
    (:and (on ?X ?Z) (clear ?X) (clear ?Y)
          (:neq ?Y ?Z) (:neq ?X ?Z) (:neq ?X ?Y)
          (:neq ?X Table) (:neq ?Y Table))
  :effect (:and (on ?X ?Y) (:not (on ?X ?Z))
            (clear ?Z) (:not (clear ?Y))))
(define (operator UNSTACK)
  :parameters (?X ?Y)
  :precondition
    (:and (on ?X ?Y) (clear ?X) (:neq ?X ?Y)
          (:neq ?X Table) (:neq ?Y Table))
  :effect (:and (on ?X Table) (clear ?Y)
            (:not (on ?X ?Y))))
"#;

pub fn blocks_domain() -> DomainSpec {
    parse_domain(BLOCKS_DOMAIN).unwrap()
}

pub fn blocks(name: &str, args: &[&str]) -> Arc<GroundAction> {
    let d = blocks_domain();
    let args: Vec<Symbol> = args.iter().map(|a| Symbol::new(a)).collect();
    Arc::new(instantiate_by_name(&d, name, &args, &Universes::default(), &StaticRelations::default()).unwrap())
}

fn atom(s: &str) -> GroundAtom {
    let mut parts = s.split_whitespace();
    let p = parts.next().unwrap();
    let args: Vec<&str> = parts.collect();
    GroundAtom::new(p, &args)
}

/// An action built from space-separated atom strings.
pub fn action(name: &str, args: &[&str], pre: &[&str], add: &[&str], del: &[&str]) -> GroundAction {
    GroundAction {
        name: Symbol::new(name),
        args: args.iter().map(|a| Symbol::new(a)).collect(),
        preconditions: pre.iter().map(|s| atom(s)).collect(),
        adds: add.iter().map(|s| atom(s)).collect(),
        deletes: del.iter().map(|s| atom(s)).collect(),
        resources: BTreeSet::new(),
    }
}

pub fn sample_init() -> BTreeSet<GroundAtom> {
    ["on C A", "on A Table", "on B D", "on D Table", "clear C", "clear B"]
        .iter()
        .map(|s| atom(s))
        .collect()
}

pub fn sample_goal() -> Vec<GroundAtom> {
    ["on A B", "on B C", "on C D"].iter().map(|s| atom(s)).collect()
}

pub fn link(p: u32, cond: &str, c: u32) -> CausalLink {
    let id = |n: u32| if n == u32::MAX { StepId::GOAL } else { StepId(n) };
    CausalLink {
        producer: id(p),
        condition: atom(cond),
        consumer: id(c),
    }
}

pub const G: u32 = u32::MAX;

/// The five-step Blocks World plan: two unstacks, three stacks.
pub fn sample_plan() -> PartialPlan {
    let mut p = PartialPlan::new(&sample_init(), &sample_goal());
    p.insert_step(StepId(1), blocks("stack", &["C", "D", "Table"]));
    p.insert_step(StepId(2), blocks("stack", &["B", "C", "Table"]));
    p.insert_step(StepId(3), blocks("stack", &["A", "B", "Table"]));
    p.insert_step(StepId(4), blocks("unstack", &["C", "A"]));
    p.insert_step(StepId(5), blocks("unstack", &["B", "D"]));
    for l in [
        link(0, "clear C", 1),
        link(0, "clear B", 2),
        link(0, "clear C", 2),
        link(0, "clear B", 3),
        link(0, "clear C", 4),
        link(0, "clear B", 5),
        link(4, "clear A", 3),
        link(5, "clear D", 1),
        link(4, "on C Table", 1),
        link(5, "on B Table", 2),
        link(0, "on A Table", 3),
        link(0, "on C A", 4),
        link(0, "on B D", 5),
        link(3, "on A B", G),
        link(2, "on B C", G),
        link(1, "on C D", G),
    ] {
        p.add_link(l).unwrap();
    }
    p.add_ordering(StepId(1), StepId(2), OrderingOrigin::ThreatResolution)
        .unwrap();
    p.add_ordering(StepId(2), StepId(3), OrderingOrigin::ThreatResolution)
        .unwrap();
    p
}

/// Steps 1 and 4 removed, `stack(C D A)` added as step 6 with its own
/// preconditions linked; `clear(A)` at 3 and `on(C D)` at Goal stay open.
pub fn repaired_plan() -> PartialPlan {
    let mut p = sample_plan();
    p.remove_subplan(&[StepId(1), StepId(4)].into(), &BTreeSet::new())
        .unwrap();
    let id = p.add_step(blocks("stack", &["C", "D", "A"]));
    assert_eq!(id, StepId(6));
    for l in [link(0, "on C A", 6), link(0, "clear C", 6), link(5, "clear D", 6)] {
        p.add_link(l).unwrap();
    }
    p
}

/// `p0 → s1 → p1 → ... → sn → pn`, each step linked to the next.
pub fn chain_plan(n: u32) -> PartialPlan {
    let init: BTreeSet<_> = [GroundAtom::new("p", &["0"])].into();
    let goal = vec![GroundAtom::new("p", &[&n.to_string()])];
    let mut p = PartialPlan::new(&init, &goal);
    for i in 1..=n {
        let prev = format!("p {}", i - 1);
        let cur = format!("p {i}");
        let id = p.add_step(Arc::new(action("s", &[&i.to_string()], &[&prev], &[&cur], &[])));
        p.add_link(link(if i == 1 { 0 } else { i - 1 }, &prev, id.0)).unwrap();
    }
    p.add_link(link(n, &format!("p {n}"), G)).unwrap();
    p
}
