//! Plan completion by step reuse only: open conditions are linked to
//! existing steps, threats are resolved by promotion or demotion, resource
//! conflicts by ordering the pair. No step is ever added.

use std::collections::HashSet;
use std::fmt;

use crate::model::GroundAtom;
use crate::plan::{print_plan, CausalLink, Flaw, OrderingOrigin, PartialPlan, StepId};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Want {
    First,
    All,
}

/// One repair decision taken while completing a plan.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Repair {
    Link(CausalLink),
    Order {
        before: StepId,
        after: StepId,
        origin: OrderingOrigin,
    },
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Repair::Link(l) => write!(f, "link {} {} {}", l.producer, l.condition, l.consumer),
            Repair::Order { before, after, origin } => {
                write!(f, "order {before} {after} {}", origin.tag())
            }
        }
    }
}

/// A completed plan and the repairs that produced it.
#[derive(Clone, Debug)]
pub struct Completion {
    pub plan: PartialPlan,
    pub repairs: Vec<Repair>,
}

struct Search {
    want: Want,
    out: Vec<Completion>,
    seen: HashSet<String>,
}

impl Search {
    fn done(&self) -> bool {
        self.want == Want::First && !self.out.is_empty()
    }

    fn branch(&mut self, plan: PartialPlan, open: &[(GroundAtom, StepId)], repairs: &mut Vec<Repair>, r: Repair) {
        if !plan.is_acyclic() {
            return;
        }
        repairs.push(r);
        self.solve(plan, open, repairs);
        repairs.pop();
    }

    fn solve(&mut self, plan: PartialPlan, open: &[(GroundAtom, StepId)], repairs: &mut Vec<Repair>) {
        if self.done() {
            return;
        }
        if let Some(flaw) = plan.find_threats().pop() {
            let options: Vec<(StepId, StepId, OrderingOrigin)> = match flaw {
                Flaw::OperatorThreat { threatener, link } => {
                    let mut v = Vec::new();
                    if link.producer != StepId::INIT {
                        v.push((threatener, link.producer, OrderingOrigin::ThreatResolution));
                    }
                    if link.consumer != StepId::GOAL {
                        v.push((link.consumer, threatener, OrderingOrigin::ThreatResolution));
                    }
                    v
                }
                Flaw::ResourceConflict { a, b, .. } => vec![
                    (a, b, OrderingOrigin::ResourceSerialization),
                    (b, a, OrderingOrigin::ResourceSerialization),
                ],
                Flaw::OpenCondition { .. } => unreachable!("find_threats reports no open conditions"),
            };
            for (before, after, origin) in options {
                if self.done() {
                    return;
                }
                let mut next = plan.clone();
                if next.add_ordering(before, after, origin).is_err() {
                    continue;
                }
                self.branch(next, open, repairs, Repair::Order { before, after, origin });
            }
            return;
        }

        let Some(((cond, consumer), rest)) = open.split_last() else {
            let mut plan = plan;
            plan.flaws.clear();
            debug_assert!(plan.validate().is_valid(), "{}", plan.validate());
            if self.seen.insert(print_plan(&plan)) {
                self.out.push(Completion {
                    plan,
                    repairs: repairs.clone(),
                });
            }
            return;
        };
        if plan.links().any(|l| l.consumer == *consumer && &l.condition == cond) {
            self.solve(plan, rest, repairs);
            return;
        }
        let producers: Vec<StepId> = plan
            .steps()
            .filter(|s| s.id != *consumer && s.action.adds.contains(cond) && !plan.precedes(*consumer, s.id))
            .map(|s| s.id)
            .collect();
        for p in producers {
            if self.done() {
                return;
            }
            let link = CausalLink {
                producer: p,
                condition: cond.clone(),
                consumer: *consumer,
            };
            let mut next = plan.clone();
            if next.add_link(link.clone()).is_err() {
                continue;
            }
            self.branch(next, rest, repairs, Repair::Link(link));
        }
    }
}

/// Completes `plan`, whose `flaws` hold the open conditions to support.
/// Threats and resource conflicts are recomputed at every node and
/// repaired before open conditions; within each class the last entry is
/// taken first. Producers are tried from step 0 upwards.
pub fn rpop(plan: PartialPlan, want: Want) -> Vec<Completion> {
    let mut open: Vec<(GroundAtom, StepId)> = plan
        .flaws
        .iter()
        .filter_map(|f| match f {
            Flaw::OpenCondition { condition, consumer } => Some((condition.clone(), *consumer)),
            _ => None,
        })
        .collect();
    open.dedup();
    let mut search = Search {
        want,
        out: Vec::new(),
        seen: HashSet::new(),
    };
    if plan.is_acyclic() {
        search.solve(plan, &open, &mut Vec::new());
    }
    search.out
}
