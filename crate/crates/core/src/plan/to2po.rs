use std::collections::BTreeSet;
use std::sync::Arc;

use super::{CausalLink, OrderingOrigin, PartialPlan, PlanError, StepId};
use crate::model::{GroundAction, GroundAtom};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum To2poMode {
    /// Each precondition is linked from the latest producer with no deleter
    /// in between.
    MaxProducer,
    /// Every admissible producer choice, up to `limit` plans, the
    /// max-producer plan first.
    AllProducers { limit: usize },
}

/// Converts a totally ordered, executable action sequence into a partial
/// order plan. Step `i` of the result is the `i`-th action (1-based).
/// `extra` holds additional 1-based `(before, after)` pairs to keep.
pub fn to2po(
    init: &BTreeSet<GroundAtom>,
    goal: &[GroundAtom],
    sequence: &[Arc<GroundAction>],
    extra: &[(usize, usize)],
    mode: To2poMode,
) -> Result<Vec<PartialPlan>, PlanError> {
    let n = sequence.len();
    let goal_action = GroundAction::goal(goal);
    let init_action = GroundAction::initial(init);
    let act = |i: usize| -> &GroundAction {
        if i == 0 {
            &init_action
        } else if i == n + 1 {
            &goal_action
        } else {
            &sequence[i - 1]
        }
    };
    // candidate producers per (consumer, precondition), latest first
    let mut choices: Vec<(usize, GroundAtom, Vec<usize>)> = Vec::new();
    for i in 1..=n + 1 {
        for p in &act(i).preconditions {
            let mut cands = Vec::new();
            for k in (0..i).rev() {
                if act(k).adds.contains(p) {
                    cands.push(k);
                }
                if k > 0 && act(k).deletes.contains(p) {
                    // earlier producers would be clobbered by this deleter
                    break;
                }
            }
            if cands.is_empty() {
                return Err(if i == n + 1 {
                    PlanError::GoalUnachieved(p.to_string())
                } else {
                    PlanError::Unsupported {
                        index: i,
                        action: act(i).to_string(),
                        atom: p.to_string(),
                    }
                });
            }
            if mode == To2poMode::MaxProducer {
                cands.truncate(1);
            }
            choices.push((i, p.clone(), cands));
        }
    }
    let limit = match mode {
        To2poMode::MaxProducer => 1,
        To2poMode::AllProducers { limit } => limit.max(1),
    };
    let mut out: Vec<PartialPlan> = Vec::new();
    let mut pick = vec![0usize; choices.len()];
    loop {
        let plan = build(init, goal, sequence, extra, &choices, &pick)?;
        if !out.contains(&plan) {
            out.push(plan);
        }
        if out.len() >= limit {
            break;
        }
        // next combination, odometer style
        let mut k = 0;
        while k < pick.len() {
            pick[k] += 1;
            if pick[k] < choices[k].2.len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == pick.len() {
            break;
        }
    }
    Ok(out)
}

fn id_of(i: usize, n: usize) -> StepId {
    if i == n + 1 {
        StepId::GOAL
    } else {
        StepId(i as u32)
    }
}

fn build(
    init: &BTreeSet<GroundAtom>,
    goal: &[GroundAtom],
    sequence: &[Arc<GroundAction>],
    extra: &[(usize, usize)],
    choices: &[(usize, GroundAtom, Vec<usize>)],
    pick: &[usize],
) -> Result<PartialPlan, PlanError> {
    let n = sequence.len();
    let mut plan = PartialPlan::new(init, goal);
    for (i, a) in sequence.iter().enumerate() {
        plan.insert_step(StepId(i as u32 + 1), a.clone());
    }
    for ((consumer, cond, cands), &p) in choices.iter().zip(pick) {
        plan.add_link(CausalLink {
            producer: StepId(cands[p] as u32),
            condition: cond.clone(),
            consumer: id_of(*consumer, n),
        })?;
    }
    let links: Vec<CausalLink> = plan.links().cloned().collect();
    // threat orderings, latest deleter first, nearest consumer first
    for i in (1..=n).rev() {
        let deletes = &sequence[i - 1].deletes;
        if deletes.is_empty() {
            continue;
        }
        let si = StepId(i as u32);
        let mut promote: Vec<StepId> = Vec::new();
        let mut demote: Vec<StepId> = Vec::new();
        for l in &links {
            if !deletes.contains(&l.condition) || l.producer == si || l.consumer == si {
                continue;
            }
            if l.consumer != StepId::GOAL && l.consumer < si {
                promote.push(l.consumer);
            } else if l.producer > si {
                demote.push(l.producer);
            }
        }
        promote.sort_unstable_by(|a, b| b.cmp(a));
        promote.dedup();
        for c in promote {
            if !plan.precedes(c, si) {
                plan.add_ordering(c, si, OrderingOrigin::ThreatResolution)?;
            }
        }
        demote.sort_unstable();
        demote.dedup();
        for p in demote {
            if !plan.precedes(si, p) {
                plan.add_ordering(si, p, OrderingOrigin::ThreatResolution)?;
            }
        }
    }
    for j in 1..=n {
        for i in (1..j).rev() {
            let shared = sequence[i - 1]
                .resources
                .intersection(&sequence[j - 1].resources)
                .next()
                .is_some();
            let (a, b) = (StepId(i as u32), StepId(j as u32));
            if shared && !plan.precedes(a, b) {
                plan.add_ordering(a, b, OrderingOrigin::ResourceSerialization)?;
            }
        }
    }
    for &(a, b) in extra {
        let (a, b) = (id_of(a, n), id_of(b, n));
        if !plan.precedes(a, b) {
            plan.add_ordering(a, b, OrderingOrigin::Imported)?;
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn sample_sequence() -> Vec<Arc<GroundAction>> {
        vec![
            blocks("unstack", &["C", "A"]),
            blocks("unstack", &["B", "D"]),
            blocks("stack", &["C", "D", "Table"]),
            blocks("stack", &["B", "C", "Table"]),
            blocks("stack", &["A", "B", "Table"]),
        ]
    }

    #[test]
    fn naive_blocks_sequence_gives_sample_plan() {
        let plans = to2po(
            &sample_init(),
            &sample_goal(),
            &sample_sequence(),
            &[],
            To2poMode::MaxProducer,
        )
        .unwrap();
        assert_eq!(plans.len(), 1);
        let p = &plans[0];
        assert!(p.validate().is_valid());
        assert!(p.isomorphic(&sample_plan()), "{p:?}");
        let threat: Vec<_> = p.orderings().map(|o| (o.before, o.after)).collect();
        // sequence positions 3,4,5 are the stacks
        assert_eq!(threat, vec![(StepId(3), StepId(4)), (StepId(4), StepId(5))]);
    }

    #[test]
    fn single_action() {
        let a = blocks("unstack", &["C", "A"]);
        let goal = vec![GroundAtom::new("on", &["C", "Table"])];
        let plans = to2po(&sample_init(), &goal, &[a], &[], To2poMode::MaxProducer).unwrap();
        let p = &plans[0];
        assert!(p.precedes(StepId::INIT, StepId(1)) && p.precedes(StepId(1), StepId::GOAL));
        assert!(p.validate().is_valid());
    }

    #[test]
    fn independent_actions_stay_unordered() {
        let seq = vec![blocks("unstack", &["C", "A"]), blocks("unstack", &["B", "D"])];
        let plans = to2po(&sample_init(), &[], &seq, &[], To2poMode::MaxProducer).unwrap();
        let p = &plans[0];
        assert!(!p.precedes(StepId(1), StepId(2)) && !p.precedes(StepId(2), StepId(1)));
        assert_eq!(p.linearizations(8).unwrap().count(), 2);
    }

    #[test]
    fn unsupported_precondition_is_named() {
        let seq = vec![blocks("stack", &["C", "D", "Table"])];
        let e = to2po(&sample_init(), &[], &seq, &[], To2poMode::MaxProducer).unwrap_err();
        assert!(matches!(e, PlanError::Unsupported { index: 1, .. }), "{e}");
    }

    #[test]
    fn all_producers_contains_max_producer() {
        let all = to2po(
            &sample_init(),
            &sample_goal(),
            &sample_sequence(),
            &[],
            To2poMode::AllProducers { limit: 64 },
        )
        .unwrap();
        let max = to2po(
            &sample_init(),
            &sample_goal(),
            &sample_sequence(),
            &[],
            To2poMode::MaxProducer,
        )
        .unwrap();
        assert_eq!(all[0], max[0]);
        assert!(all.iter().all(|p| p.validate().is_valid()));
    }
}
