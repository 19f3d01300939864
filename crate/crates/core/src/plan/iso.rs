use std::collections::{BTreeMap, BTreeSet};

use super::{PartialPlan, StepId};

fn sig(plan: &PartialPlan, id: StepId) -> String {
    if id == StepId::INIT {
        "0".into()
    } else if id == StepId::GOAL {
        "Goal".into()
    } else {
        plan.action(id).map(|a| a.to_string()).unwrap_or_default()
    }
}

/// A key that is equal for plans equal up to StepId renaming. Distinct
/// plans may collide when an action occurs more than once; use
/// [`isomorphic`] to decide.
pub(crate) fn canonical_key(plan: &PartialPlan) -> String {
    let mut steps: Vec<String> = plan.real_steps().map(|s| s.action.to_string()).collect();
    steps.sort();
    let mut links: Vec<String> = plan
        .links()
        .map(|l| format!("{}{}{}", sig(plan, l.producer), l.condition, sig(plan, l.consumer)))
        .collect();
    links.sort();
    let mut ords: Vec<String> = plan
        .orderings()
        .map(|o| format!("{}<{}:{}", sig(plan, o.before), sig(plan, o.after), o.origin.tag()))
        .collect();
    ords.sort();
    format!("{}|{}|{}", steps.join(","), links.join(","), ords.join(","))
}

pub(crate) fn isomorphic(a: &PartialPlan, b: &PartialPlan) -> bool {
    if a.init_state() != b.init_state()
        || a.goal_atoms() != b.goal_atoms()
        || a.num_real_steps() != b.num_real_steps()
        || a.num_links() != b.num_links()
        || a.orderings().count() != b.orderings().count()
        || canonical_key(a) != canonical_key(b)
    {
        return false;
    }
    let mut by_action: BTreeMap<String, Vec<StepId>> = BTreeMap::new();
    for s in b.real_steps() {
        by_action.entry(s.action.to_string()).or_default().push(s.id);
    }
    let a_ids: Vec<StepId> = a.real_steps().map(|s| s.id).collect();
    let mut map: BTreeMap<StepId, StepId> = BTreeMap::new();
    map.insert(StepId::INIT, StepId::INIT);
    map.insert(StepId::GOAL, StepId::GOAL);
    let mut used = BTreeSet::new();
    search(a, b, &a_ids, 0, &by_action, &mut map, &mut used)
}

fn search(
    a: &PartialPlan,
    b: &PartialPlan,
    a_ids: &[StepId],
    k: usize,
    by_action: &BTreeMap<String, Vec<StepId>>,
    map: &mut BTreeMap<StepId, StepId>,
    used: &mut BTreeSet<StepId>,
) -> bool {
    if k == a_ids.len() {
        return a.links().all(|l| {
            let mut m = l.clone();
            m.producer = map[&l.producer];
            m.consumer = map[&l.consumer];
            b.has_link(&m)
        }) && a
            .orderings()
            .all(|o| b.ordering_origin(map[&o.before], map[&o.after]) == Some(o.origin));
    }
    let x = a_ids[k];
    let key = a.action(x).unwrap().to_string();
    let Some(cands) = by_action.get(&key) else {
        return false;
    };
    for &y in cands {
        if used.contains(&y) {
            continue;
        }
        map.insert(x, y);
        used.insert(y);
        if search(a, b, a_ids, k + 1, by_action, map, used) {
            return true;
        }
        used.remove(&y);
        map.remove(&x);
    }
    false
}
