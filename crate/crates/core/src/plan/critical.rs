use std::collections::BTreeMap;

use super::{PartialPlan, PlanError, StepId};

/// Longest-chain data under unit step durations. `head[s]` counts the
/// non-pseudo steps on the longest chain ending at `s`, `tail[s]` those on
/// the longest chain starting there.
#[derive(Clone, Debug)]
pub struct CriticalInfo {
    pub length: usize,
    head: BTreeMap<StepId, usize>,
    tail: BTreeMap<StepId, usize>,
    cyclic: bool,
}

/// Upper bound on enumerated critical paths.
pub const PATH_LIMIT: usize = 10_000;

fn weight(s: StepId) -> usize {
    usize::from(!s.is_pseudo())
}

impl CriticalInfo {
    pub(crate) fn compute(plan: &PartialPlan) -> Self {
        let ids: Vec<StepId> = plan.step_ids().collect();
        let mut succ: BTreeMap<StepId, Vec<StepId>> = ids.iter().map(|&i| (i, Vec::new())).collect();
        for &s in &ids {
            if s != StepId::INIT {
                succ.get_mut(&StepId::INIT).unwrap().push(s);
            }
            if !s.is_pseudo() {
                succ.get_mut(&s).unwrap().push(StepId::GOAL);
            }
        }
        for l in plan.links() {
            succ.get_mut(&l.producer).unwrap().push(l.consumer);
        }
        for o in plan.orderings() {
            succ.get_mut(&o.before).unwrap().push(o.after);
        }
        let mut indeg: BTreeMap<StepId, usize> = ids.iter().map(|&i| (i, 0)).collect();
        for v in succ.values() {
            for t in v {
                *indeg.get_mut(t).unwrap() += 1;
            }
        }
        let mut order = Vec::with_capacity(ids.len());
        let mut ready: Vec<StepId> = ids.iter().copied().filter(|i| indeg[i] == 0).collect();
        while let Some(s) = ready.pop() {
            order.push(s);
            for t in &succ[&s] {
                let d = indeg.get_mut(t).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(*t);
                }
            }
        }
        if order.len() != ids.len() {
            return CriticalInfo {
                length: 0,
                head: BTreeMap::new(),
                tail: BTreeMap::new(),
                cyclic: true,
            };
        }
        let mut head: BTreeMap<StepId, usize> = ids.iter().map(|&i| (i, weight(i))).collect();
        for &s in &order {
            let h = head[&s];
            for t in &succ[&s] {
                let cand = h + weight(*t);
                let e = head.get_mut(t).unwrap();
                if cand > *e {
                    *e = cand;
                }
            }
        }
        let mut tail: BTreeMap<StepId, usize> = ids.iter().map(|&i| (i, weight(i))).collect();
        for &s in order.iter().rev() {
            let best = succ[&s].iter().map(|t| tail[t]).max().unwrap_or(0);
            *tail.get_mut(&s).unwrap() = weight(s) + best;
        }
        let length = head.values().copied().max().unwrap_or(0);
        CriticalInfo {
            length,
            head,
            tail,
            cyclic: false,
        }
    }

    pub fn is_cyclic(&self) -> bool {
        self.cyclic
    }

    /// `s` lies on some longest chain.
    pub fn in_critical_path(&self, s: StepId) -> bool {
        if s.is_pseudo() || self.cyclic || self.length == 0 {
            return false;
        }
        match (self.head.get(&s), self.tail.get(&s)) {
            (Some(h), Some(t)) => h + t - 1 == self.length,
            _ => false,
        }
    }

    /// `a` immediately followed by `b` on some longest chain; the caller
    /// supplies precedence so this stays independent of the closure.
    pub(crate) fn adjacent(&self, a: StepId, b: StepId, a_precedes_b: bool) -> bool {
        if a.is_pseudo() || b.is_pseudo() || !a_precedes_b || self.cyclic {
            return false;
        }
        match (self.head.get(&a), self.tail.get(&b)) {
            (Some(h), Some(t)) => h + t == self.length,
            _ => false,
        }
    }

    pub fn head(&self, s: StepId) -> Option<usize> {
        self.head.get(&s).copied()
    }
}

impl PartialPlan {
    pub fn in_critical_path(&self, s: StepId) -> bool {
        self.critical_info().in_critical_path(s)
    }

    pub fn adjacent_in_critical_path(&self, a: StepId, b: StepId) -> bool {
        let info = self.critical_info();
        info.adjacent(a, b, self.precedes(a, b))
    }

    /// Schedule length under unit durations and the longest chains of
    /// non-pseudo steps (at most [`PATH_LIMIT`] of them).
    pub fn critical_paths(&self) -> Result<(usize, Vec<Vec<StepId>>), PlanError> {
        let info = self.critical_info();
        if info.is_cyclic() {
            return Err(PlanError::Cycle);
        }
        let l = info.length;
        if l == 0 {
            return Ok((0, Vec::new()));
        }
        let starts: Vec<StepId> = self
            .real_steps()
            .map(|s| s.id)
            .filter(|&s| info.head(s) == Some(1) && info.in_critical_path(s))
            .collect();
        let mut paths = Vec::new();
        let mut stack: Vec<Vec<StepId>> = starts.into_iter().rev().map(|s| vec![s]).collect();
        while let Some(path) = stack.pop() {
            if paths.len() >= PATH_LIMIT {
                break;
            }
            let last = *path.last().unwrap();
            if path.len() == l {
                paths.push(path);
                continue;
            }
            let nexts: Vec<StepId> = self
                .successors(last)
                .into_iter()
                .filter(|&b| info.adjacent(last, b, true))
                .collect();
            for b in nexts.into_iter().rev() {
                let mut p = path.clone();
                p.push(b);
                stack.push(p);
            }
        }
        Ok((l, paths))
    }

    pub fn schedule_length(&self) -> Result<usize, PlanError> {
        let info = self.critical_info();
        if info.is_cyclic() {
            Err(PlanError::Cycle)
        } else {
            Ok(info.length)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use std::sync::Arc;

    #[test]
    fn sample_critical_path() {
        let p = sample_plan();
        let (len, paths) = p.critical_paths().unwrap();
        assert_eq!(len, 4);
        let s = StepId;
        let mut paths = paths;
        paths.sort();
        assert_eq!(paths, vec![vec![s(4), s(1), s(2), s(3)], vec![s(5), s(1), s(2), s(3)]]);
        assert!(p.adjacent_in_critical_path(s(4), s(1)));
        assert!(!p.adjacent_in_critical_path(s(4), s(2)));
        assert!(p.in_critical_path(s(5)));
    }

    #[test]
    fn unordered_steps_have_length_one() {
        let mut p = PartialPlan::new(&Default::default(), &[]);
        for i in 0..4 {
            p.add_step(Arc::new(action("a", &[&i.to_string()], &[], &[], &[])));
        }
        assert_eq!(p.schedule_length().unwrap(), 1);
        assert_eq!(p.critical_paths().unwrap().1.len(), 4);
    }

    #[test]
    fn chain_length() {
        assert_eq!(chain_plan(5).schedule_length().unwrap(), 5);
        assert_eq!(chain_plan(0).schedule_length().unwrap(), 0);
    }
}
