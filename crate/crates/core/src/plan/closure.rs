use fixedbitset::FixedBitSet;

use super::{PartialPlan, StepId};

/// Transitive closure of the ordering relation as one reachability bitset
/// per step.
#[derive(Clone, Debug)]
pub(crate) struct Closure {
    ids: Vec<StepId>,
    reach: Vec<FixedBitSet>,
    pub(crate) acyclic: bool,
}

impl Closure {
    pub(crate) fn build(plan: &PartialPlan) -> Self {
        let ids: Vec<StepId> = plan.step_ids().collect();
        let n = ids.len();
        let idx = |id: StepId| ids.binary_search(&id).ok();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let init = idx(StepId::INIT).expect("initial step present");
        let goal = idx(StepId::GOAL).expect("goal step present");
        for i in 0..n {
            if i != init {
                succ[init].push(i);
            }
            if i != goal && i != init {
                succ[i].push(goal);
            }
        }
        for l in plan.links() {
            if let (Some(p), Some(c)) = (idx(l.producer), idx(l.consumer)) {
                succ[p].push(c);
            }
        }
        for o in plan.orderings() {
            if let (Some(a), Some(b)) = (idx(o.before), idx(o.after)) {
                succ[a].push(b);
            }
        }
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &j in s {
                indeg[j] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        while let Some(i) = stack.pop() {
            order.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    stack.push(j);
                }
            }
        }
        let mut reach = vec![FixedBitSet::with_capacity(n); n];
        let acyclic = order.len() == n;
        if acyclic {
            for &i in order.iter().rev() {
                let mut r = FixedBitSet::with_capacity(n);
                for &j in &succ[i] {
                    r.insert(j);
                    r.union_with(&reach[j]);
                }
                reach[i] = r;
            }
        } else {
            for (i, r) in reach.iter_mut().enumerate() {
                let mut todo = succ[i].clone();
                while let Some(j) = todo.pop() {
                    if !r.contains(j) {
                        r.insert(j);
                        todo.extend(&succ[j]);
                    }
                }
            }
        }
        Closure { ids, reach, acyclic }
    }

    fn index(&self, id: StepId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub(crate) fn precedes(&self, a: StepId, b: StepId) -> bool {
        match (self.index(a), self.index(b)) {
            (Some(i), Some(j)) => self.reach[i].contains(j),
            _ => false,
        }
    }

    /// Records `a ≺ b` in place.
    pub(crate) fn add_edge(&mut self, a: StepId, b: StepId) {
        let (Some(i), Some(j)) = (self.index(a), self.index(b)) else {
            return;
        };
        if self.reach[i].contains(j) {
            return;
        }
        if i == j || self.reach[j].contains(i) {
            self.acyclic = false;
        }
        let mut add = self.reach[j].clone();
        add.insert(j);
        for k in 0..self.ids.len() {
            if k == i || self.reach[k].contains(i) {
                self.reach[k].union_with(&add);
            }
        }
    }

    /// No step lies strictly between `a` and `b`.
    pub(crate) fn nothing_between(&self, a: StepId, b: StepId) -> bool {
        let (Some(i), Some(j)) = (self.index(a), self.index(b)) else {
            return false;
        };
        !self.reach[i].ones().any(|m| self.reach[m].contains(j))
    }

    pub(crate) fn successors(&self, a: StepId) -> Vec<StepId> {
        match self.index(a) {
            Some(i) => self.reach[i].ones().map(|k| self.ids[k]).collect(),
            None => Vec::new(),
        }
    }
}
