use rand::seq::SliceRandom;
use rand::Rng;

use super::{PartialPlan, PlanError, StepId};
use crate::model::progress;

/// Largest plan whose linearizations are enumerated by default.
pub const DEFAULT_LINEARIZATION_LIMIT: usize = 12;

/// Lazily enumerates the topological orders of a plan's non-pseudo steps.
pub struct Linearizations {
    ids: Vec<StepId>,
    succ: Vec<Vec<usize>>,
    indeg: Vec<usize>,
    placed: Vec<usize>,
    is_placed: Vec<bool>,
    frames: Vec<(Vec<usize>, usize)>,
    started: bool,
}

impl Linearizations {
    fn available(&self) -> Vec<usize> {
        (0..self.ids.len())
            .filter(|&i| !self.is_placed[i] && self.indeg[i] == 0)
            .collect()
    }

    fn place(&mut self, c: usize) {
        self.placed.push(c);
        self.is_placed[c] = true;
        for &s in &self.succ[c] {
            self.indeg[s] -= 1;
        }
    }

    fn unplace(&mut self, c: usize) {
        let last = self.placed.pop();
        debug_assert_eq!(last, Some(c));
        self.is_placed[c] = false;
        for &s in &self.succ[c] {
            self.indeg[s] += 1;
        }
    }
}

impl Iterator for Linearizations {
    type Item = Vec<StepId>;

    fn next(&mut self) -> Option<Vec<StepId>> {
        if !self.started {
            self.started = true;
            if self.ids.is_empty() {
                return Some(Vec::new());
            }
            let first = self.available();
            self.frames.push((first, 0));
        }
        loop {
            let (prev, next) = {
                let frame = self.frames.last_mut()?;
                let prev = (frame.1 > 0).then(|| frame.0[frame.1 - 1]);
                let next = frame.0.get(frame.1).copied();
                frame.1 += 1;
                (prev, next)
            };
            if let Some(p) = prev {
                self.unplace(p);
            }
            let Some(c) = next else {
                self.frames.pop();
                continue;
            };
            self.place(c);
            if self.placed.len() == self.ids.len() {
                return Some(self.placed.iter().map(|&i| self.ids[i]).collect());
            }
            let avail = self.available();
            self.frames.push((avail, 0));
        }
    }
}

impl PartialPlan {
    /// All orders of the non-pseudo steps consistent with the plan, for
    /// plans of at most `limit` steps.
    pub fn linearizations(&self, limit: usize) -> Result<Linearizations, PlanError> {
        let n = self.num_real_steps();
        if n > limit {
            return Err(PlanError::TooLarge { steps: n, limit });
        }
        if !self.is_acyclic() {
            return Err(PlanError::Cycle);
        }
        let ids: Vec<StepId> = self.real_steps().map(|s| s.id).collect();
        let mut succ = vec![Vec::new(); n];
        let mut indeg = vec![0; n];
        for (i, &a) in ids.iter().enumerate() {
            for (j, &b) in ids.iter().enumerate() {
                if self.precedes(a, b) {
                    succ[i].push(j);
                    indeg[j] += 1;
                }
            }
        }
        Ok(Linearizations {
            ids,
            succ,
            indeg,
            placed: Vec::with_capacity(n),
            is_placed: vec![false; n],
            frames: Vec::new(),
            started: false,
        })
    }

    /// One uniformly chosen step at a time among those whose predecessors
    /// are placed.
    pub fn random_linearization<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<StepId>, PlanError> {
        if !self.is_acyclic() {
            return Err(PlanError::Cycle);
        }
        let mut remaining: Vec<StepId> = self.real_steps().map(|s| s.id).collect();
        let mut out = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let ready: Vec<usize> = (0..remaining.len())
                .filter(|&i| !remaining.iter().any(|&other| self.precedes(other, remaining[i])))
                .collect();
            let &pick = ready.choose(rng).expect("acyclic plan has a minimal step");
            out.push(remaining.remove(pick));
        }
        Ok(out)
    }
}

/// Executes `order` from the plan's initial state and checks its goal.
pub fn execute_linearization(plan: &PartialPlan, order: &[StepId]) -> Result<(), PlanError> {
    let mut state = plan.init_state().clone();
    for id in order {
        let action = plan.action(*id).ok_or(PlanError::UnknownStep(*id))?;
        state = progress(&state, action)?;
    }
    if let Some(g) = plan.goal_atoms().iter().find(|g| !state.contains(*g)) {
        return Err(PlanError::GoalUnachieved(g.to_string()));
    }
    Ok(())
}

/// Free-function form of [`PartialPlan::linearizations`].
pub fn linearizations(plan: &PartialPlan, limit: usize) -> Result<Linearizations, PlanError> {
    plan.linearizations(limit)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn sample_has_two_orders_and_both_execute() {
        let p = sample_plan();
        let orders: Vec<_> = p.linearizations(12).unwrap().collect();
        assert_eq!(orders.len(), 2);
        for o in &orders {
            assert_eq!(&o[2..], &[StepId(1), StepId(2), StepId(3)]);
            execute_linearization(&p, o).unwrap();
        }
    }

    #[test]
    fn chain_has_one_order() {
        assert_eq!(chain_plan(6).linearizations(12).unwrap().count(), 1);
    }

    #[test]
    fn unordered_steps_give_factorial() {
        let mut p = PartialPlan::new(&Default::default(), &[]);
        for i in 0..5 {
            p.add_step(Arc::new(action("a", &[&i.to_string()], &[], &[], &[])));
        }
        assert_eq!(p.linearizations(12).unwrap().count(), 120);
        assert!(p.linearizations(4).is_err());
    }

    #[test]
    fn sampled_order_executes() {
        let p = sample_plan();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let o = p.random_linearization(&mut rng).unwrap();
        execute_linearization(&p, &o).unwrap();
    }
}
