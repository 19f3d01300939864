//! Reference implementations the acceptance suite checks the engine
//! against. None of them go through the planner's own execution, search or
//! cost code.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use pbr_core::cost::Catalog;
use pbr_core::model::{Atom, DomainSpec, GroundAction, GroundAtom, Grounder, ProblemSpec, Term};
use pbr_core::plan::{PartialPlan, StepId};
use pbr_core::query::{query_term, relations_of, QueryWorld};
use pbr_core::symbol::Symbol;
use rand::seq::SliceRandom;
use rand::Rng;

/// Executes `plan` from its initial state along every linearization when it
/// has at most `full_limit` steps, else along one random linearization.
/// Returns the number of linearizations executed.
pub fn execute(plan: &PartialPlan, full_limit: usize, rng: &mut impl Rng) -> Result<usize, String> {
    let ids: Vec<StepId> = plan.real_steps().map(|s| s.id).collect();
    let index: HashMap<StepId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let actions: Vec<Arc<GroundAction>> = plan.real_steps().map(|s| s.action.clone()).collect();
    let mut preds = vec![BTreeSet::new(); ids.len()];
    let mut edge = |a: StepId, b: StepId| {
        if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
            preds[j].insert(i);
        }
    };
    for l in plan.links() {
        edge(l.producer, l.consumer);
    }
    for o in plan.orderings() {
        edge(o.before, o.after);
    }
    let mut walk = Walk {
        actions: &actions,
        preds: &preds,
        goal: plan.goal_atoms().iter().cloned().collect(),
        state: plan.init_state().clone(),
        placed: vec![false; ids.len()],
        order: Vec::new(),
        count: 0,
    };
    if ids.len() <= full_limit {
        walk.all()?;
    } else {
        walk.one(rng)?;
    }
    Ok(walk.count)
}

struct Walk<'a> {
    actions: &'a [Arc<GroundAction>],
    preds: &'a [BTreeSet<usize>],
    goal: Vec<GroundAtom>,
    state: BTreeSet<GroundAtom>,
    placed: Vec<bool>,
    order: Vec<usize>,
    count: usize,
}

impl Walk<'_> {
    fn ready(&self) -> Vec<usize> {
        (0..self.actions.len())
            .filter(|&i| !self.placed[i] && self.preds[i].iter().all(|&p| self.placed[p]))
            .collect()
    }

    /// Applies step `i`; returns what to undo.
    fn apply(&mut self, i: usize) -> Result<(Vec<GroundAtom>, Vec<GroundAtom>), String> {
        let a = &self.actions[i];
        if let Some(p) = a.preconditions.iter().find(|p| !self.state.contains(*p)) {
            return Err(format!("{a}: precondition {p} does not hold after {:?}", self.trail()));
        }
        let removed: Vec<GroundAtom> = a.deletes.iter().filter(|d| self.state.remove(*d)).cloned().collect();
        let added: Vec<GroundAtom> = a
            .adds
            .iter()
            .filter(|x| self.state.insert((*x).clone()))
            .cloned()
            .collect();
        self.placed[i] = true;
        self.order.push(i);
        Ok((removed, added))
    }

    fn undo(&mut self, i: usize, (removed, added): (Vec<GroundAtom>, Vec<GroundAtom>)) {
        for x in added {
            self.state.remove(&x);
        }
        self.state.extend(removed);
        self.placed[i] = false;
        self.order.pop();
    }

    fn trail(&self) -> Vec<String> {
        self.order.iter().map(|&i| self.actions[i].to_string()).collect()
    }

    fn finish(&mut self) -> Result<(), String> {
        if self.order.len() != self.actions.len() {
            return Err(format!("ordering cycle after {:?}", self.trail()));
        }
        if let Some(g) = self.goal.iter().find(|g| !self.state.contains(*g)) {
            return Err(format!("goal {g} does not hold after {:?}", self.trail()));
        }
        self.count += 1;
        Ok(())
    }

    fn all(&mut self) -> Result<(), String> {
        let ready = self.ready();
        if ready.is_empty() {
            return self.finish();
        }
        for i in ready {
            let undo = self.apply(i)?;
            self.all()?;
            self.undo(i, undo);
        }
        Ok(())
    }

    fn one(&mut self, rng: &mut impl Rng) -> Result<(), String> {
        while let Some(&i) = self.ready().choose(rng) {
            self.apply(i)?;
        }
        self.finish()
    }
}

/// Fewest moves solving a Blocks World problem, by A* with the number of
/// unsatisfied `on` goals as heuristic (one move changes one block's
/// support).
pub fn blocks_optimal(problem: &ProblemSpec) -> usize {
    let table = Symbol::new("Table");
    let mut names: BTreeSet<Symbol> = BTreeSet::new();
    for a in problem.init.iter().filter(|a| a.predicate.as_str() == "on") {
        names.extend(a.args.iter().cloned());
    }
    names.remove(&table);
    let names: Vec<Symbol> = names.into_iter().collect();
    let n = names.len();
    let idx = |s: &Symbol| -> u8 {
        if *s == table {
            n as u8
        } else {
            names.iter().position(|x| x == s).expect("block in init") as u8
        }
    };
    let mut start = vec![n as u8; n];
    for a in problem.init.iter().filter(|a| a.predicate.as_str() == "on") {
        start[idx(&a.args[0]) as usize] = idx(&a.args[1]);
    }
    let goal: Vec<(usize, u8)> = problem
        .goal
        .iter()
        .filter(|g| g.predicate.as_str() == "on")
        .map(|g| (idx(&g.args[0]) as usize, idx(&g.args[1])))
        .collect();
    let h = |s: &[u8]| goal.iter().filter(|(x, y)| s[*x] != *y).count();

    let mut dist: HashMap<Vec<u8>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut open = BinaryHeap::from([Reverse((h(&start), 0usize, start))]);
    while let Some(Reverse((_, g, s))) = open.pop() {
        if dist.get(&s).is_some_and(|&d| d < g) {
            continue;
        }
        if h(&s) == 0 {
            return g;
        }
        let mut covered = vec![false; n + 1];
        for &under in &s {
            covered[under as usize] = true;
        }
        for x in (0..n).filter(|&x| !covered[x]) {
            let targets = (0..n)
                .filter(|&y| y != x && !covered[y])
                .map(|y| y as u8)
                .chain([n as u8]);
            for y in targets {
                if s[x] == y {
                    continue;
                }
                let mut t = s.clone();
                t[x] = y;
                let g2 = g + 1;
                if dist.get(&t).is_none_or(|&d| g2 < d) {
                    dist.insert(t.clone(), g2);
                    open.push(Reverse((g2 + h(&t), g2, t)));
                }
            }
        }
    }
    unreachable!("every Blocks World goal over the same blocks is reachable")
}

/// Cheapest execution cost of the problem's goal query over every join
/// tree (cross products included) and every choice of evaluating a
/// same-source subquery at its source, by dynamic programming over
/// relation subsets.
pub fn query_optimal(problem: &ProblemSpec) -> BigRational {
    let catalog = Catalog::from_facts(&problem.init).expect("query problems carry a catalog");
    let world = QueryWorld::from_facts(&problem.init);
    let goal = &problem.goal[0].args[1];
    let rels = relations_of(goal);
    let n = rels.len();
    let base: Vec<BigRational> = rels
        .iter()
        .map(|r| {
            let info = &catalog.relations[r];
            let tuples = BigRational::from_integer(BigInt::from(info.tuples));
            match world.selections.get(r) {
                Some(a) => (tuples / BigRational::from_integer(BigInt::from(info.distinct[a]))).ceil(),
                None => tuples,
            }
        })
        .collect();
    // distinct counts per attribute after selection
    let distinct: Vec<BTreeMap<Symbol, u64>> = rels
        .iter()
        .map(|r| {
            catalog.relations[r]
                .distinct
                .iter()
                .map(|(a, &v)| {
                    let v = if world.selections.get(r) == Some(a) {
                        1
                    } else {
                        v.max(1)
                    };
                    (a.clone(), v)
                })
                .collect()
        })
        .collect();
    let card = |mask: usize| -> BigRational {
        let mut c = BigRational::one();
        let mut seen: BTreeMap<&Symbol, u64> = BTreeMap::new();
        for i in (0..n).filter(|i| mask & (1 << i) != 0) {
            c *= &base[i];
            for (a, &v) in &distinct[i] {
                match seen.get_mut(a) {
                    Some(w) => {
                        c /= BigRational::from_integer(BigInt::from((*w).max(v)));
                        *w = (*w).min(v);
                    }
                    None => {
                        seen.insert(a, v);
                    }
                }
            }
        }
        c.ceil()
    };
    let full = (1usize << n) - 1;
    let cards: Vec<BigRational> = (0..=full).map(card).collect();
    let mut best: Vec<Option<BigRational>> = vec![None; full + 1];
    let mut masks: Vec<usize> = (1..=full).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        let members: Vec<&Symbol> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &rels[i]).collect();
        let mut cands = Vec::new();
        let sources: BTreeSet<&Symbol> = members.iter().map(|r| &catalog.relations[*r].source).collect();
        if let [s] = sources.into_iter().collect::<Vec<_>>()[..] {
            let info = &catalog.sources[s];
            if members.len() == 1 || info.capabilities.contains(&Symbol::new("join")) {
                cands.push((&info.transfer + BigRational::one()) * &cards[mask]);
            }
        }
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            let rest = mask ^ sub;
            if sub < rest {
                let (a, b) = (best[sub].clone().unwrap(), best[rest].clone().unwrap());
                cands.push(&cards[sub] + &cards[rest] + &cards[mask] + a.max(b));
            }
            sub = (sub - 1) & mask;
        }
        best[mask] = cands.into_iter().min();
    }
    best[full].clone().unwrap_or_else(BigRational::zero)
}

/// Ground actions applicable in `state`: positive preconditions are
/// unified against the state, parameters they leave open range over
/// `constants`.
pub fn applicable(
    domain: &DomainSpec,
    grounder: &Grounder,
    state: &BTreeSet<GroundAtom>,
    constants: &[Symbol],
) -> Vec<GroundAction> {
    let mut out: BTreeMap<String, GroundAction> = BTreeMap::new();
    for op in &domain.operators {
        let atoms: Vec<&Atom> = op
            .precondition
            .atoms
            .iter()
            .filter(|a| !domain.interpreted.contains_key(&a.predicate))
            .collect();
        let mut bindings = Vec::new();
        unify(&atoms, state, &mut BTreeMap::new(), &mut bindings);
        for b in bindings {
            let free: Vec<&Symbol> = op.parameters.iter().filter(|p| !b.contains_key(*p)).collect();
            if free.len() > 2 {
                continue;
            }
            let mut fills: Vec<Vec<Symbol>> = vec![Vec::new()];
            for _ in &free {
                fills = fills
                    .into_iter()
                    .flat_map(|f| {
                        constants.iter().map(move |c| {
                            let mut g = f.clone();
                            g.push(c.clone());
                            g
                        })
                    })
                    .collect();
            }
            for fill in fills {
                let mut fill = fill.into_iter();
                let args: Vec<Symbol> = op
                    .parameters
                    .iter()
                    .map(|p| {
                        b.get(p)
                            .cloned()
                            .unwrap_or_else(|| fill.next().expect("one value per free parameter"))
                    })
                    .collect();
                if let Ok(a) = grounder.ground(op.name.as_str(), &args) {
                    if a.preconditions.iter().all(|p| state.contains(p)) {
                        out.insert(a.to_string(), a);
                    }
                }
            }
        }
    }
    out.into_values().collect()
}

fn unify(
    atoms: &[&Atom],
    state: &BTreeSet<GroundAtom>,
    binding: &mut BTreeMap<Symbol, Symbol>,
    out: &mut Vec<BTreeMap<Symbol, Symbol>>,
) {
    let Some((atom, rest)) = atoms.split_first() else {
        out.push(binding.clone());
        return;
    };
    for fact in state
        .iter()
        .filter(|f| f.predicate == atom.predicate && f.args.len() == atom.args.len())
    {
        let mut added = Vec::new();
        let mut ok = true;
        for (t, v) in atom.args.iter().zip(&fact.args) {
            match t {
                Term::Const(c) => ok = c == v,
                Term::Var(x) => match binding.get(x) {
                    Some(b) => ok = b == v,
                    None => {
                        binding.insert(x.clone(), v.clone());
                        added.push(x.clone());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok {
            unify(rest, state, binding, out);
        }
        for x in added {
            binding.remove(&x);
        }
    }
}

/// Retrieves of single relations at their sources and joins of two
/// disjoint available queries.
pub fn query_applicable(grounder: &Grounder, world: &QueryWorld, state: &BTreeSet<GroundAtom>) -> Vec<GroundAction> {
    let available: Vec<&Symbol> = state
        .iter()
        .filter(|a| a.predicate.as_str() == "available" && a.args[0].as_str() == "sims")
        .map(|a| &a.args[1])
        .collect();
    let mut out = Vec::new();
    for (r, s) in &world.stored_at {
        if let Ok(a) = grounder.ground("retrieve", &[r.clone(), s.clone()]) {
            out.push(a);
        }
    }
    for (i, qa) in available.iter().enumerate() {
        for qb in &available[i + 1..] {
            let (Some(a), Some(b)) = (world.relation_set(qa), world.relation_set(qb)) else {
                continue;
            };
            if !a.is_disjoint(&b) {
                continue;
            }
            let q = query_term(a.union(&b));
            let jc = world.join_condition(&a, &b);
            let args = [q, jc, (*qa).clone(), (*qb).clone()];
            if let Ok(act) = grounder.ground("join", &args) {
                out.push(act);
            }
        }
    }
    out
}
