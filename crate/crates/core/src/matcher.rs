//! Rule antecedents evaluated as conjunctive queries over a plan's
//! relational view, either all at once or one substitution at a time.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Atom, Term};
use crate::plan::{PartialPlan, StepId, Value};
use crate::rules::{InterpretedPredicate, LinkKind, RewritingRule};
use crate::symbol::Symbol;

/// Variable bindings produced by a match, in the rule's variable order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Substitution {
    entries: Vec<(Symbol, Value)>,
}

impl Substitution {
    pub fn new(entries: Vec<(Symbol, Value)>) -> Self {
        Substitution { entries }
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.entries.iter().find(|(v, _)| v.as_str() == var).map(|(_, x)| x)
    }

    pub fn step(&self, var: &str) -> Option<StepId> {
        self.get(var).and_then(Value::as_step)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Value)> {
        self.entries.iter().map(|(k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("rule {rule}: no evaluation order binds `{var}` before constraint {constraint}")]
    Unsafe {
        rule: String,
        constraint: String,
        var: String,
    },
}

#[derive(Clone, Debug)]
enum Pat {
    Const(Symbol),
    Var(usize),
}

#[derive(Clone, Debug)]
enum Conjunct {
    Action {
        node: usize,
        name: Symbol,
        args: Vec<Pat>,
    },
    Resource {
        node: usize,
        predicate: Symbol,
        args: Vec<Pat>,
    },
    AnyStep {
        node: usize,
    },
    Causal {
        from: usize,
        predicate: Symbol,
        args: Vec<Pat>,
        to: usize,
    },
    Ordering {
        from: usize,
        to: usize,
    },
    Threat {
        from: usize,
        to: usize,
    },
    Constraint {
        predicate: Arc<InterpretedPredicate>,
        args: Vec<Pat>,
    },
}

impl Conjunct {
    fn vars(&self) -> Vec<usize> {
        let pats = |args: &[Pat]| -> Vec<usize> {
            args.iter()
                .filter_map(|p| match p {
                    Pat::Var(i) => Some(*i),
                    Pat::Const(_) => None,
                })
                .collect()
        };
        match self {
            Conjunct::Action { node, args, .. } | Conjunct::Resource { node, args, .. } => {
                let mut v = pats(args);
                v.push(*node);
                v
            }
            Conjunct::AnyStep { node } => vec![*node],
            Conjunct::Causal { from, args, to, .. } => {
                let mut v = pats(args);
                v.extend([*from, *to]);
                v
            }
            Conjunct::Ordering { from, to } | Conjunct::Threat { from, to } => vec![*from, *to],
            Conjunct::Constraint { args, .. } => pats(args),
        }
    }

    fn describe(&self, vars: &[Symbol]) -> String {
        let p = |args: &[Pat]| -> String {
            args.iter()
                .map(|a| match a {
                    Pat::Const(c) => c.to_string(),
                    Pat::Var(i) => vars[*i].to_string(),
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Conjunct::Action { node, name, args } => format!("step {} ({name} {})", vars[*node], p(args)),
            Conjunct::Resource { node, predicate, args } => {
                format!("resource {} ({predicate} {})", vars[*node], p(args))
            }
            Conjunct::AnyStep { node } => format!("step {}", vars[*node]),
            Conjunct::Causal {
                from,
                predicate,
                args,
                to,
            } => {
                format!("link {} ({predicate} {}) {}", vars[*from], p(args), vars[*to])
            }
            Conjunct::Ordering { from, to } => format!("order {} {}", vars[*from], vars[*to]),
            Conjunct::Threat { from, to } => format!("threat {} {}", vars[*from], vars[*to]),
            Conjunct::Constraint { predicate, args } => format!("({} {})", predicate.name, p(args)),
        }
    }
}

/// A rule antecedent compiled into conjuncts over numbered variables.
#[derive(Clone, Debug)]
pub struct Query {
    rule: String,
    vars: Vec<Symbol>,
    conjuncts: Vec<Conjunct>,
}

impl Query {
    pub fn new(rule: &RewritingRule) -> Query {
        let vars = rule.antecedent_variables();
        let idx = |s: &Symbol| vars.iter().position(|v| v == s).expect("collected above");
        let pat = |t: &Term| match t {
            Term::Const(c) => Pat::Const(c.clone()),
            Term::Var(v) => Pat::Var(idx(v)),
        };
        let pats = |a: &Atom| a.args.iter().map(pat).collect::<Vec<_>>();
        let mut conjuncts = Vec::new();
        for n in &rule.antecedent.nodes {
            let node = idx(&n.var);
            conjuncts.push(match &n.predicate {
                None => Conjunct::AnyStep { node },
                Some(a) if n.resource => Conjunct::Resource {
                    node,
                    predicate: a.predicate.clone(),
                    args: pats(a),
                },
                Some(a) => Conjunct::Action {
                    node,
                    name: a.predicate.clone(),
                    args: pats(a),
                },
            });
        }
        for l in &rule.antecedent.links {
            let (from, to) = (idx(&l.from), idx(&l.to));
            conjuncts.push(match &l.kind {
                LinkKind::Ordering => Conjunct::Ordering { from, to },
                LinkKind::Threat => Conjunct::Threat { from, to },
                LinkKind::Causal(a) => Conjunct::Causal {
                    from,
                    predicate: a.predicate.clone(),
                    args: pats(a),
                    to,
                },
            });
        }
        for c in &rule.constraints {
            conjuncts.push(Conjunct::Constraint {
                predicate: c.predicate.clone(),
                args: c.args.iter().map(pat).collect(),
            });
        }
        Query {
            rule: rule.name.to_string(),
            vars,
            conjuncts,
        }
    }

    pub fn variables(&self) -> &[Symbol] {
        &self.vars
    }

    fn table_size(&self, c: &Conjunct, plan: &PartialPlan) -> usize {
        let view = plan.relational_view();
        let n = plan.num_real_steps() + 2;
        match c {
            Conjunct::Action { name, .. } => view.actions.get(name).map_or(0, Vec::len),
            Conjunct::Resource { predicate, .. } => view.resources.get(predicate).map_or(0, Vec::len),
            Conjunct::AnyStep { .. } => n,
            Conjunct::Causal { predicate, .. } => view.links.get(predicate).map_or(0, Vec::len),
            Conjunct::Ordering { .. } => n * n,
            Conjunct::Threat { .. } => view.threat_orderings.len(),
            Conjunct::Constraint { .. } => 0,
        }
    }

    /// Evaluation order: constraints as soon as their required arguments are
    /// bound (pure tests first), otherwise the scan with the most bound
    /// columns and the smallest table.
    pub fn schedule(&self, plan: &PartialPlan) -> Result<Vec<usize>, MatchError> {
        let mut bound = vec![false; self.vars.len()];
        let mut left: Vec<usize> = (0..self.conjuncts.len()).collect();
        let mut order = Vec::with_capacity(left.len());
        while !left.is_empty() {
            let ready = left
                .iter()
                .enumerate()
                .filter_map(|(k, &i)| match &self.conjuncts[i] {
                    Conjunct::Constraint { predicate, args } => {
                        let ok = args.iter().zip(&predicate.required).all(|(a, &req)| {
                            !req || matches!(a, Pat::Const(_)) || matches!(a, Pat::Var(v) if bound[*v])
                        });
                        let unbound = args.iter().filter(|a| matches!(a, Pat::Var(v) if !bound[*v])).count();
                        ok.then_some((unbound, k))
                    }
                    _ => None,
                })
                .min();
            let pick = match ready {
                Some((_, k)) => k,
                None => {
                    let best = left
                        .iter()
                        .enumerate()
                        .filter(|(_, &i)| !matches!(self.conjuncts[i], Conjunct::Constraint { .. }))
                        .map(|(k, &i)| {
                            let c = &self.conjuncts[i];
                            let nb = c.vars().iter().filter(|&&v| bound[v]).count();
                            (std::cmp::Reverse(nb), self.table_size(c, plan), k)
                        })
                        .min();
                    match best {
                        Some((_, _, k)) => k,
                        None => {
                            let i = left[0];
                            let Conjunct::Constraint { predicate, args } = &self.conjuncts[i] else {
                                unreachable!("only constraints remain");
                            };
                            let var = args
                                .iter()
                                .zip(&predicate.required)
                                .find_map(|(a, &req)| match a {
                                    Pat::Var(v) if req && !bound[*v] => Some(self.vars[*v].to_string()),
                                    _ => None,
                                })
                                .unwrap_or_default();
                            return Err(MatchError::Unsafe {
                                rule: self.rule.clone(),
                                constraint: self.conjuncts[i].describe(&self.vars),
                                var,
                            });
                        }
                    }
                }
            };
            let i = left.remove(pick);
            for v in self.conjuncts[i].vars() {
                bound[v] = true;
            }
            order.push(i);
        }
        Ok(order)
    }

    /// The evaluation order with each conjunct's table size, one per line.
    pub fn explain(&self, plan: &PartialPlan) -> Result<String, MatchError> {
        let order = self.schedule(plan)?;
        Ok(order
            .iter()
            .map(|&i| {
                let c = &self.conjuncts[i];
                match c {
                    Conjunct::Constraint { .. } => format!("{}  [interpreted]", c.describe(&self.vars)),
                    _ => format!("{}  [{} rows]", c.describe(&self.vars), self.table_size(c, plan)),
                }
            })
            .collect::<Vec<_>>()
            .join("\n"))
    }

    fn candidates(&self, c: &Conjunct, plan: &PartialPlan, b: &[Option<Value>]) -> Vec<Vec<(usize, Value)>> {
        let view = plan.relational_view();
        let mut out = Vec::new();
        match c {
            Conjunct::Action { node, name, args } => {
                for r in view.actions.get(name).into_iter().flatten() {
                    if let Some(a) = unify(b, &[(*node, Value::Step(r.step))], args, &r.args) {
                        out.push(a);
                    }
                }
            }
            Conjunct::Resource { node, predicate, args } => {
                for r in view.resources.get(predicate).into_iter().flatten() {
                    if let Some(a) = unify(b, &[(*node, Value::Step(r.step))], args, &r.args) {
                        out.push(a);
                    }
                }
            }
            Conjunct::AnyStep { node } => {
                for s in plan.real_steps() {
                    if let Some(a) = unify(b, &[(*node, Value::Step(s.id))], &[], &[]) {
                        out.push(a);
                    }
                }
            }
            Conjunct::Causal {
                from,
                predicate,
                args,
                to,
            } => {
                for r in view.links.get(predicate).into_iter().flatten() {
                    let ends = [(*from, Value::Step(r.producer)), (*to, Value::Step(r.consumer))];
                    if let Some(a) = unify(b, &ends, args, &r.args) {
                        out.push(a);
                    }
                }
            }
            Conjunct::Ordering { from, to } => {
                let fb = b[*from].as_ref().and_then(Value::as_step);
                let tb = b[*to].as_ref().and_then(Value::as_step);
                let pairs: Vec<(StepId, StepId)> = match (fb, tb) {
                    (Some(x), Some(y)) => {
                        if plan.precedes(x, y) {
                            vec![(x, y)]
                        } else {
                            Vec::new()
                        }
                    }
                    (Some(x), None) => plan.successors(x).into_iter().map(|y| (x, y)).collect(),
                    (None, Some(y)) => plan
                        .step_ids()
                        .filter(|&x| plan.precedes(x, y))
                        .map(|x| (x, y))
                        .collect(),
                    (None, None) => {
                        let ids: Vec<StepId> = plan.step_ids().collect();
                        let mut v = Vec::new();
                        for &x in &ids {
                            for &y in &ids {
                                if plan.precedes(x, y) {
                                    v.push((x, y));
                                }
                            }
                        }
                        v
                    }
                };
                for (x, y) in pairs {
                    if let Some(a) = unify(b, &[(*from, Value::Step(x)), (*to, Value::Step(y))], &[], &[]) {
                        out.push(a);
                    }
                }
            }
            Conjunct::Threat { from, to } => {
                for &(x, y) in &view.threat_orderings {
                    if let Some(a) = unify(b, &[(*from, Value::Step(x)), (*to, Value::Step(y))], &[], &[]) {
                        out.push(a);
                    }
                }
            }
            Conjunct::Constraint { predicate, args } => {
                let given: Vec<Option<Value>> = args
                    .iter()
                    .map(|a| match a {
                        Pat::Const(c) => Some(Value::Const(c.clone())),
                        Pat::Var(v) => b[*v].clone(),
                    })
                    .collect();
                for tuple in predicate.evaluate(plan, &given) {
                    let mut asg: Vec<(usize, Value)> = Vec::new();
                    let mut ok = true;
                    for (a, val) in args.iter().zip(tuple) {
                        if let Pat::Var(v) = a {
                            if b[*v].is_none() {
                                match asg.iter().find(|(k, _)| k == v) {
                                    Some((_, prev)) if *prev != val => ok = false,
                                    Some(_) => {}
                                    None => asg.push((*v, val)),
                                }
                            }
                        }
                    }
                    if ok {
                        out.push(asg);
                    }
                }
            }
        }
        out
    }
}

/// Extends bindings `b` with fixed node assignments and a row matched
/// against argument patterns; `None` on any disagreement.
fn unify(b: &[Option<Value>], fixed: &[(usize, Value)], pats: &[Pat], row: &[Symbol]) -> Option<Vec<(usize, Value)>> {
    if pats.len() != row.len() {
        return None;
    }
    let mut asg: Vec<(usize, Value)> = Vec::new();
    let bind = |v: usize, val: Value, asg: &mut Vec<(usize, Value)>| -> bool {
        if let Some(cur) = &b[v] {
            return *cur == val;
        }
        match asg.iter().find(|(k, _)| *k == v) {
            Some((_, prev)) => *prev == val,
            None => {
                asg.push((v, val));
                true
            }
        }
    };
    for (v, val) in fixed {
        if !bind(*v, val.clone(), &mut asg) {
            return None;
        }
    }
    for (p, val) in pats.iter().zip(row) {
        match p {
            Pat::Const(c) => {
                if c != val {
                    return None;
                }
            }
            Pat::Var(v) => {
                if !bind(*v, Value::Const(val.clone()), &mut asg) {
                    return None;
                }
            }
        }
    }
    Some(asg)
}

struct Frame {
    cands: Vec<Vec<(usize, Value)>>,
    next: usize,
    applied: Vec<usize>,
}

/// Lazy stream of the substitutions satisfying a rule antecedent.
pub struct MatchIter<'a> {
    plan: &'a PartialPlan,
    query: Query,
    order: Vec<usize>,
    binding: Vec<Option<Value>>,
    stack: Vec<Frame>,
    rng: Option<ChaCha8Rng>,
    seen: HashSet<Vec<Value>>,
    started: bool,
}

impl MatchIter<'_> {
    fn frame(&mut self, depth: usize) -> Frame {
        let c = &self.query.conjuncts[self.order[depth]];
        let mut cands = self.query.candidates(c, self.plan, &self.binding);
        if let Some(rng) = &mut self.rng {
            cands.shuffle(rng);
        }
        Frame {
            cands,
            next: 0,
            applied: Vec::new(),
        }
    }

    fn emit(&mut self) -> Option<Substitution> {
        let values: Option<Vec<Value>> = self.binding.iter().cloned().collect();
        let values = values?;
        if !self.seen.insert(values.clone()) {
            return None;
        }
        Some(Substitution::new(self.query.vars.iter().cloned().zip(values).collect()))
    }
}

impl Iterator for MatchIter<'_> {
    type Item = Substitution;

    fn next(&mut self) -> Option<Substitution> {
        if !self.started {
            self.started = true;
            if self.order.is_empty() {
                return self.emit();
            }
            let f = self.frame(0);
            self.stack.push(f);
        }
        loop {
            let depth = self.stack.len().checked_sub(1)?;
            let frame = self.stack.last_mut().expect("non-empty");
            for v in frame.applied.drain(..) {
                self.binding[v] = None;
            }
            if frame.next >= frame.cands.len() {
                self.stack.pop();
                continue;
            }
            let cand = frame.cands[frame.next].clone();
            frame.next += 1;
            for (v, val) in cand {
                self.binding[v] = Some(val);
                frame.applied.push(v);
            }
            if depth + 1 == self.order.len() {
                if let Some(s) = self.emit() {
                    return Some(s);
                }
            } else {
                let f = self.frame(depth + 1);
                self.stack.push(f);
            }
        }
    }
}

/// Streams matches. With a seed, every candidate list is shuffled by a
/// generator seeded from it; without one, rows come in table order.
pub fn match_lazy<'a>(
    rule: &RewritingRule,
    plan: &'a PartialPlan,
    seed: Option<u64>,
) -> Result<MatchIter<'a>, MatchError> {
    let query = Query::new(rule);
    let order = query.schedule(plan)?;
    Ok(MatchIter {
        plan,
        binding: vec![None; query.vars.len()],
        query,
        order,
        stack: Vec::new(),
        rng: seed.map(ChaCha8Rng::seed_from_u64),
        seen: HashSet::new(),
        started: false,
    })
}

/// Every match, deduplicated and sorted by value.
pub fn match_all(rule: &RewritingRule, plan: &PartialPlan) -> Result<Vec<Substitution>, MatchError> {
    let mut all: Vec<Substitution> = match_lazy(rule, plan, None)?.collect();
    all.sort();
    all.dedup();
    Ok(all)
}
