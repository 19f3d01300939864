//! Applying rewriting rules: remove the matched subplan, add the
//! replacement, and complete the result with [`rpop`].

mod rpop;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matcher::{match_all, match_lazy, MatchError, MatchIter, Substitution};
use crate::model::{Atom, GroundAtom, Grounder, ModelError, Term};
use crate::plan::{CausalLink, Flaw, OrderingOrigin, PartialPlan, StepId, Value};
use crate::rules::{LinkKind, RewritingRule};
use crate::symbol::Symbol;

pub use rpop::{rpop, Completion, Repair, Want};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("rule {rule}: {message}")]
    RuleDefect { rule: String, message: String },
}

/// A rewritten plan with the decisions that produced it.
#[derive(Clone, Debug)]
pub struct Neighbor {
    pub plan: PartialPlan,
    pub rule: Symbol,
    pub substitution: Substitution,
    pub removed: Vec<StepId>,
    pub added: Vec<StepId>,
    pub repairs: Vec<Repair>,
}

impl Neighbor {
    /// One-line trace record.
    pub fn describe(&self) -> String {
        let ids = |v: &[StepId]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        let repairs = self
            .repairs
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        format!(
            "rule={} subst={} removed=[{}] added=[{}] repairs=[{}]",
            self.rule,
            self.substitution,
            ids(&self.removed),
            ids(&self.added),
            repairs
        )
    }
}

fn defect(rule: &RewritingRule, message: impl Into<String>) -> RewriteError {
    RewriteError::RuleDefect {
        rule: rule.name.to_string(),
        message: message.into(),
    }
}

fn node(
    rule: &RewritingRule,
    sigma: &Substitution,
    new: &BTreeMap<Symbol, StepId>,
    var: &Symbol,
) -> Result<StepId, RewriteError> {
    if let Some(&id) = new.get(var) {
        return Ok(id);
    }
    sigma
        .step(var.as_str())
        .ok_or_else(|| defect(rule, format!("`{var}` is not bound to a step")))
}

fn ground_args(rule: &RewritingRule, sigma: &Substitution, a: &Atom) -> Result<Vec<Symbol>, RewriteError> {
    a.args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => match sigma.get(v.as_str()) {
                Some(Value::Const(c)) => Ok(c.clone()),
                Some(Value::Step(_)) => Err(defect(rule, format!("`{v}` names a step, not a constant"))),
                None => Err(defect(rule, format!("`{v}` is unbound in the replacement"))),
            },
        })
        .collect()
}

fn ground_atom(rule: &RewritingRule, sigma: &Substitution, a: &Atom) -> Result<GroundAtom, RewriteError> {
    Ok(GroundAtom {
        predicate: a.predicate.clone(),
        args: ground_args(rule, sigma, a)?,
    })
}

/// Origin recorded for an ordering a rule states: resource serialization
/// when the steps share a resource, threat resolution when one deletes a
/// condition linked to or from the other, otherwise a plain rewrite ordering.
fn classify(plan: &PartialPlan, before: StepId, after: StepId) -> OrderingOrigin {
    let (Some(a), Some(b)) = (plan.action(before), plan.action(after)) else {
        return OrderingOrigin::Rewrite;
    };
    if !a.resources.is_disjoint(&b.resources) {
        return OrderingOrigin::ResourceSerialization;
    }
    let threat = plan.links().any(|l| {
        (l.producer == after && a.deletes.contains(&l.condition))
            || (l.consumer == before && b.deletes.contains(&l.condition))
    });
    if threat {
        OrderingOrigin::ThreatResolution
    } else {
        OrderingOrigin::Rewrite
    }
}

/// Rewrites `plan` at one match. An empty result means the rewrite is
/// impossible here: a pseudo-step would be replaced, a replacement action's
/// constraints fail, or no completion exists. The input is not modified.
pub fn rewrite_at(
    plan: &PartialPlan,
    rule: &RewritingRule,
    sigma: &Substitution,
    grounder: &Grounder,
    want: Want,
) -> Result<Vec<Neighbor>, RewriteError> {
    let no_map = BTreeMap::new();
    let mut removed = BTreeSet::new();
    for v in &rule.replace.nodes {
        let id = node(rule, sigma, &no_map, v)?;
        if id.is_pseudo() {
            return Ok(Vec::new());
        }
        removed.insert(id);
    }

    let mut p = plan.clone();
    p.flaws.clear();
    let mut doomed_links = BTreeSet::new();
    for l in &rule.replace.links {
        let (from, to) = (node(rule, sigma, &no_map, &l.from)?, node(rule, sigma, &no_map, &l.to)?);
        match &l.kind {
            LinkKind::Causal(a) => {
                doomed_links.insert(CausalLink {
                    producer: from,
                    condition: ground_atom(rule, sigma, a)?,
                    consumer: to,
                });
            }
            LinkKind::Ordering | LinkKind::Threat => {
                p.remove_ordering(from, to);
            }
        }
    }
    let mut open = p
        .remove_subplan(&removed, &doomed_links)
        .map_err(|e| defect(rule, e.to_string()))?;

    let mut new_ids = BTreeMap::new();
    let mut added = Vec::new();
    for n in &rule.with.nodes {
        let Some(a) = &n.predicate else {
            return Err(defect(rule, format!("replacement node `{}` has no action", n.var)));
        };
        let args = ground_args(rule, sigma, a)?;
        let action = match grounder.ground(a.predicate.as_str(), &args) {
            Ok(act) => act,
            Err(ModelError::ConstraintFailed { .. }) => return Ok(Vec::new()),
            Err(e) => return Err(defect(rule, e.to_string())),
        };
        let id = p.add_step(Arc::new(action));
        new_ids.insert(n.var.clone(), id);
        added.push(id);
    }

    for l in &rule.with.links {
        let (from, to) = (
            node(rule, sigma, &new_ids, &l.from)?,
            node(rule, sigma, &new_ids, &l.to)?,
        );
        if !p.contains(from) || !p.contains(to) {
            return Ok(Vec::new());
        }
        match &l.kind {
            LinkKind::Causal(a) => {
                let cond = ground_atom(rule, sigma, a)?;
                let ok = p.action(from).is_some_and(|x| x.adds.contains(&cond))
                    && p.action(to).is_some_and(|x| x.preconditions.contains(&cond));
                if !ok {
                    return Ok(Vec::new());
                }
                let link = CausalLink {
                    producer: from,
                    condition: cond,
                    consumer: to,
                };
                open.retain(|f| !matches!(f, Flaw::OpenCondition { condition, consumer } if *condition == link.condition && *consumer == to));
                let _ = p.add_link(link);
            }
            LinkKind::Ordering => {
                let origin = classify(&p, from, to);
                let _ = p.add_ordering(from, to, origin);
            }
            LinkKind::Threat => return Err(defect(rule, "threat links cannot be added")),
        }
    }
    if !p.is_acyclic() {
        return Ok(Vec::new());
    }
    for &id in &added {
        for condition in p.open_preconditions(id) {
            open.push(Flaw::OpenCondition {
                condition,
                consumer: id,
            });
        }
    }
    p.flaws = open;

    let removed: Vec<StepId> = removed.into_iter().collect();
    Ok(rpop(p, want)
        .into_iter()
        .map(|c| Neighbor {
            plan: c.plan,
            rule: rule.name.clone(),
            substitution: sigma.clone(),
            removed: removed.clone(),
            added: added.clone(),
            repairs: c.repairs,
        })
        .collect())
}

/// Rewrites `plan` with one rule. With [`Want::First`] the matches are
/// streamed (shuffled when `seed` is given) and the first successful
/// embedding is returned; with [`Want::All`] every embedding of every match.
pub fn rewrite(
    plan: &PartialPlan,
    rule: &RewritingRule,
    grounder: &Grounder,
    want: Want,
    seed: Option<u64>,
) -> Result<Vec<Neighbor>, RewriteError> {
    match want {
        Want::First => {
            for sigma in match_lazy(rule, plan, seed)? {
                let got = rewrite_at(plan, rule, &sigma, grounder, Want::First)?;
                if !got.is_empty() {
                    return Ok(got);
                }
            }
            Ok(Vec::new())
        }
        Want::All => {
            let mut out = Vec::new();
            for sigma in match_all(rule, plan)? {
                out.extend(rewrite_at(plan, rule, &sigma, grounder, Want::All)?);
            }
            Ok(out)
        }
    }
}

/// Every rewriting of `plan` by every rule, all matches and all
/// embeddings, minus those identical to `plan` up to step renaming.
pub fn neighborhood_all(
    plan: &PartialPlan,
    rules: &[RewritingRule],
    grounder: &Grounder,
) -> Result<Vec<Neighbor>, RewriteError> {
    let mut out = Vec::new();
    for r in rules {
        out.extend(
            rewrite(plan, r, grounder, Want::All, None)?
                .into_iter()
                .filter(|n| !n.plan.isomorphic(plan)),
        );
    }
    Ok(out)
}

/// Lazy neighborhood: rules in shuffled order, matches streamed in shuffled
/// order, first embedding of each match.
pub struct LazyNeighborhood<'a> {
    plan: &'a PartialPlan,
    rules: &'a [RewritingRule],
    grounder: &'a Grounder,
    order: Vec<usize>,
    pos: usize,
    current: Option<MatchIter<'a>>,
    rng: ChaCha8Rng,
}

impl Iterator for LazyNeighborhood<'_> {
    type Item = Result<Neighbor, RewriteError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.current.is_none() {
                let &i = self.order.get(self.pos)?;
                self.pos += 1;
                match match_lazy(&self.rules[i], self.plan, Some(self.rng.gen())) {
                    Ok(it) => self.current = Some(it),
                    Err(e) => return Some(Err(e.into())),
                }
            }
            let rule = &self.rules[self.order[self.pos - 1]];
            let Some(sigma) = self.current.as_mut().and_then(Iterator::next) else {
                self.current = None;
                continue;
            };
            match rewrite_at(self.plan, rule, &sigma, self.grounder, Want::First) {
                Err(e) => return Some(Err(e)),
                Ok(v) => {
                    if let Some(n) = v.into_iter().find(|n| !n.plan.isomorphic(self.plan)) {
                        return Some(Ok(n));
                    }
                }
            }
        }
    }
}

pub fn neighborhood_lazy<'a>(
    plan: &'a PartialPlan,
    rules: &'a [RewritingRule],
    grounder: &'a Grounder,
    seed: u64,
) -> LazyNeighborhood<'a> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.shuffle(&mut rng);
    LazyNeighborhood {
        plan,
        rules,
        grounder,
        order,
        pos: 0,
        current: None,
        rng,
    }
}
