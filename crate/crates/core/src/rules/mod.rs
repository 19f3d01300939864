//! Plan-rewriting rules: representation, parsing, printing, and the
//! interpreted-predicate registry.

mod parse;
mod print;
mod registry;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::model::{Atom, Term};
use crate::sexpr::ParseError;
use crate::symbol::Symbol;

pub use parse::{parse_rule, parse_rules};
pub use print::{print_rule, print_rules};
pub use registry::{builtin_library, Evaluator, InterpretedPredicate, Registry, REGULAR_SHAPES};

/// `(?n (stack ?b1 ?b3 Table))`, optionally matching a resource of the step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NodeSpec {
    pub var: Symbol,
    pub predicate: Option<Atom>,
    pub resource: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LinkKind {
    /// `(?a ?b)`: any precedence.
    Ordering,
    /// `(?a (cond ...) ?b)`: a causal link.
    Causal(Atom),
    /// `(?a :threat ?b)`: an ordering that resolves a threat or resource conflict.
    Threat,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinkSpec {
    pub from: Symbol,
    pub kind: LinkKind,
    pub to: Symbol,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ConstraintCall {
    pub predicate: Arc<InterpretedPredicate>,
    pub args: Vec<Term>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GraphSpec {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

impl GraphSpec {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.links.is_empty()
    }
}

/// The part of the plan a rule removes.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ReplaceSpec {
    pub nodes: Vec<Symbol>,
    pub links: Vec<LinkSpec>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RewritingRule {
    pub name: Symbol,
    pub antecedent: GraphSpec,
    pub constraints: Vec<ConstraintCall>,
    pub replace: ReplaceSpec,
    pub with: GraphSpec,
    /// Asserts that the replacement lists every link it needs. Only a hint.
    pub fully_specified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{pos}: unknown interpreted predicate `{name}`")]
    UnknownPredicate { name: String, pos: crate::sexpr::Pos },
    #[error("{pos}: `{name}` takes {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        pos: crate::sexpr::Pos,
    },
    #[error("interpreted predicate `{0}` is already registered")]
    DuplicatePredicate(String),
    #[error("rule {rule}: `{var}` is used both as a node variable and a predicate variable")]
    NodeVarClash { rule: String, var: String },
    #[error("rule {rule}: constraint {constraint} needs `{var}` bound, but nothing binds it")]
    UnsafeConstraint {
        rule: String,
        constraint: String,
        var: String,
    },
    #[error("rule {rule}: replaced `{var}` does not occur in the antecedent")]
    ReplacedNotInAntecedent { rule: String, var: String },
    #[error("rule {rule}: replacement variable `{var}` is not bound by the antecedent or a constraint")]
    UnboundReplacementVariable { rule: String, var: String },
    #[error("rule {rule}: replacement node `{var}` {problem}")]
    BadReplacementNode {
        rule: String,
        var: String,
        problem: &'static str,
    },
    #[error("rule {rule}: replacement link {link} {problem}")]
    BadReplacementLink {
        rule: String,
        link: String,
        problem: &'static str,
    },
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LinkKind::Ordering => write!(f, "({} {})", self.from, self.to),
            LinkKind::Causal(a) => write!(f, "({} {a} {})", self.from, self.to),
            LinkKind::Threat => write!(f, "({} :threat {})", self.from, self.to),
        }
    }
}

impl fmt::Display for NodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.var)?;
        if let Some(p) = &self.predicate {
            write!(f, " {p}")?;
        }
        if self.resource {
            f.write_str(" :resource")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for ConstraintCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

fn push_new(out: &mut Vec<Symbol>, s: &Symbol) {
    if s.is_variable() && !out.contains(s) {
        out.push(s.clone());
    }
}

fn atom_vars(a: &Atom, out: &mut Vec<Symbol>) {
    for v in a.variables() {
        push_new(out, v);
    }
}

fn link_vars(l: &LinkSpec, out: &mut Vec<Symbol>) {
    push_new(out, &l.from);
    if let LinkKind::Causal(a) = &l.kind {
        atom_vars(a, out);
    }
    push_new(out, &l.to);
}

impl RewritingRule {
    /// Variables bound by matching the antecedent, constraints included, in
    /// order of first occurrence.
    pub fn antecedent_variables(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for n in &self.antecedent.nodes {
            push_new(&mut out, &n.var);
            if let Some(p) = &n.predicate {
                atom_vars(p, &mut out);
            }
        }
        for l in &self.antecedent.links {
            link_vars(l, &mut out);
        }
        for c in &self.constraints {
            for a in &c.args {
                if let Term::Var(v) = a {
                    push_new(&mut out, v);
                }
            }
        }
        out
    }

    /// Node variables of the antecedent: those naming steps.
    pub fn antecedent_nodes(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for n in &self.antecedent.nodes {
            out.insert(n.var.clone());
        }
        for l in &self.antecedent.links {
            out.insert(l.from.clone());
            out.insert(l.to.clone());
        }
        out
    }

    /// Variables bound once the antecedent's graph part has matched.
    fn graph_bound(&self) -> BTreeSet<Symbol> {
        let mut v = Vec::new();
        for n in &self.antecedent.nodes {
            push_new(&mut v, &n.var);
            if let Some(p) = &n.predicate {
                atom_vars(p, &mut v);
            }
        }
        for l in &self.antecedent.links {
            link_vars(l, &mut v);
        }
        v.into_iter().collect()
    }

    /// Static well-formedness: node and predicate variables are disjoint,
    /// constraints can be scheduled, the replaced part lies inside the
    /// antecedent, and the replacement is fully determined.
    pub fn check(&self) -> Result<(), RuleError> {
        let rule = self.name.to_string();
        let nodes = self.antecedent_nodes();
        let mut pred_vars = Vec::new();
        for n in self.antecedent.nodes.iter().chain(&self.with.nodes) {
            if let Some(p) = &n.predicate {
                atom_vars(p, &mut pred_vars);
            }
        }
        for l in self
            .antecedent
            .links
            .iter()
            .chain(&self.replace.links)
            .chain(&self.with.links)
        {
            if let LinkKind::Causal(a) = &l.kind {
                atom_vars(a, &mut pred_vars);
            }
        }
        let with_nodes: BTreeSet<Symbol> = self.with.nodes.iter().map(|n| n.var.clone()).collect();
        if let Some(v) = pred_vars.iter().find(|v| nodes.contains(*v) || with_nodes.contains(*v)) {
            return Err(RuleError::NodeVarClash {
                rule,
                var: v.to_string(),
            });
        }

        let mut bound = self.graph_bound();
        let mut pending: Vec<&ConstraintCall> = self.constraints.iter().collect();
        while !pending.is_empty() {
            let ready = pending.iter().position(|c| {
                c.args
                    .iter()
                    .zip(&c.predicate.required)
                    .all(|(a, &req)| !req || a.as_var().is_none_or(|v| bound.contains(v)))
            });
            let Some(i) = ready else {
                let c = pending[0];
                let var = c
                    .args
                    .iter()
                    .zip(&c.predicate.required)
                    .find_map(|(a, &req)| a.as_var().filter(|v| req && !bound.contains(*v)))
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                return Err(RuleError::UnsafeConstraint {
                    rule,
                    constraint: c.to_string(),
                    var,
                });
            };
            let c = pending.remove(i);
            bound.extend(c.args.iter().filter_map(|a| a.as_var().cloned()));
        }

        for v in &self.replace.nodes {
            if !nodes.contains(v) {
                return Err(RuleError::ReplacedNotInAntecedent {
                    rule,
                    var: v.to_string(),
                });
            }
        }
        let mut replace_vars = Vec::new();
        for l in &self.replace.links {
            link_vars(l, &mut replace_vars);
        }
        if let Some(v) = replace_vars.iter().find(|v| !bound.contains(*v)) {
            return Err(RuleError::ReplacedNotInAntecedent {
                rule,
                var: v.to_string(),
            });
        }

        let mut seen = BTreeSet::new();
        for n in &self.with.nodes {
            let bad = |problem| RuleError::BadReplacementNode {
                rule: rule.clone(),
                var: n.var.to_string(),
                problem,
            };
            if bound.contains(&n.var) {
                return Err(bad("is already bound by the antecedent"));
            }
            if !seen.insert(n.var.clone()) {
                return Err(bad("is declared twice"));
            }
            if n.resource {
                return Err(bad("cannot be a resource pattern"));
            }
            let Some(p) = &n.predicate else {
                return Err(bad("has no action"));
            };
            if let Some(v) = p.variables().find(|v| !bound.contains(*v)) {
                return Err(RuleError::UnboundReplacementVariable {
                    rule,
                    var: v.to_string(),
                });
            }
        }
        let replaced: BTreeSet<&Symbol> = self.replace.nodes.iter().collect();
        for l in &self.with.links {
            let bad = |problem| RuleError::BadReplacementLink {
                rule: rule.clone(),
                link: l.to_string(),
                problem,
            };
            if matches!(l.kind, LinkKind::Threat) {
                return Err(bad("cannot be a threat link"));
            }
            for end in [&l.from, &l.to] {
                if replaced.contains(end) {
                    return Err(bad("refers to a replaced step"));
                }
                if !nodes.contains(end) && !with_nodes.contains(end) {
                    return Err(bad("refers to an unknown node"));
                }
            }
            if let LinkKind::Causal(a) = &l.kind {
                if let Some(v) = a.variables().find(|v| !bound.contains(*v)) {
                    return Err(RuleError::UnboundReplacementVariable {
                        rule,
                        var: v.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}
