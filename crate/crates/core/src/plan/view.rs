use std::collections::BTreeMap;
use std::fmt;

use super::{OrderingOrigin, PartialPlan, StepId};
use crate::symbol::Symbol;

/// A cell in a relational table: a step id or a domain constant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Step(StepId),
    Const(Symbol),
}

impl Value {
    pub fn as_step(&self) -> Option<StepId> {
        match self {
            Value::Step(s) => Some(*s),
            Value::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Symbol> {
        match self {
            Value::Const(c) => Some(c),
            Value::Step(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Step(s) => write!(f, "{s}"),
            Value::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Row `(step, args...)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct StepRow {
    pub step: StepId,
    pub args: Vec<Symbol>,
}

/// Row `(producer, consumer, condition args...)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct LinkRow {
    pub producer: StepId,
    pub consumer: StepId,
    pub args: Vec<Symbol>,
}

/// The plan as tables, the form rule antecedents are evaluated against.
#[derive(Clone, Debug, Default)]
pub struct RelationalView {
    /// One table per action name; pseudo-steps are not included.
    pub actions: BTreeMap<Symbol, Vec<StepRow>>,
    /// One table per resource predicate.
    pub resources: BTreeMap<Symbol, Vec<StepRow>>,
    /// One table per causal-link condition predicate.
    pub links: BTreeMap<Symbol, Vec<LinkRow>>,
    /// Orderings that resolve threats or resource conflicts.
    pub threat_orderings: Vec<(StepId, StepId)>,
    /// Every direct ordering edge: causal ones and explicit ones.
    pub orderings: Vec<(StepId, StepId, OrderingOrigin)>,
}

impl RelationalView {
    pub(crate) fn build(plan: &PartialPlan) -> Self {
        let mut v = RelationalView::default();
        for s in plan.real_steps() {
            v.actions.entry(s.action.name.clone()).or_default().push(StepRow {
                step: s.id,
                args: s.action.args.clone(),
            });
            for r in &s.action.resources {
                v.resources.entry(r.predicate.clone()).or_default().push(StepRow {
                    step: s.id,
                    args: r.args.clone(),
                });
            }
        }
        for l in plan.links() {
            v.links.entry(l.condition.predicate.clone()).or_default().push(LinkRow {
                producer: l.producer,
                consumer: l.consumer,
                args: l.condition.args.clone(),
            });
        }
        for t in v.links.values_mut() {
            t.sort();
        }
        for t in v.resources.values_mut() {
            t.sort();
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in plan.links() {
            if seen.insert((l.producer, l.consumer)) {
                v.orderings.push((l.producer, l.consumer, OrderingOrigin::Causal));
            }
        }
        for o in plan.orderings() {
            v.orderings.push((o.before, o.after, o.origin));
            if o.origin.is_threat() {
                v.threat_orderings.push((o.before, o.after));
            }
        }
        v.orderings.sort();
        v
    }

    /// Text dump of every table, for debugging rule matches.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (name, rows) in &self.actions {
            let _ = writeln!(out, "action {name} ({} rows)", rows.len());
            for r in rows {
                let args: Vec<&str> = r.args.iter().map(|a| a.as_str()).collect();
                let _ = writeln!(out, "  {} {}", r.step, args.join(" "));
            }
        }
        for (name, rows) in &self.resources {
            let _ = writeln!(out, "resource {name} ({} rows)", rows.len());
            for r in rows {
                let args: Vec<&str> = r.args.iter().map(|a| a.as_str()).collect();
                let _ = writeln!(out, "  {} {}", r.step, args.join(" "));
            }
        }
        for (name, rows) in &self.links {
            let _ = writeln!(out, "link {name} ({} rows)", rows.len());
            for r in rows {
                let args: Vec<&str> = r.args.iter().map(|a| a.as_str()).collect();
                let _ = writeln!(out, "  {} {} {}", r.producer, r.consumer, args.join(" "));
            }
        }
        let _ = writeln!(out, "threat orderings ({} rows)", self.threat_orderings.len());
        for (a, b) in &self.threat_orderings {
            let _ = writeln!(out, "  {a} {b}");
        }
        out
    }
}
