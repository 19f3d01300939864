use std::collections::BTreeMap;
use std::fmt;

use super::{CausalLink, Flaw, PartialPlan, StepId};
use crate::model::GroundAtom;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Cycle,
    UnknownStep(StepId),
    Unsupported { step: StepId, atom: GroundAtom },
    ProducerLacksEffect(CausalLink),
    ConsumerLacksPrecondition(CausalLink),
    Threat { threatener: StepId, link: CausalLink },
    UnorderedResource { a: StepId, b: StepId, resource: GroundAtom },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle => f.write_str("ordering constraints form a cycle"),
            Violation::UnknownStep(s) => write!(f, "reference to unknown step {s}"),
            Violation::Unsupported { step, atom } => {
                write!(f, "precondition {atom} of step {step} has no causal link")
            }
            Violation::ProducerLacksEffect(l) => {
                write!(f, "link {l}: producer does not add the condition")
            }
            Violation::ConsumerLacksPrecondition(l) => {
                write!(f, "link {l}: consumer does not need the condition")
            }
            Violation::Threat { threatener, link } => {
                write!(f, "step {threatener} threatens {} of link {link}", link.condition)
            }
            Violation::UnorderedResource { a, b, resource } => {
                write!(f, "steps {a} and {b} share {resource} but are unordered")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        writeln!(f, "invalid ({} violations)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl PartialPlan {
    /// Steps that delete `link`'s condition and may fall between its ends.
    pub fn threats_to(&self, link: &CausalLink) -> Vec<StepId> {
        self.real_steps()
            .filter(|s| {
                s.action.deletes.contains(&link.condition) && self.possibly_between(s.id, link.producer, link.consumer)
            })
            .map(|s| s.id)
            .collect()
    }

    /// Every link `s` may clobber.
    pub fn links_threatened_by(&self, s: StepId) -> Vec<CausalLink> {
        let Some(step) = self.step(s) else {
            return Vec::new();
        };
        if step.action.deletes.is_empty() {
            return Vec::new();
        }
        self.links()
            .filter(|l| step.action.deletes.contains(&l.condition) && self.possibly_between(s, l.producer, l.consumer))
            .cloned()
            .collect()
    }

    /// Unordered pairs of steps sharing a resource, one entry per pair and
    /// resource, with `a < b`.
    pub fn resource_conflicts(&self) -> Vec<Flaw> {
        let mut users: BTreeMap<&GroundAtom, Vec<StepId>> = BTreeMap::new();
        for s in self.real_steps() {
            for r in &s.action.resources {
                users.entry(r).or_default().push(s.id);
            }
        }
        let mut out = Vec::new();
        for (r, ids) in users {
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    if !self.precedes(a, b) && !self.precedes(b, a) {
                        out.push(Flaw::ResourceConflict {
                            a,
                            b,
                            resource: r.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Resource conflicts involving `s`.
    pub fn resource_conflicts_of(&self, s: StepId) -> Vec<Flaw> {
        let Some(step) = self.step(s) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for other in self.real_steps() {
            if other.id == s || self.precedes(s, other.id) || self.precedes(other.id, s) {
                continue;
            }
            for r in step.action.resources.intersection(&other.action.resources) {
                let (a, b) = if s < other.id { (s, other.id) } else { (other.id, s) };
                out.push(Flaw::ResourceConflict {
                    a,
                    b,
                    resource: r.clone(),
                });
            }
        }
        out
    }

    /// All operator threats and resource conflicts in the plan.
    pub fn find_threats(&self) -> Vec<Flaw> {
        let mut out = Vec::new();
        let deleters: Vec<_> = self.real_steps().filter(|s| !s.action.deletes.is_empty()).collect();
        for l in self.links() {
            for s in &deleters {
                if s.action.deletes.contains(&l.condition) && self.possibly_between(s.id, l.producer, l.consumer) {
                    out.push(Flaw::OperatorThreat {
                        threatener: s.id,
                        link: l.clone(),
                    });
                }
            }
        }
        out.extend(self.resource_conflicts());
        out
    }

    /// Checks acyclicity, link support, causal support of every
    /// precondition, absence of threats, and serialization of resource users.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        if !self.is_acyclic() {
            v.push(Violation::Cycle);
        }
        for o in self.orderings() {
            for id in [o.before, o.after] {
                if !self.contains(id) {
                    v.push(Violation::UnknownStep(id));
                }
            }
        }
        for l in self.links() {
            match (self.action(l.producer), self.action(l.consumer)) {
                (Some(p), Some(c)) => {
                    if !p.adds.contains(&l.condition) {
                        v.push(Violation::ProducerLacksEffect(l.clone()));
                    }
                    if !c.preconditions.contains(&l.condition) {
                        v.push(Violation::ConsumerLacksPrecondition(l.clone()));
                    }
                }
                (p, _) => v.push(Violation::UnknownStep(if p.is_none() {
                    l.producer
                } else {
                    l.consumer
                })),
            }
        }
        for s in self.steps() {
            for atom in self.open_preconditions(s.id) {
                v.push(Violation::Unsupported { step: s.id, atom });
            }
        }
        for f in self.find_threats() {
            v.push(match f {
                Flaw::OperatorThreat { threatener, link } => Violation::Threat { threatener, link },
                Flaw::ResourceConflict { a, b, resource } => Violation::UnorderedResource { a, b, resource },
                Flaw::OpenCondition { .. } => unreachable!("find_threats yields no open conditions"),
            });
        }
        ValidationReport { violations: v }
    }
}
