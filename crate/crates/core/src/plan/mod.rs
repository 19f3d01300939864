//! Partial-order plans: steps, causal links, ordering constraints and flaws.

mod closure;
mod critical;
mod io;
mod iso;
mod linearize;
mod to2po;
mod validate;
mod view;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::model::{GroundAction, GroundAtom, ModelError, ProblemSpec};
use crate::sexpr::ParseError;

use closure::Closure;
pub use critical::CriticalInfo;
pub use io::{parse_plan, print_plan};
pub use linearize::{execute_linearization, linearizations, Linearizations, DEFAULT_LINEARIZATION_LIMIT};
pub use to2po::{to2po, To2poMode};
pub use validate::{ValidationReport, Violation};
pub use view::{RelationalView, Value};

/// Step identifier. `0` is the initial pseudo-step, [`StepId::GOAL`] the goal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepId(pub u32);

impl StepId {
    pub const INIT: StepId = StepId(0);
    pub const GOAL: StepId = StepId(u32::MAX);

    pub fn is_pseudo(self) -> bool {
        self == StepId::INIT || self == StepId::GOAL
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == StepId::GOAL {
            f.write_str("Goal")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Debug for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub id: StepId,
    pub action: Arc<GroundAction>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CausalLink {
    pub producer: StepId,
    pub condition: GroundAtom,
    pub consumer: StepId,
}

impl fmt::Display for CausalLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.producer, self.condition, self.consumer)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OrderingOrigin {
    /// Implied by a causal link; only appears in views, never stored.
    Causal,
    ThreatResolution,
    ResourceSerialization,
    Imported,
    /// Stated by a rewriting rule's replacement.
    Rewrite,
}

impl OrderingOrigin {
    pub fn tag(self) -> &'static str {
        match self {
            OrderingOrigin::Causal => "causal",
            OrderingOrigin::ThreatResolution => "threat",
            OrderingOrigin::ResourceSerialization => "resource",
            OrderingOrigin::Imported => "imported",
            OrderingOrigin::Rewrite => "rewrite",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        Some(match s {
            "causal" => OrderingOrigin::Causal,
            "threat" => OrderingOrigin::ThreatResolution,
            "resource" => OrderingOrigin::ResourceSerialization,
            "imported" => OrderingOrigin::Imported,
            "rewrite" => OrderingOrigin::Rewrite,
            _ => return None,
        })
    }

    /// Orderings that exist only to resolve a conflict.
    pub fn is_threat(self) -> bool {
        matches!(
            self,
            OrderingOrigin::ThreatResolution | OrderingOrigin::ResourceSerialization
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OrderingConstraint {
    pub before: StepId,
    pub after: StepId,
    pub origin: OrderingOrigin,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Flaw {
    OpenCondition { condition: GroundAtom, consumer: StepId },
    OperatorThreat { threatener: StepId, link: CausalLink },
    ResourceConflict { a: StepId, b: StepId, resource: GroundAtom },
}

impl Flaw {
    pub fn is_open_condition(&self) -> bool {
        matches!(self, Flaw::OpenCondition { .. })
    }
}

impl fmt::Display for Flaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flaw::OpenCondition { condition, consumer } => write!(f, "open condition {condition} at step {consumer}"),
            Flaw::OperatorThreat { threatener, link } => {
                write!(f, "step {threatener} threatens link {link}")
            }
            Flaw::ResourceConflict { a, b, resource } => {
                write!(f, "steps {a} and {b} both use {resource} unordered")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("unknown step {0}")]
    UnknownStep(StepId),
    #[error("step {0} is a pseudo-step")]
    PseudoStep(StepId),
    #[error("the ordering relation has a cycle")]
    Cycle,
    #[error("action {index} {action}: precondition {atom} is not supported")]
    Unsupported { index: usize, action: String, atom: String },
    #[error("goal {0} is not achieved by the sequence")]
    GoalUnachieved(String),
    #[error("plan has {steps} steps; enumeration is limited to {limit}")]
    TooLarge { steps: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A partial-order causal-link plan. Values are cheap to clone; derived
/// structures (ordering closure, critical paths, relational view) are cached
/// and dropped on mutation.
#[derive(Clone)]
pub struct PartialPlan {
    steps: BTreeMap<StepId, Step>,
    links: BTreeSet<CausalLink>,
    orderings: BTreeMap<(StepId, StepId), OrderingOrigin>,
    /// Pending repairs while the plan is incomplete.
    pub flaws: Vec<Flaw>,
    next_id: u32,
    closure: OnceLock<Arc<Closure>>,
    critical: OnceLock<Arc<CriticalInfo>>,
    view: OnceLock<Arc<RelationalView>>,
}

impl PartialEq for PartialPlan {
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps && self.links == other.links && self.orderings == other.orderings
    }
}

impl Eq for PartialPlan {}

impl fmt::Debug for PartialPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialPlan")
            .field(
                "steps",
                &self
                    .steps
                    .values()
                    .map(|s| (s.id, s.action.to_string()))
                    .collect::<Vec<_>>(),
            )
            .field("links", &self.links)
            .field("orderings", &self.orderings)
            .finish()
    }
}

impl PartialPlan {
    /// A plan holding only the two pseudo-steps.
    pub fn new(init: &BTreeSet<GroundAtom>, goal: &[GroundAtom]) -> Self {
        let mut steps = BTreeMap::new();
        steps.insert(
            StepId::INIT,
            Step {
                id: StepId::INIT,
                action: Arc::new(GroundAction::initial(init)),
            },
        );
        steps.insert(
            StepId::GOAL,
            Step {
                id: StepId::GOAL,
                action: Arc::new(GroundAction::goal(goal)),
            },
        );
        PartialPlan {
            steps,
            links: BTreeSet::new(),
            orderings: BTreeMap::new(),
            flaws: Vec::new(),
            next_id: 1,
            closure: OnceLock::new(),
            critical: OnceLock::new(),
            view: OnceLock::new(),
        }
    }

    pub fn for_problem(problem: &ProblemSpec) -> Self {
        Self::new(&problem.init, &problem.goal)
    }

    fn touch_structure(&mut self) {
        self.closure = OnceLock::new();
        self.touch_derived();
    }

    fn touch_derived(&mut self) {
        self.critical = OnceLock::new();
        self.view = OnceLock::new();
    }

    pub fn step(&self, id: StepId) -> Option<&Step> {
        self.steps.get(&id)
    }

    pub fn action(&self, id: StepId) -> Option<&Arc<GroundAction>> {
        self.steps.get(&id).map(|s| &s.action)
    }

    pub fn contains(&self, id: StepId) -> bool {
        self.steps.contains_key(&id)
    }

    /// All steps in id order, pseudo-steps included.
    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.steps.values()
    }

    pub fn step_ids(&self) -> impl Iterator<Item = StepId> + '_ {
        self.steps.keys().copied()
    }

    /// Non-pseudo steps in id order.
    pub fn real_steps(&self) -> impl Iterator<Item = &Step> {
        self.steps.values().filter(|s| !s.id.is_pseudo())
    }

    pub fn num_real_steps(&self) -> usize {
        self.steps.len() - 2
    }

    pub fn init_state(&self) -> &BTreeSet<GroundAtom> {
        &self.steps[&StepId::INIT].action.adds
    }

    pub fn goal_atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.steps[&StepId::GOAL].action.preconditions
    }

    pub fn links(&self) -> impl Iterator<Item = &CausalLink> {
        self.links.iter()
    }

    pub fn has_link(&self, link: &CausalLink) -> bool {
        self.links.contains(link)
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// Explicit (non-causal) orderings.
    pub fn orderings(&self) -> impl Iterator<Item = OrderingConstraint> + '_ {
        self.orderings
            .iter()
            .map(|(&(before, after), &origin)| OrderingConstraint { before, after, origin })
    }

    pub fn ordering_origin(&self, before: StepId, after: StepId) -> Option<OrderingOrigin> {
        self.orderings.get(&(before, after)).copied()
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn add_step(&mut self, action: Arc<GroundAction>) -> StepId {
        let id = StepId(self.next_id);
        self.next_id += 1;
        self.insert_step(id, action);
        id
    }

    /// Inserts a step under a caller-chosen id (plan import).
    pub fn insert_step(&mut self, id: StepId, action: Arc<GroundAction>) {
        assert!(!id.is_pseudo(), "pseudo-steps are fixed");
        self.next_id = self.next_id.max(id.0 + 1);
        self.steps.insert(id, Step { id, action });
        self.touch_structure();
    }

    /// Removes a step together with every link and ordering that refers to it.
    pub fn remove_step(&mut self, id: StepId) -> Result<Step, PlanError> {
        if id.is_pseudo() {
            return Err(PlanError::PseudoStep(id));
        }
        let step = self.steps.remove(&id).ok_or(PlanError::UnknownStep(id))?;
        self.links.retain(|l| l.producer != id && l.consumer != id);
        self.orderings.retain(|&(a, b), _| a != id && b != id);
        self.touch_structure();
        Ok(step)
    }

    pub fn add_link(&mut self, link: CausalLink) -> Result<bool, PlanError> {
        for id in [link.producer, link.consumer] {
            if !self.contains(id) {
                return Err(PlanError::UnknownStep(id));
            }
        }
        let (p, c) = (link.producer, link.consumer);
        if !self.links.insert(link) {
            return Ok(false);
        }
        self.note_edge(p, c);
        Ok(true)
    }

    pub fn remove_link(&mut self, link: &CausalLink) -> bool {
        let removed = self.links.remove(link);
        if removed {
            self.touch_structure();
        }
        removed
    }

    /// Adds an explicit ordering; returns false if that edge already existed.
    pub fn add_ordering(&mut self, before: StepId, after: StepId, origin: OrderingOrigin) -> Result<bool, PlanError> {
        for id in [before, after] {
            if !self.contains(id) {
                return Err(PlanError::UnknownStep(id));
            }
        }
        if self.orderings.contains_key(&(before, after)) {
            return Ok(false);
        }
        self.orderings.insert((before, after), origin);
        self.note_edge(before, after);
        Ok(true)
    }

    pub fn remove_ordering(&mut self, before: StepId, after: StepId) -> Option<OrderingOrigin> {
        let removed = self.orderings.remove(&(before, after));
        if removed.is_some() {
            self.touch_structure();
        }
        removed
    }

    fn note_edge(&mut self, a: StepId, b: StepId) {
        if let Some(c) = self.closure.get_mut() {
            Arc::make_mut(c).add_edge(a, b);
        }
        self.touch_derived();
    }

    fn closure(&self) -> &Closure {
        self.closure.get_or_init(|| Arc::new(Closure::build(self)))
    }

    /// Strict precedence in the transitive closure of all orderings.
    /// Unknown ids precede nothing.
    pub fn precedes(&self, a: StepId, b: StepId) -> bool {
        self.closure().precedes(a, b)
    }

    pub fn try_precedes(&self, a: StepId, b: StepId) -> Result<bool, PlanError> {
        for id in [a, b] {
            if !self.contains(id) {
                return Err(PlanError::UnknownStep(id));
            }
        }
        Ok(self.precedes(a, b))
    }

    pub fn is_acyclic(&self) -> bool {
        self.closure().acyclic
    }

    /// `s` can be ordered strictly between `a` and `b`.
    pub fn possibly_between(&self, s: StepId, a: StepId, b: StepId) -> bool {
        s != a && s != b && !self.precedes(s, a) && !self.precedes(b, s)
    }

    /// `a` and `b` are consecutive in some linearization.
    pub fn possibly_adjacent(&self, a: StepId, b: StepId) -> bool {
        if a == b || !self.contains(a) || !self.contains(b) || self.precedes(b, a) {
            return false;
        }
        self.closure().nothing_between(a, b)
    }

    /// Steps that must come after `a`.
    pub fn successors(&self, a: StepId) -> Vec<StepId> {
        self.closure().successors(a)
    }

    /// Removes the given steps and links and returns the open conditions left
    /// behind: every surviving consumer of a removed link.
    pub fn remove_subplan(
        &mut self,
        doomed: &BTreeSet<StepId>,
        doomed_links: &BTreeSet<CausalLink>,
    ) -> Result<Vec<Flaw>, PlanError> {
        for &id in doomed {
            if id.is_pseudo() {
                return Err(PlanError::PseudoStep(id));
            }
            if !self.contains(id) {
                return Err(PlanError::UnknownStep(id));
            }
        }
        let mut open = BTreeSet::new();
        for l in &self.links {
            let link_dies = doomed_links.contains(l) || doomed.contains(&l.producer) || doomed.contains(&l.consumer);
            if link_dies && !doomed.contains(&l.consumer) {
                open.insert((l.condition.clone(), l.consumer));
            }
        }
        if doomed.is_empty() && doomed_links.is_empty() {
            return Ok(Vec::new());
        }
        self.links
            .retain(|l| !(doomed_links.contains(l) || doomed.contains(&l.producer) || doomed.contains(&l.consumer)));
        self.orderings
            .retain(|&(a, b), _| !doomed.contains(&a) && !doomed.contains(&b));
        for id in doomed {
            self.steps.remove(id);
        }
        self.touch_structure();
        Ok(open
            .into_iter()
            .map(|(condition, consumer)| Flaw::OpenCondition { condition, consumer })
            .collect())
    }

    /// Preconditions of `id` that no causal link supports.
    pub fn open_preconditions(&self, id: StepId) -> Vec<GroundAtom> {
        let Some(step) = self.steps.get(&id) else {
            return Vec::new();
        };
        step.action
            .preconditions
            .iter()
            .filter(|p| !self.links.iter().any(|l| l.consumer == id && &l.condition == *p))
            .cloned()
            .collect()
    }

    pub fn critical_info(&self) -> &CriticalInfo {
        self.critical.get_or_init(|| Arc::new(CriticalInfo::compute(self)))
    }

    pub fn relational_view(&self) -> &RelationalView {
        self.view.get_or_init(|| Arc::new(RelationalView::build(self)))
    }

    /// Structural identity of steps by action, ignoring ids: two plans that
    /// differ only in StepId numbering yield the same key.
    pub fn canonical_key(&self) -> String {
        iso::canonical_key(self)
    }

    /// Equal up to a renaming of non-pseudo StepIds.
    pub fn isomorphic(&self, other: &PartialPlan) -> bool {
        iso::isomorphic(self, other)
    }
}

#[cfg(test)]
pub(crate) mod fixtures;
