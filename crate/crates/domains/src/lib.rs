//! Domain packs: Blocks World, manufacturing process planning, truck
//! logistics and distributed query planning.
//!
//! A pack bundles a domain file, its rewriting rules, the interpreted
//! predicates those rules need, a cost function, an initial-plan generator
//! and a seeded random problem generator. The data files live under
//! `packs/<name>/` and are compiled in.

pub mod blocks;
pub mod logistics;
pub mod manufacturing;
pub mod query;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use pbr_core::cost::{Catalog, CatalogError, CostFunction, QueryCost, ScheduleLength, StepCount};
use pbr_core::model::{parse_domain, DomainSpec, GroundAction, Grounder, ModelError, ProblemSpec, StaticRelations};
use pbr_core::plan::{to2po, PartialPlan, PlanError, To2poMode};
use pbr_core::rules::{builtin_library, parse_rules, Registry, RewritingRule, RuleError};
use pbr_core::scalar::Scalar;
use pbr_core::sexpr::ParseError;
use pbr_core::symbol::Symbol;
use rand::RngCore;

/// The generic resource-swap rule, usable with any domain that declares
/// `(machine ?x)` resources.
pub const RESOURCE_SWAP_RULE: &str = include_str!("../packs/generic/resource-swap.pbr");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PackError {
    #[error("unknown pack `{0}` (expected blocks, manufacturing, logistics or query)")]
    UnknownPack(String),
    #[error("domain file: {0}")]
    Domain(ParseError),
    #[error("rule file: {0}")]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("inconsistent goal: {0}")]
    InconsistentGoal(String),
    #[error("inconsistent initial state: {0}")]
    InconsistentState(String),
    #[error("goal {goal} is not supported by this pack")]
    UnsupportedGoal { goal: String },
    #[error("goal {goal} cannot be achieved: {reason}")]
    Unsolvable { goal: String, reason: String },
    #[error("no known location for {0}")]
    UnknownLocation(String),
    #[error("relation {0} is not in the catalog")]
    UnknownRelation(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("generator parameter {name} = {value} is out of range ({range})")]
    Params {
        name: &'static str,
        value: usize,
        range: &'static str,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PackKind {
    Blocks,
    Manufacturing,
    Logistics,
    Query,
}

impl PackKind {
    pub const ALL: [PackKind; 4] = [
        PackKind::Blocks,
        PackKind::Manufacturing,
        PackKind::Logistics,
        PackKind::Query,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PackKind::Blocks => "blocks",
            PackKind::Manufacturing => "manufacturing",
            PackKind::Logistics => "logistics",
            PackKind::Query => "query",
        }
    }

    pub fn domain_text(self) -> &'static str {
        match self {
            PackKind::Blocks => include_str!("../packs/blocks/domain.pbr"),
            PackKind::Manufacturing => include_str!("../packs/manufacturing/domain.pbr"),
            PackKind::Logistics => include_str!("../packs/logistics/domain.pbr"),
            PackKind::Query => include_str!("../packs/query/domain.pbr"),
        }
    }

    pub fn rules_text(self) -> &'static str {
        match self {
            PackKind::Blocks => include_str!("../packs/blocks/rules.pbr"),
            PackKind::Manufacturing => include_str!("../packs/manufacturing/rules.pbr"),
            PackKind::Logistics => include_str!("../packs/logistics/rules.pbr"),
            PackKind::Query => include_str!("../packs/query/rules.pbr"),
        }
    }

    /// Name of the cost function the pack optimizes.
    pub fn cost_name(self) -> &'static str {
        match self {
            PackKind::Blocks => "steps",
            PackKind::Manufacturing | PackKind::Logistics => "schedule",
            PackKind::Query => "query",
        }
    }
}

impl fmt::Display for PackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PackKind {
    type Err = PackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PackKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PackError::UnknownPack(s.to_string()))
    }
}

/// Size parameters for [`Pack::generate`].
///
/// | pack          | `size`            | `goals`                  | `sources`        |
/// |---------------|-------------------|--------------------------|------------------|
/// | blocks        | blocks, 1..=500   | unused                   | unused           |
/// | manufacturing | parts, 1..=26     | goals, 1..=4·parts (2·parts) | unused       |
/// | logistics     | packages, 1..=200 | unused (one per package) | unused           |
/// | query         | relations, 1..=30 | unused                   | sources, 1..=8 (2) |
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub size: usize,
    pub goals: Option<usize>,
    pub sources: Option<usize>,
}

impl GenParams {
    pub fn new(size: usize) -> Self {
        GenParams {
            size,
            goals: None,
            sources: None,
        }
    }

    pub fn with_goals(mut self, goals: usize) -> Self {
        self.goals = Some(goals);
        self
    }

    pub fn with_sources(mut self, sources: usize) -> Self {
        self.sources = Some(sources);
        self
    }
}

pub(crate) fn check_range(
    name: &'static str,
    value: usize,
    lo: usize,
    hi: usize,
    range: &'static str,
) -> Result<(), PackError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(PackError::Params { name, value, range })
    }
}

/// A loaded domain pack.
#[derive(Clone, Debug)]
pub struct Pack {
    kind: PackKind,
    domain: Arc<DomainSpec>,
    registry: Registry,
    rules: Vec<RewritingRule>,
}

impl Pack {
    pub fn load(kind: PackKind) -> Result<Pack, PackError> {
        Pack::from_texts(kind, kind.domain_text(), kind.rules_text())
    }

    /// A pack with its generators and predicates but another domain or
    /// rule file.
    pub fn from_texts(kind: PackKind, domain: &str, rules: &str) -> Result<Pack, PackError> {
        let domain = parse_domain(domain).map_err(PackError::Domain)?;
        let registry = registry(kind)?;
        let rules = parse_rules(rules, &registry)?;
        Ok(Pack {
            kind,
            domain: Arc::new(domain),
            registry,
            rules,
        })
    }

    pub fn kind(&self) -> PackKind {
        self.kind
    }

    pub fn domain(&self) -> &Arc<DomainSpec> {
        &self.domain
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn rules(&self) -> &[RewritingRule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&RewritingRule> {
        self.rules.iter().find(|r| r.name.as_str().eq_ignore_ascii_case(name))
    }

    /// Parses more rules against this pack's predicates.
    pub fn parse_rules(&self, text: &str) -> Result<Vec<RewritingRule>, PackError> {
        Ok(parse_rules(text, &self.registry)?)
    }

    /// Static relations operators of this pack may consult for `problem`.
    pub fn statics(&self, problem: &ProblemSpec) -> StaticRelations {
        match self.kind {
            PackKind::Query => query::statics(problem),
            _ => StaticRelations::default(),
        }
    }

    pub fn grounder(&self, problem: &ProblemSpec) -> Grounder {
        Grounder::new(self.domain.clone(), problem, self.statics(problem))
    }

    /// The generator's action sequence for `problem`.
    pub fn initial_sequence(
        &self,
        problem: &ProblemSpec,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Arc<GroundAction>>, PackError> {
        let grounder = self.grounder(problem);
        let calls = match self.kind {
            PackKind::Blocks => blocks::initial(problem)?,
            PackKind::Manufacturing => manufacturing::initial(problem)?,
            PackKind::Logistics => logistics::initial(problem)?,
            PackKind::Query => query::initial(problem, rng)?,
        };
        ground_all(&grounder, &calls)
    }

    /// The initial sequence converted to a partial-order plan.
    pub fn initial_plan(&self, problem: &ProblemSpec, rng: &mut dyn RngCore) -> Result<PartialPlan, PackError> {
        let seq = self.initial_sequence(problem, rng)?;
        sequence_plan(problem, &seq)
    }

    /// Grounds `calls` and converts them to a partial-order plan.
    pub fn plan_for_calls(&self, problem: &ProblemSpec, calls: &[Call]) -> Result<PartialPlan, PackError> {
        let seq = ground_all(&self.grounder(problem), calls)?;
        sequence_plan(problem, &seq)
    }

    /// A random instance of the given size.
    pub fn generate(&self, params: &GenParams, rng: &mut dyn RngCore) -> Result<ProblemSpec, PackError> {
        match self.kind {
            PackKind::Blocks => blocks::generate(params, rng),
            PackKind::Manufacturing => manufacturing::generate(params, rng),
            PackKind::Logistics => logistics::generate(params, rng),
            PackKind::Query => query::generate(params, rng),
        }
    }

    pub fn cost<S: Scalar>(&self, problem: &ProblemSpec) -> Result<Box<dyn CostFunction<S>>, PackError> {
        Ok(match self.kind {
            PackKind::Blocks => Box::new(StepCount),
            PackKind::Manufacturing | PackKind::Logistics => Box::new(ScheduleLength),
            PackKind::Query => Box::new(QueryCost::new(Catalog::from_facts(&problem.init)?)),
        })
    }
}

fn registry(kind: PackKind) -> Result<Registry, PackError> {
    let mut r = builtin_library();
    if kind == PackKind::Query {
        r.register(query::capability_predicate())?;
    }
    Ok(r)
}

/// An action call `(name args...)` produced by a generator.
pub type Call = (Symbol, Vec<Symbol>);

pub(crate) fn call(name: &str, args: &[&Symbol]) -> Call {
    (Symbol::new(name), args.iter().map(|&a| a.clone()).collect())
}

fn sequence_plan(problem: &ProblemSpec, seq: &[Arc<GroundAction>]) -> Result<PartialPlan, PackError> {
    let mut plans = to2po(&problem.init, &problem.goal, seq, &[], To2poMode::MaxProducer)?;
    Ok(plans.remove(0))
}

fn ground_all(grounder: &Grounder, calls: &[Call]) -> Result<Vec<Arc<GroundAction>>, PackError> {
    calls
        .iter()
        .map(|(name, args)| Ok(Arc::new(grounder.ground(name.as_str(), args)?)))
        .collect()
}
