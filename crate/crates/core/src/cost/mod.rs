//! Plan cost functions: step count, schedule length, and the distributed
//! query execution-cost estimator.

mod catalog;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::plan::{PartialPlan, PlanError, StepId};
use crate::query::{relations_of, QueryWorld};
use crate::scalar::Scalar;
use crate::symbol::Symbol;

pub use catalog::{Catalog, CatalogError, RelationInfo, SourceInfo};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("no statistics for {0}")]
    MissingStatistics(String),
    #[error("step {step}: {action} is not a query operation")]
    UnknownOperation { step: StepId, action: String },
    #[error("cost {0} does not fit the chosen number type")]
    Overflow(String),
}

pub trait CostFunction<S: Scalar>: Send + Sync {
    fn name(&self) -> &str;
    fn cost(&self, plan: &PartialPlan) -> Result<S, CostError>;
}

/// Number of non-pseudo steps.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepCount;

impl<S: Scalar> CostFunction<S> for StepCount {
    fn name(&self) -> &str {
        "steps"
    }

    fn cost(&self, plan: &PartialPlan) -> Result<S, CostError> {
        Ok(S::from_count(plan.num_real_steps() as u64))
    }
}

/// Length of the critical path with unit durations.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScheduleLength;

impl<S: Scalar> CostFunction<S> for ScheduleLength {
    fn name(&self) -> &str {
        "schedule"
    }

    fn cost(&self, plan: &PartialPlan) -> Result<S, CostError> {
        Ok(S::from_count(plan.schedule_length()? as u64))
    }
}

/// Cardinality estimates for relation sets under uniformity and
/// independence, with one equality selection per relation at most.
#[derive(Clone, Debug)]
pub struct Estimator<'a> {
    catalog: &'a Catalog,
    selections: BTreeMap<Symbol, Symbol>,
}

impl<'a> Estimator<'a> {
    pub fn new(catalog: &'a Catalog, selections: BTreeMap<Symbol, Symbol>) -> Self {
        Estimator { catalog, selections }
    }

    fn relation(&self, r: &Symbol) -> Result<&'a RelationInfo, CostError> {
        self.catalog
            .relations
            .get(r)
            .ok_or_else(|| CostError::MissingStatistics(format!("relation {r}")))
    }

    fn distinct(&self, r: &Symbol, a: &Symbol) -> Result<u64, CostError> {
        self.relation(r)?
            .distinct
            .get(a)
            .map(|&d| d.max(1))
            .ok_or_else(|| CostError::MissingStatistics(format!("attribute {r}.{a}")))
    }

    /// Tuples of `r` left after its selection: `ceil(|R| / V(sel, R))`.
    pub fn base(&self, r: &Symbol) -> Result<BigInt, CostError> {
        let n = BigInt::from(self.relation(r)?.tuples);
        match self.selections.get(r) {
            Some(a) => Ok(n.div_ceil(&BigInt::from(self.distinct(r, a)?))),
            None => Ok(n),
        }
    }

    /// Distinct values of `a` in `r` after selection: 1 on the selected
    /// attribute, the catalog count otherwise.
    fn distinct_after(&self, r: &Symbol, a: &Symbol) -> Result<u64, CostError> {
        if self.selections.get(r) == Some(a) {
            Ok(1)
        } else {
            self.distinct(r, a)
        }
    }

    /// `ceil(prod base(R) / D)`, where for each attribute shared by several
    /// relations D takes every distinct count except the smallest. Equals
    /// chaining the pairwise rule `|L|·|R| / max(V(a,L), V(a,R))` without
    /// intermediate rounding, for any join order.
    pub fn cardinality(&self, rels: &BTreeSet<Symbol>) -> Result<BigInt, CostError> {
        let mut num = BigInt::one();
        let mut by_attr: BTreeMap<&Symbol, Vec<u64>> = BTreeMap::new();
        for r in rels {
            num *= self.base(r)?;
            for a in self.relation(r)?.distinct.keys() {
                by_attr.entry(a).or_default().push(self.distinct_after(r, a)?);
            }
        }
        let mut den = BigInt::one();
        for (_, mut vs) in by_attr {
            vs.sort_unstable();
            for v in &vs[1..] {
                den *= BigInt::from(*v);
            }
        }
        if num.is_zero() {
            return Ok(num);
        }
        Ok(num.div_ceil(&den))
    }

    pub fn cardinality_of(&self, q: &Symbol) -> Result<BigInt, CostError> {
        self.cardinality(&relations_of(q).into_iter().collect())
    }

    pub fn transfer(&self, source: &Symbol) -> Result<BigRational, CostError> {
        self.catalog
            .sources
            .get(source)
            .map(|s| s.transfer.clone())
            .ok_or_else(|| CostError::MissingStatistics(format!("source {source}")))
    }

    /// `t_src · card + card`.
    pub fn retrieve_cost(&self, q: &Symbol, source: &Symbol) -> Result<BigRational, CostError> {
        let card = BigRational::from_integer(self.cardinality_of(q)?);
        Ok(self.transfer(source)? * &card + card)
    }

    /// `card(left) + card(right) + card(out)`.
    pub fn join_cost(&self, q: &Symbol, left: &Symbol, right: &Symbol) -> Result<BigRational, CostError> {
        let sum = self.cardinality_of(left)? + self.cardinality_of(right)? + self.cardinality_of(q)?;
        Ok(BigRational::from_integer(sum))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepCost {
    pub step: StepId,
    pub own: BigRational,
    pub cardinality: BigInt,
    /// Own cost plus the most expensive input.
    pub finish: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub total: BigRational,
    pub steps: Vec<StepCost>,
}

impl CostReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format!(
                "step {}: cost {} card {} finish {}\n",
                s.step, s.own, s.cardinality, s.finish
            ));
        }
        out.push_str(&format!("total {}\n", self.total));
        out
    }
}

/// Execution cost of query plans built from `retrieve` and `join`. Inputs
/// run in parallel: a step finishes its own cost after its slowest input.
#[derive(Clone, Debug)]
pub struct QueryCost {
    pub catalog: Catalog,
}

impl QueryCost {
    pub fn new(catalog: Catalog) -> Self {
        QueryCost { catalog }
    }

    pub fn report(&self, plan: &PartialPlan) -> Result<CostReport, CostError> {
        if !plan.is_acyclic() {
            return Err(PlanError::Cycle.into());
        }
        let world = QueryWorld::from_facts(plan.init_state());
        let est = Estimator::new(&self.catalog, world.selections);
        let mut own: BTreeMap<StepId, (BigRational, BigInt)> = BTreeMap::new();
        for s in plan.real_steps() {
            let a = &s.action;
            let entry = match (a.name.as_str(), a.args.as_slice()) {
                ("retrieve", [q, src]) => (est.retrieve_cost(q, src)?, est.cardinality_of(q)?),
                ("join", [q, _, l, r]) => (est.join_cost(q, l, r)?, est.cardinality_of(q)?),
                _ => {
                    return Err(CostError::UnknownOperation {
                        step: s.id,
                        action: a.to_string(),
                    })
                }
            };
            own.insert(s.id, entry);
        }
        let mut inputs: BTreeMap<StepId, BTreeSet<StepId>> = BTreeMap::new();
        for l in plan.links() {
            if !l.producer.is_pseudo() {
                inputs.entry(l.consumer).or_default().insert(l.producer);
            }
        }
        let mut finish: BTreeMap<StepId, BigRational> = BTreeMap::new();
        // fewer predecessors first is a topological order
        let mut order: Vec<StepId> = plan.real_steps().map(|s| s.id).collect();
        order.sort_by_key(|&s| plan.real_steps().filter(|t| plan.precedes(t.id, s)).count());
        for s in &order {
            let slowest = inputs
                .get(s)
                .into_iter()
                .flatten()
                .map(|p| finish[p].clone())
                .max()
                .unwrap_or_else(BigRational::zero);
            finish.insert(*s, own[s].0.clone() + slowest);
        }
        let total = inputs
            .get(&StepId::GOAL)
            .into_iter()
            .flatten()
            .map(|p| finish[p].clone())
            .max()
            .unwrap_or_else(BigRational::zero);
        let steps = order_by_id(own, &finish);
        Ok(CostReport { total, steps })
    }
}

fn order_by_id(own: BTreeMap<StepId, (BigRational, BigInt)>, finish: &BTreeMap<StepId, BigRational>) -> Vec<StepCost> {
    own.into_iter()
        .map(|(step, (own, cardinality))| StepCost {
            step,
            own,
            cardinality,
            finish: finish[&step].clone(),
        })
        .collect()
}

impl<S: Scalar> CostFunction<S> for QueryCost {
    fn name(&self) -> &str {
        "query"
    }

    fn cost(&self, plan: &PartialPlan) -> Result<S, CostError> {
        let total = self.report(plan)?.total;
        S::from_rational(&total).ok_or_else(|| CostError::Overflow(total.to_string()))
    }
}
