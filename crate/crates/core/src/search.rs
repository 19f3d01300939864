//! Local search over the rewriting neighborhood: first improvement with a
//! plateau walk, best improvement, and restarts.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostError, CostFunction};
use crate::model::Grounder;
use crate::plan::PartialPlan;
use crate::rewrite::{neighborhood_all, neighborhood_lazy, RewriteError};
use crate::rules::RewritingRule;
use crate::scalar::Scalar;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strategy {
    /// Accept the first neighbor that is not worse; equal-cost moves draw
    /// on the plateau budget.
    FirstImprovement,
    /// Evaluate the whole neighborhood and move to the cheapest neighbor
    /// while it is strictly better.
    BestImprovement,
}

/// What the plateau budget counts.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PlateauCounting {
    /// Equal-cost moves taken. Once spent, only strict improvements are
    /// accepted.
    Accepted,
    /// Non-improving neighbors looked at. Once spent, the run stops.
    Considered,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Shared by every plateau of a run, not reset per plateau.
    pub plateau_budget: u64,
    pub plateau_counting: PlateauCounting,
    pub restarts: u32,
    pub max_iterations: u64,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    /// Validate every accepted plan and fail loudly if one is invalid.
    pub check_plans: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::FirstImprovement,
            plateau_budget: 0,
            plateau_counting: PlateauCounting::Accepted,
            restarts: 1,
            max_iterations: 10_000,
            time_limit: None,
            seed: 0,
            check_plans: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("restart {restart}: no initial plan: {message}")]
    Initial { restart: u32, message: String },
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("restart {restart}, iteration {iteration}: accepted an invalid plan:\n{report}")]
    InvalidPlan {
        restart: u32,
        iteration: u64,
        report: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StopReason {
    /// No neighbor was acceptable.
    LocalMinimum,
    PlateauBudget,
    MaxIterations,
    TimeLimit,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::LocalMinimum => "local-minimum",
            StopReason::PlateauBudget => "plateau-budget",
            StopReason::MaxIterations => "max-iterations",
            StopReason::TimeLimit => "time-limit",
        })
    }
}

/// One accepted move, or the initial plan of a restart (`rule` = `initial`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent<S> {
    pub iteration: u64,
    pub restart: u32,
    pub rule: String,
    pub cost_before: S,
    pub cost_after: S,
    /// Best cost seen in the whole run so far, this event included.
    pub best: S,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug)]
pub struct SearchTrace<S> {
    pub events: Vec<TraceEvent<S>>,
}

impl<S: Scalar> SearchTrace<S> {
    pub const CSV_HEADER: &'static str = "iteration,restart,rule,cost_before,cost_after,elapsed_ms";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.iteration, e.restart, e.rule, e.cost_before, e.cost_after, e.elapsed_ms
            ));
        }
        out
    }

    /// Best cost over time never goes up.
    pub fn is_anytime_monotone(&self) -> bool {
        self.events.windows(2).all(|w| w[1].best <= w[0].best)
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<S> {
    pub best: PartialPlan,
    pub best_cost: S,
    pub best_restart: u32,
    pub initial_cost: S,
    pub iterations: u64,
    pub stop: StopReason,
    pub trace: SearchTrace<S>,
}

/// What the search optimizes with: rules, a grounder for their
/// replacements, and a cost function.
pub struct SearchProblem<'a, S> {
    pub rules: &'a [RewritingRule],
    pub grounder: &'a Grounder,
    pub cost: &'a dyn CostFunction<S>,
}

/// Random stream of a restart; independent of how many restarts run.
pub fn restart_rng(seed: u64, restart: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

struct Run<'a, 'p, S: Scalar> {
    problem: &'p SearchProblem<'a, S>,
    config: &'p SearchConfig,
    start: Instant,
    events: Vec<TraceEvent<S>>,
    best: Option<(PartialPlan, S, u32)>,
    plateau_left: u64,
    iterations: u64,
}

enum Step<S> {
    Move(PartialPlan, S, String),
    Stop(StopReason),
}

impl<S: Scalar> Run<'_, '_, S> {
    fn out_of_time(&self) -> bool {
        self.config.time_limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    fn record(&mut self, restart: u32, rule: String, before: S, after: S, plan: &PartialPlan) {
        let improved = self.best.as_ref().is_none_or(|(_, c, _)| after < *c);
        if improved {
            self.best = Some((plan.clone(), after.clone(), restart));
        }
        let best = self.best.as_ref().map(|(_, c, _)| c.clone()).expect("set above");
        self.events.push(TraceEvent {
            iteration: self.iterations,
            restart,
            rule,
            cost_before: before,
            cost_after: after,
            best,
            elapsed_ms: self.start.elapsed().as_millis(),
        });
    }

    fn first_improvement(
        &mut self,
        plan: &PartialPlan,
        cost: &S,
        rng: &mut ChaCha8Rng,
    ) -> Result<Step<S>, SearchError> {
        let p = self.problem;
        for n in neighborhood_lazy(plan, p.rules, p.grounder, rng.gen()) {
            if self.out_of_time() {
                return Ok(Step::Stop(StopReason::TimeLimit));
            }
            let n = n?;
            let c = p.cost.cost(&n.plan)?;
            if c < *cost {
                return Ok(Step::Move(n.plan, c, n.rule.to_string()));
            }
            match self.config.plateau_counting {
                PlateauCounting::Considered => {
                    if self.plateau_left == 0 {
                        return Ok(Step::Stop(StopReason::PlateauBudget));
                    }
                    self.plateau_left -= 1;
                    if c == *cost {
                        return Ok(Step::Move(n.plan, c, n.rule.to_string()));
                    }
                }
                PlateauCounting::Accepted => {
                    if c == *cost && self.plateau_left > 0 {
                        self.plateau_left -= 1;
                        return Ok(Step::Move(n.plan, c, n.rule.to_string()));
                    }
                }
            }
        }
        Ok(Step::Stop(StopReason::LocalMinimum))
    }

    fn best_improvement(&mut self, plan: &PartialPlan, cost: &S, rng: &mut ChaCha8Rng) -> Result<Step<S>, SearchError> {
        let p = self.problem;
        let all = neighborhood_all(plan, p.rules, p.grounder)?;
        if self.out_of_time() {
            return Ok(Step::Stop(StopReason::TimeLimit));
        }
        let mut scored = Vec::with_capacity(all.len());
        for n in all {
            let c = p.cost.cost(&n.plan)?;
            scored.push((c, n));
        }
        let Some(min) = scored.iter().map(|(c, _)| c.clone()).min() else {
            return Ok(Step::Stop(StopReason::LocalMinimum));
        };
        if min >= *cost {
            return Ok(Step::Stop(StopReason::LocalMinimum));
        }
        let ties: Vec<_> = scored.into_iter().filter(|(c, _)| *c == min).collect();
        let (c, n) = ties.choose(rng).expect("at least one minimum").clone();
        Ok(Step::Move(n.plan, c, n.rule.to_string()))
    }

    fn restart<F, E>(&mut self, restart: u32, initial: &mut F) -> Result<Option<StopReason>, SearchError>
    where
        F: FnMut(u32, &mut ChaCha8Rng) -> Result<PartialPlan, E>,
        E: fmt::Display,
    {
        let mut rng = restart_rng(self.config.seed, restart);
        let mut plan = initial(restart, &mut rng).map_err(|e| SearchError::Initial {
            restart,
            message: e.to_string(),
        })?;
        let mut cost = self.problem.cost.cost(&plan)?;
        self.record(restart, "initial".into(), cost.clone(), cost.clone(), &plan);
        let mut local = 0u64;
        loop {
            if local >= self.config.max_iterations {
                return Ok(Some(StopReason::MaxIterations));
            }
            if self.out_of_time() {
                return Ok(Some(StopReason::TimeLimit));
            }
            let step = match self.config.strategy {
                Strategy::FirstImprovement => self.first_improvement(&plan, &cost, &mut rng)?,
                Strategy::BestImprovement => self.best_improvement(&plan, &cost, &mut rng)?,
            };
            match step {
                Step::Stop(StopReason::LocalMinimum) => return Ok(None),
                Step::Stop(r) => return Ok(Some(r)),
                Step::Move(next, c, rule) => {
                    local += 1;
                    self.iterations += 1;
                    if self.config.check_plans {
                        let report = next.validate();
                        if !report.is_valid() {
                            return Err(SearchError::InvalidPlan {
                                restart,
                                iteration: self.iterations,
                                report: report.to_string(),
                            });
                        }
                    }
                    self.record(restart, rule, cost, c.clone(), &next);
                    plan = next;
                    cost = c;
                }
            }
        }
    }
}

/// Runs `config.restarts` independent restarts, each starting from the
/// plan `initial` builds with that restart's random stream, and returns the
/// cheapest plan found. A time limit or a spent plateau budget ends the
/// whole run; other stops end only the current restart.
pub fn optimize<S, F, E>(
    problem: &SearchProblem<'_, S>,
    mut initial: F,
    config: &SearchConfig,
) -> Result<SearchOutcome<S>, SearchError>
where
    S: Scalar,
    F: FnMut(u32, &mut ChaCha8Rng) -> Result<PartialPlan, E>,
    E: fmt::Display,
{
    let mut run = Run {
        problem,
        config,
        start: Instant::now(),
        events: Vec::new(),
        best: None,
        plateau_left: config.plateau_budget,
        iterations: 0,
    };
    let mut stop = StopReason::LocalMinimum;
    let mut initial_cost = None;
    for r in 0..config.restarts.max(1) {
        let reason = run.restart(r, &mut initial)?;
        if initial_cost.is_none() {
            initial_cost = run.events.first().map(|e| e.cost_after.clone());
        }
        match reason {
            None => {}
            Some(StopReason::MaxIterations) => stop = StopReason::MaxIterations,
            Some(other) => {
                stop = other;
                break;
            }
        }
    }
    let (best, best_cost, best_restart) = run.best.expect("every restart records its initial plan");
    Ok(SearchOutcome {
        best,
        best_cost,
        best_restart,
        initial_cost: initial_cost.expect("at least one restart"),
        iterations: run.iterations,
        stop,
        trace: SearchTrace { events: run.events },
    })
}

#[cfg(test)]
mod tests {
    use std::convert::Infallible;
    use std::sync::Arc;

    use super::*;
    use crate::cost::StepCount;
    use crate::model::{StaticRelations, Universes};
    use crate::plan::fixtures::*;
    use crate::rules::{builtin_library, parse_rules};

    const RULES: &str = "
      (define-rule :name avoid-move-twice
        :if (:operators ((?n1 (unstack ?b1 ?b2)) (?n2 (stack ?b1 ?b3 Table)))
             :links ((?n1 (on ?b1 Table) ?n2))
             :constraints ((possibly-adjacent ?n1 ?n2) (:neq ?b2 ?b3)))
        :replace (:operators (?n1 ?n2))
        :with (:operators ((?n3 (stack ?b1 ?b3 ?b2)))))
      (define-rule :name avoid-undo
        :if (:operators ((?n1 (unstack ?b1 ?b2)) (?n2 (stack ?b1 ?b2 Table)))
             :constraints ((possibly-adjacent ?n1 ?n2)))
        :replace (:operators (?n1 ?n2))
        :with NIL)";

    fn grounder() -> Grounder {
        Grounder {
            domain: Arc::new(blocks_domain()),
            universes: Universes::default(),
            statics: StaticRelations::default(),
        }
    }

    fn run(rules: &[RewritingRule], config: &SearchConfig) -> SearchOutcome<u64> {
        let g = grounder();
        let problem = SearchProblem {
            rules,
            grounder: &g,
            cost: &StepCount,
        };
        optimize(&problem, |_, _| Ok::<_, Infallible>(sample_plan()), config).unwrap()
    }

    #[test]
    fn sample_plan_improves_to_four_steps() {
        let rules = parse_rules(RULES, &builtin_library()).unwrap();
        for strategy in [Strategy::FirstImprovement, Strategy::BestImprovement] {
            let config = SearchConfig {
                strategy,
                check_plans: true,
                ..SearchConfig::default()
            };
            let out = run(&rules, &config);
            assert_eq!(out.best_cost, 4);
            assert_eq!(out.initial_cost, 5);
            assert_eq!(out.iterations, 1);
            let rules: Vec<&str> = out.trace.events.iter().map(|e| e.rule.as_str()).collect();
            assert_eq!(rules, ["initial", "avoid-move-twice"]);
            assert!(out.trace.is_anytime_monotone());
            assert_eq!(out.stop, StopReason::LocalMinimum);
        }
    }

    #[test]
    fn no_rules_keeps_initial_plan() {
        let out = run(&[], &SearchConfig::default());
        assert_eq!(out.best_cost, 5);
        assert_eq!(out.iterations, 0);
        assert!(out.best.isomorphic(&sample_plan()));
    }

    #[test]
    fn trace_csv_layout() {
        let rules = parse_rules(RULES, &builtin_library()).unwrap();
        let out = run(&rules, &SearchConfig::default());
        let csv = out.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SearchTrace::<u64>::CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("0,0,initial,5,5,"));
        assert!(lines.next().unwrap().starts_with("1,0,avoid-move-twice,5,4,"));
    }

    #[test]
    fn restart_streams_do_not_depend_on_restart_count() {
        let a: u64 = restart_rng(7, 2).gen();
        let b: u64 = restart_rng(7, 2).gen();
        let c: u64 = restart_rng(7, 3).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn initial_failure_names_the_restart() {
        let g = grounder();
        let problem = SearchProblem {
            rules: &[],
            grounder: &g,
            cost: &StepCount,
        };
        let config = SearchConfig {
            restarts: 3,
            ..SearchConfig::default()
        };
        let err = optimize::<u64, _, _>(
            &problem,
            |r, _| if r < 1 { Ok(sample_plan()) } else { Err("unsolvable") },
            &config,
        )
        .unwrap_err();
        assert_eq!(
            err,
            SearchError::Initial {
                restart: 1,
                message: "unsolvable".into()
            }
        );
    }
}
