//! Loading a domain, its rules and a problem from files or a built-in pack.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use num_rational::BigRational;
use pbr_core::cost::{Catalog, CostFunction, QueryCost, ScheduleLength, StepCount};
use pbr_core::model::{
    parse_domain, parse_problem, parse_sequence, DomainSpec, Grounder, ProblemSpec, StaticRelations,
};
use pbr_core::plan::{to2po, PartialPlan, To2poMode};
use pbr_core::rules::{builtin_library, parse_rules, RewritingRule};
use pbr_domains::{Pack, PackKind};

use crate::Status;

/// Where the domain and rules come from. With neither `pack` nor `domain`,
/// the pack is named by the problem's `:domain`.
#[derive(Clone, Debug, Default)]
pub struct Sources<'a> {
    pub pack: Option<&'a str>,
    pub domain: Option<&'a Path>,
    pub rules: Option<&'a Path>,
}

pub struct Setup {
    /// Set when the domain is one of the built-in packs; gives the initial
    /// plan generator, statics and default cost.
    pub pack: Option<Pack>,
    pub domain: Arc<DomainSpec>,
    pub rules: Vec<RewritingRule>,
    pub problem: ProblemSpec,
    pub grounder: Grounder,
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .context(Status::Input)
}

impl Setup {
    pub fn load(sources: &Sources<'_>, problem: &Path) -> Result<Setup> {
        let text = read(problem)?;
        let problem = parse_problem(&text)
            .map_err(|e| anyhow!("{}: {e}", problem.display()))
            .context(Status::Input)?;
        Setup::with_problem(sources, problem)
    }

    pub fn with_problem(sources: &Sources<'_>, problem: ProblemSpec) -> Result<Setup> {
        let domain_text = sources.domain.map(read).transpose()?;
        let rules_text = sources.rules.map(read).transpose()?;
        let input = |e: anyhow::Error| e.context(Status::Input);

        let kind = match (sources.pack, &domain_text) {
            (Some(name), _) => Some(PackKind::from_str(name).map_err(|e| input(e.into()))?),
            (None, Some(text)) => {
                let d = parse_domain(text).map_err(|e| input(anyhow!("domain file: {e}")))?;
                PackKind::from_str(d.name.as_str()).ok()
            }
            (None, None) => Some(PackKind::from_str(problem.domain.as_str()).map_err(|_| {
                input(anyhow!(
                    "problem names domain `{}`, which is not a built-in pack; pass --domain and --rules",
                    problem.domain
                ))
            })?),
        };

        let (pack, domain, rules) = match kind {
            Some(kind) => {
                let pack = Pack::from_texts(
                    kind,
                    domain_text.as_deref().unwrap_or(kind.domain_text()),
                    rules_text.as_deref().unwrap_or(kind.rules_text()),
                )
                .map_err(|e| input(e.into()))?;
                let (domain, rules) = (pack.domain().clone(), pack.rules().to_vec());
                (Some(pack), domain, rules)
            }
            None => {
                let text = domain_text.expect("domain text present when no pack is known");
                let domain = parse_domain(&text).map_err(|e| input(anyhow!("domain file: {e}")))?;
                let rules = match &rules_text {
                    Some(t) => parse_rules(t, &builtin_library()).map_err(|e| input(anyhow!("rule file: {e}")))?,
                    None => Vec::new(),
                };
                (None, Arc::new(domain), rules)
            }
        };
        if problem.domain != domain.name {
            return Err(input(anyhow!(
                "problem is for domain `{}` but the domain is `{}`",
                problem.domain,
                domain.name
            )));
        }
        let grounder = match &pack {
            Some(p) => p.grounder(&problem),
            None => Grounder::new(domain.clone(), &problem, StaticRelations::default()),
        };
        Ok(Setup {
            pack,
            domain,
            rules,
            problem,
            grounder,
        })
    }

    /// The named cost function, or the pack's own (`steps` without a pack).
    pub fn cost(&self, name: Option<&str>) -> Result<Box<dyn CostFunction<BigRational>>> {
        let name = name.unwrap_or_else(|| self.pack.as_ref().map_or("steps", |p| p.kind().cost_name()));
        Ok(match name {
            "steps" => Box::new(StepCount),
            "schedule" => Box::new(ScheduleLength),
            "query" => {
                let catalog = Catalog::from_facts(&self.problem.init)
                    .map_err(|e| anyhow!("query cost: {e}"))
                    .context(Status::Input)?;
                Box::new(QueryCost::new(catalog))
            }
            other => {
                return Err(anyhow!("unknown cost `{other}` (expected steps, schedule or query)").context(Status::Input))
            }
        })
    }

    /// The plan of an action sequence file, converted with to2po.
    pub fn sequence_plans(&self, text: &str, mode: To2poMode) -> Result<Vec<PartialPlan>> {
        let calls = parse_sequence(text)
            .map_err(|e| anyhow!("sequence file: {e}"))
            .context(Status::Input)?;
        let mut seq = Vec::with_capacity(calls.len());
        for (i, (name, args)) in calls.iter().enumerate() {
            let a = self
                .grounder
                .ground(name.as_str(), args)
                .map_err(|e| anyhow!("action {}: {e}", i + 1))
                .context(Status::Input)?;
            seq.push(Arc::new(a));
        }
        to2po(&self.problem.init, &self.problem.goal, &seq, &[], mode).context("invalid action sequence")
    }

    pub fn parse_plan(&self, text: &str) -> Result<PartialPlan> {
        pbr_core::plan::parse_plan(text, &self.problem, &self.grounder)
            .map_err(|e| anyhow!("plan file: {e}"))
            .context(Status::Input)
    }
}
