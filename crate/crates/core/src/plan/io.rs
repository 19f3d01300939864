use std::fmt::Write;
use std::sync::Arc;

use super::{CausalLink, OrderingOrigin, PartialPlan, PlanError, StepId};
use crate::model::parse::parse_ground_atom;
use crate::model::{Grounder, ProblemSpec};
use crate::sexpr::{parse_one, ParseError, Sexp};

fn id_text(id: StepId) -> String {
    if id == StepId::GOAL {
        "goal".into()
    } else {
        id.0.to_string()
    }
}

/// Writes a plan as `(plan (step ...) (link ...) (order ...))`. Steps,
/// links and orderings appear in ascending order.
pub fn print_plan(plan: &PartialPlan) -> String {
    let mut out = String::from("(plan\n");
    for s in plan.real_steps() {
        let _ = writeln!(out, "  (step {} {})", s.id.0, s.action);
    }
    for l in plan.links() {
        let _ = writeln!(
            out,
            "  (link {} {} {})",
            id_text(l.producer),
            l.condition,
            id_text(l.consumer)
        );
    }
    for o in plan.orderings() {
        let _ = writeln!(
            out,
            "  (order {} {} {})",
            id_text(o.before),
            id_text(o.after),
            o.origin.tag()
        );
    }
    out.push(')');
    out.push('\n');
    out
}

fn parse_id(s: &Sexp) -> Result<StepId, ParseError> {
    let a = s.expect_atom("step id")?;
    if a.as_str().eq_ignore_ascii_case("goal") {
        return Ok(StepId::GOAL);
    }
    a.as_str()
        .parse::<u32>()
        .ok()
        .filter(|&n| n != u32::MAX)
        .map(StepId)
        .ok_or_else(|| ParseError::new(s.pos(), format!("bad step id `{a}`")))
}

/// Reads a plan written by [`print_plan`]. Actions are re-instantiated from
/// the domain so their effects are always the schema's.
pub fn parse_plan(text: &str, problem: &ProblemSpec, grounder: &Grounder) -> Result<PartialPlan, PlanError> {
    let top = parse_one(text)?;
    let items = top.expect_list("plan")?;
    if !items.first().is_some_and(|h| h.is_keyword("plan")) {
        return Err(ParseError::new(top.pos(), "expected (plan ...)").into());
    }
    let mut plan = PartialPlan::for_problem(problem);
    let mut links = Vec::new();
    let mut orders = Vec::new();
    for item in &items[1..] {
        let parts = item.expect_list("plan entry")?;
        let head = parts
            .first()
            .and_then(Sexp::as_atom)
            .ok_or_else(|| ParseError::new(item.pos(), "empty plan entry"))?;
        match head.as_str().to_ascii_lowercase().as_str() {
            "step" if parts.len() == 3 => {
                let id = parse_id(&parts[1])?;
                if id.is_pseudo() {
                    return Err(PlanError::PseudoStep(id));
                }
                if plan.contains(id) {
                    return Err(ParseError::new(parts[1].pos(), format!("duplicate step {id}")).into());
                }
                let call = parts[2].expect_list("action")?;
                let name = call
                    .first()
                    .ok_or_else(|| ParseError::new(parts[2].pos(), "empty action"))?
                    .expect_atom("operator name")?;
                let args = call[1..]
                    .iter()
                    .map(|a| a.expect_atom("argument").cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                let action = grounder.ground(name.as_str(), &args)?;
                plan.insert_step(id, Arc::new(action));
            }
            "link" if parts.len() == 4 => links.push(CausalLink {
                producer: parse_id(&parts[1])?,
                condition: parse_ground_atom(&parts[2])?,
                consumer: parse_id(&parts[3])?,
            }),
            "order" if parts.len() == 3 || parts.len() == 4 => {
                let origin = match parts.get(3) {
                    None => OrderingOrigin::Imported,
                    Some(t) => {
                        let tag = t.expect_atom("ordering origin")?;
                        OrderingOrigin::from_tag(&tag.as_str().to_ascii_lowercase())
                            .filter(|o| *o != OrderingOrigin::Causal)
                            .ok_or_else(|| ParseError::new(t.pos(), format!("bad ordering origin `{tag}`")))?
                    }
                };
                orders.push((parse_id(&parts[1])?, parse_id(&parts[2])?, origin));
            }
            other => {
                return Err(ParseError::new(item.pos(), format!("unexpected plan entry `{other}`")).into());
            }
        }
    }
    for l in links {
        plan.add_link(l)?;
    }
    for (a, b, o) in orders {
        plan.add_ordering(a, b, o)?;
    }
    Ok(plan)
}
