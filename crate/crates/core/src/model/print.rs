use std::fmt::Write;

use super::{DomainSpec, EffectForm, GroundAction, OperatorSchema, Polarity, ProblemSpec};

fn effect_text(e: &EffectForm) -> String {
    let mut s = match e.polarity {
        Polarity::Add => e.atom.to_string(),
        Polarity::Delete => format!("(:not {})", e.atom),
    };
    if !e.condition.is_empty() {
        let conds: Vec<String> = e.condition.iter().map(|c| c.to_string()).collect();
        s = format!("(:when (:and {}) {s})", conds.join(" "));
    }
    if !e.quantified.is_empty() {
        let vars: Vec<String> = e.quantified.iter().map(|(v, sort)| format!("({v} {sort})")).collect();
        s = format!("(:forall ({}) {s})", vars.join(" "));
    }
    s
}

fn operator_text(op: &OperatorSchema, out: &mut String) {
    let params: Vec<&str> = op.parameters.iter().map(|p| p.as_str()).collect();
    let _ = writeln!(out, "(define (operator {})", op.name);
    let _ = writeln!(out, "  :parameters ({})", params.join(" "));
    if !op.resources.is_empty() {
        let res: Vec<String> = op.resources.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(out, "  :resources ({})", res.join(" "));
    }
    let pre: Vec<String> = op
        .precondition
        .atoms
        .iter()
        .map(|a| a.to_string())
        .chain(op.precondition.constraints.iter().map(|c| c.to_string()))
        .collect();
    let _ = writeln!(out, "  :precondition (:and {})", pre.join(" "));
    let effs: Vec<String> = op.effects.iter().map(effect_text).collect();
    let _ = writeln!(out, "  :effect (:and {}))", effs.join(" "));
}

/// Renders a domain in the same syntax [`super::parse_domain`] reads.
pub fn print_domain(d: &DomainSpec) -> String {
    let mut out = String::new();
    if !d.name.as_str().is_empty() {
        let _ = writeln!(out, "(domain {})", d.name);
    }
    for (sort, values) in &d.sorts {
        let vals: Vec<&str> = values.iter().map(|v| v.as_str()).collect();
        let _ = writeln!(out, "(:sort {sort} {})", vals.join(" "));
    }
    for (name, arity) in &d.interpreted {
        let _ = writeln!(out, "(:interpreted {name} {arity})");
    }
    for op in &d.operators {
        out.push('\n');
        operator_text(op, &mut out);
    }
    out
}

pub fn print_problem(p: &ProblemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  :domain {}", p.domain);
    let objs: Vec<&str> = p.objects.iter().map(|o| o.as_str()).collect();
    let _ = writeln!(out, "  :objects ({})", objs.join(" "));
    if !p.sorts.is_empty() {
        let sorts: Vec<String> = p
            .sorts
            .iter()
            .map(|(s, vals)| {
                let vals: Vec<&str> = vals.iter().map(|v| v.as_str()).collect();
                format!("({s} {})", vals.join(" "))
            })
            .collect();
        let _ = writeln!(out, "  :sorts ({})", sorts.join(" "));
    }
    out.push_str("  :init (");
    for (i, a) in p.init.iter().enumerate() {
        if i > 0 {
            out.push_str("\n         ");
        }
        let _ = write!(out, "{a}");
    }
    out.push_str(")\n");
    let goal: Vec<String> = p.goal.iter().map(|g| g.to_string()).collect();
    let _ = writeln!(out, "  :goal (:and {}))", goal.join(" "));
    out
}

pub fn print_sequence(actions: &[GroundAction]) -> String {
    let mut out = String::new();
    for a in actions {
        let _ = writeln!(out, "{a}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_domain, parse_problem};
    use super::*;

    #[test]
    fn quantified_effects_round_trip() {
        let text = "(:sort surf ROUGH POLISHED SMOOTH)
          (define (operator PUNCH)
            :parameters (?x ?width ?orientation)
            :resources ((machine PUNCH) (is-object ?x))
            :precondition (:and (is-object ?x) (is-punchable ?x ?width ?orientation) (has-clamp PUNCH))
            :effect (:and (:forall (?surf) (:when (:neq ?surf ROUGH)
                                                (:not (surface-condition ?x ?surf))))
                          (surface-condition ?x ROUGH)
                          (has-hole ?x ?width ?orientation)))";
        let d = parse_domain(text).unwrap();
        assert_eq!(d.operators[0].resources.len(), 2);
        assert_eq!(parse_domain(&print_domain(&d)).unwrap(), d);
    }

    #[test]
    fn problem_round_trip() {
        let p = parse_problem(
            "(define (problem p) :domain d :objects (A) :sorts ((color RED))
               :init ((q A) (r A)) :goal (:and (q A)))",
        )
        .unwrap();
        assert_eq!(parse_problem(&print_problem(&p)).unwrap(), p);
    }
}
