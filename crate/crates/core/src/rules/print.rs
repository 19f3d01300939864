use std::fmt::Write;

use super::{GraphSpec, RewritingRule};

fn join<T: std::fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

fn graph_fields(g: &GraphSpec, out: &mut Vec<String>) {
    if !g.nodes.is_empty() {
        out.push(format!(":operators ({})", join(&g.nodes, " ")));
    }
    if !g.links.is_empty() {
        out.push(format!(":links ({})", join(&g.links, " ")));
    }
}

fn body(fields: Vec<String>, indent: &str) -> String {
    if fields.is_empty() {
        "NIL".into()
    } else {
        format!("({})", fields.join(&format!("\n{indent}")))
    }
}

/// Writes a rule in the canonical layout: every list parenthesized, one
/// field per line. [`super::parse_rule`] reads it back to an equal rule.
pub fn print_rule(rule: &RewritingRule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define-rule :name {}", rule.name);
    let mut ante = Vec::new();
    graph_fields(&rule.antecedent, &mut ante);
    if !rule.constraints.is_empty() {
        ante.push(format!(":constraints ({})", join(&rule.constraints, " ")));
    }
    let _ = writeln!(out, "  :if {}", body(ante, "       "));
    let mut rep = Vec::new();
    if !rule.replace.nodes.is_empty() {
        rep.push(format!(":operators ({})", join(&rule.replace.nodes, " ")));
    }
    if !rule.replace.links.is_empty() {
        rep.push(format!(":links ({})", join(&rule.replace.links, " ")));
    }
    let _ = writeln!(out, "  :replace {}", body(rep, "            "));
    let mut with = Vec::new();
    graph_fields(&rule.with, &mut with);
    let _ = write!(out, "  :with {}", body(with, "         "));
    if rule.fully_specified {
        out.push_str("\n  :fully-specified t");
    }
    out.push(')');
    out
}

pub fn print_rules(rules: &[RewritingRule]) -> String {
    rules.iter().map(print_rule).collect::<Vec<_>>().join("\n\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::super::{builtin_library, parse_rule};
    use super::*;

    #[test]
    fn round_trip() {
        let texts = [
            "(define-rule :name avoid-move-twice
              :if (:operators ((?n1 (unstack ?b1 ?b2)) (?n2 (stack ?b1 ?b3 Table)))
                   :links ((?n1 (on ?b1 Table) ?n2))
                   :constraints ((possibly-adjacent ?n1 ?n2) (:neq ?b2 ?b3)))
              :replace (:operators (?n1 ?n2))
              :with (:operators ((?n3 (stack ?b1 ?b3 ?b2)))))",
            "(define-rule :name resource-swap
              :if (:operators ((?n1 (machine ?x) :resource) (?n2 (machine ?x) :resource))
                   :links ((?n1 :threat ?n2)))
              :replace (:links ((?n1 ?n2)))
              :with (:links ((?n2 ?n1)))
              :fully-specified t)",
            "(define-rule :name avoid-undo
              :if (:operators ((?n1 (unstack ?b1 ?b2)) (?n2 (stack ?b1 ?b2 Table)))
                   :constraints ((possibly-adjacent ?n1 ?n2)))
              :replace (:operators (?n1 ?n2))
              :with NIL)",
        ];
        let reg = builtin_library();
        for t in texts {
            let r = parse_rule(t, &reg).unwrap();
            let printed = print_rule(&r);
            let again = parse_rule(&printed, &reg).unwrap();
            assert_eq!(r, again, "{printed}");
            assert_eq!(print_rule(&again), printed);
        }
    }
}
