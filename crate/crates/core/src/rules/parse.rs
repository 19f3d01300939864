use crate::model::parse::parse_atom;
use crate::model::Term;
use crate::sexpr::{keyword_slots, parse_all, ParseError, Pos, Sexp};
use crate::symbol::Symbol;

use super::{ConstraintCall, GraphSpec, LinkKind, LinkSpec, NodeSpec, Registry, ReplaceSpec, RewritingRule, RuleError};

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, RuleError> {
    Err(ParseError::new(pos, msg).into())
}

fn node_var(s: &Sexp) -> Result<Symbol, RuleError> {
    let v = s.expect_atom("a node variable")?;
    if !v.is_variable() {
        return err(s.pos(), format!("`{v}` is not a node variable"));
    }
    Ok(v.clone())
}

/// A list holding either one item (its head is an atom) or several.
fn items_of(s: &Sexp) -> Result<Vec<&Sexp>, RuleError> {
    if s.is_nil() {
        return Ok(Vec::new());
    }
    let items = s.expect_list("a list")?;
    if items.first().is_some_and(|h| h.as_atom().is_some()) {
        Ok(vec![s])
    } else {
        Ok(items.iter().collect())
    }
}

fn parse_node(s: &Sexp) -> Result<NodeSpec, RuleError> {
    let items = s.expect_list("a node")?;
    let Some((head, rest)) = items.split_first() else {
        return err(s.pos(), "empty node");
    };
    let var = node_var(head)?;
    let mut predicate = None;
    let mut resource = false;
    for it in rest {
        if it.is_keyword(":resource") {
            resource = true;
        } else if predicate.is_none() && it.as_list().is_some() {
            predicate = Some(parse_atom(it)?);
        } else {
            return err(it.pos(), format!("unexpected `{it}` in node"));
        }
    }
    if resource && predicate.is_none() {
        return err(s.pos(), ":resource needs a predicate");
    }
    Ok(NodeSpec {
        var,
        predicate,
        resource,
    })
}

fn parse_link(s: &Sexp) -> Result<LinkSpec, RuleError> {
    let items = s.expect_list("a link")?;
    match items {
        [a, b] => Ok(LinkSpec {
            from: node_var(a)?,
            kind: LinkKind::Ordering,
            to: node_var(b)?,
        }),
        [a, mid, b] => {
            let kind = if mid.is_keyword(":threat") {
                LinkKind::Threat
            } else {
                LinkKind::Causal(parse_atom(mid)?)
            };
            Ok(LinkSpec {
                from: node_var(a)?,
                kind,
                to: node_var(b)?,
            })
        }
        _ => err(s.pos(), format!("malformed link `{s}`")),
    }
}

fn parse_constraint(s: &Sexp, registry: &Registry) -> Result<ConstraintCall, RuleError> {
    let items = s.expect_list("a constraint")?;
    let Some((head, rest)) = items.split_first() else {
        return err(s.pos(), "empty constraint");
    };
    let name = head.expect_atom("a predicate name")?;
    let Some(predicate) = registry.get(name.as_str()) else {
        return Err(RuleError::UnknownPredicate {
            name: name.to_string(),
            pos: head.pos(),
        });
    };
    if predicate.arity() != rest.len() {
        return Err(RuleError::Arity {
            name: name.to_string(),
            expected: predicate.arity(),
            found: rest.len(),
            pos: s.pos(),
        });
    }
    let args = rest
        .iter()
        .map(|a| match a {
            Sexp::Atom(sym, _) => Ok(Term::parse(sym)),
            Sexp::Str(text, _) => Ok(Term::Const(Symbol::new(text))),
            Sexp::List(..) => err(a.pos(), format!("nested term `{a}` in constraint")),
        })
        .collect::<Result<_, _>>()?;
    Ok(ConstraintCall {
        predicate: predicate.clone(),
        args,
    })
}

struct Graph {
    spec: GraphSpec,
    replace_nodes: Vec<Symbol>,
    constraints: Vec<ConstraintCall>,
}

/// Reads a `(:operators ... :links ... :constraints ...)` body. With
/// `names_only`, operators may be bare node variables (the `:replace` form).
fn parse_graph(s: &Sexp, registry: &Registry, names_only: bool, allow_constraints: bool) -> Result<Graph, RuleError> {
    let mut g = Graph {
        spec: GraphSpec::default(),
        replace_nodes: Vec::new(),
        constraints: Vec::new(),
    };
    if s.is_nil() {
        return Ok(g);
    }
    let items = s.expect_list("a graph specification")?;
    for (key, vals, pos) in keyword_slots(items)? {
        let [val] = vals.as_slice() else {
            return err(pos, format!("`{key}` takes exactly one value"));
        };
        match key.as_str() {
            ":operators" if names_only => {
                let list = val.expect_list("node variables")?;
                for it in list {
                    match it {
                        Sexp::Atom(..) => g.replace_nodes.push(node_var(it)?),
                        _ => g.replace_nodes.push(parse_node(it)?.var),
                    }
                }
            }
            ":operators" => {
                for it in items_of(val)? {
                    g.spec.nodes.push(parse_node(it)?);
                }
            }
            ":links" => {
                for it in items_of(val)? {
                    g.spec.links.push(parse_link(it)?);
                }
            }
            ":constraints" if allow_constraints => {
                for it in items_of(val)? {
                    g.constraints.push(parse_constraint(it, registry)?);
                }
            }
            other => return err(pos, format!("unexpected field `{other}`")),
        }
    }
    Ok(g)
}

fn parse_one_rule(form: &Sexp, registry: &Registry) -> Result<RewritingRule, RuleError> {
    let items = form.expect_list("a rule")?;
    if !items.first().is_some_and(|h| h.is_keyword("define-rule")) {
        return err(form.pos(), "expected (define-rule ...)");
    }
    let mut name = None;
    let mut antecedent = None;
    let mut replace = None;
    let mut with = None;
    let mut fully_specified = false;
    let mut extra = Graph {
        spec: GraphSpec::default(),
        replace_nodes: Vec::new(),
        constraints: Vec::new(),
    };
    for (key, vals, pos) in keyword_slots(&items[1..])? {
        let one = || match vals.as_slice() {
            [v] => Ok(*v),
            _ => err(pos, format!("`{key}` takes exactly one value")),
        };
        match key.as_str() {
            ":name" => name = Some(one()?.expect_atom("a rule name")?.clone()),
            ":if" => antecedent = Some(parse_graph(one()?, registry, false, true)?),
            ":replace" => replace = Some(parse_graph(one()?, registry, true, false)?),
            ":with" => with = Some(parse_graph(one()?, registry, false, false)?),
            // fields written after the antecedent's closing parenthesis
            ":links" => {
                for it in items_of(one()?)? {
                    extra.spec.links.push(parse_link(it)?);
                }
            }
            ":constraints" => {
                for it in items_of(one()?)? {
                    extra.constraints.push(parse_constraint(it, registry)?);
                }
            }
            ":fully-specified" => {
                fully_specified = match vals.as_slice() {
                    [] => true,
                    [v] => !v.is_nil(),
                    _ => return err(pos, "`:fully-specified` takes at most one value"),
                }
            }
            other => return err(pos, format!("unexpected field `{other}`")),
        }
    }
    let Some(name) = name else {
        return err(form.pos(), "rule has no :name");
    };
    let Some(mut antecedent) = antecedent else {
        return err(form.pos(), format!("rule {name} has no :if"));
    };
    antecedent.spec.links.extend(extra.spec.links);
    antecedent.constraints.extend(extra.constraints);
    let replace = replace.map(|g| ReplaceSpec {
        nodes: g.replace_nodes,
        links: g.spec.links,
    });
    let rule = RewritingRule {
        name,
        antecedent: antecedent.spec,
        constraints: antecedent.constraints,
        replace: replace.unwrap_or_default(),
        with: with.map(|g| g.spec).unwrap_or_default(),
        fully_specified,
    };
    rule.check()?;
    Ok(rule)
}

/// Parses a single `define-rule` form.
pub fn parse_rule(text: &str, registry: &Registry) -> Result<RewritingRule, RuleError> {
    let forms = parse_all(text)?;
    match forms.as_slice() {
        [f] => parse_one_rule(f, registry),
        [] => err(Pos { line: 1, col: 1 }, "no rule"),
        [_, second, ..] => err(second.pos(), "expected a single rule"),
    }
}

/// Parses every `define-rule` form in a rule file.
pub fn parse_rules(text: &str, registry: &Registry) -> Result<Vec<RewritingRule>, RuleError> {
    let rules = parse_all(text)?
        .iter()
        .map(|f| parse_one_rule(f, registry))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, r) in rules.iter().enumerate() {
        if let Some(dup) = rules[..i].iter().find(|o| o.name == r.name) {
            return Err(ParseError::new(Pos::default(), format!("rule {} defined twice", dup.name)).into());
        }
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::super::builtin_library;
    use super::*;

    pub const AVOID_MOVE_TWICE: &str = "(define-rule :name avoid-move-twice
  :if (:operators ((?n1 (unstack ?b1 ?b2))
                   (?n2 (stack ?b1 ?b3 Table)))
       :links ((?n1 (on ?b1 Table) ?n2))
       :constraints ((possibly-adjacent ?n1 ?n2)
                     (:neq ?b2 ?b3)))
  :replace (:operators (?n1 ?n2))
  :with (:operators ((?n3 (stack ?b1 ?b3 ?b2)))))";

    #[test]
    fn avoid_move_twice_shape() {
        let r = parse_rule(AVOID_MOVE_TWICE, &builtin_library()).unwrap();
        assert_eq!(r.antecedent.nodes.len(), 2);
        assert_eq!(r.antecedent.links.len(), 1);
        assert!(matches!(r.antecedent.links[0].kind, LinkKind::Causal(_)));
        assert_eq!(r.constraints.len(), 2);
        assert_eq!(r.replace.nodes.len(), 2);
        assert_eq!(r.with.nodes.len(), 1);
        let vars: Vec<String> = r.antecedent_variables().iter().map(|v| v.to_string()).collect();
        assert_eq!(vars, ["?n1", "?b1", "?b2", "?n2", "?b3"]);
    }

    #[test]
    fn nil_replacement_is_empty() {
        let text = "(define-rule :name avoid-undo
          :if (:operators ((?n1 (unstack ?b1 ?b2)) (?n2 (stack ?b1 ?b2 Table)))
               :constraints ((possibly-adjacent ?n1 ?n2)))
          :replace (:operators (?n1 ?n2))
          :with NIL)";
        let r = parse_rule(text, &builtin_library()).unwrap();
        assert!(r.with.is_empty());
    }

    #[test]
    fn single_items_need_no_extra_parentheses() {
        let text = "(define-rule :name IP-by-SP
          :if (:operators (?n1 (immersion-paint ?x ?c))
               :constraints ((regular-shapes ?s) (in-critical-path ?n1)))
          :replace (:operators (?n1))
          :with (:operators (?n2 (spray-paint ?x ?c ?s))))";
        let r = parse_rule(text, &builtin_library()).unwrap();
        assert_eq!(r.antecedent.nodes.len(), 1);
        assert_eq!(r.with.nodes.len(), 1);
        let swap = "(define-rule :name machine-swap
          :if (:operators ((?n1 (machine ?x) :resource) (?n2 (machine ?x) :resource)))
          :links ((?n1 :threat ?n2))
          :constraints (adjacent-in-critical-path ?n1 ?n2)
          :replace (:links (?n1 ?n2))
          :with (:links (?n2 ?n1)))";
        let r = parse_rule(swap, &builtin_library()).unwrap();
        assert_eq!(
            r.antecedent.links,
            vec![LinkSpec {
                from: "?n1".into(),
                kind: LinkKind::Threat,
                to: "?n2".into()
            }]
        );
        assert_eq!(r.constraints.len(), 1);
        assert!(r.antecedent.nodes.iter().all(|n| n.resource));
        assert_eq!(r.replace.links.len(), 1);
        assert_eq!(r.with.links.len(), 1);
    }

    #[test]
    fn replaced_variable_must_be_matched() {
        let text = AVOID_MOVE_TWICE.replace(":replace (:operators (?n1 ?n2))", ":replace (:operators (?n1 ?n9))");
        let e = parse_rule(&text, &builtin_library()).unwrap_err();
        assert!(
            matches!(e, RuleError::ReplacedNotInAntecedent { ref var, .. } if var == "?n9"),
            "{e}"
        );
    }

    #[test]
    fn unbound_replacement_variable() {
        let text = AVOID_MOVE_TWICE.replace("(stack ?b1 ?b3 ?b2)", "(stack ?b1 ?b3 ?b7)");
        let e = parse_rule(&text, &builtin_library()).unwrap_err();
        assert!(
            matches!(e, RuleError::UnboundReplacementVariable { ref var, .. } if var == "?b7"),
            "{e}"
        );
    }

    #[test]
    fn unknown_predicate_and_arity() {
        let text = AVOID_MOVE_TWICE.replace("possibly-adjacent", "sometimes-adjacent");
        assert!(matches!(
            parse_rule(&text, &builtin_library()),
            Err(RuleError::UnknownPredicate { .. })
        ));
        let text = AVOID_MOVE_TWICE.replace("(:neq ?b2 ?b3)", "(:neq ?b2)");
        assert!(matches!(
            parse_rule(&text, &builtin_library()),
            Err(RuleError::Arity { .. })
        ));
    }

    #[test]
    fn unsafe_constraint_is_reported() {
        let text = AVOID_MOVE_TWICE.replace("(:neq ?b2 ?b3)", "(:neq ?b2 ?zz)");
        let e = parse_rule(&text, &builtin_library()).unwrap_err();
        assert!(
            matches!(e, RuleError::UnsafeConstraint { ref var, .. } if var == "?zz"),
            "{e}"
        );
    }

    #[test]
    fn generators_bind_later_constraints() {
        let text = "(define-rule :name r
          :if (:operators ((?n1 (weigh ?x ?w)))
               :constraints ((< ?w2 10) (+ ?w 1 ?w2)))
          :replace (:operators (?n1))
          :with (:operators ((?n2 (weigh ?x ?w2)))))";
        parse_rule(text, &builtin_library()).unwrap();
    }

    #[test]
    fn node_and_predicate_variables_are_disjoint() {
        let text = AVOID_MOVE_TWICE.replace("(stack ?b1 ?b3 Table)", "(stack ?b1 ?n1 Table)");
        assert!(matches!(
            parse_rule(&text, &builtin_library()),
            Err(RuleError::NodeVarClash { .. })
        ));
    }
}
