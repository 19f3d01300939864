use std::collections::{BTreeMap, BTreeSet};

use super::statics::StaticRelations;
use super::{
    Atom, Constraint, DomainSpec, EffectForm, Formula, GroundAtom, OperatorSchema, Polarity, Precondition, ProblemSpec,
    Term,
};
use crate::sexpr::{self, keyword_slots, ParseError, Pos, Sexp};
use crate::symbol::Symbol;

fn lower(s: &Symbol) -> Symbol {
    if s.as_str().bytes().any(|b| b.is_ascii_uppercase()) {
        Symbol::from(s.as_str().to_ascii_lowercase())
    } else {
        s.clone()
    }
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::new(pos, msg))
}

/// Parses `(pred arg ...)`; predicate names are case-folded.
pub(crate) fn parse_atom(s: &Sexp) -> Result<Atom, ParseError> {
    let items = s.expect_list("an atom")?;
    let Some((head, rest)) = items.split_first() else {
        return err(s.pos(), "empty atom");
    };
    let predicate = lower(head.expect_atom("a predicate name")?);
    let args = rest
        .iter()
        .map(|a| match a {
            Sexp::Atom(sym, _) => Ok(Term::parse(sym)),
            Sexp::Str(text, _) => Ok(Term::Const(Symbol::new(text))),
            Sexp::List(..) => err(a.pos(), format!("nested term `{a}` is not allowed")),
        })
        .collect::<Result<_, _>>()?;
    Ok(Atom { predicate, args })
}

pub(crate) fn parse_ground_atom(s: &Sexp) -> Result<GroundAtom, ParseError> {
    let atom = parse_atom(s)?;
    let mut args = Vec::with_capacity(atom.args.len());
    for t in atom.args {
        match t {
            Term::Const(c) => args.push(c),
            Term::Var(v) => return err(s.pos(), format!("variable `{v}` in a ground atom")),
        }
    }
    Ok(GroundAtom {
        predicate: atom.predicate,
        args,
    })
}

fn is_and(items: &[Sexp]) -> bool {
    items.first().is_some_and(|h| h.is_keyword(":and"))
}

struct Ctx<'a> {
    arities: &'a mut BTreeMap<Symbol, usize>,
    interpreted: &'a BTreeMap<Symbol, usize>,
}

impl Ctx<'_> {
    fn check_arity(&mut self, atom: &Atom, pos: Pos) -> Result<(), ParseError> {
        match self.arities.get(&atom.predicate) {
            Some(&n) if n != atom.args.len() => err(
                pos,
                format!(
                    "predicate `{}` used with {} arguments, earlier with {n}",
                    atom.predicate,
                    atom.args.len()
                ),
            ),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(atom.predicate.clone(), atom.args.len());
                Ok(())
            }
        }
    }

    fn is_constraint(&self, head: &Symbol) -> bool {
        let name = lower(head);
        StaticRelations::BUILTIN.contains(&name.as_str()) || self.interpreted.contains_key(&name)
    }

    fn constraint(&self, s: &Sexp) -> Result<Constraint, ParseError> {
        let atom = parse_atom(s)?;
        if let Some(&n) = self.interpreted.get(&atom.predicate) {
            if n != atom.args.len() {
                return err(s.pos(), format!("`{}` is declared with arity {n}", atom.predicate));
            }
        }
        Ok(Constraint {
            name: atom.predicate,
            args: atom.args,
        })
    }

    fn precondition(&mut self, s: &Sexp, out: &mut Precondition) -> Result<(), ParseError> {
        let items = s.expect_list("a precondition")?;
        if items.is_empty() {
            return Ok(());
        }
        if is_and(items) {
            for it in &items[1..] {
                self.precondition(it, out)?;
            }
            return Ok(());
        }
        let head = items[0].expect_atom("a predicate")?;
        if head.as_str().eq_ignore_ascii_case(":not") {
            return err(
                s.pos(),
                "negated preconditions are not supported; use a positive predicate",
            );
        }
        if head.as_str().eq_ignore_ascii_case(":or") || head.as_str().eq_ignore_ascii_case(":forall") {
            return err(s.pos(), format!("`{head}` is not allowed in preconditions"));
        }
        if self.is_constraint(head) {
            out.constraints.push(self.constraint(s)?);
        } else {
            let atom = parse_atom(s)?;
            self.check_arity(&atom, s.pos())?;
            out.atoms.push(atom);
        }
        Ok(())
    }

    fn effect(
        &mut self,
        s: &Sexp,
        quantified: &[(Symbol, Symbol)],
        condition: &[Constraint],
        out: &mut Vec<EffectForm>,
    ) -> Result<(), ParseError> {
        let items = s.expect_list("an effect")?;
        if items.is_empty() {
            return Ok(());
        }
        let head = items[0].expect_atom("an effect")?;
        match head.as_str().to_ascii_lowercase().as_str() {
            ":and" => {
                for it in &items[1..] {
                    self.effect(it, quantified, condition, out)?;
                }
                Ok(())
            }
            ":not" => {
                if items.len() != 2 {
                    return err(s.pos(), "`:not` takes one atom");
                }
                let atom = parse_atom(&items[1])?;
                self.check_arity(&atom, items[1].pos())?;
                out.push(EffectForm {
                    polarity: Polarity::Delete,
                    atom,
                    quantified: quantified.to_vec(),
                    condition: condition.to_vec(),
                });
                Ok(())
            }
            ":forall" => {
                if items.len() != 3 {
                    return err(s.pos(), "`:forall` takes a variable list and an effect");
                }
                let mut q = quantified.to_vec();
                for v in items[1].expect_list("quantified variables")? {
                    q.push(quantified_var(v)?);
                }
                self.effect(&items[2], &q, condition, out)
            }
            ":when" => {
                if items.len() != 3 {
                    return err(s.pos(), "`:when` takes a condition and an effect");
                }
                let mut cond = condition.to_vec();
                self.static_condition(&items[1], &mut cond)?;
                self.effect(&items[2], quantified, &cond, out)
            }
            ":or" | ":oneof" => err(s.pos(), "disjunctive effects are not supported"),
            _ => {
                let atom = parse_atom(s)?;
                self.check_arity(&atom, s.pos())?;
                out.push(EffectForm {
                    polarity: Polarity::Add,
                    atom,
                    quantified: quantified.to_vec(),
                    condition: condition.to_vec(),
                });
                Ok(())
            }
        }
    }

    fn static_condition(&self, s: &Sexp, out: &mut Vec<Constraint>) -> Result<(), ParseError> {
        let items = s.expect_list("a condition")?;
        if is_and(items) {
            for it in &items[1..] {
                self.static_condition(it, out)?;
            }
            return Ok(());
        }
        let head = items
            .first()
            .ok_or_else(|| ParseError::new(s.pos(), "empty condition"))?
            .expect_atom("a condition")?;
        if !self.is_constraint(head) {
            return err(
                s.pos(),
                format!("conditional effect on `{s}`: only static constraints may guard effects"),
            );
        }
        out.push(self.constraint(s)?);
        Ok(())
    }
}

fn quantified_var(v: &Sexp) -> Result<(Symbol, Symbol), ParseError> {
    match v {
        Sexp::Atom(name, pos) => {
            if !name.is_variable() {
                return err(*pos, format!("`{name}` is not a variable"));
            }
            Ok((name.clone(), lower(&Symbol::new(&name.as_str()[1..]))))
        }
        Sexp::List(items, pos) => match items.as_slice() {
            [Sexp::Atom(name, _), Sexp::Atom(sort, _)] if name.is_variable() => Ok((name.clone(), lower(sort))),
            _ => err(*pos, "expected `?var` or `(?var sort)`"),
        },
        Sexp::Str(_, pos) => err(*pos, "expected a variable"),
    }
}

fn parse_operator(items: &[Sexp], pos: Pos, ctx: &mut Ctx<'_>) -> Result<(OperatorSchema, Vec<Pos>), ParseError> {
    let name = match items.get(1).and_then(Sexp::as_list) {
        Some([kw, name]) if kw.is_keyword("operator") || kw.is_keyword("action") => {
            lower(name.expect_atom("an operator name")?)
        }
        _ => return err(pos, "expected `(define (operator NAME) ...)`"),
    };
    let mut op = OperatorSchema {
        name,
        parameters: Vec::new(),
        resources: Vec::new(),
        precondition: Precondition::default(),
        effects: Vec::new(),
    };
    let mut positions = Vec::new();
    for (key, vals, kpos) in keyword_slots(&items[2..])? {
        let [val] = vals.as_slice() else {
            return err(kpos, format!("`{key}` takes exactly one value"));
        };
        match key.as_str() {
            ":parameters" => {
                for p in val.expect_list("a parameter list")? {
                    let sym = p.expect_atom("a parameter")?;
                    if !sym.is_variable() {
                        return err(p.pos(), format!("parameter `{sym}` must start with `?`"));
                    }
                    if op.parameters.contains(sym) {
                        return err(p.pos(), format!("duplicate parameter `{sym}`"));
                    }
                    op.parameters.push(sym.clone());
                }
            }
            ":resources" => {
                if !val.is_nil() {
                    for r in val.expect_list("a resource list")? {
                        let atom = parse_atom(r)?;
                        ctx.check_arity(&atom, r.pos())?;
                        op.resources.push(atom);
                        positions.push(r.pos());
                    }
                }
            }
            ":precondition" => {
                if !val.is_nil() {
                    ctx.precondition(val, &mut op.precondition)?;
                }
            }
            ":effect" => {
                if !val.is_nil() {
                    ctx.effect(val, &[], &[], &mut op.effects)?;
                }
            }
            other => return err(kpos, format!("unknown operator slot `{other}`")),
        }
    }
    Ok((op, positions))
}

fn check_variables(op: &OperatorSchema, pos: Pos) -> Result<(), ParseError> {
    let params: BTreeSet<&Symbol> = op.parameters.iter().collect();
    let check = |v: &Symbol, extra: &[(Symbol, Symbol)]| -> Result<(), ParseError> {
        if params.contains(v) || extra.iter().any(|(q, _)| q == v) {
            Ok(())
        } else {
            err(
                pos,
                format!("variable `{v}` in operator `{}` is not a parameter", op.name),
            )
        }
    };
    for a in op.precondition.atoms.iter().chain(&op.resources) {
        for v in a.variables() {
            check(v, &[])?;
        }
    }
    for c in &op.precondition.constraints {
        for v in c.args.iter().filter_map(Term::as_var) {
            check(v, &[])?;
        }
    }
    for e in &op.effects {
        for v in e.atom.variables() {
            check(v, &e.quantified)?;
        }
        for c in &e.condition {
            for v in c.args.iter().filter_map(Term::as_var) {
                check(v, &e.quantified)?;
            }
        }
    }
    Ok(())
}

/// Parses a domain file: `(domain NAME)`, `(:sort s C1 C2 ...)`,
/// `(:interpreted name arity)` and `(define (operator N) ...)` forms.
pub fn parse_domain(text: &str) -> Result<DomainSpec, ParseError> {
    let forms = sexpr::parse_all(text)?;
    let mut dom = DomainSpec::default();
    // declarations first, so operators may use relations declared after them
    for f in &forms {
        let items = f.expect_list("a top-level form")?;
        let Some(head) = items.first() else {
            return err(f.pos(), "empty form");
        };
        if head.is_keyword(":interpreted") {
            let (Some(name), Some(arity), 3) = (items.get(1), items.get(2), items.len()) else {
                return err(f.pos(), "expected `(:interpreted NAME ARITY)`");
            };
            let arity = arity
                .expect_atom("an arity")?
                .as_str()
                .parse::<usize>()
                .map_err(|_| ParseError::new(items[2].pos(), "arity must be a number"))?;
            let name = lower(name.expect_atom("a relation name")?);
            if dom.interpreted.insert(name.clone(), arity).is_some() {
                return err(f.pos(), format!("`{name}` declared twice"));
            }
        } else if head.is_keyword(":sort") {
            let name = lower(
                items
                    .get(1)
                    .ok_or_else(|| ParseError::new(f.pos(), "sort needs a name"))?
                    .expect_atom("a sort name")?,
            );
            let mut values = Vec::new();
            for v in &items[2..] {
                values.push(v.expect_atom("a constant")?.clone());
            }
            if dom.sorts.insert(name.clone(), values).is_some() {
                return err(f.pos(), format!("sort `{name}` declared twice"));
            }
        }
    }
    let interpreted = dom.interpreted.clone();
    let mut arities = BTreeMap::new();
    let mut ctx = Ctx {
        arities: &mut arities,
        interpreted: &interpreted,
    };
    for f in &forms {
        let items = f.as_list().unwrap();
        let head = &items[0];
        if head.is_keyword("domain") {
            dom.name = items
                .get(1)
                .ok_or_else(|| ParseError::new(f.pos(), "domain needs a name"))?
                .expect_atom("a domain name")?
                .clone();
        } else if head.is_keyword("define") {
            let (op, _) = parse_operator(items, f.pos(), &mut ctx)?;
            check_variables(&op, f.pos())?;
            for e in &op.effects {
                for (_, sort) in &e.quantified {
                    if !dom.sorts.contains_key(sort) {
                        return err(f.pos(), format!("quantifier over undeclared sort `{sort}`"));
                    }
                }
            }
            if dom.operators.iter().any(|o| o.name == op.name) {
                return err(f.pos(), format!("operator `{}` defined twice", op.name));
            }
            dom.operators.push(op);
        } else if head.is_keyword(":interpreted") || head.is_keyword(":sort") {
        } else {
            return err(f.pos(), format!("unexpected form `{head}`"));
        }
    }
    dom.arities = arities;
    Ok(dom)
}

fn conjunction(s: &Sexp) -> Result<Vec<GroundAtom>, ParseError> {
    let items = s.expect_list("a conjunction")?;
    if items.is_empty() || (items.len() == 1 && items[0].is_nil()) {
        return Ok(Vec::new());
    }
    if is_and(items) {
        let mut out = Vec::new();
        for it in &items[1..] {
            out.extend(conjunction(it)?);
        }
        return Ok(out);
    }
    if items[0].as_list().is_some() {
        // a bare list of atoms
        return items.iter().map(parse_ground_atom).collect();
    }
    Ok(vec![parse_ground_atom(s)?])
}

/// Parses `(define (problem N) :domain D :objects (...) :init (...) :goal ...)`.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ParseError> {
    let form = sexpr::parse_one(text)?;
    let items = form.expect_list("a problem definition")?;
    let name = match (items.first(), items.get(1).and_then(Sexp::as_list)) {
        (Some(d), Some([kw, name])) if d.is_keyword("define") && kw.is_keyword("problem") => {
            name.expect_atom("a problem name")?.clone()
        }
        _ => return err(form.pos(), "expected `(define (problem NAME) ...)`"),
    };
    let mut p = ProblemSpec {
        name,
        ..ProblemSpec::default()
    };
    for (key, vals, kpos) in keyword_slots(&items[2..])? {
        let [val] = vals.as_slice() else {
            return err(kpos, format!("`{key}` takes exactly one value"));
        };
        match key.as_str() {
            ":domain" => p.domain = val.expect_atom("a domain name")?.clone(),
            ":objects" => {
                if !val.is_nil() {
                    for o in val.expect_list("an object list")? {
                        p.objects.push(o.expect_atom("an object")?.clone());
                    }
                }
            }
            ":sorts" => {
                if !val.is_nil() {
                    for s in val.expect_list("a sort list")? {
                        let parts = s.expect_list("a sort")?;
                        let Some((name, values)) = parts.split_first() else {
                            return err(s.pos(), "empty sort");
                        };
                        let values = values
                            .iter()
                            .map(|v| v.expect_atom("a constant").cloned())
                            .collect::<Result<_, _>>()?;
                        p.sorts.insert(lower(name.expect_atom("a sort name")?), values);
                    }
                }
            }
            ":init" => {
                if !val.is_nil() {
                    for a in val.expect_list("initial atoms")? {
                        p.init.insert(parse_ground_atom(a)?);
                    }
                }
            }
            ":goal" => {
                if !val.is_nil() {
                    p.goal = conjunction(val)?;
                }
            }
            other => return err(kpos, format!("unknown problem slot `{other}`")),
        }
    }
    Ok(p)
}

/// Parses a list of ground action calls `(stack C D Table) ...`.
pub fn parse_sequence(text: &str) -> Result<Vec<(Symbol, Vec<Symbol>)>, ParseError> {
    let mut forms = sexpr::parse_all(text)?;
    // accept a single wrapping `(sequence ...)` form
    if let [Sexp::List(items, _)] = forms.as_slice() {
        if items.first().is_some_and(|h| h.is_keyword("sequence")) {
            forms = items[1..].to_vec();
        }
    }
    forms
        .iter()
        .map(|f| {
            let g = parse_ground_atom(f)?;
            Ok((g.predicate, g.args))
        })
        .collect()
}

/// Parses a formula built from atoms, `:not` and `:and`.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    fn go(s: &Sexp) -> Result<Formula, ParseError> {
        let items = s.expect_list("a formula")?;
        if is_and(items) {
            return Ok(Formula::And(items[1..].iter().map(go).collect::<Result<_, _>>()?));
        }
        if items.first().is_some_and(|h| h.is_keyword(":not")) {
            if items.len() != 2 {
                return err(s.pos(), "`:not` takes one formula");
            }
            return Ok(Formula::Not(Box::new(go(&items[1])?)));
        }
        Ok(Formula::Atom(parse_atom(s)?))
    }
    go(&sexpr::parse_one(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOCKS: &str = r#"
(domain blocks)
(define (operator STACK)
  :parameters (?X ?Y ?Z)
  :precondition
    (:and (on ?X ?Z) (clear ?X) (clear ?Y)
          (:neq ?Y ?Z) (:neq ?X ?Z) (:neq ?X ?Y)
          (:neq ?X Table) (:neq ?Y Table))
  :effect (:and (on ?X ?Y) (:not (on ?X ?Z))
            (clear ?Z) (:not (clear ?Y))))

(define (operator UNSTACK)
  :parameters (?X ?Y)
  :precondition
    (:and (on ?X ?Y) (clear ?X) (:neq ?X ?Y)
          (:neq ?X Table) (:neq ?Y Table))
  :effect (:and (on ?X Table) (clear ?Y)
            (:not (on ?X ?Y))))
"#;

    #[test]
    fn blocks_operators() {
        let d = parse_domain(BLOCKS).unwrap();
        assert_eq!(d.operators.len(), 2);
        assert_eq!(d.operator("stack").unwrap().parameters.len(), 3);
        assert_eq!(d.operator("UNSTACK").unwrap().parameters.len(), 2);
        assert_eq!(d.operator("stack").unwrap().precondition.constraints.len(), 5);
        assert_eq!(d.arities[&Symbol::new("on")], 2);
    }

    #[test]
    fn empty_domain_is_valid() {
        let d = parse_domain("(domain nothing)").unwrap();
        assert!(d.operators.is_empty());
    }

    #[test]
    fn arity_conflict_is_reported() {
        let text = "(define (operator a) :parameters (?x) :precondition (p ?x) :effect (p ?x ?x))";
        let e = parse_domain(text).unwrap_err();
        assert!(e.message.contains("arguments"), "{e}");
    }

    #[test]
    fn undeclared_sort_is_reported() {
        let text = "(define (operator a) :parameters (?x) :effect (:forall (?c) (:not (p ?x ?c))))";
        let e = parse_domain(text).unwrap_err();
        assert!(e.message.contains("undeclared sort"), "{e}");
    }

    #[test]
    fn disjunction_and_fluent_guards_rejected() {
        let or = "(define (operator a) :parameters (?x) :effect (:or (p ?x) (q ?x)))";
        assert!(parse_domain(or).unwrap_err().message.contains("disjunctive"));
        let fluent = "(define (operator a) :parameters (?x) :effect (:when (hot ?x) (p ?x)))";
        assert!(parse_domain(fluent).unwrap_err().message.contains("static"));
    }

    #[test]
    fn problem_slots() {
        let p = parse_problem(
            "(define (problem p1) :domain blocks :objects (A B)
               :init ((on A Table) (clear A)) :goal (:and (on A B)))",
        )
        .unwrap();
        assert_eq!(p.init.len(), 2);
        assert_eq!(p.goal, vec![GroundAtom::new("on", &["A", "B"])]);
    }
}
