use std::collections::{BTreeMap, BTreeSet};

use super::statics::StaticRelations;
use super::{
    Constraint, DomainSpec, Formula, GroundAction, GroundAtom, ModelError, OperatorSchema, Polarity, ProblemSpec, Term,
};
use crate::symbol::Symbol;

/// Finite value sets for quantified variables, keyed by sort.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Universes(BTreeMap<Symbol, Vec<Symbol>>);

impl Universes {
    /// Domain sorts extended with the problem's own sort values.
    pub fn new(domain: &DomainSpec, problem: &ProblemSpec) -> Self {
        let mut map = domain.sorts.clone();
        for (sort, values) in &problem.sorts {
            let entry = map.entry(sort.clone()).or_default();
            for v in values {
                if !entry.contains(v) {
                    entry.push(v.clone());
                }
            }
        }
        Universes(map)
    }

    pub fn from_map(map: BTreeMap<Symbol, Vec<Symbol>>) -> Self {
        Universes(map)
    }

    pub fn get(&self, sort: &Symbol) -> Option<&[Symbol]> {
        self.0.get(sort).map(Vec::as_slice)
    }
}

type Env = BTreeMap<Symbol, Symbol>;

fn resolve(t: &Term, env: &Env, op: &Symbol) -> Result<Symbol, ModelError> {
    match t {
        Term::Const(c) => Ok(c.clone()),
        Term::Var(v) => env.get(v).cloned().ok_or_else(|| ModelError::FreeVariable {
            op: op.to_string(),
            var: v.to_string(),
        }),
    }
}

fn ground_atom(a: &super::Atom, env: &Env, op: &Symbol) -> Result<GroundAtom, ModelError> {
    Ok(GroundAtom {
        predicate: a.predicate.clone(),
        args: a.args.iter().map(|t| resolve(t, env, op)).collect::<Result<_, _>>()?,
    })
}

fn check(c: &Constraint, env: &Env, op: &Symbol, statics: &StaticRelations) -> Result<bool, ModelError> {
    let args: Vec<Symbol> = c.args.iter().map(|t| resolve(t, env, op)).collect::<Result<_, _>>()?;
    let f = statics
        .get(&c.name)
        .ok_or_else(|| ModelError::UnknownInterpreted(c.name.to_string()))?;
    Ok(f(&args))
}

/// Grounds `schema` with positional `args`, expanding quantified effects over
/// `universes` and evaluating static guards and precondition constraints.
pub fn instantiate(
    schema: &OperatorSchema,
    args: &[Symbol],
    universes: &Universes,
    statics: &StaticRelations,
) -> Result<GroundAction, ModelError> {
    if args.len() > schema.parameters.len() {
        return Err(ModelError::Arity {
            op: schema.name.to_string(),
            expected: schema.parameters.len(),
            found: args.len(),
        });
    }
    if let Some(missing) = schema.parameters.get(args.len()) {
        return Err(ModelError::UnboundParameter {
            op: schema.name.to_string(),
            param: missing.to_string(),
        });
    }
    if let Some(v) = args.iter().find(|a| a.is_variable()) {
        return Err(ModelError::UnboundParameter {
            op: schema.name.to_string(),
            param: v.to_string(),
        });
    }
    let env: Env = schema.parameters.iter().cloned().zip(args.iter().cloned()).collect();
    let name = &schema.name;
    let mut action = GroundAction {
        name: name.clone(),
        args: args.to_vec(),
        preconditions: BTreeSet::new(),
        adds: BTreeSet::new(),
        deletes: BTreeSet::new(),
        resources: BTreeSet::new(),
    };
    for c in &schema.precondition.constraints {
        if !check(c, &env, name, statics)? {
            let shown = Constraint {
                name: c.name.clone(),
                args: c
                    .args
                    .iter()
                    .map(|t| resolve(t, &env, name).map(Term::Const))
                    .collect::<Result<_, _>>()?,
            };
            return Err(ModelError::ConstraintFailed {
                action: action.to_string(),
                constraint: shown.to_string(),
            });
        }
    }
    for a in &schema.precondition.atoms {
        action.preconditions.insert(ground_atom(a, &env, name)?);
    }
    for r in &schema.resources {
        action.resources.insert(ground_atom(r, &env, name)?);
    }
    for e in &schema.effects {
        let mut domains = Vec::with_capacity(e.quantified.len());
        for (_, sort) in &e.quantified {
            domains.push(
                universes
                    .get(sort)
                    .ok_or_else(|| ModelError::UndeclaredSort(sort.to_string()))?,
            );
        }
        // odometer over the quantified variables' universes
        let mut idx = vec![0usize; domains.len()];
        if domains.iter().any(|d| d.is_empty()) {
            continue;
        }
        loop {
            let mut local = env.clone();
            for (i, (v, _)) in e.quantified.iter().enumerate() {
                local.insert(v.clone(), domains[i][idx[i]].clone());
            }
            let mut ok = true;
            for c in &e.condition {
                if !check(c, &local, name, statics)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                let atom = ground_atom(&e.atom, &local, name)?;
                match e.polarity {
                    Polarity::Add => action.adds.insert(atom),
                    Polarity::Delete => action.deletes.insert(atom),
                };
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < domains[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    // an atom both added and deleted ends up true
    let adds = &action.adds;
    action.deletes.retain(|d| !adds.contains(d));
    Ok(action)
}

/// Looks the operator up by name, then instantiates it.
pub fn instantiate_by_name(
    domain: &DomainSpec,
    name: &str,
    args: &[Symbol],
    universes: &Universes,
    statics: &StaticRelations,
) -> Result<GroundAction, ModelError> {
    let schema = domain
        .operator(name)
        .ok_or_else(|| ModelError::UnknownOperator(name.to_string()))?;
    instantiate(schema, args, universes, statics)
}

/// Grounds a formula, failing if any variable remains.
pub fn ground_formula(f: &Formula) -> Result<(), ModelError> {
    match f {
        Formula::Atom(a) => {
            if a.variables().next().is_some() {
                Err(ModelError::NonGround(a.to_string()))
            } else {
                Ok(())
            }
        }
        Formula::Not(inner) => ground_formula(inner),
        Formula::And(parts) => parts.iter().try_for_each(ground_formula),
    }
}

/// Closed-world evaluation of a ground formula.
pub fn holds(state: &BTreeSet<GroundAtom>, f: &Formula) -> Result<bool, ModelError> {
    ground_formula(f)?;
    fn eval(state: &BTreeSet<GroundAtom>, f: &Formula) -> bool {
        match f {
            Formula::Atom(a) => {
                let g = GroundAtom {
                    predicate: a.predicate.clone(),
                    args: a.args.iter().map(|t| t.symbol().clone()).collect(),
                };
                state.contains(&g)
            }
            Formula::Not(inner) => !eval(state, inner),
            Formula::And(parts) => parts.iter().all(|p| eval(state, p)),
        }
    }
    Ok(eval(state, f))
}

/// `(state - deletes) ∪ adds`, after checking the action's preconditions.
pub fn progress(state: &BTreeSet<GroundAtom>, action: &GroundAction) -> Result<BTreeSet<GroundAtom>, ModelError> {
    if let Some(p) = action.preconditions.iter().find(|p| !state.contains(*p)) {
        return Err(ModelError::PreconditionViolated {
            action: action.to_string(),
            atom: p.to_string(),
        });
    }
    let mut next: BTreeSet<GroundAtom> = state.difference(&action.deletes).cloned().collect();
    next.extend(action.adds.iter().cloned());
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_domain, parse_formula};
    use super::*;

    fn syms(xs: &[&str]) -> Vec<Symbol> {
        xs.iter().map(|s| Symbol::new(s)).collect()
    }

    const PUNCH: &str = "(:sort surf ROUGH POLISHED SMOOTH)
      (define (operator PUNCH)
        :parameters (?x ?width ?orientation)
        :resources ((machine PUNCH) (is-object ?x))
        :precondition (:and (is-object ?x) (is-punchable ?x ?width ?orientation) (has-clamp PUNCH))
        :effect (:and (:forall (?surf) (:when (:neq ?surf ROUGH)
                                            (:not (surface-condition ?x ?surf))))
                      (surface-condition ?x ROUGH)
                      (has-hole ?x ?width ?orientation)))
      (define (operator noop) :parameters () :effect NIL)";

    #[test]
    fn punch_expands_quantified_deletes() {
        let d = parse_domain(PUNCH).unwrap();
        let u = Universes::from_map(d.sorts.clone());
        let a = instantiate(
            d.operator("punch").unwrap(),
            &syms(&["A", "w1", "o1"]),
            &u,
            &StaticRelations::default(),
        )
        .unwrap();
        let deletes: BTreeSet<_> = [
            GroundAtom::new("surface-condition", &["A", "POLISHED"]),
            GroundAtom::new("surface-condition", &["A", "SMOOTH"]),
        ]
        .into();
        let adds: BTreeSet<_> = [
            GroundAtom::new("surface-condition", &["A", "ROUGH"]),
            GroundAtom::new("has-hole", &["A", "w1", "o1"]),
        ]
        .into();
        assert_eq!(a.deletes, deletes);
        assert_eq!(a.adds, adds);
        assert_eq!(a.resources.len(), 2);
    }

    #[test]
    fn zero_effects_and_unbound() {
        let d = parse_domain(PUNCH).unwrap();
        let u = Universes::from_map(d.sorts.clone());
        let s = StaticRelations::default();
        let noop = instantiate(d.operator("noop").unwrap(), &[], &u, &s).unwrap();
        assert!(noop.adds.is_empty() && noop.deletes.is_empty());
        let e = instantiate(d.operator("punch").unwrap(), &syms(&["A"]), &u, &s).unwrap_err();
        assert!(matches!(e, ModelError::UnboundParameter { .. }));
    }

    #[test]
    fn closed_world_holds() {
        let state: BTreeSet<_> = [GroundAtom::new("on", &["C", "A"])].into();
        assert!(holds(&state, &parse_formula("(on C A)").unwrap()).unwrap());
        assert!(holds(&state, &parse_formula("(:not (clear C))").unwrap()).unwrap());
        assert!(holds(&state, &parse_formula("(on ?x A)").unwrap()).is_err());
    }
}
