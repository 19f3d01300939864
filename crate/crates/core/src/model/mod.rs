//! Domains, problems, operator schemas and their ground instances.

mod ground;
pub(crate) mod parse;
mod print;
mod statics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::symbol::Symbol;

pub use ground::{ground_formula, holds, instantiate, instantiate_by_name, progress, Universes};
pub use parse::{parse_domain, parse_formula, parse_problem, parse_sequence};
pub use print::{print_domain, print_problem, print_sequence};
pub use statics::{StaticFn, StaticRelations};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
}

impl Term {
    pub fn parse(s: &Symbol) -> Term {
        if s.is_variable() {
            Term::Var(s.clone())
        } else {
            Term::Const(s.clone())
        }
    }

    pub fn symbol(&self) -> &Symbol {
        match self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A predicate applied to terms that may contain variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: &[&str]) -> Atom {
        Atom {
            predicate: Symbol::new(predicate),
            args: args.iter().map(|a| Term::parse(&Symbol::new(a))).collect(),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A predicate applied to constants only.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GroundAtom {
    pub predicate: Symbol,
    pub args: Vec<Symbol>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> GroundAtom {
        GroundAtom {
            predicate: Symbol::new(predicate),
            args: args.iter().map(|a| Symbol::new(a)).collect(),
        }
    }

    pub fn lift(&self) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().cloned().map(Term::Const).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A call to a host-evaluated relation such as `(:neq ?x ?y)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Constraint {
    pub name: Symbol,
    pub args: Vec<Term>,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Ground-checkable formula used by [`holds`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(inner) => write!(f, "(:not {inner})"),
            Formula::And(parts) => {
                f.write_str("(:and")?;
                for p in parts {
                    write!(f, " {p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Polarity {
    Add,
    Delete,
}

/// One flattened effect: an atom added or deleted for every assignment of
/// the quantified variables that satisfies the static condition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EffectForm {
    pub polarity: Polarity,
    pub atom: Atom,
    /// Quantified variable and the sort it ranges over.
    pub quantified: Vec<(Symbol, Symbol)>,
    pub condition: Vec<Constraint>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Precondition {
    pub atoms: Vec<Atom>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OperatorSchema {
    pub name: Symbol,
    pub parameters: Vec<Symbol>,
    pub resources: Vec<Atom>,
    pub precondition: Precondition,
    pub effects: Vec<EffectForm>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DomainSpec {
    pub name: Symbol,
    pub operators: Vec<OperatorSchema>,
    pub sorts: BTreeMap<Symbol, Vec<Symbol>>,
    /// Host-evaluated relations declared by the domain, with their arity.
    pub interpreted: BTreeMap<Symbol, usize>,
    pub arities: BTreeMap<Symbol, usize>,
}

impl DomainSpec {
    pub fn operator(&self, name: &str) -> Option<&OperatorSchema> {
        let name = name.to_ascii_lowercase();
        self.operators.iter().find(|o| o.name.as_str() == name)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ProblemSpec {
    pub name: Symbol,
    pub domain: Symbol,
    pub objects: Vec<Symbol>,
    /// Extra or replacement sort universes for this instance.
    pub sorts: BTreeMap<Symbol, Vec<Symbol>>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}

/// A fully instantiated operator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GroundAction {
    pub name: Symbol,
    pub args: Vec<Symbol>,
    pub preconditions: BTreeSet<GroundAtom>,
    pub adds: BTreeSet<GroundAtom>,
    pub deletes: BTreeSet<GroundAtom>,
    pub resources: BTreeSet<GroundAtom>,
}

impl GroundAction {
    /// The pseudo-action of the initial step: no preconditions, adds the initial state.
    pub fn initial(init: &BTreeSet<GroundAtom>) -> GroundAction {
        GroundAction {
            name: Symbol::new("*init*"),
            args: Vec::new(),
            preconditions: BTreeSet::new(),
            adds: init.clone(),
            deletes: BTreeSet::new(),
            resources: BTreeSet::new(),
        }
    }

    /// The pseudo-action of the goal step: requires the goal, no effects.
    pub fn goal(goal: &[GroundAtom]) -> GroundAction {
        GroundAction {
            name: Symbol::new("*goal*"),
            args: Vec::new(),
            preconditions: goal.iter().cloned().collect(),
            adds: BTreeSet::new(),
            deletes: BTreeSet::new(),
            resources: BTreeSet::new(),
        }
    }

    /// `(stack C D Table)`
    pub fn signature(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Everything needed to turn `(name args...)` into a [`GroundAction`].
#[derive(Clone, Debug)]
pub struct Grounder {
    pub domain: Arc<DomainSpec>,
    pub universes: Universes,
    pub statics: StaticRelations,
}

impl Grounder {
    pub fn new(domain: Arc<DomainSpec>, problem: &ProblemSpec, statics: StaticRelations) -> Self {
        let universes = Universes::new(&domain, problem);
        Grounder {
            domain,
            universes,
            statics,
        }
    }

    pub fn ground(&self, name: &str, args: &[Symbol]) -> Result<GroundAction, ModelError> {
        instantiate_by_name(&self.domain, name, args, &self.universes, &self.statics)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{op}` takes {expected} arguments, got {found}")]
    Arity { op: String, expected: usize, found: usize },
    #[error("parameter `{param}` of `{op}` is unbound")]
    UnboundParameter { op: String, param: String },
    #[error("variable `{var}` in `{op}` is neither a parameter nor quantified")]
    FreeVariable { op: String, var: String },
    #[error("quantifier ranges over undeclared sort `{0}`")]
    UndeclaredSort(String),
    #[error("no evaluator bound for interpreted relation `{0}`")]
    UnknownInterpreted(String),
    #[error("{action}: constraint {constraint} does not hold")]
    ConstraintFailed { action: String, constraint: String },
    #[error("formula {0} is not ground")]
    NonGround(String),
    #[error("{action}: precondition {atom} does not hold")]
    PreconditionViolated { action: String, atom: String },
}
