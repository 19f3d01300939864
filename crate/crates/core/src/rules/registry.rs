use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};

use super::RuleError;
use crate::plan::{PartialPlan, StepId, Value};
use crate::query::QueryWorld;
use crate::symbol::Symbol;

/// Host code behind an interpreted predicate. It receives the plan and the
/// arguments bound so far and returns every full argument tuple it accepts.
/// Arguments marked required are always bound when it is called.
pub type Evaluator = Arc<dyn Fn(&PartialPlan, &[Option<Value>]) -> Vec<Vec<Value>> + Send + Sync>;

#[derive(Clone)]
pub struct InterpretedPredicate {
    pub name: Symbol,
    /// Per argument: must be bound before evaluation. Unrequired
    /// arguments may be generated.
    pub required: Vec<bool>,
    eval: Evaluator,
}

impl fmt::Debug for InterpretedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.required.len())
    }
}

impl PartialEq for InterpretedPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.required == other.required
    }
}

impl InterpretedPredicate {
    pub fn new(name: &str, required: Vec<bool>, eval: Evaluator) -> Self {
        InterpretedPredicate {
            name: Symbol::new(&name.to_ascii_lowercase()),
            required,
            eval,
        }
    }

    /// A filter: every argument required, true or false.
    pub fn test<F>(name: &str, arity: usize, f: F) -> Self
    where
        F: Fn(&PartialPlan, &[Value]) -> bool + Send + Sync + 'static,
    {
        let eval: Evaluator = Arc::new(move |plan, args| {
            let vals: Option<Vec<Value>> = args.iter().cloned().collect();
            match vals {
                Some(v) if f(plan, &v) => vec![v],
                _ => Vec::new(),
            }
        });
        Self::new(name, vec![true; arity], eval)
    }

    pub fn arity(&self) -> usize {
        self.required.len()
    }

    /// Runs the evaluator and keeps the distinct tuples that agree with the
    /// bound arguments.
    pub fn evaluate(&self, plan: &PartialPlan, args: &[Option<Value>]) -> Vec<Vec<Value>> {
        debug_assert_eq!(args.len(), self.arity());
        let mut out: Vec<Vec<Value>> = (self.eval)(plan, args)
            .into_iter()
            .filter(|t| t.len() == args.len() && t.iter().zip(args).all(|(v, a)| a.as_ref().is_none_or(|a| a == v)))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Interpreted predicates by name.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    entries: BTreeMap<Symbol, Arc<InterpretedPredicate>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    pub fn register(&mut self, entry: InterpretedPredicate) -> Result<(), RuleError> {
        if self.entries.contains_key(&entry.name) {
            return Err(RuleError::DuplicatePredicate(entry.name.to_string()));
        }
        self.entries.insert(entry.name.clone(), Arc::new(entry));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<InterpretedPredicate>> {
        self.entries.get(name.to_ascii_lowercase().as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &Symbol> {
        self.entries.keys()
    }
}

fn step(v: &Value) -> Option<StepId> {
    v.as_step()
}

fn number(v: &Value) -> Option<Rational64> {
    v.as_const().and_then(Symbol::as_number)
}

fn comparison(name: &str, pred: fn(std::cmp::Ordering) -> bool) -> InterpretedPredicate {
    InterpretedPredicate::test(name, 2, move |_, a| match (number(&a[0]), number(&a[1])) {
        (Some(x), Some(y)) => pred(x.cmp(&y)),
        _ => false,
    })
}

fn arithmetic(name: &str, op: fn(Rational64, Rational64) -> Option<Rational64>) -> InterpretedPredicate {
    let eval: Evaluator = Arc::new(move |_, args| {
        let (Some(x), Some(y)) = (args[0].as_ref().and_then(number), args[1].as_ref().and_then(number)) else {
            return Vec::new();
        };
        match op(x, y) {
            Some(z) => vec![vec![
                args[0].clone().unwrap(),
                args[1].clone().unwrap(),
                Value::Const(Symbol::from_number(z)),
            ]],
            None => Vec::new(),
        }
    });
    InterpretedPredicate::new(name, vec![true, true, false], eval)
}

fn steps2(f: fn(&PartialPlan, StepId, StepId) -> bool) -> impl Fn(&PartialPlan, &[Value]) -> bool {
    move |p, a| match (step(&a[0]), step(&a[1])) {
        (Some(x), Some(y)) => f(p, x, y),
        _ => false,
    }
}

fn directly_ordered(p: &PartialPlan, a: StepId, b: StepId) -> bool {
    p.ordering_origin(a, b).is_some() || p.links().any(|l| l.producer == a && l.consumer == b)
}

/// Shapes `regular-shapes` enumerates.
pub const REGULAR_SHAPES: [&str; 2] = ["RECTANGULAR", "CYLINDRICAL"];

fn regular_shapes() -> InterpretedPredicate {
    let eval: Evaluator = Arc::new(|_, _| {
        REGULAR_SHAPES
            .iter()
            .map(|s| vec![Value::Const(Symbol::new(s))])
            .collect()
    });
    InterpretedPredicate::new("regular-shapes", vec![false], eval)
}

/// `(join-swappable q1 jc1 a1 b1  q2 jc2 a2 b2  q3 jc3 a3 b3  q4 jc4 a4 b4)`:
/// the first two joins, the second feeding the first, re-associated into
/// an upper join 3 over a lower join 4. Reads the query schema from the
/// plan's initial state.
fn join_swappable() -> InterpretedPredicate {
    let eval: Evaluator = Arc::new(|plan, args| {
        let consts: Option<Vec<Symbol>> = args[..8]
            .iter()
            .map(|a| a.as_ref().and_then(Value::as_const).cloned())
            .collect();
        let Some(c) = consts else {
            return Vec::new();
        };
        let world = QueryWorld::from_facts(plan.init_state());
        world
            .swap_joins([&c[0], &c[1], &c[2], &c[3]], [&c[4], &c[5], &c[6], &c[7]])
            .into_iter()
            .map(|(upper, lower)| c.iter().cloned().chain(upper).chain(lower).map(Value::Const).collect())
            .collect()
    });
    let mut required = vec![true; 8];
    required.extend([false; 8]);
    InterpretedPredicate::new("join-swappable", required, eval)
}

/// Comparison, inequality and arithmetic predicates plus the plan-structure
/// predicates used by the shipped rule sets.
pub fn builtin_library() -> Registry {
    let mut r = Registry::empty();
    let entries = vec![
        InterpretedPredicate::test(":neq", 2, |_, a| a[0] != a[1]),
        comparison("<", |o| o.is_lt()),
        comparison("<=", |o| o.is_le()),
        comparison(">", |o| o.is_gt()),
        comparison(">=", |o| o.is_ge()),
        arithmetic("+", |x, y| x.checked_add(&y)),
        arithmetic("-", |x, y| x.checked_sub(&y)),
        arithmetic("*", |x, y| x.checked_mul(&y)),
        arithmetic("/", |x, y| (*y.numer() != 0).then(|| x.checked_div(&y)).flatten()),
        InterpretedPredicate::test("possibly-adjacent", 2, steps2(|p, a, b| p.possibly_adjacent(a, b))),
        InterpretedPredicate::test(
            "adjacent-in-critical-path",
            2,
            steps2(|p, a, b| p.adjacent_in_critical_path(a, b)),
        ),
        InterpretedPredicate::test("in-critical-path", 1, |p, a| {
            step(&a[0]).is_some_and(|s| p.in_critical_path(s))
        }),
        InterpretedPredicate::test("before", 2, steps2(|p, a, b| p.precedes(a, b))),
        InterpretedPredicate::test("directly-ordered", 2, steps2(directly_ordered)),
        regular_shapes(),
        join_swappable(),
    ];
    for e in entries {
        r.register(e).expect("builtin names are distinct");
    }
    r
}
