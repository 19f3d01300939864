use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::symbol::Symbol;

pub type StaticFn = Arc<dyn Fn(&[Symbol]) -> bool + Send + Sync>;

/// Host-evaluated relations over constants, checked when an operator is
/// instantiated (`:neq`, comparisons, and anything a domain declares).
#[derive(Clone)]
pub struct StaticRelations {
    fns: BTreeMap<Symbol, StaticFn>,
}

fn compare(args: &[Symbol], pred: fn(std::cmp::Ordering) -> bool) -> bool {
    match (
        args.first().and_then(Symbol::as_number),
        args.get(1).and_then(Symbol::as_number),
    ) {
        (Some(a), Some(b)) if args.len() == 2 => pred(a.cmp(&b)),
        _ => false,
    }
}

impl Default for StaticRelations {
    fn default() -> Self {
        let mut fns: BTreeMap<Symbol, StaticFn> = BTreeMap::new();
        fns.insert(
            Symbol::new(":neq"),
            Arc::new(|a: &[Symbol]| a.len() == 2 && a[0] != a[1]),
        );
        fns.insert(
            Symbol::new(":eq"),
            Arc::new(|a: &[Symbol]| a.len() == 2 && a[0] == a[1]),
        );
        fns.insert(Symbol::new("<"), Arc::new(|a: &[Symbol]| compare(a, |o| o.is_lt())));
        fns.insert(Symbol::new("<="), Arc::new(|a: &[Symbol]| compare(a, |o| o.is_le())));
        fns.insert(Symbol::new(">"), Arc::new(|a: &[Symbol]| compare(a, |o| o.is_gt())));
        fns.insert(Symbol::new(">="), Arc::new(|a: &[Symbol]| compare(a, |o| o.is_ge())));
        StaticRelations { fns }
    }
}

impl StaticRelations {
    /// Names every domain may use without declaring them.
    pub const BUILTIN: [&'static str; 6] = [":neq", ":eq", "<", "<=", ">", ">="];

    pub fn insert(&mut self, name: &str, f: StaticFn) {
        self.fns.insert(Symbol::new(name), f);
    }

    pub fn get(&self, name: &Symbol) -> Option<&StaticFn> {
        self.fns.get(name)
    }

    pub fn contains(&self, name: &Symbol) -> bool {
        self.fns.contains_key(name)
    }
}

impl fmt::Debug for StaticRelations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.fns.keys()).finish()
    }
}
