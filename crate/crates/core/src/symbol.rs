use std::borrow::Borrow;
use std::fmt;
use std::sync::Arc;

/// An immutable, cheaply clonable name: predicate, operator, constant or
/// variable. Ordering and hashing follow the underlying string.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Variables carry the `?` sigil.
    pub fn is_variable(&self) -> bool {
        self.0.starts_with('?')
    }

    /// Parses the symbol as an exact number (`12`, `-3`, `7/2`).
    pub fn as_number(&self) -> Option<num_rational::Rational64> {
        let s = self.as_str();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.parse().ok()?;
                let d: i64 = d.parse().ok()?;
                (d != 0).then(|| num_rational::Rational64::new(n, d))
            }
            None => s.parse::<i64>().ok().map(num_rational::Rational64::from_integer),
        }
    }

    pub fn from_number(r: num_rational::Rational64) -> Self {
        if r.is_integer() {
            Symbol::new(&r.to_integer().to_string())
        } else {
            Symbol::new(&format!("{}/{}", r.numer(), r.denom()))
        }
    }
}

impl Default for Symbol {
    fn default() -> Self {
        Symbol::new("")
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Symbol {
    fn eq(&self, other: &str) -> bool {
        &*self.0 == other
    }
}

impl PartialEq<&str> for Symbol {
    fn eq(&self, other: &&str) -> bool {
        &*self.0 == *other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn numbers_round_trip() {
        assert_eq!(Symbol::new("5").as_number(), Some(Rational64::from_integer(5)));
        assert_eq!(Symbol::new("7/2").as_number(), Some(Rational64::new(7, 2)));
        assert_eq!(Symbol::new("Table").as_number(), None);
        assert_eq!(Symbol::from_number(Rational64::new(6, 4)).as_str(), "3/2");
    }

    #[test]
    fn sigil() {
        assert!(Symbol::new("?x").is_variable());
        assert!(!Symbol::new("Table").is_variable());
    }
}
