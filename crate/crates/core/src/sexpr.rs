//! A small reader for the parenthesized text used by domain, problem, rule,
//! plan and catalog files.

use std::fmt;

use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A syntax or structure error with the position it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(Symbol, Pos),
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&Symbol> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// True for the atom `s`, ignoring ASCII case.
    pub fn is_keyword(&self, s: &str) -> bool {
        matches!(self, Sexp::Atom(a, _) if a.as_str().eq_ignore_ascii_case(s))
    }

    /// `NIL` and `()` both denote the empty list.
    pub fn is_nil(&self) -> bool {
        match self {
            Sexp::Atom(a, _) => a.as_str().eq_ignore_ascii_case("nil"),
            Sexp::List(items, _) => items.is_empty(),
            Sexp::Str(..) => false,
        }
    }

    pub fn expect_atom(&self, what: &str) -> Result<&Symbol, ParseError> {
        self.as_atom()
            .ok_or_else(|| ParseError::new(self.pos(), format!("expected {what}, found a list")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp], ParseError> {
        self.as_list()
            .ok_or_else(|| ParseError::new(self.pos(), format!("expected {what}, found `{self}`")))
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s, _) => write!(f, "{s}"),
            Sexp::Str(s, _) => write!(f, "{s:?}"),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexp>, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(ParseError::new(start, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => {
                            let item = self.read()?.expect("peeked a character");
                            items.push(item);
                        }
                    }
                }
            }
            ')' => Err(ParseError::new(start, "unexpected `)`")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(ParseError::new(start, "unterminated string")),
                        Some('"') => return Ok(Some(Sexp::Str(s, start))),
                        Some('\\') => match self.bump() {
                            Some(c) => s.push(c),
                            None => return Err(ParseError::new(start, "unterminated string")),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            '\'' => {
                // a quoted constant reads as the constant itself
                self.bump();
                match self.read()? {
                    Some(Sexp::Atom(s, _)) => Ok(Some(Sexp::Atom(s, start))),
                    _ => Err(ParseError::new(start, "quote must precede a symbol")),
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';' | '"') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(Symbol::from(s), start)))
            }
        }
    }
}

/// Reads every top-level form in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let mut out = Vec::new();
    while let Some(s) = r.read()? {
        out.push(s);
    }
    Ok(out)
}

/// Reads exactly one form.
pub fn parse_one(text: &str) -> Result<Sexp, ParseError> {
    let mut forms = parse_all(text)?;
    match forms.len() {
        1 => Ok(forms.pop().unwrap()),
        0 => Err(ParseError::new(Pos { line: 1, col: 1 }, "empty input")),
        _ => Err(ParseError::new(forms[1].pos(), "expected a single form")),
    }
}

/// A keyword, the values after it, and where the keyword appeared.
pub type KeywordSlot<'a> = (String, Vec<&'a Sexp>, Pos);

/// Splits a keyword-argument list (`:name x :if (...) ...`) into pairs.
/// Values following a keyword run until the next keyword; most slots take one.
pub fn keyword_slots(items: &[Sexp]) -> Result<Vec<KeywordSlot<'_>>, ParseError> {
    let mut out: Vec<KeywordSlot<'_>> = Vec::new();
    for it in items {
        match it {
            Sexp::Atom(a, p) if a.as_str().starts_with(':') && a.as_str().len() > 1 => {
                out.push((a.as_str().to_ascii_lowercase(), Vec::new(), *p));
            }
            other => match out.last_mut() {
                Some((_, vals, _)) => vals.push(other),
                None => {
                    return Err(ParseError::new(
                        other.pos(),
                        format!("expected a keyword, found `{other}`"),
                    ))
                }
            },
        }
    }
    Ok(out)
}
