//! Terms and atoms, both in source form (with variables) and ground form.

use std::cmp::Ordering;
use std::fmt;

use ustr::Ustr;

/// An interned string. Equality is pointer identity; ordering is by content.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol(Ustr);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Ustr::from(s))
    }

    pub fn as_str(&self) -> &'static str {
        self.0.as_str()
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            Ordering::Equal
        } else {
            self.as_str().cmp(other.as_str())
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// A ground value. Integers order before constants, constants before strings.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Value {
    Int(i64),
    /// A bare lowercase constant such as `a` or `hdf5`.
    Sym(Symbol),
    /// A quoted string such as `"hdf5"`.
    Str(Symbol),
}

impl Value {
    pub fn str(s: &str) -> Self {
        Value::Str(Symbol::new(s))
    }

    pub fn sym(s: &str) -> Self {
        Value::Sym(Symbol::new(s))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// The textual payload of a string or constant.
    pub fn as_text(&self) -> Option<&'static str> {
        match self {
            Value::Sym(s) | Value::Str(s) => Some(s.as_str()),
            Value::Int(_) => None,
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Str(s) => write_quoted(f, s.as_str()),
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ArithOp {
    Add,
    Sub,
}

/// A term as written in a program, possibly containing variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Value(Value),
    /// A capitalized identifier, or a fresh name for each `_`.
    Var(Symbol),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Symbol::new(name))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Value(_) => true,
            Term::Var(_) => false,
            Term::Arith(_, a, b) => a.is_ground() && b.is_ground(),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Value(_) => {}
            Term::Var(v) => out.push(*v),
            Term::Arith(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Value(v) => write!(f, "{v}"),
            Term::Var(v) if v.as_str().starts_with('_') => f.write_str("_"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Arith(op, a, b) => {
                let sym = match op {
                    ArithOp::Add => '+',
                    ArithOp::Sub => '-',
                };
                write!(f, "{a}{sym}{b}")
            }
        }
    }
}

/// A predicate applied to terms.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: Symbol::new(predicate),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A variable-free atom.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroundAtom {
    pub predicate: Symbol,
    pub args: Vec<Value>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: Vec<Value>) -> Self {
        GroundAtom {
            predicate: Symbol::new(predicate),
            args,
        }
    }

    /// Atoms introduced by the grounder (projections, minimize tuples) are
    /// hidden; user predicates can never start with an underscore.
    pub fn is_hidden(&self) -> bool {
        self.predicate.as_str().starts_with('_')
    }

    /// Parses a single ground atom such as `node("hdf5")` or `a`.
    pub fn parse(text: &str) -> Result<Self, crate::ParseError> {
        crate::parser::parse_ground_atom(text)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}
