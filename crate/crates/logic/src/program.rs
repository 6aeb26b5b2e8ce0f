//! Non-ground programs as parsed from text.

use std::fmt;

use crate::term::{Atom, Symbol, Term};

/// Line and column, both 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Location {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(CmpOp, Term, Term),
}

impl Literal {
    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.collect_vars(out),
            Literal::Cmp(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.as_str()),
        }
    }
}

/// A body element: a plain literal, or a conditional literal `lit : cond, ...`
/// which expands to the conjunction of `lit` over every instance of the
/// condition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BodyElem {
    Lit(Literal),
    Conditional { lit: Literal, condition: Vec<Literal> },
}

impl BodyElem {
    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            BodyElem::Lit(l) => l.collect_vars(out),
            BodyElem::Conditional { lit, condition } => {
                lit.collect_vars(out);
                for c in condition {
                    c.collect_vars(out);
                }
            }
        }
    }
}

impl fmt::Display for BodyElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyElem::Lit(l) => write!(f, "{l}"),
            BodyElem::Conditional { lit, condition } => {
                write!(f, "{lit} : ")?;
                write_list(f, condition, ", ")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChoiceElem {
    pub atom: Atom,
    pub condition: Vec<Literal>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChoiceHead {
    pub lower: Option<i64>,
    pub elements: Vec<ChoiceElem>,
    pub upper: Option<i64>,
}

/// One element of a `#minimize` statement: `W@L,T1,...,Tn : body`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MinimizeElem {
    pub weight: Term,
    pub level: Term,
    pub tuple: Vec<Term>,
    pub body: Vec<Literal>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RuleKind {
    Fact(Atom),
    Normal { head: Atom, body: Vec<BodyElem> },
    Choice { head: ChoiceHead, body: Vec<BodyElem> },
    Integrity { body: Vec<BodyElem> },
    Minimize(Vec<MinimizeElem>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub kind: RuleKind,
    pub location: Location,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Appends all rules of `other`.
    pub fn extend(&mut self, other: Program) {
        self.rules.extend(other.rules);
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RuleKind::Fact(a) => write!(f, "{a}."),
            RuleKind::Normal { head, body } => {
                write!(f, "{head} :- ")?;
                write_list(f, body, "; ")?;
                f.write_str(".")
            }
            RuleKind::Choice { head, body } => {
                if let Some(l) = head.lower {
                    write!(f, "{l} ")?;
                }
                f.write_str("{ ")?;
                for (i, e) in head.elements.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}", e.atom)?;
                    if !e.condition.is_empty() {
                        f.write_str(" : ")?;
                        write_list(f, &e.condition, ", ")?;
                    }
                }
                f.write_str(" }")?;
                if let Some(u) = head.upper {
                    write!(f, " {u}")?;
                }
                if !body.is_empty() {
                    f.write_str(" :- ")?;
                    write_list(f, body, "; ")?;
                }
                f.write_str(".")
            }
            RuleKind::Integrity { body } => {
                f.write_str(":- ")?;
                write_list(f, body, "; ")?;
                f.write_str(".")
            }
            RuleKind::Minimize(elems) => {
                f.write_str("#minimize { ")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}@{}", e.weight, e.level)?;
                    for t in &e.tuple {
                        write!(f, ",{t}")?;
                    }
                    if !e.body.is_empty() {
                        f.write_str(" : ")?;
                        write_list(f, &e.body, ", ")?;
                    }
                }
                f.write_str(" }.")
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
