//! Parser for the logic language.
//!
//! Statements end with `.`; `:-` separates head and body; `not` negates;
//! `{ ... }` is a choice with optional integer bounds; `#minimize { W@L,T... : body }.`
//! declares weak preferences; `%` starts a line comment. Body literals are
//! separated by `,` or `;`. A conditional literal `lit : c1, c2` absorbs the
//! commas that follow it, so the next body literal must be separated with `;`.

use std::collections::BTreeSet;

use crate::error::ParseError;
use crate::program::{
    BodyElem, ChoiceElem, ChoiceHead, CmpOp, Literal, Location, MinimizeElem, Program, Rule, RuleKind,
};
use crate::term::{ArithOp, Atom, GroundAtom, Symbol, Term, Value};

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Var(String),
    Anon,
    Str(String),
    Int(i64),
    Not,
    Dot,
    Comma,
    Semi,
    Colon,
    If,
    LParen,
    RParen,
    LBrace,
    RBrace,
    At,
    Plus,
    Minus,
    Cmp(CmpOp),
    Directive(String),
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek_byte()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if b & 0xC0 != 0x80 {
            self.col += 1;
        }
        Some(b)
    }

    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line,
            col,
            message: msg.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Location)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(b) = self.peek_byte() {
                if b.is_ascii_whitespace() {
                    self.bump();
                } else if b == b'%' {
                    while let Some(c) = self.peek_byte() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let loc = Location {
                line: self.line,
                col: self.col,
            };
            let Some(b) = self.peek_byte() else {
                out.push((Tok::Eof, loc));
                return Ok(out);
            };
            let tok = match b {
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    Tok::RBrace
                }
                b'@' => {
                    self.bump();
                    Tok::At
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b':' => {
                    self.bump();
                    if self.peek_byte() == Some(b'-') {
                        self.bump();
                        Tok::If
                    } else {
                        Tok::Colon
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek_byte() == Some(b'=') {
                        self.bump();
                    }
                    Tok::Cmp(CmpOp::Eq)
                }
                b'!' => {
                    self.bump();
                    if self.peek_byte() == Some(b'=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Ne)
                    } else {
                        return Err(self.err(loc.line, loc.col, "expected '=' after '!'"));
                    }
                }
                b'<' => {
                    self.bump();
                    if self.peek_byte() == Some(b'=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Le)
                    } else {
                        Tok::Cmp(CmpOp::Lt)
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek_byte() == Some(b'=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Ge)
                    } else {
                        Tok::Cmp(CmpOp::Gt)
                    }
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'"' => {
                    self.bump();
                    let mut s = Vec::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.err(loc.line, loc.col, "unterminated string")),
                            Some(b'"') => break,
                            Some(b'\\') => match self.bump() {
                                Some(b'n') => s.push(b'\n'),
                                Some(b'"') => s.push(b'"'),
                                Some(b'\\') => s.push(b'\\'),
                                _ => return Err(self.err(self.line, self.col, "invalid escape sequence")),
                            },
                            Some(c) => s.push(c),
                        }
                    }
                    Tok::Str(String::from_utf8(s).expect("input is UTF-8"))
                }
                b'#' => {
                    self.bump();
                    let word = self.word();
                    if word.is_empty() {
                        return Err(self.err(loc.line, loc.col, "expected directive after '#'"));
                    }
                    Tok::Directive(word)
                }
                b'0'..=b'9' => {
                    let digits = self.word();
                    match digits.parse::<i64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => return Err(self.err(loc.line, loc.col, format!("bad integer '{digits}'"))),
                    }
                }
                b'_' => {
                    let w = self.word();
                    if w == "_" {
                        Tok::Anon
                    } else {
                        return Err(self.err(loc.line, loc.col, format!("identifiers may not start with '_': '{w}'")));
                    }
                }
                c if c.is_ascii_alphabetic() => {
                    let w = self.word();
                    if w == "not" {
                        Tok::Not
                    } else if c.is_ascii_uppercase() {
                        Tok::Var(w)
                    } else {
                        Tok::Ident(w)
                    }
                }
                _ => {
                    let ch = std::str::from_utf8(&self.src[self.pos..])
                        .ok()
                        .and_then(|s| s.chars().next())
                        .unwrap_or('?');
                    return Err(self.err(loc.line, loc.col, format!("unexpected character '{ch}'")));
                }
            };
            out.push((tok, loc));
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while let Some(b) = self.peek_byte() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }
}

struct Parser {
    toks: Vec<(Tok, Location)>,
    pos: usize,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn loc(&self) -> Location {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let loc = self.loc();
        ParseError::Syntax {
            line: loc.line,
            col: loc.col,
            message: msg.into(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut rules = Vec::new();
        while *self.peek() != Tok::Eof {
            let location = self.loc();
            let kind = self.statement()?;
            let rule = Rule { kind, location };
            check_safety(&rule)?;
            rules.push(rule);
        }
        Ok(Program { rules })
    }

    fn statement(&mut self) -> Result<RuleKind, ParseError> {
        match self.peek().clone() {
            Tok::If => {
                self.next();
                let body = self.body()?;
                self.expect(Tok::Dot, "'.'")?;
                Ok(RuleKind::Integrity { body })
            }
            Tok::Directive(d) => {
                if d != "minimize" {
                    return Err(self.err(format!("unsupported directive '#{d}'")));
                }
                self.next();
                let elems = self.minimize_elems()?;
                self.expect(Tok::Dot, "'.'")?;
                Ok(RuleKind::Minimize(elems))
            }
            Tok::LBrace | Tok::Int(_) => {
                let head = self.choice_head()?;
                let body = if *self.peek() == Tok::If {
                    self.next();
                    self.body()?
                } else {
                    Vec::new()
                };
                self.expect(Tok::Dot, "'.'")?;
                Ok(RuleKind::Choice { head, body })
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                let head = self.choice_head()?;
                let body = if *self.peek() == Tok::If {
                    self.next();
                    self.body()?
                } else {
                    Vec::new()
                };
                self.expect(Tok::Dot, "'.'")?;
                Ok(RuleKind::Choice { head, body })
            }
            Tok::Ident(_) => {
                let head = self.atom()?;
                match self.next() {
                    Tok::Dot => Ok(RuleKind::Fact(head)),
                    Tok::If => {
                        let body = self.body()?;
                        self.expect(Tok::Dot, "'.'")?;
                        Ok(RuleKind::Normal { head, body })
                    }
                    t => {
                        self.pos -= 1;
                        Err(self.err(format!("expected '.' or ':-', found {}", describe(&t))))
                    }
                }
            }
            t => Err(self.err(format!("unexpected {} at start of statement", describe(&t)))),
        }
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            Tok::Int(v) => Ok(if neg { -v } else { v }),
            t => {
                self.pos -= 1;
                Err(self.err(format!("expected integer, found {}", describe(&t))))
            }
        }
    }

    fn choice_head(&mut self) -> Result<ChoiceHead, ParseError> {
        let lower = if *self.peek() != Tok::LBrace {
            Some(self.signed_int()?)
        } else {
            None
        };
        self.expect(Tok::LBrace, "'{'")?;
        let mut elements = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let atom = self.atom()?;
                let condition = if *self.peek() == Tok::Colon {
                    self.next();
                    self.literal_list()?
                } else {
                    Vec::new()
                };
                elements.push(ChoiceElem { atom, condition });
                if *self.peek() == Tok::Semi {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        let upper = match self.peek() {
            Tok::Int(_) | Tok::Minus => Some(self.signed_int()?),
            _ => None,
        };
        if let (Some(l), Some(u)) = (lower, upper) {
            if l > u {
                return Err(self.err(format!("choice lower bound {l} exceeds upper bound {u}")));
            }
        }
        if lower.is_some_and(|l| l < 0) || upper.is_some_and(|u| u < 0) {
            return Err(self.err("choice bounds must be non-negative"));
        }
        Ok(ChoiceHead { lower, elements, upper })
    }

    fn minimize_elems(&mut self) -> Result<Vec<MinimizeElem>, ParseError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut elems = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let weight = self.term()?;
                let level = if *self.peek() == Tok::At {
                    self.next();
                    self.term()?
                } else {
                    Term::Value(Value::Int(0))
                };
                let mut tuple = Vec::new();
                while *self.peek() == Tok::Comma {
                    self.next();
                    tuple.push(self.term()?);
                }
                let body = if *self.peek() == Tok::Colon {
                    self.next();
                    self.literal_list()?
                } else {
                    Vec::new()
                };
                elems.push(MinimizeElem {
                    weight,
                    level,
                    tuple,
                    body,
                });
                if *self.peek() == Tok::Semi {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        Ok(elems)
    }

    /// Comma-separated literals (used for conditions and minimize bodies).
    fn literal_list(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut out = vec![self.literal()?];
        while *self.peek() == Tok::Comma {
            self.next();
            out.push(self.literal()?);
        }
        Ok(out)
    }

    fn body(&mut self) -> Result<Vec<BodyElem>, ParseError> {
        let mut out = Vec::new();
        loop {
            let lit = self.literal()?;
            if *self.peek() == Tok::Colon {
                self.next();
                let condition = self.literal_list()?;
                out.push(BodyElem::Conditional { lit, condition });
            } else {
                out.push(BodyElem::Lit(lit));
            }
            match self.peek() {
                Tok::Comma | Tok::Semi => {
                    self.next();
                }
                _ => break,
            }
        }
        Ok(out)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if *self.peek() == Tok::Not {
            self.next();
            return Ok(Literal::Neg(self.atom()?));
        }
        // An identifier followed by a comparison is a constant in a builtin.
        let is_atom =
            matches!(self.peek(), Tok::Ident(_)) && !matches!(self.peek_at(1), Tok::Cmp(_) | Tok::Plus | Tok::Minus);
        if is_atom {
            return Ok(Literal::Pos(self.atom()?));
        }
        let lhs = self.term()?;
        match self.next() {
            Tok::Cmp(op) => {
                let rhs = self.term()?;
                Ok(Literal::Cmp(op, lhs, rhs))
            }
            t => {
                self.pos -= 1;
                Err(self.err(format!("expected comparison operator, found {}", describe(&t))))
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.next() {
            Tok::Ident(n) => n,
            t => {
                self.pos -= 1;
                return Err(self.err(format!("expected predicate name, found {}", describe(&t))));
            }
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.next();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "')'")?;
        }
        Ok(Atom {
            predicate: Symbol::new(&name),
            args,
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.simple_term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.simple_term()?;
            lhs = Term::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn simple_term(&mut self) -> Result<Term, ParseError> {
        match self.next() {
            Tok::Int(v) => Ok(Term::Value(Value::Int(v))),
            Tok::Minus => match self.next() {
                Tok::Int(v) => Ok(Term::Value(Value::Int(-v))),
                t => {
                    self.pos -= 1;
                    Err(self.err(format!("expected integer after '-', found {}", describe(&t))))
                }
            },
            Tok::Str(s) => Ok(Term::Value(Value::Str(Symbol::new(&s)))),
            Tok::Ident(s) => {
                if *self.peek() == Tok::LParen {
                    return Err(self.err("function terms are not supported"));
                }
                Ok(Term::Value(Value::Sym(Symbol::new(&s))))
            }
            Tok::Var(v) => Ok(Term::Var(Symbol::new(&v))),
            Tok::Anon => {
                self.anon += 1;
                Ok(Term::Var(Symbol::new(&format!("_{}", self.anon))))
            }
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            t => {
                self.pos -= 1;
                Err(self.err(format!("expected term, found {}", describe(&t))))
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Var(s) => format!("variable '{s}'"),
        Tok::Anon => "'_'".into(),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Int(v) => format!("integer {v}"),
        Tok::Not => "'not'".into(),
        Tok::Dot => "'.'".into(),
        Tok::Comma => "','".into(),
        Tok::Semi => "';'".into(),
        Tok::Colon => "':'".into(),
        Tok::If => "':-'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::At => "'@'".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Cmp(op) => format!("'{}'", op.as_str()),
        Tok::Directive(d) => format!("'#{d}'"),
        Tok::Eof => "end of input".into(),
    }
}

pub(crate) fn is_anonymous(v: Symbol) -> bool {
    v.as_str().starts_with('_')
}

fn atom_binding_vars(a: &Atom, out: &mut BTreeSet<Symbol>) {
    // Variables nested in arithmetic do not bind.
    for t in &a.args {
        if let Term::Var(v) = t {
            out.insert(*v);
        }
    }
}

fn vars_of<F: FnOnce(&mut Vec<Symbol>)>(f: F) -> Vec<Symbol> {
    let mut v = Vec::new();
    f(&mut v);
    v
}

fn unsafe_var(rule: &Rule, var: Symbol) -> ParseError {
    ParseError::Safety {
        line: rule.location.line,
        col: rule.location.col,
        rule: rule.to_string(),
        variable: var.to_string(),
    }
}

/// Checks that literals of a (sub)body only use variables bound by
/// `bound` plus the positive literals among them. Anonymous variables
/// in negative literals are allowed; they are projected away when grounding.
fn check_literals(rule: &Rule, lits: &[&Literal], bound: &BTreeSet<Symbol>) -> Result<BTreeSet<Symbol>, ParseError> {
    let mut local = bound.clone();
    for l in lits {
        if let Literal::Pos(a) = l {
            atom_binding_vars(a, &mut local);
        }
    }
    for l in lits {
        let (vars, allow_anon) = match l {
            Literal::Pos(a) => (vars_of(|o| a.collect_vars(o)), false),
            Literal::Neg(a) => (vars_of(|o| a.collect_vars(o)), true),
            Literal::Cmp(..) => (vars_of(|o| l.collect_vars(o)), false),
        };
        for v in vars {
            if !local.contains(&v) && !(allow_anon && is_anonymous(v)) {
                return Err(unsafe_var(rule, v));
            }
        }
    }
    Ok(local)
}

fn check_body(rule: &Rule, body: &[BodyElem]) -> Result<BTreeSet<Symbol>, ParseError> {
    let plain: Vec<&Literal> = body
        .iter()
        .filter_map(|e| match e {
            BodyElem::Lit(l) => Some(l),
            BodyElem::Conditional { .. } => None,
        })
        .collect();
    let global = check_literals(rule, &plain, &BTreeSet::new())?;
    for e in body {
        if let BodyElem::Conditional { lit, condition } = e {
            let cond: Vec<&Literal> = condition.iter().collect();
            let local = check_literals(rule, &cond, &global)?;
            check_literals(rule, &[lit], &local)?;
            if let Literal::Neg(a) = lit {
                for v in vars_of(|o| a.collect_vars(o)) {
                    if !local.contains(&v) {
                        return Err(unsafe_var(rule, v));
                    }
                }
            }
        }
    }
    Ok(global)
}

pub(crate) fn check_safety(rule: &Rule) -> Result<(), ParseError> {
    match &rule.kind {
        RuleKind::Fact(a) => {
            if let Some(v) = vars_of(|o| a.collect_vars(o)).into_iter().next() {
                return Err(unsafe_var(rule, v));
            }
        }
        RuleKind::Normal { head, body } => {
            let global = check_body(rule, body)?;
            for v in vars_of(|o| head.collect_vars(o)) {
                if !global.contains(&v) {
                    return Err(unsafe_var(rule, v));
                }
            }
        }
        RuleKind::Integrity { body } => {
            check_body(rule, body)?;
        }
        RuleKind::Choice { head, body } => {
            let global = check_body(rule, body)?;
            for e in &head.elements {
                let cond: Vec<&Literal> = e.condition.iter().collect();
                let local = check_literals(rule, &cond, &global)?;
                for v in vars_of(|o| e.atom.collect_vars(o)) {
                    if !local.contains(&v) {
                        return Err(unsafe_var(rule, v));
                    }
                }
            }
        }
        RuleKind::Minimize(elems) => {
            for e in elems {
                let lits: Vec<&Literal> = e.body.iter().collect();
                let local = check_literals(rule, &lits, &BTreeSet::new())?;
                let mut vars = Vec::new();
                e.weight.collect_vars(&mut vars);
                e.level.collect_vars(&mut vars);
                for t in &e.tuple {
                    t.collect_vars(&mut vars);
                }
                for v in vars {
                    if !local.contains(&v) {
                        return Err(unsafe_var(rule, v));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Parses program text. Every rule is checked for safety.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(text).tokenize()?;
    Parser { toks, pos: 0, anon: 0 }.program()
}

pub(crate) fn parse_ground_atom(text: &str) -> Result<GroundAtom, ParseError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut p = Parser { toks, pos: 0, anon: 0 };
    let atom = p.atom()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err(format!("unexpected {} after atom", describe(p.peek()))));
    }
    let mut args = Vec::with_capacity(atom.args.len());
    for t in atom.args {
        match t {
            Term::Value(v) => args.push(v),
            Term::Arith(..) => match crate::ground::eval_ground(&t) {
                Some(v) => args.push(v),
                None => return Err(p.err("non-integer arithmetic in atom")),
            },
            Term::Var(v) => {
                return Err(ParseError::Syntax {
                    line: 1,
                    col: 1,
                    message: format!("atom is not ground: variable {v}"),
                })
            }
        }
    }
    Ok(GroundAtom {
        predicate: atom.predicate,
        args,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fact() {
        let p = parse_program("node(\"hdf5\").").unwrap();
        assert_eq!(p.len(), 1);
        match &p.rules[0].kind {
            RuleKind::Fact(a) => {
                assert_eq!(a.predicate.as_str(), "node");
                assert_eq!(a.args, vec![Term::Value(Value::str("hdf5"))]);
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn empty_text_is_empty_program() {
        assert!(parse_program("").unwrap().is_empty());
        assert!(parse_program("  % only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn unsafe_negation_is_reported() {
        let err = parse_program("p(X) :- not q(X).").unwrap_err();
        match err {
            ParseError::Safety { variable, line, .. } => {
                assert_eq!(variable, "X");
                assert_eq!(line, 1);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_program("a.\nb :- c d.").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => {
                assert_eq!((line, col), (2, 8));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn choice_with_bounds_and_condition() {
        let p = parse_program("1 { version(P, V) : possible_version(P, V) } 1 :- node(P).").unwrap();
        match &p.rules[0].kind {
            RuleKind::Choice { head, body } => {
                assert_eq!(head.lower, Some(1));
                assert_eq!(head.upper, Some(1));
                assert_eq!(head.elements.len(), 1);
                assert_eq!(head.elements[0].condition.len(), 1);
                assert_eq!(body.len(), 1);
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn choice_bounds_must_be_ordered() {
        assert!(parse_program("2 { a; b } 1.").is_err());
    }

    #[test]
    fn conditional_body_literals() {
        let p = parse_program(
            "condition_holds(ID) :- condition(ID); attr(N, A1) : condition_requirement(ID, N, A1); attr(N, A1, A2) : condition_requirement(ID, N, A1, A2).",
        )
        .unwrap();
        match &p.rules[0].kind {
            RuleKind::Normal { body, .. } => {
                assert_eq!(body.len(), 3);
                assert!(matches!(body[1], BodyElem::Conditional { .. }));
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn minimize_with_levels_and_arithmetic() {
        let p =
            parse_program("#minimize { W@2+Priority,P : version_weight(P, W), build_priority(P, Priority) }.").unwrap();
        match &p.rules[0].kind {
            RuleKind::Minimize(elems) => {
                assert_eq!(elems.len(), 1);
                assert!(matches!(elems[0].level, Term::Arith(ArithOp::Add, _, _)));
                assert_eq!(elems[0].tuple.len(), 1);
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn anonymous_in_negation_is_safe() {
        parse_program("build(P) :- not hash(P, _), node(P).").unwrap();
        assert!(parse_program("build(P) :- not hash(P, X), node(P).").is_err());
    }

    #[test]
    fn builtin_comparison() {
        let p = parse_program(":- foo(A), foo(B), A != B.").unwrap();
        match &p.rules[0].kind {
            RuleKind::Integrity { body } => assert_eq!(body.len(), 3),
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn unsupported_directive() {
        assert!(parse_program("#show a/1.").is_err());
    }

    #[test]
    fn display_round_trips() {
        let src = "a.\nb :- a; not c.\n1 { d; e : a } 2 :- a.\n:- d; e.\n#minimize { 1@2,x : d; 3@1 : e }.\n";
        let p = parse_program(src).unwrap();
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(p.to_string(), again.to_string());
    }

    #[test]
    fn ground_atom_parse() {
        let a = GroundAtom::parse("error(\"x\")").unwrap();
        assert_eq!(a.to_string(), "error(\"x\")");
        assert!(GroundAtom::parse("p(X)").is_err());
    }
}
