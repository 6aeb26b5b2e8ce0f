//! Bottom-up grounding.
//!
//! Rules are instantiated semi-naively over the set of atoms that could
//! possibly be derived (negation is ignored while computing that set). Rule
//! instances whose positive body needs an underivable atom are never built.
//! Once the fixpoint is reached, facts are simplified out of bodies and atoms
//! left without any supporting rule are removed together with the rules that
//! need them.
//!
//! Conditions (in conditional literals and choice elements) may only mention
//! predicates defined purely by facts, so they can be expanded eagerly.

use std::collections::{HashMap, HashSet};

use crate::error::GroundError;
use crate::ground_program::{AtomId, GroundProgram};
use crate::parser::is_anonymous;
use crate::program::{BodyElem, CmpOp, Literal, MinimizeElem, Program, RuleKind};
use crate::term::{ArithOp, Atom, GroundAtom, Symbol, Term, Value};

/// Default cap on the number of ground rule instances.
pub const DEFAULT_MAX_GROUND_RULES: usize = 5_000_000;

const MIN_PREDICATE: &str = "_min";

/// Grounds `program` with the default budget.
pub fn ground(program: &Program) -> Result<GroundProgram, GroundError> {
    Grounder::default().ground(program)
}

#[derive(Clone, Copy, Debug)]
pub struct Grounder {
    pub max_ground_rules: usize,
}

impl Default for Grounder {
    fn default() -> Self {
        Grounder {
            max_ground_rules: DEFAULT_MAX_GROUND_RULES,
        }
    }
}

impl Grounder {
    pub fn with_budget(max_ground_rules: usize) -> Self {
        Grounder { max_ground_rules }
    }

    pub fn ground(&self, program: &Program) -> Result<GroundProgram, GroundError> {
        let mut state = State::new(program, self.max_ground_rules)?;
        state.run()?;
        state.finish()
    }
}

pub(crate) fn eval_ground(t: &Term) -> Option<Value> {
    match t {
        Term::Value(v) => Some(*v),
        Term::Var(_) => None,
        Term::Arith(op, a, b) => {
            let a = eval_ground(a)?.as_int()?;
            let b = eval_ground(b)?.as_int()?;
            Some(Value::Int(apply(*op, a, b)?))
        }
    }
}

fn apply(op: ArithOp, a: i64, b: i64) -> Option<i64> {
    match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Sub => a.checked_sub(b),
    }
}

type PredId = u32;

#[derive(Clone, Debug)]
enum CTerm {
    Val(Value),
    Var(usize),
    Arith(ArithOp, Box<CTerm>, Box<CTerm>),
}

#[derive(Clone, Debug)]
struct CAtom {
    pred: PredId,
    name: Symbol,
    args: Vec<CTerm>,
}

#[derive(Clone, Debug)]
enum CLit {
    Pos(CAtom),
    Neg(CAtom),
    Cmp(CmpOp, CTerm, CTerm),
}

#[derive(Clone, Debug)]
struct CCond {
    lit: CLit,
    condition: Vec<CLit>,
}

#[derive(Clone, Debug)]
enum CHead {
    Normal(CAtom),
    Choice {
        lower: Option<u32>,
        upper: Option<u32>,
        elements: Vec<(CAtom, Vec<CLit>)>,
    },
    Integrity,
}

#[derive(Clone, Debug)]
struct CRule {
    head: CHead,
    pos: Vec<CAtom>,
    neg: Vec<CAtom>,
    cmps: Vec<(CmpOp, CTerm, CTerm)>,
    conds: Vec<CCond>,
    nvars: usize,
    /// Variables bound by the positive body; the key for deduplicating
    /// instances of rules that are re-evaluated naively.
    globals: Vec<usize>,
}

impl CRule {
    fn naive(&self) -> bool {
        !self.conds.is_empty()
    }
}

#[derive(Default)]
struct Table {
    atoms: Vec<GroundAtom>,
    preds: Vec<PredId>,
    index: HashMap<GroundAtom, u32>,
    by_pred: Vec<Vec<u32>>,
    by_arg: HashMap<(PredId, u8, Value), Vec<u32>>,
}

impl Table {
    fn get(&self, atom: &GroundAtom) -> Option<u32> {
        self.index.get(atom).copied()
    }

    fn insert(&mut self, pred: PredId, atom: GroundAtom) -> u32 {
        if let Some(id) = self.index.get(&atom) {
            return *id;
        }
        let id = self.atoms.len() as u32;
        for (i, v) in atom.args.iter().enumerate() {
            self.by_arg.entry((pred, i as u8, *v)).or_default().push(id);
        }
        if self.by_pred.len() <= pred as usize {
            self.by_pred.resize(pred as usize + 1, Vec::new());
        }
        self.by_pred[pred as usize].push(id);
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        self.preds.push(pred);
        id
    }

    fn len(&self) -> u32 {
        self.atoms.len() as u32
    }

    /// Atom ids of `pred` within `[lo, hi)`, narrowed by any argument that
    /// is already fixed by `binding`.
    fn candidates(&self, atom: &CAtom, binding: &[Option<Value>], lo: u32, hi: u32) -> &[u32] {
        let mut list: &[u32] = self
            .by_pred
            .get(atom.pred as usize)
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        for (i, t) in atom.args.iter().enumerate() {
            let fixed = match t {
                CTerm::Val(v) => Some(*v),
                CTerm::Var(x) => binding[*x],
                CTerm::Arith(..) => None,
            };
            if let Some(v) = fixed {
                list = self
                    .by_arg
                    .get(&(atom.pred, i as u8, v))
                    .map(|v| v.as_slice())
                    .unwrap_or(&[]);
                break;
            }
        }
        let a = list.partition_point(|&id| id < lo);
        let b = list.partition_point(|&id| id < hi);
        &list[a..b]
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum InstKind {
    Normal(u32),
    Choice {
        lower: Option<u32>,
        upper: Option<u32>,
        elements: Vec<u32>,
    },
    Integrity,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct Inst {
    kind: InstKind,
    pos: Vec<u32>,
    neg: Vec<GroundAtom>,
}

struct State {
    rules: Vec<CRule>,
    preds: HashMap<(Symbol, usize), PredId>,
    facts: Vec<(PredId, GroundAtom)>,
    table: Table,
    /// Atoms given as facts in the source.
    fact_ids: HashSet<u32>,
    insts: Vec<Inst>,
    seen: HashSet<Inst>,
    done_bindings: Vec<HashSet<Vec<Value>>>,
    budget: usize,
}

struct Compiler<'a> {
    preds: &'a mut HashMap<(Symbol, usize), PredId>,
    vars: HashMap<Symbol, usize>,
}

impl Compiler<'_> {
    fn pred(&mut self, name: Symbol, arity: usize) -> PredId {
        let n = self.preds.len() as PredId;
        *self.preds.entry((name, arity)).or_insert(n)
    }

    fn term(&mut self, t: &Term) -> CTerm {
        match t {
            Term::Value(v) => CTerm::Val(*v),
            Term::Var(v) => {
                let n = self.vars.len();
                CTerm::Var(*self.vars.entry(*v).or_insert(n))
            }
            Term::Arith(op, a, b) => CTerm::Arith(*op, Box::new(self.term(a)), Box::new(self.term(b))),
        }
    }

    fn atom(&mut self, a: &Atom) -> CAtom {
        let pred = self.pred(a.predicate, a.args.len());
        CAtom {
            pred,
            name: a.predicate,
            args: a.args.iter().map(|t| self.term(t)).collect(),
        }
    }

    fn body_atom(&mut self, a: &Atom) -> Result<CAtom, GroundError> {
        if a.args.iter().any(|t| matches!(t, Term::Arith(..))) {
            return Err(GroundError::BadArithmetic {
                context: format!(
                    "body atom {a}: arithmetic is only allowed in heads, comparisons and minimize elements"
                ),
            });
        }
        Ok(self.atom(a))
    }

    fn lit(&mut self, l: &Literal) -> Result<CLit, GroundError> {
        Ok(match l {
            Literal::Pos(a) => CLit::Pos(self.body_atom(a)?),
            Literal::Neg(a) => CLit::Neg(self.body_atom(a)?),
            Literal::Cmp(op, a, b) => CLit::Cmp(*op, self.term(a), self.term(b)),
        })
    }
}

/// Source-level rule after projection and minimize rewriting.
struct Flat {
    head: FlatHead,
    body: Vec<BodyElem>,
}

enum FlatHead {
    Normal(Atom),
    Choice(crate::program::ChoiceHead),
    Integrity,
}

fn rewrite(program: &Program) -> (Vec<Atom>, Vec<Flat>) {
    let mut facts = Vec::new();
    let mut out = Vec::new();
    let mut proj = 0usize;
    let mut project = |body: Vec<BodyElem>, out: &mut Vec<Flat>| -> Vec<BodyElem> {
        body.into_iter()
            .map(|e| match e {
                BodyElem::Lit(Literal::Neg(a))
                    if a.args.iter().any(|t| matches!(t, Term::Var(v) if is_anonymous(*v))) =>
                {
                    proj += 1;
                    let mut keep = Vec::new();
                    for t in &a.args {
                        let mut vs = Vec::new();
                        t.collect_vars(&mut vs);
                        for v in vs {
                            if !is_anonymous(v) && !keep.contains(&v) {
                                keep.push(v);
                            }
                        }
                    }
                    let head = Atom {
                        predicate: Symbol::new(&format!("_proj{proj}")),
                        args: keep.into_iter().map(Term::Var).collect(),
                    };
                    out.push(Flat {
                        head: FlatHead::Normal(head.clone()),
                        body: vec![BodyElem::Lit(Literal::Pos(a))],
                    });
                    BodyElem::Lit(Literal::Neg(head))
                }
                e => e,
            })
            .collect()
    };
    for rule in &program.rules {
        match &rule.kind {
            RuleKind::Fact(a) => facts.push(a.clone()),
            RuleKind::Normal { head, body } => {
                let body = project(body.clone(), &mut out);
                out.push(Flat {
                    head: FlatHead::Normal(head.clone()),
                    body,
                });
            }
            RuleKind::Choice { head, body } => {
                let body = project(body.clone(), &mut out);
                out.push(Flat {
                    head: FlatHead::Choice(head.clone()),
                    body,
                });
            }
            RuleKind::Integrity { body } => {
                let body = project(body.clone(), &mut out);
                out.push(Flat {
                    head: FlatHead::Integrity,
                    body,
                });
            }
            RuleKind::Minimize(elems) => {
                for MinimizeElem {
                    weight,
                    level,
                    tuple,
                    body,
                } in elems
                {
                    let mut args = vec![weight.clone(), level.clone()];
                    args.extend(tuple.iter().cloned());
                    let head = Atom {
                        predicate: Symbol::new(MIN_PREDICATE),
                        args,
                    };
                    let body = project(body.iter().cloned().map(BodyElem::Lit).collect(), &mut out);
                    out.push(Flat {
                        head: FlatHead::Normal(head),
                        body,
                    });
                }
            }
        }
    }
    (facts, out)
}

fn eval(t: &CTerm, b: &[Option<Value>]) -> Option<Value> {
    match t {
        CTerm::Val(v) => Some(*v),
        CTerm::Var(x) => b[*x],
        CTerm::Arith(op, l, r) => {
            let l = eval(l, b)?.as_int()?;
            let r = eval(r, b)?.as_int()?;
            Some(Value::Int(apply(*op, l, r)?))
        }
    }
}

fn compare(op: CmpOp, a: Value, b: Value) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

fn term_vars(t: &CTerm, out: &mut Vec<usize>) {
    match t {
        CTerm::Val(_) => {}
        CTerm::Var(x) => out.push(*x),
        CTerm::Arith(_, a, b) => {
            term_vars(a, out);
            term_vars(b, out);
        }
    }
}

fn unify(atom: &CAtom, vals: &[Value], binding: &mut [Option<Value>], trail: &mut Vec<usize>) -> bool {
    for (t, v) in atom.args.iter().zip(vals) {
        match t {
            CTerm::Val(c) => {
                if c != v {
                    return false;
                }
            }
            CTerm::Var(x) => match binding[*x] {
                Some(b) => {
                    if b != *v {
                        return false;
                    }
                }
                None => {
                    binding[*x] = Some(*v);
                    trail.push(*x);
                }
            },
            CTerm::Arith(..) => unreachable!("arithmetic rejected in body atoms"),
        }
    }
    true
}

fn instantiate(atom: &CAtom, b: &[Option<Value>]) -> Result<GroundAtom, GroundError> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        match eval(t, b) {
            Some(v) => args.push(v),
            None => {
                return Err(GroundError::BadArithmetic {
                    context: format!("atom {}", atom.name),
                })
            }
        }
    }
    Ok(GroundAtom {
        predicate: atom.name,
        args,
    })
}

/// A join over positive atoms with comparisons checked as soon as their
/// variables are bound.
struct Plan {
    order: Vec<usize>,
    checks: Vec<Vec<usize>>,
    initial_checks: Vec<usize>,
}

fn make_plan(atoms: &[CAtom], cmps: &[(CmpOp, CTerm, CTerm)], first: Option<usize>, prebound: &[bool]) -> Plan {
    let mut bound = prebound.to_vec();
    let mut order = Vec::with_capacity(atoms.len());
    let mut used = vec![false; atoms.len()];
    if let Some(f) = first {
        order.push(f);
        used[f] = true;
    }
    let bind = |a: &CAtom, bound: &mut Vec<bool>| {
        for t in &a.args {
            if let CTerm::Var(x) = t {
                bound[*x] = true;
            }
        }
    };
    if let Some(f) = first {
        bind(&atoms[f], &mut bound);
    }
    while order.len() < atoms.len() {
        let mut best = None;
        let mut best_score = -1i64;
        for (i, a) in atoms.iter().enumerate() {
            if used[i] {
                continue;
            }
            let fixed = a
                .args
                .iter()
                .filter(|t| match t {
                    CTerm::Val(_) => true,
                    CTerm::Var(x) => bound[*x],
                    CTerm::Arith(..) => false,
                })
                .count() as i64;
            let score = if a.args.is_empty() {
                1000
            } else {
                fixed * 100 / a.args.len() as i64
            };
            if score > best_score {
                best_score = score;
                best = Some(i);
            }
        }
        let i = best.expect("unused atom remains");
        used[i] = true;
        order.push(i);
        bind(&atoms[i], &mut bound);
    }
    // Schedule each comparison after the step that binds its last variable.
    let mut checks = vec![Vec::new(); order.len()];
    let mut initial_checks = Vec::new();
    let mut bound = prebound.to_vec();
    let mut step_of_bound: Vec<Option<usize>> = bound.iter().map(|b| if *b { Some(0) } else { None }).collect();
    let mut pre = vec![true; bound.len()];
    for (i, b) in prebound.iter().enumerate() {
        pre[i] = *b;
    }
    for (step, &ai) in order.iter().enumerate() {
        for t in &atoms[ai].args {
            if let CTerm::Var(x) = t {
                if !bound[*x] {
                    bound[*x] = true;
                    step_of_bound[*x] = Some(step);
                }
            }
        }
    }
    for (ci, (_, l, r)) in cmps.iter().enumerate() {
        let mut vs = Vec::new();
        term_vars(l, &mut vs);
        term_vars(r, &mut vs);
        let mut last: Option<usize> = None;
        let mut all_pre = true;
        for v in vs {
            if pre[v] {
                continue;
            }
            all_pre = false;
            let s = step_of_bound[v].unwrap_or(order.len().saturating_sub(1));
            last = Some(last.map_or(s, |l: usize| l.max(s)));
        }
        if all_pre || order.is_empty() {
            initial_checks.push(ci);
        } else {
            checks[last.unwrap()].push(ci);
        }
    }
    Plan {
        order,
        checks,
        initial_checks,
    }
}

fn check_cmps(idx: &[usize], cmps: &[(CmpOp, CTerm, CTerm)], b: &[Option<Value>]) -> bool {
    idx.iter().all(|&ci| {
        let (op, l, r) = &cmps[ci];
        match (eval(l, b), eval(r, b)) {
            (Some(x), Some(y)) => compare(*op, x, y),
            _ => false,
        }
    })
}

/// Enumerates bindings extending `binding` that match `atoms` within the
/// given per-atom id ranges.
fn join(
    table: &Table,
    atoms: &[CAtom],
    cmps: &[(CmpOp, CTerm, CTerm)],
    plan: &Plan,
    ranges: &[(u32, u32)],
    binding: &mut Vec<Option<Value>>,
    emit: &mut dyn FnMut(&[Option<Value>]),
) {
    if !check_cmps(&plan.initial_checks, cmps, binding) {
        return;
    }
    fn rec(
        table: &Table,
        atoms: &[CAtom],
        cmps: &[(CmpOp, CTerm, CTerm)],
        plan: &Plan,
        ranges: &[(u32, u32)],
        step: usize,
        binding: &mut Vec<Option<Value>>,
        emit: &mut dyn FnMut(&[Option<Value>]),
    ) {
        if step == plan.order.len() {
            emit(binding);
            return;
        }
        let ai = plan.order[step];
        let atom = &atoms[ai];
        let (lo, hi) = ranges[ai];
        let mut trail = Vec::new();
        for &id in table.candidates(atom, binding, lo, hi) {
            if table.preds[id as usize] != atom.pred {
                continue;
            }
            let vals = &table.atoms[id as usize].args;
            if unify(atom, vals, binding, &mut trail) && check_cmps(&plan.checks[step], cmps, binding) {
                rec(table, atoms, cmps, plan, ranges, step + 1, binding, emit);
            }
            for x in trail.drain(..) {
                binding[x] = None;
            }
        }
    }
    rec(table, atoms, cmps, plan, ranges, 0, binding, emit);
}

impl State {
    fn new(program: &Program, budget: usize) -> Result<Self, GroundError> {
        let (facts_src, flats) = rewrite(program);
        let mut preds = HashMap::new();
        let mut derived: HashSet<(Symbol, usize)> = HashSet::new();
        for f in &flats {
            match &f.head {
                FlatHead::Normal(a) => {
                    derived.insert((a.predicate, a.args.len()));
                }
                FlatHead::Choice(h) => {
                    for e in &h.elements {
                        derived.insert((e.atom.predicate, e.atom.args.len()));
                    }
                }
                FlatHead::Integrity => {}
            }
        }
        let check_domain = |lits: &[Literal]| -> Result<(), GroundError> {
            for l in lits {
                if let Literal::Pos(a) | Literal::Neg(a) = l {
                    if derived.contains(&(a.predicate, a.args.len())) {
                        return Err(GroundError::NonDomainCondition {
                            predicate: format!("{}/{}", a.predicate, a.args.len()),
                        });
                    }
                }
            }
            Ok(())
        };

        let mut rules = Vec::with_capacity(flats.len());
        for f in &flats {
            let mut c = Compiler {
                preds: &mut preds,
                vars: HashMap::new(),
            };
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            let mut cmps = Vec::new();
            let mut conds_src = Vec::new();
            for e in &f.body {
                match e {
                    BodyElem::Lit(Literal::Pos(a)) => pos.push(c.body_atom(a)?),
                    BodyElem::Lit(l @ Literal::Neg(_)) => {
                        if let CLit::Neg(a) = c.lit(l)? {
                            neg.push(a)
                        }
                    }
                    BodyElem::Lit(Literal::Cmp(op, a, b)) => cmps.push((*op, c.term(a), c.term(b))),
                    BodyElem::Conditional { lit, condition } => conds_src.push((lit, condition)),
                }
            }
            // Globals are the variables bound so far: those of positive atoms.
            let mut globals: Vec<usize> = Vec::new();
            for a in &pos {
                for t in &a.args {
                    if let CTerm::Var(x) = t {
                        if !globals.contains(x) {
                            globals.push(*x);
                        }
                    }
                }
            }
            let mut conds = Vec::new();
            for (lit, condition) in conds_src {
                check_domain(condition)?;
                let condition = condition.iter().map(|l| c.lit(l)).collect::<Result<Vec<_>, _>>()?;
                let lit = c.lit(lit)?;
                conds.push(CCond { lit, condition });
            }
            let head = match &f.head {
                FlatHead::Normal(a) => CHead::Normal(c.atom(a)),
                FlatHead::Integrity => CHead::Integrity,
                FlatHead::Choice(h) => {
                    let mut elements = Vec::new();
                    for e in &h.elements {
                        check_domain(&e.condition)?;
                        let atom = c.atom(&e.atom);
                        let cond = e.condition.iter().map(|l| c.lit(l)).collect::<Result<Vec<_>, _>>()?;
                        elements.push((atom, cond));
                    }
                    CHead::Choice {
                        lower: h.lower.map(|v| v as u32),
                        upper: h.upper.map(|v| v as u32),
                        elements,
                    }
                }
            };
            let nvars = c.vars.len();
            rules.push(CRule {
                head,
                pos,
                neg,
                cmps,
                conds,
                nvars,
                globals,
            });
        }

        let mut facts = Vec::with_capacity(facts_src.len());
        for a in &facts_src {
            let n = preds.len() as PredId;
            let pred = *preds.entry((a.predicate, a.args.len())).or_insert(n);
            let args = a
                .args
                .iter()
                .map(|t| {
                    eval_ground(t).ok_or_else(|| GroundError::BadArithmetic {
                        context: format!("fact {a}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            facts.push((
                pred,
                GroundAtom {
                    predicate: a.predicate,
                    args,
                },
            ));
        }
        let n = rules.len();
        Ok(State {
            rules,
            preds,
            facts,
            table: Table::default(),
            fact_ids: HashSet::new(),
            insts: Vec::new(),
            seen: HashSet::new(),
            done_bindings: vec![HashSet::new(); n],
            budget,
        })
    }

    fn run(&mut self) -> Result<(), GroundError> {
        for (pred, atom) in std::mem::take(&mut self.facts) {
            let id = self.table.insert(pred, atom);
            self.fact_ids.insert(id);
        }
        let mut dstart = 0u32;
        let mut first = true;
        loop {
            let dend = self.table.len();
            for ri in 0..self.rules.len() {
                let rule = &self.rules[ri];
                let mut bindings: Vec<Vec<Option<Value>>> = Vec::new();
                if rule.naive() {
                    let ranges = vec![(0, dend); rule.pos.len()];
                    let plan = make_plan(&rule.pos, &rule.cmps, None, &vec![false; rule.nvars]);
                    let mut b = vec![None; rule.nvars];
                    join(&self.table, &rule.pos, &rule.cmps, &plan, &ranges, &mut b, &mut |x| {
                        bindings.push(x.to_vec())
                    });
                } else if rule.pos.is_empty() {
                    if first {
                        let plan = make_plan(&rule.pos, &rule.cmps, None, &vec![false; rule.nvars]);
                        let mut b = vec![None; rule.nvars];
                        join(&self.table, &rule.pos, &rule.cmps, &plan, &[], &mut b, &mut |x| {
                            bindings.push(x.to_vec())
                        });
                    }
                } else {
                    for i in 0..rule.pos.len() {
                        let pred = rule.pos[i].pred as usize;
                        let has_delta = self
                            .table
                            .by_pred
                            .get(pred)
                            .map(|v| {
                                let a = v.partition_point(|&id| id < dstart);
                                let b = v.partition_point(|&id| id < dend);
                                b > a
                            })
                            .unwrap_or(false);
                        if !has_delta {
                            continue;
                        }
                        let ranges: Vec<(u32, u32)> = (0..rule.pos.len())
                            .map(|j| match j.cmp(&i) {
                                std::cmp::Ordering::Less => (0, dstart),
                                std::cmp::Ordering::Equal => (dstart, dend),
                                std::cmp::Ordering::Greater => (0, dend),
                            })
                            .collect();
                        let plan = make_plan(&rule.pos, &rule.cmps, Some(i), &vec![false; rule.nvars]);
                        let mut b = vec![None; rule.nvars];
                        join(&self.table, &rule.pos, &rule.cmps, &plan, &ranges, &mut b, &mut |x| {
                            bindings.push(x.to_vec())
                        });
                    }
                }
                for b in bindings {
                    self.emit(ri, &b)?;
                }
            }
            first = false;
            if self.table.len() == dend {
                break;
            }
            dstart = dend;
        }
        Ok(())
    }

    /// Expands a condition (over fact-defined predicates) from `binding`,
    /// calling `f` for every matching extension.
    fn expand_condition(
        table: &Table,
        fact_ids: &HashSet<u32>,
        condition: &[CLit],
        binding: &[Option<Value>],
        f: &mut dyn FnMut(&[Option<Value>]) -> Result<bool, GroundError>,
    ) -> Result<bool, GroundError> {
        let atoms: Vec<CAtom> = condition
            .iter()
            .filter_map(|l| match l {
                CLit::Pos(a) => Some(a.clone()),
                _ => None,
            })
            .collect();
        let negs: Vec<&CAtom> = condition
            .iter()
            .filter_map(|l| match l {
                CLit::Neg(a) => Some(a),
                _ => None,
            })
            .collect();
        let cmps: Vec<(CmpOp, CTerm, CTerm)> = condition
            .iter()
            .filter_map(|l| match l {
                CLit::Cmp(op, a, b) => Some((*op, a.clone(), b.clone())),
                _ => None,
            })
            .collect();
        let prebound: Vec<bool> = binding.iter().map(|b| b.is_some()).collect();
        // Comparisons are checked after the join so unbound ones fail cleanly.
        let plan = make_plan(&atoms, &[], None, &prebound);
        let ranges = vec![(0, table.len()); atoms.len()];
        let mut found = Vec::new();
        let mut b = binding.to_vec();
        join(table, &atoms, &[], &plan, &ranges, &mut b, &mut |x| {
            found.push(x.to_vec())
        });
        for x in found {
            if !check_cmps(&(0..cmps.len()).collect::<Vec<_>>(), &cmps, &x) {
                continue;
            }
            let mut neg_ok = true;
            for n in &negs {
                let g = instantiate(n, &x)?;
                if table.get(&g).is_some_and(|id| fact_ids.contains(&id)) {
                    neg_ok = false;
                    break;
                }
            }
            if neg_ok && !f(&x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn emit(&mut self, ri: usize, binding: &[Option<Value>]) -> Result<(), GroundError> {
        let rule = &self.rules[ri];
        let naive = rule.naive();
        let key: Vec<Value> = if naive {
            rule.globals
                .iter()
                .map(|&x| binding[x].expect("global bound"))
                .collect()
        } else {
            Vec::new()
        };
        if naive && self.done_bindings[ri].contains(&key) {
            return Ok(());
        }
        let mut neg = Vec::new();
        for a in &rule.neg {
            let g = instantiate(a, binding)?;
            if let Some(id) = self.table.get(&g) {
                if self.fact_ids.contains(&id) {
                    return Ok(());
                }
            }
            neg.push(g);
        }
        let mut pos: Vec<u32> = Vec::with_capacity(rule.pos.len());
        for a in &rule.pos {
            let g = instantiate(a, binding)?;
            pos.push(self.table.get(&g).expect("joined atom exists"));
        }
        // Conditional literals: every expansion must hold.
        let mut pending = false;
        let mut falsified = false;
        for cond in &rule.conds {
            let table = &self.table;
            let ok = Self::expand_condition(table, &self.fact_ids, &cond.condition, binding, &mut |x| {
                match &cond.lit {
                    CLit::Pos(a) => {
                        let g = instantiate(a, x)?;
                        match table.get(&g) {
                            Some(id) => pos.push(id),
                            None => pending = true,
                        }
                    }
                    CLit::Neg(a) => {
                        let g = instantiate(a, x)?;
                        if table.get(&g).is_some_and(|id| self.fact_ids.contains(&id)) {
                            return Ok(false);
                        }
                        neg.push(g);
                    }
                    CLit::Cmp(op, l, r) => match (eval(l, x), eval(r, x)) {
                        (Some(a), Some(b)) if compare(*op, a, b) => {}
                        _ => return Ok(false),
                    },
                }
                Ok(true)
            })?;
            if !ok {
                falsified = true;
                break;
            }
        }
        if falsified {
            if naive {
                self.done_bindings[ri].insert(key);
            }
            return Ok(());
        }
        if pending {
            return Ok(());
        }
        let kind = match &rule.head {
            CHead::Normal(a) => {
                let g = instantiate(a, binding)?;
                let pred = a.pred;
                InstKind::Normal(self.table.insert(pred, g))
            }
            CHead::Integrity => InstKind::Integrity,
            CHead::Choice { lower, upper, elements } => {
                let mut elems: Vec<u32> = Vec::new();
                let (lower, upper) = (*lower, *upper);
                let elements = elements.clone();
                for (atom, cond) in &elements {
                    let mut found: Vec<GroundAtom> = Vec::new();
                    Self::expand_condition(&self.table, &self.fact_ids, cond, binding, &mut |x| {
                        found.push(instantiate(atom, x)?);
                        Ok(true)
                    })?;
                    for g in found {
                        let id = self.table.insert(atom.pred, g);
                        if !elems.contains(&id) {
                            elems.push(id);
                        }
                    }
                }
                InstKind::Choice {
                    lower,
                    upper,
                    elements: elems,
                }
            }
        };
        if naive {
            self.done_bindings[ri].insert(key);
        }
        pos.sort_unstable();
        pos.dedup();
        neg.sort();
        neg.dedup();
        let inst = Inst { kind, pos, neg };
        if self.seen.insert(inst.clone()) {
            self.insts.push(inst);
            if self.insts.len() > self.budget {
                return Err(GroundError::GroundingBudgetExceeded { limit: self.budget });
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<GroundProgram, GroundError> {
        let n = self.table.atoms.len();
        struct R {
            kind: InstKind,
            pos: Vec<u32>,
            neg: Vec<u32>,
            alive: bool,
        }
        let mut rs: Vec<R> = self
            .insts
            .into_iter()
            .map(|i| R {
                kind: i.kind,
                pos: i.pos,
                neg: i.neg.iter().filter_map(|g| self.table.get(g)).collect(),
                alive: true,
            })
            .collect();

        // Facts: source facts plus heads of rules whose bodies are all facts.
        let mut certain = vec![false; n];
        let mut queue: Vec<u32> = Vec::new();
        for &id in &self.fact_ids {
            certain[id as usize] = true;
            queue.push(id);
        }
        let mut waiting = vec![0usize; rs.len()];
        let mut occurs_pos: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ri, r) in rs.iter().enumerate() {
            for &p in &r.pos {
                occurs_pos[p as usize].push(ri);
            }
            if let InstKind::Normal(_) = r.kind {
                if r.neg.is_empty() {
                    waiting[ri] = r.pos.iter().filter(|&&p| !certain[p as usize]).count();
                }
            }
        }
        for (ri, r) in rs.iter().enumerate() {
            if let InstKind::Normal(h) = r.kind {
                if r.neg.is_empty() && waiting[ri] == 0 && !certain[h as usize] {
                    certain[h as usize] = true;
                    queue.push(h);
                }
            }
        }
        // `waiting` was computed against the initial facts, so only newly
        // derived facts are propagated.
        let initial: HashSet<u32> = self.fact_ids.iter().copied().collect();
        let mut qi = 0;
        while qi < queue.len() {
            let a = queue[qi];
            qi += 1;
            if initial.contains(&a) {
                continue;
            }
            for &ri in &occurs_pos[a as usize] {
                let r = &rs[ri];
                if let InstKind::Normal(h) = r.kind {
                    if r.neg.is_empty() && waiting[ri] > 0 {
                        waiting[ri] -= 1;
                        if waiting[ri] == 0 && !certain[h as usize] {
                            certain[h as usize] = true;
                            queue.push(h);
                        }
                    }
                }
            }
        }

        // Simplify against facts.
        for r in rs.iter_mut() {
            if r.neg.iter().any(|&a| certain[a as usize]) {
                r.alive = false;
                continue;
            }
            if let InstKind::Normal(h) = r.kind {
                if certain[h as usize] {
                    r.alive = false;
                    continue;
                }
            }
            r.pos.retain(|&a| !certain[a as usize]);
        }

        // Remove atoms that lost every supporting rule, transitively.
        let mut support = vec![0usize; n];
        let mut occurs_pos: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ri, r) in rs.iter().enumerate() {
            if !r.alive {
                continue;
            }
            for &p in &r.pos {
                occurs_pos[p as usize].push(ri);
            }
            match &r.kind {
                InstKind::Normal(h) => support[*h as usize] += 1,
                InstKind::Choice { elements, .. } => {
                    for &e in elements {
                        support[e as usize] += 1;
                    }
                }
                InstKind::Integrity => {}
            }
        }
        let mut dead = vec![false; n];
        let mut stack: Vec<u32> = (0..n as u32)
            .filter(|&a| !certain[a as usize] && support[a as usize] == 0)
            .collect();
        while let Some(a) = stack.pop() {
            if dead[a as usize] {
                continue;
            }
            dead[a as usize] = true;
            for &ri in &occurs_pos[a as usize] {
                if !rs[ri].alive {
                    continue;
                }
                rs[ri].alive = false;
                match &rs[ri].kind {
                    InstKind::Normal(h) => {
                        support[*h as usize] -= 1;
                        if support[*h as usize] == 0 && !certain[*h as usize] {
                            stack.push(*h);
                        }
                    }
                    InstKind::Choice { elements, .. } => {
                        for &e in elements {
                            support[e as usize] -= 1;
                            if support[e as usize] == 0 && !certain[e as usize] {
                                stack.push(e);
                            }
                        }
                    }
                    InstKind::Integrity => {}
                }
            }
        }

        // Compact the universe, preserving derivation order.
        let mut gp = GroundProgram::new();
        let mut remap: Vec<Option<AtomId>> = vec![None; n];
        for (i, atom) in self.table.atoms.iter().enumerate() {
            if !dead[i] {
                remap[i] = Some(gp.add_atom(atom.clone()));
            }
        }
        let m = |a: u32| remap[a as usize].expect("live atom");
        for (i, c) in certain.iter().enumerate() {
            if *c {
                gp.add_fact(m(i as u32));
            }
        }
        for r in rs.iter().filter(|r| r.alive) {
            let pos: Vec<AtomId> = r.pos.iter().map(|&a| m(a)).collect();
            let neg: Vec<AtomId> = r.neg.iter().filter(|&&a| !dead[a as usize]).map(|&a| m(a)).collect();
            match &r.kind {
                InstKind::Normal(h) => gp.add_rule(m(*h), pos, neg),
                InstKind::Integrity => gp.add_constraint(pos, neg),
                InstKind::Choice { lower, upper, elements } => {
                    gp.add_choice(*lower, *upper, elements.iter().map(|&e| m(e)).collect(), pos, neg)
                }
            }
        }
        let min_pred = Symbol::new(MIN_PREDICATE);
        let entries: Vec<(AtomId, GroundAtom)> = gp
            .atoms()
            .filter(|(_, a)| a.predicate == min_pred)
            .map(|(id, a)| (id, a.clone()))
            .collect();
        for (id, a) in entries {
            let (w, l) = (a.args[0], a.args[1]);
            match (w.as_int(), l.as_int()) {
                (Some(w), Some(l)) => {
                    if w != 0 {
                        gp.add_minimize(id, w, l, a.args[2..].to_vec());
                    } else {
                        // Keep the level visible even when nothing can be paid there.
                        gp.add_minimize(id, 0, l, a.args[2..].to_vec());
                    }
                }
                _ => {
                    return Err(GroundError::NonIntegerWeight {
                        weight: w.to_string(),
                        level: l.to_string(),
                    })
                }
            }
        }
        let _ = &self.preds;
        Ok(gp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn g(src: &str) -> GroundProgram {
        ground(&parse_program(src).unwrap()).unwrap()
    }

    fn atom(s: &str) -> GroundAtom {
        GroundAtom::parse(s).unwrap()
    }

    #[test]
    fn facts_only() {
        let gp = g("a. b(1). c(\"x\").");
        assert_eq!(gp.rules.len(), 3);
        assert!(gp.rules.iter().all(|r| r.is_fact()));
        assert!(gp.choices.is_empty() && gp.constraints.is_empty());
    }

    #[test]
    fn facts_simplified_out_of_bodies() {
        let gp = g("
            depends_on(a, c). depends_on(b, d).
            node(Y) :- node(X), depends_on(X, Y).
            1 { node(a); node(b) }.
        ");
        for r in gp.rules.iter().filter(|r| !r.is_fact()) {
            for p in &r.pos {
                assert_ne!(gp.atom(*p).predicate.as_str(), "depends_on");
            }
        }
        let heads: Vec<String> = gp
            .rules
            .iter()
            .filter(|r| !r.is_fact())
            .map(|r| gp.atom(r.head).to_string())
            .collect();
        assert_eq!(heads, vec!["node(c)", "node(d)"]);
    }

    #[test]
    fn derived_facts_count_once() {
        // `b` becomes certain before the rule for `c` is examined; `c`
        // still depends on the open choice over `x`.
        let gp = g("
            a. b :- a.
            { x }.
            c :- b, x.
        ");
        let c = gp.atom_id(&atom("c")).unwrap();
        let x = gp.atom_id(&atom("x")).unwrap();
        let rule = gp.rules.iter().find(|r| r.head == c).unwrap();
        assert_eq!(rule.pos, vec![x]);
    }

    #[test]
    fn rules_with_underivable_body_are_dropped() {
        let gp = g("p :- q. r :- not q. s.");
        assert!(gp.atom_id(&atom("p")).is_none());
        assert!(gp.atom_id(&atom("q")).is_none());
        // `not q` is trivially true, so r becomes a fact.
        let r = gp.atom_id(&atom("r")).unwrap();
        assert!(gp.rules.iter().any(|x| x.head == r && x.is_fact()));
    }

    #[test]
    fn negated_fact_blocks_rule() {
        let gp = g("q. p :- not q.");
        assert!(gp.atom_id(&atom("p")).is_none());
    }

    #[test]
    fn transitive_closure() {
        let gp = g("
            depends_on(a, b). depends_on(b, c). depends_on(c, d).
            path(A, B) :- depends_on(A, B).
            path(A, C) :- path(A, B), depends_on(B, C).
        ");
        let mut paths: Vec<String> = gp
            .atoms()
            .filter(|(_, a)| a.predicate.as_str() == "path")
            .map(|(_, a)| a.to_string())
            .collect();
        paths.sort();
        assert_eq!(
            paths,
            vec![
                "path(a,b)",
                "path(a,c)",
                "path(a,d)",
                "path(b,c)",
                "path(b,d)",
                "path(c,d)"
            ]
        );
        // Everything is derivable from facts.
        assert!(gp.rules.iter().all(|r| r.is_fact()));
    }

    #[test]
    fn comparisons_filter_instances() {
        let gp = g("{ foo(x); foo(y) }. :- foo(A), foo(B), A != B.");
        // The two orderings share one body; no instance with A = B.
        assert_eq!(gp.constraints.len(), 1);
        assert!(gp.constraints.iter().all(|c| c.pos.len() == 2 && c.pos[0] != c.pos[1]));
        // With facts, both instances simplify to the same empty body.
        let gp = g("foo(x). foo(y). :- foo(A), foo(B), A != B.");
        assert_eq!(gp.constraints.len(), 1);
        assert!(gp.constraints[0].pos.is_empty() && gp.constraints[0].neg.is_empty());
    }

    #[test]
    fn conditional_body_expansion() {
        let gp = g("
            condition(1). condition(2).
            condition_requirement(1, node, a).
            condition_requirement(2, node, b).
            condition_requirement(2, node, c).
            { attr(node, a); attr(node, b) }.
            condition_holds(ID) :- condition(ID); attr(N, A) : condition_requirement(ID, N, A).
        ");
        // Condition 2 needs attr(node,c), which is underivable.
        assert!(gp.atom_id(&atom("condition_holds(1)")).is_some());
        assert!(gp.atom_id(&atom("condition_holds(2)")).is_none());
    }

    #[test]
    fn conditional_body_waits_for_derived_atoms() {
        let gp = g("
            condition(1).
            condition_requirement(1, x).
            condition_requirement(1, y).
            attr(x) :- go.
            attr(y) :- attr(x).
            go.
            holds(ID) :- condition(ID); attr(N) : condition_requirement(ID, N).
        ");
        assert!(gp.atom_id(&atom("holds(1)")).is_some());
    }

    #[test]
    fn conditions_must_be_fact_predicates() {
        let p = parse_program("d(1). e(X) :- d(X). { f(X) : e(X) }.").unwrap();
        assert!(matches!(ground(&p), Err(GroundError::NonDomainCondition { .. })));
    }

    #[test]
    fn choice_elements_from_condition() {
        let gp = g("
            possible_version(hdf5, v1). possible_version(hdf5, v2).
            node(hdf5).
            1 { version(P, V) : possible_version(P, V) } 1 :- node(P).
        ");
        assert_eq!(gp.choices.len(), 1);
        assert_eq!(gp.choices[0].elements.len(), 2);
        assert!(gp.choices[0].pos.is_empty());
    }

    #[test]
    fn minimize_tuples_are_sets() {
        let gp = g("
            a. { b }.
            #minimize { 1@1,t : a; 1@1,t : b; 2@3,u : b }.
        ");
        assert_eq!(gp.minimize.len(), 2);
        assert_eq!(gp.levels(), vec![3, 1]);
    }

    #[test]
    fn minimize_level_arithmetic() {
        let gp = g("
            w(p, 5). prio(p, 200).
            #minimize { W@2+P,X : w(X, W), prio(X, P) }.
        ");
        assert_eq!(gp.minimize.len(), 1);
        assert_eq!(gp.minimize[0].level, 202);
        assert_eq!(gp.minimize[0].weight, 5);
    }

    #[test]
    fn anonymous_negation_is_projected() {
        let gp = g("
            node(a). node(b). hash(a, h1).
            build(P) :- not hash(P, _), node(P).
        ");
        let build_b = gp.atom_id(&atom("build(b)")).unwrap();
        assert!(gp.rules.iter().any(|r| r.head == build_b && r.is_fact()));
        assert!(gp.atom_id(&atom("build(a)")).is_none());
    }

    #[test]
    fn budget_is_enforced() {
        let p = parse_program("n(1). n(2). n(3). n(4). p(X, Y) :- n(X), n(Y).").unwrap();
        assert!(matches!(
            Grounder::with_budget(5).ground(&p),
            Err(GroundError::GroundingBudgetExceeded { limit: 5 })
        ));
    }
}
