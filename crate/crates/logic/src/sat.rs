//! CDCL search over propositional clauses with assumptions, a lexicographic
//! objective bound and a hook for checks at total assignments.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub(crate) type Var = u32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub(crate) struct Lit(u32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit(v << 1)
    }

    pub fn neg(v: Var) -> Lit {
        Lit((v << 1) | 1)
    }

    pub fn new(v: Var, positive: bool) -> Lit {
        if positive {
            Lit::pos(v)
        } else {
            Lit::neg(v)
        }
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_pos(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

const NO_REASON: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

/// Indexed binary max-heap on variable activity; ties go to the lower index.
#[derive(Clone, Debug, Default)]
struct Heap {
    heap: Vec<Var>,
    pos: Vec<i32>,
}

impl Heap {
    fn better(act: &[f64], a: Var, b: Var) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: Var) -> bool {
        self.pos[v as usize] >= 0
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if !Self::better(act, v, self.heap[p]) {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = i as i32;
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && Self::better(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::better(act, self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as i32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = i as i32;
        self.up(i, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<Var> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        self.pos[top as usize] = -1;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize] as usize, act);
        }
    }
}

/// Weighted literals grouped by priority level (index 0 is the most
/// important level). Weights are positive.
#[derive(Clone, Debug, Default)]
pub(crate) struct Objective {
    pub levels: usize,
    /// Per literal code: (level index, weight) pairs.
    weight: Vec<Vec<(u32, i64)>>,
    lb: Vec<i64>,
    /// Codes of literals that carry a weight.
    weighted: Vec<u32>,
    pub incumbent: Option<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub(crate) enum Outcome {
    Sat,
    /// Failed assumptions (a subset of those passed in).
    Unsat(Vec<Lit>),
    Budget,
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Limits {
    pub deadline: Option<Instant>,
    pub max_conflicts: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub theory_clauses: u64,
}

#[derive(Clone, Debug)]
pub(crate) struct Sat {
    clauses: Vec<Clause>,
    watches: Vec<Vec<u32>>,
    vals: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    phase: Vec<bool>,
    heap: Heap,
    seen: Vec<bool>,
    /// False once a conflict was derived at level 0.
    ok: bool,
    num_learnts: usize,
    max_learnts: f64,
    pub objective: Option<Objective>,
    pub stats: SearchStats,
}

fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

impl Sat {
    pub fn new() -> Self {
        Sat {
            clauses: Vec::new(),
            watches: Vec::new(),
            vals: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            phase: Vec::new(),
            heap: Heap::default(),
            seen: Vec::new(),
            ok: true,
            num_learnts: 0,
            max_learnts: 0.0,
            objective: None,
            stats: SearchStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vals.len()
    }

    pub fn new_var(&mut self, phase: bool) -> Var {
        let v = self.vals.len() as Var;
        self.vals.push(0);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.phase.push(phase);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.pos.push(-1);
        self.heap.insert(v, &self.activity);
        v
    }

    /// Perturbs initial activities so that different seeds explore
    /// different branching orders. Seed 0 keeps the index order.
    pub fn jitter(&mut self, seed: u64) {
        if seed == 0 {
            return;
        }
        let mut rng = StdRng::seed_from_u64(seed);
        for a in self.activity.iter_mut() {
            *a += rng.random::<f64>() * 1e-3;
        }
        let vars: Vec<Var> = self.heap.heap.clone();
        self.heap.heap.clear();
        for p in self.heap.pos.iter_mut() {
            *p = -1;
        }
        for v in vars {
            self.heap.insert(v, &self.activity);
        }
    }

    pub fn set_objective(&mut self, levels: usize, lits: &[(Lit, usize, i64)]) {
        let mut weight = vec![Vec::new(); 2 * self.num_vars()];
        for &(l, lv, w) in lits {
            debug_assert!(w > 0);
            let slot: &mut Vec<(u32, i64)> = &mut weight[l.code()];
            match slot.iter_mut().find(|e| e.0 as usize == lv) {
                Some(e) => e.1 += w,
                None => slot.push((lv as u32, w)),
            }
        }
        let mut lb = vec![0i64; levels];
        for l in &self.trail {
            for &(lv, w) in &weight[l.code()] {
                lb[lv as usize] += w;
            }
        }
        let weighted: Vec<u32> = (0..weight.len() as u32)
            .filter(|&c| !weight[c as usize].is_empty())
            .collect();
        // Start from the cheap side of every weighted literal.
        for &c in &weighted {
            let l = Lit(c);
            self.phase[l.var() as usize] = !l.is_pos();
        }
        self.objective = Some(Objective {
            levels,
            weight,
            lb,
            weighted,
            incumbent: None,
        });
    }

    /// Current value of the objective (exact at a total assignment).
    pub fn objective_value(&self) -> Option<Vec<i64>> {
        self.objective.as_ref().map(|o| o.lb.clone())
    }

    pub fn value(&self, l: Lit) -> i8 {
        let v = self.vals[l.var() as usize];
        if l.is_pos() {
            v
        } else {
            -v
        }
    }

    pub fn level_of(&self, v: Var) -> u32 {
        self.level[v as usize]
    }

    pub fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var() as usize;
        debug_assert_eq!(self.vals[v], 0);
        self.vals[v] = if l.is_pos() { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
        if let Some(o) = self.objective.as_mut() {
            for &(lv, w) in &o.weight[l.code()] {
                o.lb[lv as usize] += w;
            }
        }
    }

    pub fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl as usize];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.vals[v] = 0;
            self.reason[v] = NO_REASON;
            self.phase[v] = l.is_pos();
            if let Some(o) = self.objective.as_mut() {
                for &(lv, w) in &o.weight[l.code()] {
                    o.lb[lv as usize] -= w;
                }
            }
            self.heap.insert(l.var(), &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = start;
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cr = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(cr);
        self.watches[lits[1].code()].push(cr);
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.num_learnts += 1;
        }
        cr
    }

    /// Adds a clause at decision level 0.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        for w in c.windows(2) {
            if w[0].var() == w[1].var() {
                return true;
            }
        }
        let mut out = Vec::with_capacity(c.len());
        for l in c {
            match self.value(l) {
                1 => return true,
                -1 => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                true
            }
            _ => {
                self.attach(out, false);
                true
            }
        }
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cr = ws[i];
                i += 1;
                let c = &mut self.clauses[cr as usize];
                if c.deleted {
                    continue;
                }
                if c.lits[0] == false_lit {
                    c.lits.swap(0, 1);
                }
                let first = c.lits[0];
                if value_of(&self.vals, first) == 1 {
                    ws[j] = cr;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.lits.len() {
                    if value_of(&self.vals, c.lits[k]) != -1 {
                        c.lits.swap(1, k);
                        let nl = c.lits[1];
                        self.watches[nl.code()].push(cr);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = cr;
                j += 1;
                if value_of(&self.vals, first) == -1 {
                    conflict = Some(cr);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, cr);
                }
            }
            ws.truncate(j);
            let slot = &mut self.watches[false_lit.code()];
            ws.append(slot);
            *slot = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: Var) {
        let a = &mut self.activity[v as usize];
        *a += self.var_inc;
        if *a > 1e100 {
            for x in self.activity.iter_mut() {
                *x *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cr: u32) {
        let c = &mut self.clauses[cr as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path_c = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut cr = confl;
        let cur = self.decision_level();
        loop {
            self.bump_clause(cr);
            let lits = self.clauses[cr as usize].lits.clone();
            let skip = usize::from(p.is_some());
            for &q in &lits[skip..] {
                let v = q.var();
                if !self.seen[v as usize] && self.level[v as usize] > 0 {
                    self.seen[v as usize] = true;
                    self.bump_var(v);
                    if self.level[v as usize] >= cur {
                        path_c += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[pl.var() as usize] = false;
            path_c -= 1;
            if path_c == 0 {
                break;
            }
            cr = self.reason[pl.var() as usize];
            debug_assert_ne!(cr, NO_REASON);
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by others already in the clause.
        let mut keep = vec![learnt[0]];
        for &l in &learnt[1..] {
            let r = self.reason[l.var() as usize];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..]
                    .iter()
                    .all(|q| self.seen[q.var() as usize] || self.level[q.var() as usize] == 0);
            if !redundant {
                keep.push(l);
            }
        }
        for &l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt = keep;
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut mi = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[mi].var() as usize] {
                    mi = i;
                }
            }
            learnt.swap(1, mi);
            bt = self.level[learnt[1].var() as usize];
        }
        (learnt, bt)
    }

    /// Collects the assumptions responsible for `p` being false.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut core = vec![!p];
        if self.decision_level() == 0 {
            return core;
        }
        self.seen[p.var() as usize] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            if !self.seen[v] {
                continue;
            }
            let r = self.reason[v];
            if r == NO_REASON {
                if l != !p {
                    core.push(l);
                }
            } else {
                for k in 1..self.clauses[r as usize].lits.len() {
                    let q = self.clauses[r as usize].lits[k];
                    if self.level[q.var() as usize] > 0 {
                        self.seen[q.var() as usize] = true;
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.var() as usize] = false;
        core
    }

    fn learn(&mut self, learnt: Vec<Lit>) {
        if learnt.len() == 1 {
            self.enqueue(learnt[0], NO_REASON);
        } else {
            let first = learnt[0];
            let cr = self.attach(learnt, true);
            self.bump_clause(cr);
            self.enqueue(first, cr);
        }
        self.var_inc /= 0.95;
        self.cla_inc /= 0.999;
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<u32> = (0..self.clauses.len() as u32)
            .filter(|&cr| {
                let c = &self.clauses[cr as usize];
                c.learnt && !c.deleted && c.lits.len() > 2 && !self.locked(cr)
            })
            .collect();
        cands.sort_by(|a, b| {
            let x = self.clauses[*a as usize].activity;
            let y = self.clauses[*b as usize].activity;
            x.partial_cmp(&y).unwrap().then(a.cmp(b))
        });
        for &cr in &cands[..cands.len() / 2] {
            let c = &mut self.clauses[cr as usize];
            c.deleted = true;
            c.lits = Vec::new();
            self.num_learnts -= 1;
        }
    }

    fn locked(&self, cr: u32) -> bool {
        let l0 = self.clauses[cr as usize].lits[0];
        self.reason[l0.var() as usize] == cr && self.value(l0) == 1
    }

    /// Current truth values of the given variables' positive literals.
    pub fn model_value(&self, v: Var) -> bool {
        self.vals[v as usize] == 1
    }

    /// Checks whether the partial assignment already forces an objective
    /// vector no better than the incumbent and returns the explanation.
    fn bound_conflict(&self) -> Option<Vec<Lit>> {
        let o = self.objective.as_ref()?;
        let inc = o.incumbent.as_ref()?;
        let mut cut = o.levels;
        for i in 0..o.levels {
            if o.lb[i] < inc[i] {
                return None;
            }
            if o.lb[i] > inc[i] {
                cut = i + 1;
                break;
            }
        }
        let mut clause = Vec::new();
        for &l in &self.trail {
            if o.weight[l.code()].iter().any(|&(lv, _)| (lv as usize) < cut) {
                clause.push(!l);
            }
        }
        Some(clause)
    }

    /// Assigns false to every open weighted literal that would make the
    /// objective no better than the incumbent. Returns false when nothing
    /// was assigned.
    fn bound_propagate(&mut self) -> bool {
        let Some(o) = self.objective.as_ref() else {
            return false;
        };
        let Some(inc) = o.incumbent.as_ref() else {
            return false;
        };
        let Some(k) = (0..o.levels).find(|&i| o.lb[i] < inc[i]) else {
            return false;
        };
        let slack = inc[k] - o.lb[k];
        let forced: Vec<Lit> = o
            .weighted
            .iter()
            .map(|&c| Lit(c))
            .filter(|&l| value_of(&self.vals, l) == 0)
            .filter(|&l| {
                o.weight[l.code()]
                    .iter()
                    .any(|&(lv, w)| (lv as usize) < k || (lv as usize == k && w > slack))
            })
            .map(|l| !l)
            .collect();
        if forced.is_empty() {
            return false;
        }
        let mut reason: Vec<Lit> = self
            .trail
            .iter()
            .filter(|l| o.weight[l.code()].iter().any(|&(lv, _)| lv as usize <= k))
            .map(|&l| !l)
            .collect();
        if reason.is_empty() {
            self.backtrack(0);
            for f in forced {
                match self.value(f) {
                    0 => self.enqueue(f, NO_REASON),
                    -1 => self.ok = false,
                    _ => {}
                }
            }
            return true;
        }
        reason.sort_by_key(|l| std::cmp::Reverse(self.level[l.var() as usize]));
        for f in forced {
            if self.value(f) != 0 {
                continue;
            }
            let mut lits = Vec::with_capacity(reason.len() + 1);
            lits.push(f);
            lits.extend_from_slice(&reason);
            let cr = self.attach(lits, true);
            self.enqueue(f, cr);
        }
        true
    }

    /// Installs clauses violated by the current assignment and returns a
    /// conflicting clause to analyze, if any remains above level 0.
    fn add_violated(&mut self, mut clauses: Vec<Vec<Lit>>) -> Option<u32> {
        self.stats.theory_clauses += clauses.len() as u64;
        let lvl = |s: &Sat, l: &Lit| s.level[l.var() as usize];
        let mut need_root = false;
        for c in clauses.iter_mut() {
            c.sort_unstable();
            c.dedup();
            c.sort_by_key(|l| std::cmp::Reverse(lvl(self, l)));
            if c.len() < 2 || lvl(self, &c[0]) == 0 {
                need_root = true;
            }
        }
        if need_root {
            self.backtrack(0);
            for c in &clauses {
                if !self.add_clause(c) {
                    return None;
                }
            }
            return None;
        }
        let target = clauses.iter().map(|c| lvl(self, &c[0])).min().unwrap();
        self.backtrack(target);
        let mut confl = None;
        for c in clauses {
            let top = lvl(self, &c[0]);
            let cr = self.attach(c, true);
            if top == target && confl.is_none() {
                confl = Some(cr);
            }
        }
        confl
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.vals[v as usize] == 0 {
                self.stats.decisions += 1;
                return Some(Lit::new(v, self.phase[v as usize]));
            }
        }
        None
    }

    /// Runs the search until a total assignment passes `check`, the
    /// assumptions are refuted, or a limit is hit. `check` receives the
    /// solver at a total assignment and returns clauses it violates.
    pub fn search(
        &mut self,
        assumptions: &[Lit],
        limits: Limits,
        check: &mut dyn FnMut(&Sat) -> Vec<Vec<Lit>>,
    ) -> Outcome {
        if !self.ok {
            return Outcome::Unsat(vec![]);
        }
        self.backtrack(0);
        if self.max_learnts == 0.0 {
            self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        }
        let mut restart_no = 0u64;
        let mut budget = luby(restart_no) * 100;
        let mut since_restart = 0u64;
        let start_conflicts = self.stats.conflicts;
        loop {
            let mut confl = self.propagate();
            if confl.is_none() {
                if let Some(c) = self.bound_conflict() {
                    if c.is_empty() {
                        self.ok = false;
                        return Outcome::Unsat(vec![]);
                    }
                    confl = self.add_violated(vec![c]);
                    if !self.ok {
                        return Outcome::Unsat(vec![]);
                    }
                    if confl.is_none() {
                        continue;
                    }
                } else if self.bound_propagate() {
                    if !self.ok {
                        return Outcome::Unsat(vec![]);
                    }
                    continue;
                }
            }
            if let Some(cr) = confl {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Outcome::Unsat(vec![]);
                }
                let (learnt, bt) = self.analyze(cr);
                self.backtrack(bt);
                self.learn(learnt);
                if self.stats.conflicts.is_multiple_of(128) {
                    if let Some(d) = limits.deadline {
                        if Instant::now() >= d {
                            self.backtrack(0);
                            return Outcome::Budget;
                        }
                    }
                }
                if let Some(m) = limits.max_conflicts {
                    if self.stats.conflicts - start_conflicts >= m {
                        self.backtrack(0);
                        return Outcome::Budget;
                    }
                }
                continue;
            }
            if since_restart >= budget {
                self.stats.restarts += 1;
                restart_no += 1;
                budget = luby(restart_no) * 100;
                since_restart = 0;
                self.backtrack(0);
                continue;
            }
            if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let p = assumptions[self.decision_level() as usize];
                match self.value(p) {
                    1 => self.trail_lim.push(self.trail.len()),
                    -1 => {
                        let core = self.analyze_final(!p);
                        self.backtrack(0);
                        return Outcome::Unsat(core);
                    }
                    _ => {
                        next = Some(p);
                        break;
                    }
                }
            }
            if next.is_none() {
                next = self.pick_branch();
            }
            match next {
                Some(l) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(l, NO_REASON);
                }
                None => {
                    let violated = check(self);
                    if violated.is_empty() {
                        return Outcome::Sat;
                    }
                    if let Some(cr) = self.add_violated(violated) {
                        self.stats.conflicts += 1;
                        let (learnt, bt) = self.analyze(cr);
                        self.backtrack(bt);
                        self.learn(learnt);
                    } else if !self.ok {
                        return Outcome::Unsat(vec![]);
                    }
                }
            }
        }
    }

    /// Adds a clause outside of search (the solver is at level 0 afterwards).
    pub fn add_clause_root(&mut self, lits: &[Lit]) -> bool {
        self.backtrack(0);
        self.add_clause(lits)
    }
}

fn value_of(vals: &[i8], l: Lit) -> i8 {
    let v = vals[l.var() as usize];
    if l.is_pos() {
        v
    } else {
        -v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver(n: usize) -> Sat {
        let mut s = Sat::new();
        for _ in 0..n {
            s.new_var(false);
        }
        s
    }

    fn no_check(_: &Sat) -> Vec<Vec<Lit>> {
        Vec::new()
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn pigeonhole_three_into_two_is_unsat() {
        let mut s = solver(6);
        let x = |p: u32, h: u32| p * 2 + h;
        for p in 0..3 {
            s.add_clause(&[Lit::pos(x(p, 0)), Lit::pos(x(p, 1))]);
        }
        for h in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    s.add_clause(&[Lit::neg(x(a, h)), Lit::neg(x(b, h))]);
                }
            }
        }
        assert!(matches!(
            s.search(&[], Limits::default(), &mut no_check),
            Outcome::Unsat(c) if c.is_empty()
        ));
    }

    #[test]
    fn failed_assumptions_form_core() {
        let mut s = solver(3);
        s.add_clause(&[Lit::neg(0), Lit::neg(1)]);
        let out = s.search(
            &[Lit::pos(2), Lit::pos(0), Lit::pos(1)],
            Limits::default(),
            &mut no_check,
        );
        match out {
            Outcome::Unsat(mut core) => {
                core.sort();
                assert_eq!(core, vec![Lit::pos(0), Lit::pos(1)]);
            }
            o => panic!("{o:?}"),
        }
        assert!(matches!(
            s.search(&[Lit::pos(2)], Limits::default(), &mut no_check),
            Outcome::Sat
        ));
    }

    #[test]
    fn bound_forces_better_solutions() {
        let mut s = solver(2);
        s.add_clause(&[Lit::pos(0), Lit::pos(1)]);
        s.set_objective(1, &[(Lit::pos(0), 0, 3), (Lit::pos(1), 0, 2)]);
        let mut best = None;
        while let Outcome::Sat = s.search(&[], Limits::default(), &mut no_check) {
            let v = s.objective_value().unwrap();
            s.objective.as_mut().unwrap().incumbent = Some(v.clone());
            best = Some(v);
            s.backtrack(0);
        }
        assert_eq!(best, Some(vec![2]));
    }

    #[test]
    fn bound_propagation_excludes_expensive_literals() {
        let mut s = solver(3);
        s.set_objective(2, &[(Lit::pos(0), 0, 1), (Lit::pos(1), 1, 5), (Lit::pos(2), 1, 1)]);
        s.objective.as_mut().unwrap().incumbent = Some(vec![0, 3]);
        assert!(s.bound_propagate());
        assert_eq!(s.value(Lit::pos(0)), -1);
        assert_eq!(s.value(Lit::pos(1)), -1);
        assert_eq!(s.value(Lit::pos(2)), 0);
    }

    #[test]
    fn objective_sets_cheap_phase() {
        let mut s = solver(2);
        s.set_objective(1, &[(Lit::pos(0), 0, 1), (Lit::neg(1), 0, 1)]);
        assert!(!s.phase[0]);
        assert!(s.phase[1]);
    }
}
