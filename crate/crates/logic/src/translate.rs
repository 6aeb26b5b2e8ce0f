//! Clark completion of a ground program into clauses, plus the unfounded-set
//! check that turns completion models into stable models.

use std::collections::HashMap;

use crate::ground_program::GroundProgram;
use crate::sat::{Lit, Sat, Var};

/// A rule as seen by the unfounded-set check: heads derived from `pos`
/// when the body variable is true.
#[derive(Clone, Debug)]
struct SupportRule {
    heads: Vec<u32>,
    pos: Vec<u32>,
    neg: Vec<u32>,
    body: Var,
    choice: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Translation {
    pub num_atoms: usize,
    rules: Vec<SupportRule>,
    /// Rule indices by positive body atom.
    watchers: Vec<Vec<u32>>,
    pub tight: bool,
}

struct Builder<'a> {
    sat: &'a mut Sat,
    bodies: HashMap<(Vec<u32>, Vec<u32>), Var>,
    truth: Var,
}

impl Builder<'_> {
    fn body(&mut self, pos: &[crate::AtomId], neg: &[crate::AtomId]) -> Var {
        let mut p: Vec<u32> = pos.iter().map(|a| a.0).collect();
        let mut n: Vec<u32> = neg.iter().map(|a| a.0).collect();
        p.sort_unstable();
        p.dedup();
        n.sort_unstable();
        n.dedup();
        if p.is_empty() && n.is_empty() {
            return self.truth;
        }
        if let Some(&b) = self.bodies.get(&(p.clone(), n.clone())) {
            return b;
        }
        let b = self.sat.new_var(false);
        let mut long = vec![Lit::pos(b)];
        for &a in &p {
            self.sat.add_clause(&[Lit::neg(b), Lit::pos(a)]);
            long.push(Lit::neg(a));
        }
        for &a in &n {
            self.sat.add_clause(&[Lit::neg(b), Lit::neg(a)]);
            long.push(Lit::pos(a));
        }
        self.sat.add_clause(&long);
        self.bodies.insert((p, n), b);
        b
    }

    /// At most `k` of `xs` are true whenever `guard` is true.
    fn at_most(&mut self, guard: Var, xs: &[Lit], k: usize) {
        let n = xs.len();
        if k >= n {
            return;
        }
        let g = Lit::neg(guard);
        if k == 0 {
            for &x in xs {
                self.sat.add_clause(&[g, !x]);
            }
            return;
        }
        if k == 1 && n <= 6 {
            for i in 0..n {
                for j in i + 1..n {
                    self.sat.add_clause(&[g, !xs[i], !xs[j]]);
                }
            }
            return;
        }
        // Sequential counter: s[i][j] means at least j+1 of xs[..=i] are true.
        let s: Vec<Vec<Var>> = (0..n - 1)
            .map(|_| (0..k).map(|_| self.sat.new_var(false)).collect())
            .collect();
        self.sat.add_clause(&[!xs[0], Lit::pos(s[0][0])]);
        for i in 1..n - 1 {
            self.sat.add_clause(&[!xs[i], Lit::pos(s[i][0])]);
            self.sat.add_clause(&[Lit::neg(s[i - 1][0]), Lit::pos(s[i][0])]);
            for j in 1..k {
                self.sat
                    .add_clause(&[!xs[i], Lit::neg(s[i - 1][j - 1]), Lit::pos(s[i][j])]);
                self.sat.add_clause(&[Lit::neg(s[i - 1][j]), Lit::pos(s[i][j])]);
            }
            self.sat.add_clause(&[g, !xs[i], Lit::neg(s[i - 1][k - 1])]);
        }
        self.sat.add_clause(&[g, !xs[n - 1], Lit::neg(s[n - 2][k - 1])]);
    }
}

/// Encodes `gp` into `sat`. Atom `i` becomes variable `i`.
pub(crate) fn translate(gp: &GroundProgram, sat: &mut Sat) -> Translation {
    let n = gp.num_atoms();
    let mut phase = vec![false; n];
    for m in &gp.minimize {
        if m.weight < 0 {
            phase[m.atom.index()] = true;
        }
    }
    for &p in &phase {
        sat.new_var(p);
    }
    let truth = sat.new_var(true);
    sat.add_clause(&[Lit::pos(truth)]);
    let mut b = Builder {
        sat,
        bodies: HashMap::new(),
        truth,
    };

    let mut support: Vec<Vec<Lit>> = vec![Vec::new(); n];
    let mut rules = Vec::new();
    for r in &gp.rules {
        let body = b.body(&r.pos, &r.neg);
        b.sat.add_clause(&[Lit::neg(body), Lit::pos(r.head.0)]);
        support[r.head.index()].push(Lit::pos(body));
        rules.push(SupportRule {
            heads: vec![r.head.0],
            pos: r.pos.iter().map(|a| a.0).collect(),
            neg: r.neg.iter().map(|a| a.0).collect(),
            body,
            choice: false,
        });
    }
    for c in &gp.choices {
        let body = b.body(&c.pos, &c.neg);
        let mut elems: Vec<u32> = c.elements.iter().map(|a| a.0).collect();
        elems.sort_unstable();
        elems.dedup();
        for &e in &elems {
            support[e as usize].push(Lit::pos(body));
        }
        let xs: Vec<Lit> = elems.iter().map(|&e| Lit::pos(e)).collect();
        if let Some(u) = c.upper {
            b.at_most(body, &xs, u as usize);
        }
        if let Some(l) = c.lower {
            let l = l as usize;
            if l > xs.len() {
                b.sat.add_clause(&[Lit::neg(body)]);
            } else if l > 0 {
                let negs: Vec<Lit> = xs.iter().map(|&x| !x).collect();
                b.at_most(body, &negs, xs.len() - l);
            }
        }
        rules.push(SupportRule {
            heads: elems,
            pos: c.pos.iter().map(|a| a.0).collect(),
            neg: c.neg.iter().map(|a| a.0).collect(),
            body,
            choice: true,
        });
    }
    for c in &gp.constraints {
        let mut cl: Vec<Lit> = c.pos.iter().map(|a| Lit::neg(a.0)).collect();
        cl.extend(c.neg.iter().map(|a| Lit::pos(a.0)));
        b.sat.add_clause(&cl);
    }
    for (a, sup) in support.into_iter().enumerate() {
        let mut cl = vec![Lit::neg(a as Var)];
        cl.extend(sup);
        b.sat.add_clause(&cl);
    }

    let mut watchers = vec![Vec::new(); n];
    for (i, r) in rules.iter().enumerate() {
        for &p in &r.pos {
            watchers[p as usize].push(i as u32);
        }
    }
    let tight = is_tight(n, &rules);
    Translation {
        num_atoms: n,
        rules,
        watchers,
        tight,
    }
}

/// True when the positive dependency graph has no cycle.
fn is_tight(n: usize, rules: &[SupportRule]) -> bool {
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for r in rules {
        for &h in &r.heads {
            succ[h as usize].extend(r.pos.iter().copied());
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    for s in 0..n {
        if state[s] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
        state[s] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i] as usize;
                *i += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => return false,
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    true
}

impl Translation {
    /// At a total assignment, returns loop clauses for atoms that are true
    /// but unsupported by the least model of the reduct.
    pub fn unfounded(&self, sat: &Sat) -> Vec<Vec<Lit>> {
        if self.tight {
            return Vec::new();
        }
        let n = self.num_atoms;
        let truth = |a: u32| sat.model_value(a);
        let mut derived = vec![false; n];
        let mut missing: Vec<u32> = vec![0; self.rules.len()];
        let mut queue: Vec<u32> = Vec::new();
        let fire = |r: &SupportRule, derived: &mut Vec<bool>, queue: &mut Vec<u32>| {
            for &h in &r.heads {
                if (!r.choice || truth(h)) && !derived[h as usize] {
                    derived[h as usize] = true;
                    queue.push(h);
                }
            }
        };
        for (i, r) in self.rules.iter().enumerate() {
            if r.neg.iter().any(|&a| truth(a)) {
                missing[i] = u32::MAX;
                continue;
            }
            missing[i] = r.pos.len() as u32;
            if missing[i] == 0 {
                fire(r, &mut derived, &mut queue);
            }
        }
        while let Some(a) = queue.pop() {
            for &ri in &self.watchers[a as usize] {
                let m = &mut missing[ri as usize];
                if *m == u32::MAX {
                    continue;
                }
                *m -= 1;
                if *m == 0 {
                    fire(&self.rules[ri as usize], &mut derived, &mut queue);
                }
            }
        }
        let unfounded: Vec<u32> = (0..n as u32).filter(|&a| truth(a) && !derived[a as usize]).collect();
        if unfounded.is_empty() {
            return Vec::new();
        }
        let mut in_u = vec![false; n];
        for &a in &unfounded {
            in_u[a as usize] = true;
        }
        let mut ext: Vec<Lit> = Vec::new();
        for r in &self.rules {
            if r.heads.iter().any(|&h| in_u[h as usize]) && !r.pos.iter().any(|&p| in_u[p as usize]) {
                ext.push(Lit::pos(r.body));
            }
        }
        ext.sort_unstable();
        ext.dedup();
        unfounded
            .into_iter()
            .map(|a| {
                let mut c = Vec::with_capacity(ext.len() + 1);
                c.push(Lit::neg(a));
                c.extend_from_slice(&ext);
                c
            })
            .collect()
    }
}
