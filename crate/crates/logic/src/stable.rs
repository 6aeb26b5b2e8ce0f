//! Direct stable-model check, independent of the search engine.

use std::collections::BTreeSet;

use crate::ground_program::{AtomId, GroundProgram};

/// True iff `candidate` satisfies every rule, choice bound and integrity
/// constraint of `gp` and equals the least model of its reduct.
pub fn is_stable_model(gp: &GroundProgram, candidate: &BTreeSet<AtomId>) -> bool {
    if candidate.iter().any(|a| a.index() >= gp.num_atoms()) {
        return false;
    }
    let m = |a: &AtomId| candidate.contains(a);
    let body = |pos: &[AtomId], neg: &[AtomId]| pos.iter().all(m) && !neg.iter().any(m);

    for r in &gp.rules {
        if body(&r.pos, &r.neg) && !m(&r.head) {
            return false;
        }
    }
    for c in &gp.constraints {
        if body(&c.pos, &c.neg) {
            return false;
        }
    }
    for c in &gp.choices {
        if body(&c.pos, &c.neg) {
            let elems: BTreeSet<AtomId> = c.elements.iter().copied().collect();
            let k = elems.iter().filter(|a| m(a)).count() as u32;
            if c.lower.is_some_and(|l| k < l) || c.upper.is_some_and(|u| k > u) {
                return false;
            }
        }
    }

    // Reduct: drop rules whose negative body intersects the candidate; a
    // choice rule contributes `a :- pos` for each chosen element `a`.
    let mut reduct: Vec<(AtomId, &[AtomId])> = Vec::new();
    for r in &gp.rules {
        if !r.neg.iter().any(m) {
            reduct.push((r.head, &r.pos));
        }
    }
    for c in &gp.choices {
        if !c.neg.iter().any(m) {
            for e in &c.elements {
                if m(e) {
                    reduct.push((*e, &c.pos));
                }
            }
        }
    }
    let mut least: BTreeSet<AtomId> = BTreeSet::new();
    loop {
        let before = least.len();
        for (h, pos) in &reduct {
            if pos.iter().all(|p| least.contains(p)) {
                least.insert(*h);
            }
        }
        if least.len() == before {
            break;
        }
    }
    least == *candidate
}
