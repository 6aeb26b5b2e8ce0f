//! Objective vectors and their lexicographic order.

use std::cmp::Ordering;
use std::fmt;

use crate::ground_program::{AtomId, GroundProgram};

/// `(level, total weight)` pairs sorted by descending level.
#[derive(Clone, PartialEq, Eq, Debug, Default, Hash)]
pub struct ObjectiveVector(pub Vec<(i64, i64)>);

impl ObjectiveVector {
    /// Builds a vector from arbitrary pairs, summing duplicate levels.
    pub fn new(pairs: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut v: Vec<(i64, i64)> = Vec::new();
        let mut pairs: Vec<(i64, i64)> = pairs.into_iter().collect();
        pairs.sort_by(|a, b| b.0.cmp(&a.0));
        for (l, w) in pairs {
            match v.last_mut() {
                Some(last) if last.0 == l => last.1 += w,
                _ => v.push((l, w)),
            }
        }
        ObjectiveVector(v)
    }

    /// Evaluates the program's minimize entries over a set of true atoms.
    /// Every level of the program appears, zero totals included.
    pub fn evaluate(gp: &GroundProgram, holds: impl Fn(AtomId) -> bool) -> Self {
        let mut pairs: Vec<(i64, i64)> = gp.levels().into_iter().map(|l| (l, 0)).collect();
        for m in &gp.minimize {
            if holds(m.atom) {
                pairs.push((m.level, m.weight));
            }
        }
        Self::new(pairs)
    }

    /// Total at `level`, 0 when absent.
    pub fn at(&self, level: i64) -> i64 {
        self.0.iter().find(|(l, _)| *l == level).map(|(_, w)| *w).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lexicographic comparison: higher levels dominate and a missing level
/// counts as 0. `Less` means `a` is better.
pub fn compare_objectives(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    let (mut i, mut j) = (0, 0);
    let (x, y) = (&a.0, &b.0);
    while i < x.len() || j < y.len() {
        let la = x.get(i).map(|p| p.0);
        let lb = y.get(j).map(|p| p.0);
        let (wa, wb) = match (la, lb) {
            (Some(p), Some(q)) if p == q => {
                i += 1;
                j += 1;
                (x[i - 1].1, y[j - 1].1)
            }
            (Some(p), Some(q)) if p > q => {
                i += 1;
                (x[i - 1].1, 0)
            }
            (Some(_), None) => {
                i += 1;
                (x[i - 1].1, 0)
            }
            _ => {
                j += 1;
                (0, y[j - 1].1)
            }
        };
        match wa.cmp(&wb) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

impl PartialOrd for ObjectiveVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ObjectiveVector {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_objectives(self, other)
    }
}

impl fmt::Display for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (l, w)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}@{l}")?;
        }
        f.write_str("]")
    }
}
