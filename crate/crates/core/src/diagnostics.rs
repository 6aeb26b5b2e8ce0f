//! Unsat-core minimization and user-facing explanations.

use std::collections::BTreeSet;

use concretix_logic::{GroundAtom, SolveError, SolveResult, Solver};
use serde::Serialize;

use crate::encode::EncodedProblem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum CoreStrategy {
    /// Deletion-based: one check per element of the initial core.
    #[default]
    Linear,
    /// Divide and conquer over halves of the candidate set.
    Batched,
}

impl std::str::FromStr for CoreStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(CoreStrategy::Linear),
            "batched" => Ok(CoreStrategy::Batched),
            _ => Err(format!("unknown core strategy '{s}' (expected linear or batched)")),
        }
    }
}

/// Anything that can decide satisfiability under a set of assumptions.
pub trait CoreOracle {
    /// `None` when the assumptions are jointly satisfiable, otherwise an
    /// unsatisfiable subset of them.
    fn core(&mut self, assumptions: &[GroundAtom]) -> Result<Option<Vec<GroundAtom>>, SolveError>;

    fn satisfiable(&mut self, assumptions: &[GroundAtom]) -> Result<bool, SolveError> {
        Ok(self.core(assumptions)?.is_none())
    }
}

impl CoreOracle for Solver<'_> {
    fn core(&mut self, assumptions: &[GroundAtom]) -> Result<Option<Vec<GroundAtom>>, SolveError> {
        Ok(match self.check(assumptions)? {
            SolveResult::Satisfiable(_) => None,
            SolveResult::Unsatisfiable(c) => {
                Some(assumptions.iter().filter(|a| c.atoms.contains(a)).cloned().collect())
            }
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoreStats {
    pub initial_size: usize,
    pub final_size: usize,
    pub extra_solves: usize,
}

/// Result of core minimization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimizedCore {
    pub core: Vec<GroundAtom>,
    pub stats: CoreStats,
    /// False when a re-solve hit its budget; `core` is then the smallest
    /// unsatisfiable set found so far.
    pub minimal: bool,
}

/// The shrinking set together with the oracle. Every unsatisfiable check
/// replaces the set by the (smaller) core the oracle reports.
struct Shrink<'o, O: ?Sized> {
    oracle: &'o mut O,
    calls: usize,
    kept: Vec<GroundAtom>,
}

impl<O: CoreOracle + ?Sized> Shrink<'_, O> {
    /// Tries to drop `chunk`; true if it was dropped.
    fn try_drop(&mut self, chunk: &[GroundAtom]) -> Result<bool, SolveError> {
        let trial: Vec<GroundAtom> = self.kept.iter().filter(|a| !chunk.contains(a)).cloned().collect();
        self.calls += 1;
        match self.oracle.core(&trial)? {
            Some(core) => {
                self.kept = if core.len() < trial.len() { core } else { trial };
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn live(&self, chunk: &[GroundAtom]) -> Vec<GroundAtom> {
        chunk.iter().filter(|a| self.kept.contains(a)).cloned().collect()
    }

    /// Removes what it can of `chunk`. `needed` means the caller already
    /// knows some element of `chunk` must stay.
    fn halve(&mut self, chunk: &[GroundAtom], needed: bool) -> Result<(), SolveError> {
        let chunk = self.live(chunk);
        if chunk.is_empty() {
            return Ok(());
        }
        if !needed && self.try_drop(&chunk)? {
            return Ok(());
        }
        if chunk.len() == 1 {
            return Ok(());
        }
        let (left, right) = chunk.split_at(chunk.len() / 2);
        self.halve(left, false)?;
        let left_gone = self.live(left).is_empty();
        self.halve(right, left_gone)
    }
}

/// Shrinks an unsatisfiable `core` to a subset-minimal one.
pub fn minimize_core<O: CoreOracle + ?Sized>(
    oracle: &mut O,
    core: &[GroundAtom],
    strategy: CoreStrategy,
) -> MinimizedCore {
    let mut sh = Shrink {
        oracle,
        calls: 0,
        kept: core.to_vec(),
    };
    let outcome = match strategy {
        CoreStrategy::Linear => (|| {
            for a in core {
                if sh.kept.contains(a) {
                    sh.try_drop(std::slice::from_ref(a))?;
                }
            }
            Ok(())
        })(),
        CoreStrategy::Batched => {
            let (left, right) = core.split_at(core.len() / 2);
            sh.halve(left, false).and_then(|_| sh.halve(right, false))
        }
    };
    MinimizedCore {
        stats: CoreStats {
            initial_size: core.len(),
            final_size: sh.kept.len(),
            extra_solves: sh.calls,
        },
        core: sh.kept,
        minimal: outcome.is_ok(),
    }
}

/// Why a problem has no solution.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub messages: Vec<String>,
    #[serde(serialize_with = "atoms_as_text")]
    pub core: Vec<GroundAtom>,
    pub stats: CoreStats,
    pub minimal: bool,
}

fn atoms_as_text<S: serde::Serializer>(atoms: &[GroundAtom], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(atoms.iter().map(|a| a.to_string()))
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for m in &self.messages {
            writeln!(f, "error: {m}")?;
        }
        write!(f, "{}", core_stats(self))
    }
}

/// Turns a raw core into a diagnostic, minimizing it when `minimize` is set.
/// Messages are deduplicated and sorted.
pub fn explain(
    solver: &mut Solver<'_>,
    problem: &EncodedProblem,
    core: &[GroundAtom],
    strategy: CoreStrategy,
    minimize: bool,
) -> Diagnostic {
    let m = if minimize {
        minimize_core(solver, core, strategy)
    } else {
        MinimizedCore {
            core: core.to_vec(),
            stats: CoreStats {
                initial_size: core.len(),
                final_size: core.len(),
                extra_solves: 0,
            },
            minimal: false,
        }
    };
    let messages: BTreeSet<String> = m.core.iter().map(|a| problem.message_for(a)).collect();
    Diagnostic {
        messages: messages.into_iter().collect(),
        core: m.core,
        stats: m.stats,
        minimal: m.minimal,
    }
}

/// One-line summary of the minimization work.
pub fn core_stats(d: &Diagnostic) -> String {
    format!(
        "core: initial {} final {} extra solves {}{}",
        d.stats.initial_size,
        d.stats.final_size,
        d.stats.extra_solves,
        if d.minimal { "" } else { " (not minimal)" }
    )
}

/// True if dropping any one element of `core` makes the problem satisfiable.
pub fn is_subset_minimal<O: CoreOracle + ?Sized>(oracle: &mut O, core: &[GroundAtom]) -> Result<bool, SolveError> {
    if oracle.satisfiable(core)? {
        return Ok(false);
    }
    for i in 0..core.len() {
        let mut trial = core.to_vec();
        trial.remove(i);
        if !oracle.satisfiable(&trial)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unsat iff the assumptions include one of the listed sets.
    struct SetOracle(Vec<BTreeSet<i64>>);

    impl CoreOracle for SetOracle {
        fn core(&mut self, a: &[GroundAtom]) -> Result<Option<Vec<GroundAtom>>, SolveError> {
            let have: BTreeSet<i64> = a.iter().map(|x| x.args[0].as_int().unwrap()).collect();
            Ok(self
                .0
                .iter()
                .find(|s| s.is_subset(&have))
                .map(|s| atoms(&s.iter().copied().collect::<Vec<_>>())))
        }
    }

    /// Reports the whole assumption set as the core.
    struct Plain(SetOracle);

    impl CoreOracle for Plain {
        fn core(&mut self, a: &[GroundAtom]) -> Result<Option<Vec<GroundAtom>>, SolveError> {
            Ok(self.0.core(a)?.map(|_| a.to_vec()))
        }
    }

    fn atoms(ids: &[i64]) -> Vec<GroundAtom> {
        ids.iter()
            .map(|&i| GroundAtom::new("e", vec![concretix_logic::Value::Int(i)]))
            .collect()
    }

    #[test]
    fn linear_uses_one_solve_per_element() {
        let mut o = Plain(SetOracle(vec![[2, 5].into()]));
        let m = minimize_core(&mut o, &atoms(&[1, 2, 3, 4, 5, 6]), CoreStrategy::Linear);
        assert_eq!(m.core, atoms(&[2, 5]));
        assert_eq!(m.stats.extra_solves, 6);
        assert!(m.minimal);
    }

    #[test]
    fn reported_cores_shortcut_linear_search() {
        let mut o = SetOracle(vec![[2, 5].into()]);
        let m = minimize_core(&mut o, &atoms(&[1, 2, 3, 4, 5, 6]), CoreStrategy::Linear);
        assert_eq!(m.core, atoms(&[2, 5]));
        assert_eq!(m.stats.extra_solves, 3);
    }

    #[test]
    fn every_pair_is_found_by_both_strategies() {
        for a in 1..=8 {
            for b in a + 1..=8 {
                for s in [CoreStrategy::Linear, CoreStrategy::Batched] {
                    let mut o = Plain(SetOracle(vec![[a, b].into()]));
                    let m = minimize_core(&mut o, &atoms(&[1, 2, 3, 4, 5, 6, 7, 8]), s);
                    assert_eq!(m.core, atoms(&[a, b]), "{s:?}");
                    assert!(m.stats.extra_solves <= 10, "{s:?} {a} {b} {:?}", m.stats);
                }
            }
        }
    }

    #[test]
    fn batched_finds_the_same_core() {
        let mut o = SetOracle(vec![[2, 5].into()]);
        let m = minimize_core(&mut o, &atoms(&[1, 2, 3, 4, 5, 6]), CoreStrategy::Batched);
        let got: BTreeSet<_> = m.core.into_iter().collect();
        assert_eq!(got, atoms(&[2, 5]).into_iter().collect());
    }

    #[test]
    fn results_are_minimal() {
        let mut o = SetOracle(vec![[1, 3, 7].into(), [2, 8].into()]);
        for s in [CoreStrategy::Linear, CoreStrategy::Batched] {
            let m = minimize_core(&mut o, &atoms(&[1, 2, 3, 4, 5, 6, 7, 8]), s);
            assert!(is_subset_minimal(&mut o, &m.core).unwrap());
        }
    }

    #[test]
    fn batched_beats_linear_on_small_cores_in_large_sets() {
        let mut o = SetOracle(vec![[3, 6].into()]);
        let m = minimize_core(&mut o, &atoms(&[1, 2, 3, 4, 5, 6, 7, 8]), CoreStrategy::Batched);
        assert_eq!(m.core.len(), 2);
        assert!(m.stats.extra_solves < 8, "{:?}", m.stats);
    }

    #[test]
    fn singleton_core() {
        let mut o = SetOracle(vec![[4].into()]);
        let m = minimize_core(&mut o, &atoms(&[4]), CoreStrategy::Linear);
        assert_eq!(m.core, atoms(&[4]));
        assert_eq!(m.stats.extra_solves, 1);
    }

    struct Slow;
    impl CoreOracle for Slow {
        fn core(&mut self, _: &[GroundAtom]) -> Result<Option<Vec<GroundAtom>>, SolveError> {
            Err(SolveError::Timeout(std::time::Duration::from_millis(1)))
        }
    }

    #[test]
    fn timeouts_flag_the_core() {
        let m = minimize_core(&mut Slow, &atoms(&[1, 2]), CoreStrategy::Linear);
        assert!(!m.minimal);
        assert_eq!(m.core.len(), 2);
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!("batched".parse::<CoreStrategy>().unwrap(), CoreStrategy::Batched);
        assert!("other".parse::<CoreStrategy>().is_err());
    }
}
