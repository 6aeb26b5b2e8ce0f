//! Stable-model search, enumeration and lexicographic optimization.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crate::error::SolveError;
use crate::ground_program::{AtomId, GroundProgram};
use crate::objective::ObjectiveVector;
use crate::sat::{Limits, Lit, Outcome, Sat, SearchStats};
use crate::term::GroundAtom;
use crate::translate::{translate, Translation};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// 0 keeps the plain lowest-index branching order.
    pub seed: u64,
    /// Wall-clock limit for one call.
    pub budget: Duration,
    pub max_conflicts: Option<u64>,
    /// When false, the first stable model found is returned.
    pub optimize: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: 0,
            budget: Duration::from_secs(60),
            max_conflicts: None,
            optimize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub true_atoms: BTreeSet<AtomId>,
    pub objective: ObjectiveVector,
}

impl Model {
    pub fn contains(&self, id: AtomId) -> bool {
        self.true_atoms.contains(&id)
    }

    /// True when `atom` is in the universe and holds in this model.
    pub fn holds(&self, gp: &GroundProgram, atom: &GroundAtom) -> bool {
        gp.atom_id(atom).is_some_and(|id| self.contains(id))
    }

    pub fn atoms<'a>(&'a self, gp: &'a GroundProgram) -> impl Iterator<Item = &'a GroundAtom> + 'a {
        self.true_atoms.iter().map(move |id| gp.atom(*id))
    }

    /// True atoms without grounder-internal ones, sorted.
    pub fn shown(&self, gp: &GroundProgram) -> Vec<GroundAtom> {
        let mut v: Vec<GroundAtom> = self.atoms(gp).filter(|a| !a.is_hidden()).cloned().collect();
        v.sort();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UnsatCore {
    pub atoms: BTreeSet<GroundAtom>,
}

impl UnsatCore {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Satisfiable(Model),
    Unsatisfiable(UnsatCore),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Satisfiable(_))
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveResult::Satisfiable(m) => Some(m),
            SolveResult::Unsatisfiable(_) => None,
        }
    }

    pub fn core(&self) -> Option<&UnsatCore> {
        match self {
            SolveResult::Satisfiable(_) => None,
            SolveResult::Unsatisfiable(c) => Some(c),
        }
    }
}

/// A solver bound to one ground program. Clauses learned by [`Solver::check`]
/// are kept between calls, so repeated checks under different assumptions
/// get cheaper.
#[derive(Clone, Debug)]
pub struct Solver<'a> {
    gp: &'a GroundProgram,
    sat: Sat,
    tr: Translation,
    options: SolveOptions,
    levels: Vec<i64>,
    objective: Vec<(Lit, usize, i64)>,
    calls: u64,
}

impl<'a> Solver<'a> {
    pub fn new(gp: &'a GroundProgram, options: &SolveOptions) -> Self {
        let mut sat = Sat::new();
        let tr = translate(gp, &mut sat);
        sat.jitter(options.seed);
        let levels = gp.levels();
        let mut acc: BTreeMap<(u32, usize), i64> = BTreeMap::new();
        for m in &gp.minimize {
            let li = levels.iter().position(|l| *l == m.level).unwrap();
            *acc.entry((m.atom.0, li)).or_default() += m.weight;
        }
        let objective = acc
            .into_iter()
            .filter(|(_, w)| *w != 0)
            .map(|((a, li), w)| {
                if w > 0 {
                    (Lit::pos(a), li, w)
                } else {
                    (Lit::neg(a), li, -w)
                }
            })
            .collect();
        Solver {
            gp,
            sat,
            tr,
            options: options.clone(),
            levels,
            objective,
            calls: 0,
        }
    }

    pub fn program(&self) -> &'a GroundProgram {
        self.gp
    }

    /// Number of search calls made so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn stats(&self) -> SearchStats {
        self.sat.stats
    }

    fn limits(&self) -> Limits {
        Limits {
            deadline: Some(Instant::now() + self.options.budget),
            max_conflicts: self.options.max_conflicts,
        }
    }

    fn resolve(&self, assumptions: &[GroundAtom]) -> Result<Vec<Lit>, GroundAtom> {
        assumptions
            .iter()
            .map(|a| self.gp.atom_id(a).map(|id| Lit::pos(id.0)).ok_or_else(|| a.clone()))
            .collect()
    }

    fn core_of(&self, lits: &[Lit]) -> UnsatCore {
        UnsatCore {
            atoms: lits.iter().map(|l| self.gp.atom(AtomId(l.var())).clone()).collect(),
        }
    }

    fn unknown(atom: GroundAtom) -> SolveResult {
        SolveResult::Unsatisfiable(UnsatCore {
            atoms: [atom].into_iter().collect(),
        })
    }

    fn extract(&self, sat: &Sat) -> Model {
        let true_atoms: BTreeSet<AtomId> = (0..self.tr.num_atoms as u32)
            .filter(|&a| sat.model_value(a))
            .map(AtomId)
            .collect();
        let objective = ObjectiveVector::evaluate(self.gp, |a| true_atoms.contains(&a));
        Model { true_atoms, objective }
    }

    fn timeout(&self) -> SolveError {
        SolveError::Timeout(self.options.budget)
    }

    /// Decides satisfiability under `assumptions` without optimizing.
    pub fn check(&mut self, assumptions: &[GroundAtom]) -> Result<SolveResult, SolveError> {
        self.calls += 1;
        let lits = match self.resolve(assumptions) {
            Ok(l) => l,
            Err(a) => return Ok(Self::unknown(a)),
        };
        let limits = self.limits();
        let tr = &self.tr;
        let out = self.sat.search(&lits, limits, &mut |s| tr.unfounded(s));
        match out {
            Outcome::Sat => {
                let m = self.extract(&self.sat);
                self.sat.backtrack(0);
                Ok(SolveResult::Satisfiable(m))
            }
            Outcome::Unsat(core) => Ok(SolveResult::Unsatisfiable(self.core_of(&core))),
            Outcome::Budget => Err(self.timeout()),
        }
    }

    /// Finds an optimal stable model under `assumptions`, or a core.
    pub fn solve(&mut self, assumptions: &[GroundAtom]) -> Result<SolveResult, SolveError> {
        if !self.options.optimize || self.objective.is_empty() {
            return self.check(assumptions);
        }
        self.calls += 1;
        let lits = match self.resolve(assumptions) {
            Ok(l) => l,
            Err(a) => return Ok(Self::unknown(a)),
        };
        let limits = self.limits();
        let mut eng = self.sat.clone();
        eng.set_objective(self.levels.len(), &self.objective);
        let tr = &self.tr;
        let mut best: Option<Model> = None;
        loop {
            match eng.search(&lits, limits, &mut |s| tr.unfounded(s)) {
                Outcome::Sat => {
                    let value = eng.objective_value().unwrap();
                    best = Some(self.extract(&eng));
                    eng.objective.as_mut().unwrap().incumbent = Some(value);
                    eng.backtrack(0);
                }
                Outcome::Unsat(core) => {
                    self.sat.stats = eng.stats;
                    return Ok(match best {
                        Some(m) => SolveResult::Satisfiable(m),
                        None => SolveResult::Unsatisfiable(self.core_of(&core)),
                    });
                }
                Outcome::Budget => return Err(self.timeout()),
            }
        }
    }

    /// Up to `limit` distinct stable models, ignoring optimization.
    pub fn enumerate(&mut self, limit: usize) -> Result<Vec<Model>, SolveError> {
        let limits = self.limits();
        let mut eng = self.sat.clone();
        let tr = &self.tr;
        let mut out = Vec::new();
        while out.len() < limit {
            match eng.search(&[], limits, &mut |s| tr.unfounded(s)) {
                Outcome::Sat => {
                    let m = self.extract(&eng);
                    let block: Vec<Lit> = (0..self.tr.num_atoms as u32)
                        .filter(|&a| eng.level_of(a) > 0)
                        .map(|a| Lit::new(a, !eng.model_value(a)))
                        .collect();
                    out.push(m);
                    if !eng.add_clause_root(&block) {
                        break;
                    }
                }
                Outcome::Unsat(_) => break,
                Outcome::Budget => return Err(self.timeout()),
            }
        }
        Ok(out)
    }
}

/// Solves `gp` under `assumptions` (atoms asserted true).
pub fn solve(
    gp: &GroundProgram,
    assumptions: &[GroundAtom],
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    Solver::new(gp, options).solve(assumptions)
}

/// Up to `limit` stable models of `gp`, without duplicates.
pub fn enumerate_models(gp: &GroundProgram, limit: usize) -> Result<Vec<Model>, SolveError> {
    Solver::new(gp, &SolveOptions::default()).enumerate(limit)
}
