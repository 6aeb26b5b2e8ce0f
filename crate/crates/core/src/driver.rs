//! The concretization pipeline: encode, load, ground, solve, decode.

use std::time::{Duration, Instant};

use concretix_logic::{parse_program, Grounder, ObjectiveVector, SolveOptions, SolveResult, Solver};
use serde::Serialize;
use thiserror::Error;

use crate::dag::{check_validity, ConcreteDAG, Violation};
use crate::diagnostics::{explain, CoreStrategy, Diagnostic};
use crate::encode::{
    decode_model, encode_problem, DecodeError, EncodeError, EncodeOptions, EncodedProblem, ObjectiveLevelPlan,
};
use crate::repo::{InstalledDatabase, Repo, RepoError};
use crate::spec::{AbstractSpec, SpecError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("generated program does not parse: {0}")]
    Program(#[from] concretix_logic::ParseError),
    #[error("grounding failed: {0}")]
    Ground(#[from] concretix_logic::GroundError),
    #[error("{phase} phase: {source}")]
    Solve {
        phase: &'static str,
        source: concretix_logic::SolveError,
    },
    #[error("solution violates validity: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSolution(Vec<Violation>),
}

#[derive(Clone, Debug)]
pub struct ConcretizeOptions {
    pub reuse: bool,
    pub seed: u64,
    pub budget: Duration,
    pub core_strategy: CoreStrategy,
    /// Minimize unsat cores before reporting them.
    pub explain: bool,
    pub plan: ObjectiveLevelPlan,
    pub naive_assumptions: bool,
}

impl Default for ConcretizeOptions {
    fn default() -> Self {
        ConcretizeOptions {
            reuse: false,
            seed: 0,
            budget: Duration::from_secs(60),
            core_strategy: CoreStrategy::Linear,
            explain: true,
            plan: ObjectiveLevelPlan::table2(),
            naive_assumptions: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub setup: Duration,
    pub load: Duration,
    pub ground: Duration,
    pub solve: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.setup + self.load + self.ground + self.solve
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

impl std::fmt::Display for PhaseTimings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "setup   {:10.3} ms", ms(self.setup))?;
        writeln!(f, "load    {:10.3} ms", ms(self.load))?;
        writeln!(f, "ground  {:10.3} ms", ms(self.ground))?;
        writeln!(f, "solve   {:10.3} ms", ms(self.solve))?;
        write!(f, "total   {:10.3} ms", ms(self.total()))
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Solved {
        dag: ConcreteDAG,
        objective: ObjectiveVector,
    },
    Unsatisfiable(Diagnostic),
}

#[derive(Clone, Debug)]
pub struct Concretization {
    pub outcome: Outcome,
    pub timings: PhaseTimings,
    pub possible_dependencies: usize,
    pub ground_rules: usize,
    pub problem: EncodedProblem,
}

impl Concretization {
    pub fn dag(&self) -> Option<&ConcreteDAG> {
        match &self.outcome {
            Outcome::Solved { dag, .. } => Some(dag),
            Outcome::Unsatisfiable(_) => None,
        }
    }

    pub fn diagnostic(&self) -> Option<&Diagnostic> {
        match &self.outcome {
            Outcome::Unsatisfiable(d) => Some(d),
            Outcome::Solved { .. } => None,
        }
    }
}

/// Concretizes `roots` together against `repo`.
pub fn concretize(
    repo: &Repo,
    roots: &[AbstractSpec],
    installed: Option<&InstalledDatabase>,
    options: &ConcretizeOptions,
) -> Result<Concretization, Error> {
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let encode_options = EncodeOptions {
        reuse: options.reuse,
        plan: options.plan.clone(),
        naive_assumptions: options.naive_assumptions,
    };
    let problem = encode_problem(repo, roots, installed, &encode_options)?;
    timings.setup = t.elapsed();

    let t = Instant::now();
    let program = parse_program(&problem.program_text())?;
    timings.load = t.elapsed();

    let t = Instant::now();
    let gp = Grounder::default().ground(&program)?;
    timings.ground = t.elapsed();

    let t = Instant::now();
    let solve_options = SolveOptions {
        seed: options.seed,
        budget: options.budget,
        optimize: true,
        ..SolveOptions::default()
    };
    let mut solver = Solver::new(&gp, &solve_options);
    let result = solver
        .solve(&problem.assumptions)
        .map_err(|source| Error::Solve { phase: "solve", source })?;
    let outcome = match result {
        SolveResult::Satisfiable(model) => {
            let dag = decode_model(&model, &gp, &problem, repo)?;
            let violations = check_validity(&dag, repo, roots, installed);
            if !violations.is_empty() {
                return Err(Error::InvalidSolution(violations));
            }
            Outcome::Solved {
                dag,
                objective: model.objective,
            }
        }
        SolveResult::Unsatisfiable(core) => {
            let core: Vec<_> = core.atoms.into_iter().collect();
            Outcome::Unsatisfiable(explain(
                &mut solver,
                &problem,
                &core,
                options.core_strategy,
                options.explain,
            ))
        }
    };
    timings.solve = t.elapsed();

    Ok(Concretization {
        outcome,
        timings,
        possible_dependencies: problem.possible.len(),
        ground_rules: gp.rules.len() + gp.choices.len() + gp.constraints.len(),
        problem,
    })
}
