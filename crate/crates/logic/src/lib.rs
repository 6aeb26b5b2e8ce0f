//! A compact answer-set engine.
//!
//! Programs are parsed from a restricted logic language, grounded bottom-up,
//! and solved by conflict-driven search over the completion with lazily added
//! loop clauses. Solving supports assumptions with unsatisfiable cores and
//! lexicographic minimization over integer priority levels.
//!
//! ```
//! use concretix_logic::{ground, parse_program, solve, SolveOptions};
//!
//! let p = parse_program("{ a; b } 1. c :- a. #minimize { 1@1 : b }.").unwrap();
//! let gp = ground(&p).unwrap();
//! let r = solve(&gp, &[], &SolveOptions::default()).unwrap();
//! assert!(r.model().unwrap().objective.at(1) == 0);
//! ```

mod error;
mod ground;
mod ground_program;
mod objective;
mod parser;
mod program;
mod sat;
mod solve;
mod stable;
mod term;
mod translate;

pub use error::{GroundError, ParseError, SolveError};
pub use ground::{ground, Grounder, DEFAULT_MAX_GROUND_RULES};
pub use ground_program::{AtomId, GroundChoice, GroundConstraint, GroundProgram, GroundRule, MinimizeEntry};
pub use objective::{compare_objectives, ObjectiveVector};
pub use parser::parse_program;
pub use program::{BodyElem, ChoiceElem, ChoiceHead, CmpOp, Literal, Location, MinimizeElem, Program, Rule, RuleKind};
pub use sat::SearchStats;
pub use solve::{enumerate_models, solve, Model, SolveOptions, SolveResult, Solver, UnsatCore};
pub use stable::is_stable_model;
pub use term::{ArithOp, Atom, GroundAtom, Symbol, Term, Value};
