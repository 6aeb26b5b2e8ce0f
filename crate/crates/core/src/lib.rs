//! Dependency concretization for source-based package managers.
//!
//! Abstract specs such as `example@1.0.0 +bzip ^zlib@1.2.11` are combined
//! with package recipes, a platform configuration and, optionally, a database
//! of installed packages. The result is an optimal, fully concrete dependency
//! DAG chosen by an answer-set solver, or a minimal set of reasons why none
//! exists.
//!
//! ```
//! use concretix::{concretize, parse_spec, ConcretizeOptions, PackageRecipe, Repo, RepoConfig};
//!
//! let zlib = PackageRecipe::from_toml(r#"
//!     name = "zlib"
//!     versions = ["1.2.11", "1.2.8"]
//! "#, "zlib.pkg").unwrap();
//! let config = RepoConfig::from_toml(r#"
//!     [[compilers]]
//!     name = "gcc"
//!     version = "10.2.0"
//!     targets = ["x86_64"]
//!     [[targets]]
//!     name = "x86_64"
//!     [[os]]
//!     name = "centos8"
//! "#, "config.toml").unwrap();
//! let repo = Repo::new(vec![zlib], config).unwrap();
//! let c = concretize(&repo, &[parse_spec("zlib").unwrap()], None, &ConcretizeOptions::default()).unwrap();
//! assert_eq!(c.dag().unwrap().node("zlib").unwrap().version.as_str(), "1.2.11");
//! ```

pub mod dag;
pub mod diagnostics;
pub mod driver;
pub mod encode;
pub mod repo;
pub mod spec;
pub mod version;

pub use dag::{
    check_validity, parse_json, render_json, render_tree, ConcreteDAG, ConcreteNode, ValidityClause, Violation,
};
pub use diagnostics::{
    core_stats, explain, is_subset_minimal, minimize_core, CoreOracle, CoreStats, CoreStrategy, Diagnostic,
    MinimizedCore,
};
pub use driver::{concretize, Concretization, ConcretizeOptions, Error, Outcome, PhaseTimings};
pub use encode::{
    build_objectives, decode_model, encode_problem, fixed_error_messages, fixed_logic_program, EncodeOptions,
    EncodedProblem, ObjectiveLevelPlan,
};
pub use repo::{
    load_installed, load_repo, possible_dependencies, validate_repo, CompilerId, InstalledDatabase, InstalledSpec,
    PackageRecipe, Repo, RepoConfig, RepoError,
};
pub use spec::{
    merge_constraints, parse_spec, parse_specs, render_spec, AbstractSpec, NodeConstraint, SpecError, VariantValue,
};
pub use version::{version_compare, version_satisfies, Version, VersionConstraint, VersionRange};
