//! Translation of recipes, specs and installed packages into logic facts,
//! and of stable models back into concrete DAGs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use concretix_logic::{parse_program, BodyElem, GroundAtom, GroundProgram, Literal, Model, RuleKind, Term, Value};
use thiserror::Error;

use crate::dag::{ConcreteDAG, ConcreteNode};
use crate::repo::{possible_dependencies, CompilerId, InstalledDatabase, InstalledSpec, Repo, RepoError};
use crate::spec::{AbstractSpec, NodeConstraint, VariantValue};
use crate::version::Version;

const FIXED_PROGRAM: &str = include_str!("concretize.lp");

/// The concretizer rules shared by every problem.
pub fn fixed_logic_program() -> &'static str {
    FIXED_PROGRAM
}

/// Messages of the error-bearing integrity constraints, in program order.
pub fn fixed_error_messages() -> &'static [String] {
    static MESSAGES: OnceLock<Vec<String>> = OnceLock::new();
    MESSAGES.get_or_init(|| {
        let program = parse_program(FIXED_PROGRAM).expect("fixed program parses");
        let mut out = Vec::new();
        for rule in &program.rules {
            if let RuleKind::Integrity { body } = &rule.kind {
                for e in body {
                    if let BodyElem::Lit(Literal::Pos(a)) = e {
                        if a.predicate.as_str() == "error" {
                            if let [Term::Value(Value::Str(s))] = a.args.as_slice() {
                                out.push(s.as_str().to_string());
                            }
                        }
                    }
                }
            }
        }
        out
    })
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("unknown package '{0}'")]
    UnknownPackage(String),
    #[error("unsatisfiable input: {0}")]
    UnsatisfiableInput(String),
    #[error(transparent)]
    Repo(#[from] RepoError),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

/// One Table II criterion as a minimize element. `bucket` names the
/// package whose build status selects the built or installed band.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Criterion {
    pub rank: u8,
    pub name: &'static str,
    pub weight: &'static str,
    pub tuple: &'static str,
    pub bucket: &'static str,
    pub body: &'static str,
}

const TABLE: [Criterion; 15] = [
    Criterion {
        rank: 1,
        name: "deprecated versions used",
        weight: "1",
        tuple: "P",
        bucket: "P",
        body: "deprecated(P)",
    },
    Criterion {
        rank: 2,
        name: "version oldness (roots)",
        weight: "W",
        tuple: "P",
        bucket: "P",
        body: "version_weight(P, W), root(P)",
    },
    Criterion {
        rank: 3,
        name: "non-default variant values (roots)",
        weight: "1",
        tuple: "P, V, X",
        bucket: "P",
        body: "variant_not_default(P, V, X), root(P)",
    },
    Criterion {
        rank: 4,
        name: "non-preferred providers (roots)",
        weight: "W",
        tuple: "V, Q",
        bucket: "Q",
        body: "provider(V, Q), provider_weight(V, Q, W), root_virtual(V)",
    },
    Criterion {
        rank: 5,
        name: "unused default variant values (roots)",
        weight: "1",
        tuple: "P, V, X",
        bucket: "P",
        body: "variant_default_not_used(P, V, X), root(P)",
    },
    Criterion {
        rank: 6,
        name: "non-default variant values (non-roots)",
        weight: "1",
        tuple: "P, V, X",
        bucket: "P",
        body: "variant_not_default(P, V, X), not root(P)",
    },
    Criterion {
        rank: 7,
        name: "non-preferred providers (non-roots)",
        weight: "W",
        tuple: "V, Q",
        bucket: "Q",
        body: "provider(V, Q), provider_weight(V, Q, W), not root_virtual(V)",
    },
    Criterion {
        rank: 8,
        name: "compiler mismatches",
        weight: "1",
        tuple: "P, D",
        bucket: "D",
        body: "compiler_mismatch(P, D)",
    },
    Criterion {
        rank: 9,
        name: "OS mismatches",
        weight: "1",
        tuple: "P, D",
        bucket: "D",
        body: "os_mismatch(P, D)",
    },
    Criterion {
        rank: 10,
        name: "non-preferred OS's",
        weight: "W",
        tuple: "P",
        bucket: "P",
        body: "attr(\"node_os\", P, O), os_weight(O, W)",
    },
    Criterion {
        rank: 11,
        name: "version oldness (non-roots)",
        weight: "W",
        tuple: "P",
        bucket: "P",
        body: "version_weight(P, W), not root(P)",
    },
    Criterion {
        rank: 12,
        name: "unused default variant values (non-roots)",
        weight: "1",
        tuple: "P, V, X",
        bucket: "P",
        body: "variant_default_not_used(P, V, X), not root(P)",
    },
    Criterion {
        rank: 13,
        name: "non-preferred compilers",
        weight: "W",
        tuple: "P",
        bucket: "P",
        body: "attr(\"node_compiler_version\", P, C, V), compiler_weight(C, V, W)",
    },
    Criterion {
        rank: 14,
        name: "target mismatches",
        weight: "1",
        tuple: "P, D",
        bucket: "D",
        body: "target_mismatch(P, D)",
    },
    Criterion {
        rank: 15,
        name: "non-preferred targets",
        weight: "W",
        tuple: "P",
        bucket: "P",
        body: "attr(\"node_target\", P, T), target_weight(T, W)",
    },
];

/// Placement of criteria and the build count on minimize levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectiveLevelPlan {
    pub criteria: Vec<Criterion>,
    /// Level of the build count when reuse is enabled.
    pub build_level: i64,
    /// Added to a criterion's level for packages that are built.
    pub built_offset: i64,
}

impl Default for ObjectiveLevelPlan {
    fn default() -> Self {
        Self::table2()
    }
}

impl ObjectiveLevelPlan {
    /// All fifteen criteria; rank r sits at level 16 - r, built packages
    /// 200 higher, the build count at 100.
    pub fn table2() -> Self {
        ObjectiveLevelPlan {
            criteria: TABLE.to_vec(),
            build_level: 100,
            built_offset: 200,
        }
    }

    /// Minimizes the number of builds before anything else. Kept to
    /// demonstrate how that ordering sacrifices default configurations.
    pub fn build_count_first() -> Self {
        ObjectiveLevelPlan {
            criteria: TABLE.to_vec(),
            build_level: 1000,
            built_offset: 0,
        }
    }

    /// Only the criteria with the given ranks.
    pub fn with_ranks(ranks: &[u8]) -> Self {
        let mut p = Self::table2();
        p.criteria.retain(|c| ranks.contains(&c.rank));
        p
    }

    pub fn base_level(rank: u8) -> i64 {
        16 - rank as i64
    }

    /// Every level used, highest first.
    pub fn levels(&self, reuse: bool) -> Vec<i64> {
        let mut out = BTreeSet::new();
        for c in &self.criteria {
            let l = Self::base_level(c.rank);
            out.insert(l);
            if reuse {
                out.insert(l + self.built_offset);
            }
        }
        if reuse {
            out.insert(self.build_level);
        }
        out.into_iter().rev().collect()
    }

    pub fn criterion_at(&self, level: i64) -> Option<(&Criterion, bool)> {
        self.criteria.iter().find_map(|c| {
            let l = Self::base_level(c.rank);
            if l == level {
                Some((c, false))
            } else if self.built_offset != 0 && l + self.built_offset == level {
                Some((c, true))
            } else {
                None
            }
        })
    }
}

/// Minimize statements for `plan`.
pub fn build_objectives(plan: &ObjectiveLevelPlan, reuse: bool) -> String {
    let mut out = String::new();
    for c in &plan.criteria {
        let level = ObjectiveLevelPlan::base_level(c.rank);
        let _ = writeln!(out, "% {}: {}", c.rank, c.name);
        if reuse {
            let _ = writeln!(
                out,
                "#minimize {{ {}@{level}+Pr, {} : {}, build_priority({}, Pr) }}.",
                c.weight, c.tuple, c.body, c.bucket
            );
        } else {
            let _ = writeln!(out, "#minimize {{ {}@{level}, {} : {} }}.", c.weight, c.tuple, c.body);
        }
    }
    if reuse {
        let _ = writeln!(out, "% number of packages to build");
        let _ = writeln!(out, "#minimize {{ 1@{}, P : build(P) }}.", plan.build_level);
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct EncodeOptions {
    pub reuse: bool,
    pub plan: ObjectiveLevelPlan,
    /// Turns input facts into assumptions too. Produces huge cores; for
    /// comparison with error-term assumptions only.
    pub naive_assumptions: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub package: String,
    pub directive: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct EncodedProblem {
    pub facts: String,
    pub logic_program: &'static str,
    pub objectives: String,
    pub assumptions: Vec<GroundAtom>,
    pub plan: ObjectiveLevelPlan,
    pub reuse: bool,
    /// Every emitted condition, by id.
    pub provenance: BTreeMap<i64, Provenance>,
    pub roots: Vec<AbstractSpec>,
    pub possible: BTreeSet<String>,
    /// Installed entries that were dropped as inconsistent with the repo.
    pub rejected_installed: Vec<String>,
}

impl EncodedProblem {
    pub fn program_text(&self) -> String {
        format!("{}\n{}\n{}", self.facts, self.logic_program, self.objectives)
    }

    /// Human-readable meaning of an error atom.
    pub fn message_for(&self, atom: &GroundAtom) -> String {
        match atom.args.first() {
            Some(Value::Str(s)) if atom.predicate.as_str() == "error" => s.as_str().to_string(),
            Some(Value::Int(id)) if atom.predicate.as_str() == "error" => match self.provenance.get(id) {
                Some(p) if p.message.is_empty() => format!("{}: {}", p.package, p.directive),
                Some(p) => format!("{}: {} ({})", p.package, p.message, p.directive),
                None => atom.to_string(),
            },
            _ => format!("input fact {atom}"),
        }
    }
}

/// Predicates whose facts become assumptions in naive mode. Predicates used
/// as conditions must stay plain facts.
const NAIVE_PREDICATES: [&str; 18] = [
    "root",
    "node",
    "version_satisfies",
    "variant_set",
    "node_compiler_set",
    "node_compiler_version_satisfies",
    "node_os_set",
    "node_target_satisfies",
    "required_dependency",
    "deprecated_version",
    "variant_default_value",
    "dependency_condition",
    "provider_condition",
    "conflict",
    "compiler_supports_target",
    "compiler_version_satisfies",
    "target_satisfies",
    "platform",
];

fn s(x: &str) -> Value {
    Value::str(x)
}

struct Emitter<'r> {
    repo: &'r Repo,
    sections: Vec<(String, Vec<GroundAtom>)>,
    next_id: i64,
    provenance: BTreeMap<i64, Provenance>,
    /// Package to version-constraint strings that need lookup facts.
    version_constraints: BTreeMap<String, BTreeSet<String>>,
    compiler_constraints: BTreeMap<String, BTreeSet<String>>,
    target_constraints: BTreeSet<String>,
    conflict_ids: Vec<i64>,
}

impl<'r> Emitter<'r> {
    fn section(&mut self, title: impl Into<String>) {
        self.sections.push((title.into(), Vec::new()));
    }

    fn fact(&mut self, pred: &str, args: Vec<Value>) {
        self.sections.last_mut().unwrap().1.push(GroundAtom::new(pred, args));
    }

    fn new_condition(&mut self, package: &str, directive: String, message: &str) -> i64 {
        self.next_id += 1;
        let id = self.next_id;
        self.provenance.insert(
            id,
            Provenance {
                package: package.to_string(),
                directive,
                message: message.to_string(),
            },
        );
        self.fact("condition", vec![Value::Int(id)]);
        id
    }

    fn note_version(&mut self, pkg: &str, c: &str) {
        self.version_constraints
            .entry(pkg.to_string())
            .or_default()
            .insert(c.to_string());
    }

    fn note_compiler(&mut self, comp: &str, c: &str) {
        self.compiler_constraints
            .entry(comp.to_string())
            .or_default()
            .insert(c.to_string());
    }

    /// Requirement facts: `pkg` is a node matching `c`.
    fn requirements(&mut self, id: i64, pkg: &str, c: &NodeConstraint) {
        let req = |args: Vec<Value>| {
            let mut a = vec![Value::Int(id)];
            a.extend(args);
            a
        };
        self.fact("condition_requirement", req(vec![s("node"), s(pkg)]));
        if !c.versions.is_any() {
            let v = c.versions.to_string();
            self.note_version(pkg, &v);
            self.fact(
                "condition_requirement",
                req(vec![s("version_satisfies"), s(pkg), s(&v)]),
            );
        }
        if let Some(comp) = &c.compiler {
            self.fact(
                "condition_requirement",
                req(vec![s("node_compiler"), s(pkg), s(&comp.name)]),
            );
            if !comp.versions.is_any() {
                let r = comp.versions.to_string();
                self.note_compiler(&comp.name, &r);
                self.fact(
                    "condition_requirement",
                    req(vec![s("node_compiler_version_satisfies"), s(pkg), s(&comp.name), s(&r)]),
                );
            }
        }
        for (k, v) in &c.variants {
            self.fact(
                "condition_requirement",
                req(vec![s("variant_value"), s(pkg), s(k), s(&v.to_string())]),
            );
        }
        if let Some(t) = &c.target {
            self.target_constraints.insert(t.clone());
            self.fact(
                "condition_requirement",
                req(vec![s("node_target_satisfies"), s(pkg), s(t)]),
            );
        }
        if let Some(o) = &c.os {
            self.fact("condition_requirement", req(vec![s("node_os"), s(pkg), s(o)]));
        }
    }

    fn when_requirements(&mut self, id: i64, pkg: &str, when: &AbstractSpec) {
        self.requirements(id, pkg, &when.root);
        for d in &when.dependencies {
            if let Some(n) = &d.name {
                self.requirements(id, n, d);
            }
        }
    }

    /// `(name, args)` pairs constraining `pkg` to match `c`, in the
    /// "set" form used by imposed constraints and user input.
    fn settings(&mut self, pkg: &str, c: &NodeConstraint) -> Vec<(&'static str, Vec<Value>)> {
        let mut out = Vec::new();
        if !c.versions.is_any() {
            let v = c.versions.to_string();
            self.note_version(pkg, &v);
            out.push(("version_satisfies", vec![s(pkg), s(&v)]));
        }
        for (k, v) in &c.variants {
            out.push(("variant_set", vec![s(pkg), s(k), s(&v.to_string())]));
        }
        if let Some(comp) = &c.compiler {
            out.push(("node_compiler_set", vec![s(pkg), s(&comp.name)]));
            if !comp.versions.is_any() {
                let r = comp.versions.to_string();
                self.note_compiler(&comp.name, &r);
                out.push(("node_compiler_version_satisfies", vec![s(pkg), s(&comp.name), s(&r)]));
            }
        }
        if let Some(t) = &c.target {
            self.target_constraints.insert(t.clone());
            out.push(("node_target_satisfies", vec![s(pkg), s(t)]));
        }
        if let Some(o) = &c.os {
            out.push(("node_os_set", vec![s(pkg), s(o)]));
        }
        out
    }

    fn impose(&mut self, id: i64, pkg: &str, c: &NodeConstraint) {
        for (name, args) in self.settings(pkg, c) {
            let mut a = vec![Value::Int(id), s(name)];
            a.extend(args);
            self.fact("imposed_constraint", a);
        }
    }

    fn package(&mut self, name: &str) {
        let r = &self.repo.recipes[name];
        self.section(format!("package {name}"));
        for (i, v) in r.versions.iter().enumerate() {
            self.fact(
                "version_declared",
                vec![s(name), s(v.version.as_str()), Value::Int(i as i64)],
            );
        }
        for v in r.versions.iter().filter(|v| v.deprecated) {
            self.fact("deprecated_version", vec![s(name), s(v.version.as_str())]);
        }
        for v in &r.variants {
            self.fact("variant", vec![s(name), s(&v.name)]);
            self.fact(
                "variant_default_value",
                vec![s(name), s(&v.name), s(&v.default.to_string())],
            );
            for x in &v.allowed {
                self.fact("variant_possible_value", vec![s(name), s(&v.name), s(&x.to_string())]);
            }
        }
        for d in &r.dependencies {
            let target = d.name().to_string();
            let id = self.new_condition(name, format!("depends on '{}' when '{}'", d.target, d.when), "");
            self.when_requirements(id, name, &d.when);
            self.impose(id, &target, &d.target);
            self.fact("dependency_condition", vec![Value::Int(id), s(name), s(&target)]);
        }
        for c in &r.conflicts {
            let directive = if c.when.is_empty() {
                format!("conflicts with '{}'", c.matcher)
            } else {
                format!("conflicts with '{}' when '{}'", c.matcher, c.when)
            };
            let id = self.new_condition(name, directive, &c.message);
            self.requirements(id, name, &c.matcher.root);
            for d in &c.matcher.dependencies {
                if let Some(n) = &d.name {
                    self.requirements(id, n, d);
                }
            }
            self.when_requirements(id, name, &c.when);
            self.fact("conflict", vec![Value::Int(id), s(name)]);
            self.conflict_ids.push(id);
        }
        for p in &r.provides {
            let id = self.new_condition(name, format!("provides '{}' when '{}'", p.virtual_name, p.when), "");
            self.when_requirements(id, name, &p.when);
            self.fact("provider_condition", vec![Value::Int(id), s(name), s(&p.virtual_name)]);
        }
    }
}

/// Installed entries usable under `repo`, closed under dependencies.
fn usable_installed<'a>(
    repo: &Repo,
    db: &'a InstalledDatabase,
    possible: &BTreeSet<String>,
) -> (Vec<&'a InstalledSpec>, Vec<String>) {
    let cfg = &repo.config;
    let locally_ok = |e: &InstalledSpec| -> bool {
        let Some(r) = repo.recipe(&e.name) else { return false };
        possible.contains(&e.name)
            && r.version_index(&e.version).is_some()
            && r.variants.len() == e.variants.len()
            && r.variants
                .iter()
                .all(|v| e.variants.get(&v.name).is_some_and(|x| v.allowed.contains(x)))
            && cfg
                .compilers
                .iter()
                .any(|c| c.name == e.compiler.name && c.version == e.compiler.version && c.targets.contains(&e.target))
            && cfg.os.iter().any(|o| o.name == e.os)
            && cfg.target(&e.target).is_some()
            && e.platform == cfg.platform
    };
    let dep_ok = |e: &InstalledSpec, d: &InstalledSpec| -> bool {
        repo.recipes[&e.name]
            .dependencies
            .iter()
            .any(|dep| dep.name() == d.name || repo.virtuals.get(dep.name()).is_some_and(|ps| ps.contains(&d.name)))
    };
    let mut ok: BTreeSet<&str> = db
        .entries
        .values()
        .filter(|e| locally_ok(e))
        .map(|e| e.hash.as_str())
        .collect();
    loop {
        let before = ok.len();
        let keep: BTreeSet<&str> = ok
            .iter()
            .copied()
            .filter(|h| {
                let e = &db.entries[*h];
                e.dependencies
                    .iter()
                    .all(|dh| ok.contains(dh.as_str()) && dep_ok(e, &db.entries[dh]))
            })
            .collect();
        ok = keep;
        if ok.len() == before {
            break;
        }
    }
    let used = db.entries.values().filter(|e| ok.contains(e.hash.as_str())).collect();
    let rejected = db
        .entries
        .keys()
        .filter(|h| !ok.contains(h.as_str()))
        .cloned()
        .collect();
    (used, rejected)
}

/// Builds facts and objectives for concretizing `roots` together.
pub fn encode_problem(
    repo: &Repo,
    roots: &[AbstractSpec],
    installed: Option<&InstalledDatabase>,
    options: &EncodeOptions,
) -> Result<EncodedProblem, EncodeError> {
    let mut names = Vec::new();
    for spec in roots {
        let Some(name) = spec.name() else {
            return Err(EncodeError::UnknownPackage(format!("anonymous spec '{spec}'")));
        };
        for n in std::iter::once(&spec.root).chain(&spec.dependencies) {
            let nn = n.name.as_deref().unwrap_or_default();
            let Some(r) = repo.recipe(nn) else {
                return Err(EncodeError::UnknownPackage(nn.to_string()));
            };
            if !r.declares(&n.versions) {
                return Err(EncodeError::UnsatisfiableInput(format!(
                    "no declared version of {nn} satisfies @{}",
                    n.versions
                )));
            }
        }
        names.push(name);
    }
    let possible = possible_dependencies(repo, &names)?;

    let mut em = Emitter {
        repo,
        sections: Vec::new(),
        next_id: 0,
        provenance: BTreeMap::new(),
        version_constraints: BTreeMap::new(),
        compiler_constraints: BTreeMap::new(),
        target_constraints: BTreeSet::new(),
        conflict_ids: Vec::new(),
    };

    em.section("root specs");
    for spec in roots {
        let name = spec.name().unwrap();
        em.fact("root", vec![s(name)]);
        em.fact("node", vec![s(name)]);
        for (pred, args) in em.settings(name, &spec.root) {
            em.fact(pred, args);
        }
        for d in &spec.dependencies {
            let dn = d.name.as_deref().unwrap();
            em.fact("required_dependency", vec![s(name), s(dn)]);
            for (pred, args) in em.settings(dn, d) {
                em.fact(pred, args);
            }
        }
    }

    for p in &possible {
        em.package(p);
    }

    em.section("virtuals");
    let mut virtuals = BTreeSet::new();
    for p in &possible {
        for d in &repo.recipes[p].dependencies {
            if repo.is_virtual(d.name()) {
                virtuals.insert(d.name().to_string());
            }
        }
    }
    for v in &virtuals {
        em.fact("virtual", vec![s(v)]);
        for (w, q) in repo.providers_by_preference(v).iter().enumerate() {
            if possible.contains(q) {
                em.fact("possible_provider", vec![s(v), s(q)]);
                em.fact("provider_weight", vec![s(v), s(q), Value::Int(w as i64)]);
            }
        }
    }

    let cfg = &repo.config;
    em.section("platform");
    em.fact("platform", vec![s(&cfg.platform)]);
    for c in &cfg.compilers {
        let (n, v) = (c.name.as_str(), c.version.as_str());
        em.fact("compiler", vec![s(n), s(v)]);
        em.fact(
            "compiler_weight",
            vec![s(n), s(v), Value::Int(cfg.compiler_weight(n, &c.version))],
        );
        for t in &c.targets {
            em.fact("compiler_supports_target", vec![s(n), s(v), s(t)]);
        }
    }
    for o in &cfg.os {
        em.fact("os", vec![s(&o.name)]);
        em.fact("os_weight", vec![s(&o.name), Value::Int(o.weight)]);
    }
    for t in &cfg.targets {
        em.fact("target", vec![s(&t.name)]);
        em.fact("target_weight", vec![s(&t.name), Value::Int(t.weight)]);
    }

    let mut rejected_installed = Vec::new();
    if let (true, Some(db)) = (options.reuse, installed) {
        em.section("installed packages");
        let (used, rejected) = usable_installed(repo, db, &possible);
        rejected_installed = rejected;
        for e in used {
            let (p, h) = (e.name.as_str(), e.hash.as_str());
            em.fact("installed_hash", vec![s(p), s(h)]);
            let imp = |em: &mut Emitter, args: Vec<Value>| {
                let mut a = vec![s(h)];
                a.extend(args);
                em.fact("imposed_constraint", a);
            };
            imp(&mut em, vec![s("node"), s(p)]);
            imp(&mut em, vec![s("version"), s(p), s(e.version.as_str())]);
            imp(&mut em, vec![s("node_platform"), s(p), s(&e.platform)]);
            imp(&mut em, vec![s("node_os"), s(p), s(&e.os)]);
            imp(&mut em, vec![s("node_target"), s(p), s(&e.target)]);
            imp(
                &mut em,
                vec![
                    s("node_compiler_version"),
                    s(p),
                    s(&e.compiler.name),
                    s(e.compiler.version.as_str()),
                ],
            );
            for (k, v) in &e.variants {
                imp(&mut em, vec![s("variant_value"), s(p), s(k), s(&v.to_string())]);
            }
            for dh in &e.dependencies {
                let d = &db.entries[dh];
                imp(&mut em, vec![s("depends_on"), s(p), s(&d.name)]);
                imp(&mut em, vec![s("hash"), s(&d.name), s(dh)]);
            }
        }
    }

    // Lookup tables for every constraint string mentioned above.
    em.section("constraint lookups");
    let vcs = std::mem::take(&mut em.version_constraints);
    for (pkg, cs) in &vcs {
        let Some(r) = repo.recipe(pkg) else { continue };
        for c in cs {
            let vc = crate::version::VersionConstraint::parse(c).expect("rendered constraints parse");
            for v in r.versions.iter().filter(|v| vc.satisfied_by(&v.version)) {
                em.fact("version_satisfies", vec![s(pkg), s(c), s(v.version.as_str())]);
            }
        }
    }
    let ccs = std::mem::take(&mut em.compiler_constraints);
    for (comp, cs) in &ccs {
        for c in cs {
            let vc = crate::version::VersionConstraint::parse(c).expect("rendered constraints parse");
            for e in cfg
                .compilers
                .iter()
                .filter(|e| e.name == *comp && vc.satisfied_by(&e.version))
            {
                em.fact("compiler_version_satisfies", vec![s(comp), s(c), s(e.version.as_str())]);
            }
        }
    }
    let tcs = std::mem::take(&mut em.target_constraints);
    for c in &tcs {
        for t in cfg.targets.iter().filter(|t| cfg.target_satisfies(&t.name, c)) {
            em.fact("target_satisfies", vec![s(c), s(&t.name)]);
        }
    }

    em.section("error terms");
    let mut assumptions = Vec::new();
    for m in fixed_error_messages() {
        em.fact("error_term", vec![s(m)]);
        assumptions.push(GroundAtom::new("error", vec![s(m)]));
    }
    for id in em.conflict_ids.clone() {
        em.fact("error_term", vec![Value::Int(id)]);
        assumptions.push(GroundAtom::new("error", vec![Value::Int(id)]));
    }

    let mut facts = String::new();
    for (title, atoms) in &em.sections {
        if atoms.is_empty() {
            continue;
        }
        let _ = writeln!(facts, "% {title}");
        for a in atoms {
            if options.naive_assumptions && NAIVE_PREDICATES.contains(&a.predicate.as_str()) {
                let _ = writeln!(facts, "{{ {a} }}.");
                assumptions.push(a.clone());
            } else {
                let _ = writeln!(facts, "{a}.");
            }
        }
    }

    Ok(EncodedProblem {
        facts,
        logic_program: FIXED_PROGRAM,
        objectives: build_objectives(&options.plan, options.reuse),
        assumptions,
        plan: options.plan.clone(),
        reuse: options.reuse,
        provenance: em.provenance,
        roots: roots.to_vec(),
        possible,
        rejected_installed,
    })
}

fn text(v: &Value) -> Result<&'static str, DecodeError> {
    v.as_text()
        .ok_or_else(|| DecodeError::MalformedModel(format!("expected a string, found {v}")))
}

/// Reads the concrete DAG out of a stable model of the encoded program.
pub fn decode_model(
    model: &Model,
    gp: &GroundProgram,
    problem: &EncodedProblem,
    repo: &Repo,
) -> Result<ConcreteDAG, DecodeError> {
    #[derive(Default)]
    struct Partial {
        versions: Vec<String>,
        variants: BTreeMap<String, Vec<String>>,
        compilers: Vec<(String, String)>,
        os: Vec<String>,
        targets: Vec<String>,
        hashes: Vec<String>,
    }
    let mut parts: BTreeMap<String, Partial> = BTreeMap::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let bad = |m: String| DecodeError::MalformedModel(m);

    for a in model.atoms(gp) {
        if a.predicate.as_str() != "attr" || a.args.is_empty() {
            continue;
        }
        let kind = text(&a.args[0])?;
        let args = &a.args[1..];
        let arg = |i: usize| -> Result<String, DecodeError> {
            args.get(i)
                .ok_or_else(|| bad(format!("short atom {a}")))
                .and_then(text)
                .map(str::to_string)
        };
        match kind {
            "node" => {
                parts.entry(arg(0)?).or_default();
            }
            "version" => parts.entry(arg(0)?).or_default().versions.push(arg(1)?),
            "variant_value" => parts
                .entry(arg(0)?)
                .or_default()
                .variants
                .entry(arg(1)?)
                .or_default()
                .push(arg(2)?),
            "node_compiler_version" => parts.entry(arg(0)?).or_default().compilers.push((arg(1)?, arg(2)?)),
            "node_os" => parts.entry(arg(0)?).or_default().os.push(arg(1)?),
            "node_target" => parts.entry(arg(0)?).or_default().targets.push(arg(1)?),
            "hash" => parts.entry(arg(0)?).or_default().hashes.push(arg(1)?),
            "depends_on" => edges.push((arg(0)?, arg(1)?)),
            _ => {}
        }
    }

    // Only packages that are nodes; attributes may be derived for others.
    let node_names: BTreeSet<String> = model
        .atoms(gp)
        .filter(|a| a.predicate.as_str() == "attr" && a.args.len() == 2 && a.args[0].as_text() == Some("node"))
        .filter_map(|a| a.args[1].as_text().map(str::to_string))
        .collect();

    let one = |name: &str, what: &str, v: &[String]| -> Result<String, DecodeError> {
        match v {
            [x] => Ok(x.clone()),
            [] => Err(bad(format!("{name} has no {what}"))),
            _ => Err(bad(format!("{name} has several values for {what}: {v:?}"))),
        }
    };

    let mut input_variants: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for spec in &problem.roots {
        for n in std::iter::once(&spec.root).chain(&spec.dependencies) {
            if let Some(name) = &n.name {
                input_variants
                    .entry(name)
                    .or_default()
                    .extend(n.variants.keys().map(String::as_str));
            }
        }
    }

    let mut nodes = Vec::new();
    for name in &node_names {
        let p = parts.remove(name).unwrap_or_default();
        let recipe = repo
            .recipe(name)
            .ok_or_else(|| bad(format!("node {name} is not a package")))?;
        let version = Version::parse(&one(name, "version", &p.versions)?).map_err(|e| bad(e.to_string()))?;
        let mut variants = BTreeMap::new();
        let mut shown = BTreeSet::new();
        for v in &recipe.variants {
            let vals = p.variants.get(&v.name).cloned().unwrap_or_default();
            let x = VariantValue::from_text(&one(name, &format!("variant {}", v.name), &vals)?);
            let named = input_variants
                .get(name.as_str())
                .is_some_and(|s| s.contains(v.name.as_str()));
            if x != v.default || named {
                shown.insert(v.name.clone());
            }
            variants.insert(v.name.clone(), x);
        }
        let (cn, cv) = match p.compilers.as_slice() {
            [c] => c.clone(),
            _ => return Err(bad(format!("{name} needs exactly one compiler, has {:?}", p.compilers))),
        };
        let hash = match p.hashes.as_slice() {
            [] => None,
            [h] => Some(h.clone()),
            _ => return Err(bad(format!("{name} has several hashes"))),
        };
        nodes.push(ConcreteNode {
            id: nodes.len(),
            name: name.clone(),
            version,
            variants,
            compiler: CompilerId {
                name: cn,
                version: Version::parse(&cv).map_err(|e| bad(e.to_string()))?,
            },
            os: one(name, "os", &p.os)?,
            target: one(name, "target", &p.targets)?,
            build: hash.is_none(),
            hash,
            shown_variants: shown,
        });
    }
    let index: BTreeMap<&str, usize> = nodes.iter().map(|n| (n.name.as_str(), n.id)).collect();
    let mut edge_ids = Vec::new();
    for (a, b) in &edges {
        match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&x), Some(&y)) => edge_ids.push((x, y)),
            _ => return Err(bad(format!("edge {a} -> {b} between non-nodes"))),
        }
    }
    edge_ids.sort();
    edge_ids.dedup();
    let mut roots = Vec::new();
    for spec in &problem.roots {
        let n = spec.name().unwrap_or_default();
        let id = *index.get(n).ok_or_else(|| bad(format!("root {n} is not a node")))?;
        if !roots.contains(&id) {
            roots.push(id);
        }
    }
    Ok(ConcreteDAG {
        nodes,
        edges: edge_ids,
        roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixed_constraint_carries_an_error_term() {
        let program = parse_program(FIXED_PROGRAM).unwrap();
        let mut with_error = 0;
        for rule in &program.rules {
            if let RuleKind::Integrity { body } = &rule.kind {
                let has = body
                    .iter()
                    .any(|e| matches!(e, BodyElem::Lit(Literal::Pos(a)) if a.predicate.as_str() == "error"));
                assert!(has, "constraint without error term: {rule:?}");
                with_error += 1;
            }
        }
        // One of them is the conflict constraint, keyed by condition id.
        assert_eq!(fixed_error_messages().len(), with_error - 1);
        let unique: BTreeSet<&String> = fixed_error_messages().iter().collect();
        assert_eq!(unique.len(), fixed_error_messages().len());
    }

    #[test]
    fn program_has_paper_rules() {
        assert!(
            FIXED_PROGRAM.contains(r#"1 { attr("version", P, V) : version_declared(P, V, _) } 1 :- attr("node", P)."#)
        );
        assert!(FIXED_PROGRAM.contains(":- path(A, B), path(B, A)"));
        assert!(FIXED_PROGRAM.contains(r#"1 { attr("node_target", P, T) : target(T) } 1 :- attr("node", P)."#));
    }

    #[test]
    fn opt_vector_levels() {
        let plan = ObjectiveLevelPlan::with_ranks(&[13, 14, 15]);
        assert_eq!(plan.levels(true), vec![203, 202, 201, 100, 3, 2, 1]);
        assert_eq!(plan.levels(false), vec![3, 2, 1]);
        assert!(!build_objectives(&plan, false).contains("build(P)"));
        assert!(build_objectives(&plan, true).contains("#minimize { 1@100, P : build(P) }."));
        assert_eq!(
            ObjectiveLevelPlan::table2().criteria[0].name,
            "deprecated versions used"
        );
    }

    #[test]
    fn full_plan_separates_buckets() {
        let plan = ObjectiveLevelPlan::table2();
        let levels = plan.levels(true);
        assert_eq!(levels.len(), 31);
        assert!(levels.iter().filter(|&&l| l > 100).all(|&l| l >= 201));
        assert!(levels.iter().filter(|&&l| l < 100).all(|&l| l <= 15));
    }
}
