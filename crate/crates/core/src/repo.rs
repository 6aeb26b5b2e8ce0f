//! Package recipes, platform configuration and the installed-package database.
//!
//! A repository is a directory holding one `<name>.pkg` TOML document per
//! package and a `config.toml`:
//!
//! ```toml
//! # example.pkg
//! name = "example"
//! versions = ["1.1.0", { version = "1.0.0", deprecated = true }]
//!
//! [[variants]]
//! name = "bzip"
//! default = true
//!
//! [[depends]]
//! spec = "bzip2@1.0.7:"
//! when = "+bzip"
//!
//! [[conflicts]]
//! spec = "%intel"
//! message = "Known failure when building with intel"
//!
//! [[provides]]
//! virtual = "mpi"
//! when = "@2:"
//! ```
//!
//! The installed database is a JSON list of concrete node records keyed by
//! an opaque hash.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::{parse_spec, AbstractSpec, NodeConstraint, SpecError, VariantValue};
use crate::version::{Version, VersionConstraint};

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("no package recipes found in {0}")]
    EmptyRepo(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("package '{package}' depends on unknown package '{target}'")]
    UnknownDependency { package: String, target: String },
    #[error("virtual '{0}' has no provider")]
    NoProviderForVirtual(String),
    #[error("unknown package '{0}'")]
    UnknownPackage(String),
    #[error("invalid recipe '{package}': {message}")]
    InvalidRecipe { package: String, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("installed entry references missing hash '{0}'")]
    DanglingHash(String),
}

pub type Result<T, E = RepoError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclaredVersion {
    pub version: Version,
    pub deprecated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    pub name: String,
    pub default: VariantValue,
    /// Every admissible value, default included.
    pub allowed: Vec<VariantValue>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dependency {
    pub target: NodeConstraint,
    pub when: AbstractSpec,
}

impl Dependency {
    pub fn name(&self) -> &str {
        self.target.name.as_deref().unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub matcher: AbstractSpec,
    pub when: AbstractSpec,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provide {
    pub virtual_name: String,
    pub when: AbstractSpec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackageRecipe {
    pub name: String,
    /// Newest first; the index is the preference weight.
    pub versions: Vec<DeclaredVersion>,
    pub variants: Vec<Variant>,
    pub dependencies: Vec<Dependency>,
    pub conflicts: Vec<Conflict>,
    pub provides: Vec<Provide>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawVersion {
    Plain(String),
    Full {
        version: String,
        #[serde(default)]
        deprecated: bool,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawValue {
    Bool(bool),
    Str(String),
}

impl From<RawValue> for VariantValue {
    fn from(v: RawValue) -> Self {
        match v {
            RawValue::Bool(b) => VariantValue::Bool(b),
            RawValue::Str(s) => VariantValue::from_text(&s),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    name: String,
    default: RawValue,
    values: Option<Vec<RawValue>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDepends {
    spec: String,
    #[serde(default)]
    when: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConflict {
    spec: String,
    #[serde(default)]
    when: String,
    #[serde(default)]
    message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProvides {
    #[serde(rename = "virtual")]
    virtual_name: String,
    #[serde(default)]
    when: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecipe {
    name: String,
    versions: Vec<RawVersion>,
    #[serde(default)]
    variants: Vec<RawVariant>,
    #[serde(default)]
    depends: Vec<RawDepends>,
    #[serde(default)]
    conflicts: Vec<RawConflict>,
    #[serde(default)]
    provides: Vec<RawProvides>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first occurrence of `needle`, for errors inside string values.
fn line_containing(text: &str, needle: &str) -> usize {
    text.find(needle).map_or(1, |o| line_of(text, o))
}

fn toml_error(file: &str, text: &str, e: toml::de::Error) -> RepoError {
    RepoError::Parse {
        file: file.to_string(),
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    }
}

impl PackageRecipe {
    /// Parses one recipe document; `file` only labels errors.
    pub fn from_toml(text: &str, file: &str) -> Result<Self> {
        let raw: RawRecipe = toml::from_str(text).map_err(|e| toml_error(file, text, e))?;
        let spec_err = |s: &str, e: SpecError| RepoError::Parse {
            file: file.to_string(),
            line: line_containing(text, s),
            message: e.to_string(),
        };
        let spec_or_empty = |s: &str| -> Result<AbstractSpec> {
            if s.trim().is_empty() {
                Ok(AbstractSpec::default())
            } else {
                parse_spec(s).map_err(|e| spec_err(s, e))
            }
        };
        let invalid = |message: String| RepoError::InvalidRecipe {
            package: raw.name.clone(),
            message,
        };

        let mut versions = Vec::new();
        for v in &raw.versions {
            let (text_v, deprecated) = match v {
                RawVersion::Plain(s) => (s, false),
                RawVersion::Full { version, deprecated } => (version, *deprecated),
            };
            let version = Version::parse(text_v).map_err(|e| RepoError::Parse {
                file: file.to_string(),
                line: line_containing(text, text_v),
                message: e.to_string(),
            })?;
            versions.push(DeclaredVersion { version, deprecated });
        }
        if versions.is_empty() {
            return Err(invalid("no versions declared".into()));
        }
        for w in versions.windows(2) {
            if w[0].version <= w[1].version {
                return Err(invalid(format!(
                    "versions must be strictly descending ({} before {})",
                    w[0].version, w[1].version
                )));
            }
        }

        let mut variants: Vec<Variant> = Vec::new();
        for rv in raw.variants {
            if variants.iter().any(|v| v.name == rv.name) {
                return Err(invalid(format!("variant '{}' declared twice", rv.name)));
            }
            let default = VariantValue::from(rv.default);
            let allowed: Vec<VariantValue> = match rv.values {
                Some(vals) => vals.into_iter().map(VariantValue::from).collect(),
                None => match &default {
                    VariantValue::Bool(_) => vec![VariantValue::Bool(true), VariantValue::Bool(false)],
                    other => vec![other.clone()],
                },
            };
            if !allowed.contains(&default) {
                return Err(invalid(format!(
                    "default of variant '{}' is not an allowed value",
                    rv.name
                )));
            }
            variants.push(Variant {
                name: rv.name,
                default,
                allowed,
            });
        }

        let mut dependencies = Vec::new();
        for d in &raw.depends {
            let target = parse_spec(&d.spec).map_err(|e| spec_err(&d.spec, e))?;
            if target.name().is_none() || !target.dependencies.is_empty() {
                return Err(RepoError::Parse {
                    file: file.to_string(),
                    line: line_containing(text, &d.spec),
                    message: format!("dependency '{}' must name exactly one package", d.spec),
                });
            }
            if target.name() == Some(raw.name.as_str()) {
                return Err(invalid("package depends on itself".into()));
            }
            dependencies.push(Dependency {
                target: target.root,
                when: spec_or_empty(&d.when)?,
            });
        }

        let mut conflicts = Vec::new();
        for c in &raw.conflicts {
            let matcher = parse_spec(&c.spec).map_err(|e| spec_err(&c.spec, e))?;
            conflicts.push(Conflict {
                matcher,
                when: spec_or_empty(&c.when)?,
                message: c.message.clone(),
            });
        }

        let mut provides = Vec::new();
        for p in &raw.provides {
            provides.push(Provide {
                virtual_name: p.virtual_name.clone(),
                when: spec_or_empty(&p.when)?,
            });
        }

        Ok(PackageRecipe {
            name: raw.name,
            versions,
            variants,
            dependencies,
            conflicts,
            provides,
        })
    }

    pub fn variant(&self, name: &str) -> Option<&Variant> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn version_index(&self, v: &Version) -> Option<usize> {
        self.versions.iter().position(|d| d.version == *v)
    }

    pub fn declares(&self, c: &VersionConstraint) -> bool {
        self.versions.iter().any(|d| c.satisfied_by(&d.version))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompilerEntry {
    pub name: String,
    pub version: Version,
    #[serde(default)]
    pub targets: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub name: String,
    #[serde(default)]
    pub weight: i64,
    /// The more generic family member this target refines.
    #[serde(default)]
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsEntry {
    pub name: String,
    #[serde(default)]
    pub weight: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preferences {
    /// `name` or `name@version`, most preferred first.
    #[serde(default)]
    pub compilers: Vec<String>,
    /// Virtual name to provider names, most preferred first.
    #[serde(default)]
    pub providers: BTreeMap<String, Vec<String>>,
}

fn default_platform() -> String {
    "linux".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoConfig {
    #[serde(default = "default_platform")]
    pub platform: String,
    pub compilers: Vec<CompilerEntry>,
    pub targets: Vec<TargetEntry>,
    pub os: Vec<OsEntry>,
    #[serde(default)]
    pub preferences: Preferences,
}

impl RepoConfig {
    pub fn from_toml(text: &str, file: &str) -> Result<Self> {
        let cfg: RepoConfig = toml::from_str(text).map_err(|e| toml_error(file, text, e))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(RepoError::InvalidConfig(m));
        if self.compilers.is_empty() || self.targets.is_empty() || self.os.is_empty() {
            return bad("at least one compiler, target and os are required".into());
        }
        let mut names = BTreeSet::new();
        for t in &self.targets {
            if !names.insert(t.name.as_str()) {
                return bad(format!("target '{}' declared twice", t.name));
            }
        }
        for t in &self.targets {
            if let Some(p) = &t.parent {
                if !names.contains(p.as_str()) {
                    return bad(format!("target '{}' has unknown parent '{p}'", t.name));
                }
            }
        }
        for t in &self.targets {
            let mut seen = BTreeSet::new();
            let mut cur = Some(t.name.as_str());
            while let Some(c) = cur {
                if !seen.insert(c) {
                    return bad(format!("target family of '{}' is cyclic", t.name));
                }
                cur = self.target(c).and_then(|e| e.parent.as_deref());
            }
        }
        let mut os = BTreeSet::new();
        for o in &self.os {
            if !os.insert(o.name.as_str()) {
                return bad(format!("os '{}' declared twice", o.name));
            }
        }
        let mut comps = BTreeSet::new();
        for c in &self.compilers {
            if !comps.insert((c.name.as_str(), c.version.clone())) {
                return bad(format!("compiler {}@{} declared twice", c.name, c.version));
            }
            for t in &c.targets {
                if !names.contains(t.as_str()) {
                    return bad(format!(
                        "compiler {}@{} supports unknown target '{t}'",
                        c.name, c.version
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn target(&self, name: &str) -> Option<&TargetEntry> {
        self.targets.iter().find(|t| t.name == name)
    }

    /// True if `target` equals `ancestor` or refines it.
    pub fn target_descends_from(&self, target: &str, ancestor: &str) -> bool {
        let mut cur = Some(target);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.target(c).and_then(|t| t.parent.as_deref());
        }
        false
    }

    /// `name` matches exactly; `name:` matches the family rooted at `name`.
    pub fn target_satisfies(&self, target: &str, constraint: &str) -> bool {
        match constraint.strip_suffix(':') {
            Some(family) => self.target_descends_from(target, family),
            None => target == constraint,
        }
    }

    /// Preference weight of a compiler: its position in the preference list,
    /// with unlisted compilers after all listed ones, newest first.
    pub fn compiler_weight(&self, name: &str, version: &Version) -> i64 {
        let listed = |c: &CompilerEntry| {
            self.preferences.compilers.iter().position(|p| match p.split_once('@') {
                Some((n, v)) => n == c.name && VersionConstraint::parse(v).is_ok_and(|vc| vc.satisfied_by(&c.version)),
                None => *p == c.name,
            })
        };
        let mut order: Vec<&CompilerEntry> = self.compilers.iter().collect();
        order.sort_by(|a, b| {
            let ka = listed(a).unwrap_or(usize::MAX);
            let kb = listed(b).unwrap_or(usize::MAX);
            ka.cmp(&kb)
                .then_with(|| a.name.cmp(&b.name))
                .then_with(|| b.version.cmp(&a.version))
        });
        order
            .iter()
            .position(|c| c.name == name && c.version == *version)
            .map_or(order.len() as i64, |i| i as i64)
    }
}

/// A validated collection of recipes plus configuration.
#[derive(Clone, Debug)]
pub struct Repo {
    pub recipes: BTreeMap<String, PackageRecipe>,
    /// Virtual name to provider names, sorted.
    pub virtuals: BTreeMap<String, Vec<String>>,
    pub config: RepoConfig,
}

impl Repo {
    /// Cross-checks recipes against each other and the configuration.
    pub fn new(recipes: Vec<PackageRecipe>, config: RepoConfig) -> Result<Self> {
        config.check()?;
        let mut map = BTreeMap::new();
        for r in recipes {
            let name = r.name.clone();
            if map.insert(name.clone(), r).is_some() {
                return Err(RepoError::InvalidRecipe {
                    package: name,
                    message: "declared twice".into(),
                });
            }
        }
        let mut virtuals: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in map.values() {
            for p in &r.provides {
                if map.contains_key(&p.virtual_name) {
                    return Err(RepoError::InvalidRecipe {
                        package: r.name.clone(),
                        message: format!("provides '{}', which is a package name", p.virtual_name),
                    });
                }
                let e = virtuals.entry(p.virtual_name.clone()).or_default();
                if !e.contains(&r.name) {
                    e.push(r.name.clone());
                }
            }
        }
        for r in map.values() {
            for d in &r.dependencies {
                let t = d.name();
                if !map.contains_key(t) && !virtuals.contains_key(t) {
                    return Err(RepoError::UnknownDependency {
                        package: r.name.clone(),
                        target: t.to_string(),
                    });
                }
                if virtuals.contains_key(t) && !d.target.is_bare() {
                    return Err(RepoError::InvalidRecipe {
                        package: r.name.clone(),
                        message: format!("constraints on virtual dependency '{t}' are not supported"),
                    });
                }
            }
        }
        for (v, provs) in &config.preferences.providers {
            if !virtuals.contains_key(v) {
                return Err(RepoError::NoProviderForVirtual(v.clone()));
            }
            for p in provs {
                if !virtuals[v].contains(p) {
                    return Err(RepoError::InvalidConfig(format!("'{p}' is not a provider of '{v}'")));
                }
            }
        }
        Ok(Repo {
            recipes: map,
            virtuals,
            config,
        })
    }

    pub fn recipe(&self, name: &str) -> Option<&PackageRecipe> {
        self.recipes.get(name)
    }

    pub fn is_virtual(&self, name: &str) -> bool {
        self.virtuals.contains_key(name)
    }

    /// Providers of `virtual_name`, most preferred first: the configured
    /// order, then the rest by name.
    pub fn providers_by_preference(&self, virtual_name: &str) -> Vec<String> {
        let all = self.virtuals.get(virtual_name).cloned().unwrap_or_default();
        let pref = self
            .config
            .preferences
            .providers
            .get(virtual_name)
            .cloned()
            .unwrap_or_default();
        let mut out: Vec<String> = pref.into_iter().filter(|p| all.contains(p)).collect();
        let mut rest: Vec<String> = all.into_iter().filter(|p| !out.contains(p)).collect();
        rest.sort();
        out.extend(rest);
        out
    }
}

/// Loads every `*.pkg` recipe and `config.toml` from `dir`.
pub fn load_repo(dir: impl AsRef<Path>) -> Result<Repo> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RepoError::Io { path, source }
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pkg"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(RepoError::EmptyRepo(dir.to_path_buf()));
    }
    let mut recipes = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f).map_err(io(f))?;
        let label = f.file_name().unwrap().to_string_lossy().into_owned();
        recipes.push(PackageRecipe::from_toml(&text, &label)?);
    }
    let cfg_path = dir.join("config.toml");
    let text = fs::read_to_string(&cfg_path).map_err(io(&cfg_path))?;
    let config = RepoConfig::from_toml(&text, "config.toml")?;
    Repo::new(recipes, config)
}

/// Every package that could appear in a DAG rooted at `roots`, ignoring
/// `when` conditions. A virtual root contributes all of its providers.
pub fn possible_dependencies(repo: &Repo, roots: &[&str]) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<String> = Vec::new();
    let expand = |name: &str, stack: &mut Vec<String>| -> Result<()> {
        if repo.recipes.contains_key(name) {
            stack.push(name.to_string());
        } else if let Some(ps) = repo.virtuals.get(name) {
            stack.extend(ps.iter().cloned());
        } else {
            return Err(RepoError::UnknownPackage(name.to_string()));
        }
        Ok(())
    };
    for r in roots {
        expand(r, &mut stack)?;
    }
    while let Some(p) = stack.pop() {
        if !out.insert(p.clone()) {
            continue;
        }
        for d in &repo.recipes[&p].dependencies {
            expand(d.name(), &mut stack)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Warning {
    pub package: String,
    pub message: String,
}

/// Non-fatal problems: unreachable conditions, deprecated-only packages,
/// virtuals that are only conditionally provided.
pub fn validate_repo(repo: &Repo) -> Vec<Warning> {
    let mut out = Vec::new();
    let mut warn = |package: &str, message: String| {
        out.push(Warning {
            package: package.to_string(),
            message,
        })
    };
    for r in repo.recipes.values() {
        if r.versions.iter().all(|v| v.deprecated) {
            warn(&r.name, "every declared version is deprecated".into());
        }
        let mut clauses: Vec<(&str, &AbstractSpec)> = Vec::new();
        for d in &r.dependencies {
            clauses.push(("dependency condition", &d.when));
        }
        for c in &r.conflicts {
            clauses.push(("conflict", &c.matcher));
            clauses.push(("conflict condition", &c.when));
        }
        for p in &r.provides {
            clauses.push(("provider condition", &p.when));
        }
        for (what, spec) in clauses {
            if spec.name().is_some_and(|n| n != r.name) {
                warn(&r.name, format!("{what} '{spec}' names another package"));
            }
            check_node(repo, r, &spec.root, what, &mut warn);
            for d in &spec.dependencies {
                match d.name.as_deref().and_then(|n| repo.recipe(n)) {
                    Some(dr) => check_node(repo, dr, d, what, &mut warn),
                    None => warn(
                        &r.name,
                        format!(
                            "{what} references unknown package '^{}'",
                            d.name.clone().unwrap_or_default()
                        ),
                    ),
                }
            }
        }
        for d in &r.dependencies {
            if let Some(dr) = repo.recipe(d.name()) {
                check_node(repo, dr, &d.target, "dependency", &mut warn);
            }
        }
    }
    for (v, provs) in &repo.virtuals {
        let unconditional = provs.iter().any(|p| {
            repo.recipes[p]
                .provides
                .iter()
                .any(|pr| pr.virtual_name == *v && pr.when.is_empty())
        });
        if !unconditional {
            warn(v, "virtual is only provided conditionally".into());
        }
    }
    out.sort();
    out.dedup();
    out
}

fn check_node(repo: &Repo, r: &PackageRecipe, n: &NodeConstraint, what: &str, warn: &mut impl FnMut(&str, String)) {
    for (name, value) in &n.variants {
        match r.variant(name) {
            None => warn(
                &r.name,
                format!("{what} references unknown variant '{name}' of {}", r.name),
            ),
            Some(v) if !v.allowed.contains(value) => warn(
                &r.name,
                format!("{what} requires unreachable value {name}={value} of {}", r.name),
            ),
            _ => {}
        }
    }
    if !r.declares(&n.versions) {
        warn(
            &r.name,
            format!(
                "{what} version range @{} matches no declared version of {}",
                n.versions, r.name
            ),
        );
    }
    if let Some(c) = &n.compiler {
        if !repo
            .config
            .compilers
            .iter()
            .any(|e| e.name == c.name && c.versions.satisfied_by(&e.version))
        {
            warn(
                &r.name,
                format!("{what} compiler %{} matches no configured compiler", c.name),
            );
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CompilerId {
    pub name: String,
    pub version: Version,
}

/// A concrete node that is already installed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstalledSpec {
    pub hash: String,
    pub name: String,
    pub version: Version,
    #[serde(default)]
    pub variants: BTreeMap<String, VariantValue>,
    pub compiler: CompilerId,
    pub os: String,
    pub target: String,
    #[serde(default = "default_platform")]
    pub platform: String,
    /// Hashes of direct dependencies.
    #[serde(default)]
    pub dependencies: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstalledDatabase {
    pub entries: BTreeMap<String, InstalledSpec>,
}

impl InstalledDatabase {
    pub fn from_entries(list: Vec<InstalledSpec>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for e in list {
            let h = e.hash.clone();
            if entries.insert(h.clone(), e).is_some() {
                return Err(RepoError::Parse {
                    file: "installed database".into(),
                    line: 0,
                    message: format!("hash '{h}' appears twice"),
                });
            }
        }
        let db = InstalledDatabase { entries };
        db.check_closure()?;
        Ok(db)
    }

    pub fn from_json(text: &str, file: &str) -> Result<Self> {
        let list: Vec<InstalledSpec> = serde_json::from_str(text).map_err(|e| RepoError::Parse {
            file: file.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_entries(list)
    }

    pub fn to_json(&self) -> String {
        let list: Vec<&InstalledSpec> = self.entries.values().collect();
        serde_json::to_string_pretty(&list).expect("installed entries serialize")
    }

    fn check_closure(&self) -> Result<()> {
        for e in self.entries.values() {
            for d in &e.dependencies {
                if !self.entries.contains_key(d) {
                    return Err(RepoError::DanglingHash(d.clone()));
                }
            }
        }
        Ok(())
    }

    /// Adds entries, rejecting the write if it breaks the closure property.
    pub fn record(&mut self, new: impl IntoIterator<Item = InstalledSpec>) -> Result<()> {
        let mut next = self.clone();
        for e in new {
            next.entries.insert(e.hash.clone(), e);
        }
        next.check_closure()?;
        *self = next;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, hash: &str) -> Option<&InstalledSpec> {
        self.entries.get(hash)
    }
}

pub fn load_installed(path: impl AsRef<Path>) -> Result<InstalledDatabase> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| RepoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    InstalledDatabase::from_json(&text, &path.display().to_string())
}
