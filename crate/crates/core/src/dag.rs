//! Concrete dependency graphs, their validity predicates and renderers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::repo::{CompilerId, InstalledDatabase, Repo};
use crate::spec::{AbstractSpec, NodeConstraint, VariantValue};
use crate::version::Version;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteNode {
    pub id: usize,
    pub name: String,
    pub version: Version,
    pub variants: BTreeMap<String, VariantValue>,
    pub compiler: CompilerId,
    pub os: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hash: Option<String>,
    pub build: bool,
    /// Variants worth printing in the short tree form: those that differ
    /// from the default or were named in the input.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub shown_variants: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteDAG {
    /// Sorted by name; `nodes[i].id == i`.
    pub nodes: Vec<ConcreteNode>,
    /// `(from, to)` pairs, sorted.
    pub edges: Vec<(usize, usize)>,
    pub roots: Vec<usize>,
}

impl ConcreteDAG {
    pub fn node(&self, name: &str) -> Option<&ConcreteNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == id).map(|e| e.1)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.node(from), self.node(to)) {
            (Some(a), Some(b)) => self.edges.contains(&(a.id, b.id)),
            _ => false,
        }
    }

    pub fn reused(&self) -> usize {
        self.nodes.iter().filter(|n| !n.build).count()
    }

    pub fn built(&self) -> usize {
        self.nodes.iter().filter(|n| n.build).count()
    }

    /// Nodes reachable from `id`, including itself.
    pub fn reachable(&self, id: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.children(n));
            }
        }
        seen
    }

    /// A topological order (dependents first), or `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut out = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            out.push(i);
            for c in self.children(i).collect::<Vec<_>>() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        (out.len() == n).then_some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValidityClause {
    Acyclic,
    VirtualsReplaced,
    DependenciesResolved,
    ParametersAssigned,
    InputConstraintsSatisfied,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub clause: ValidityClause,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.clause, self.message)
    }
}

/// Whether a concrete node satisfies the constraints of `c`. Compiler
/// flags are not checked.
pub fn node_satisfies(repo: &Repo, node: &ConcreteNode, c: &NodeConstraint) -> bool {
    c.name.as_ref().is_none_or(|n| *n == node.name)
        && c.versions.satisfied_by(&node.version)
        && c.compiler
            .as_ref()
            .is_none_or(|cc| cc.name == node.compiler.name && cc.versions.satisfied_by(&node.compiler.version))
        && c.variants.iter().all(|(k, v)| node.variants.get(k) == Some(v))
        && c.target
            .as_ref()
            .is_none_or(|t| repo.config.target_satisfies(&node.target, t))
        && c.os.as_ref().is_none_or(|o| *o == node.os)
}

/// A `when` clause holds for `node` in `dag`: the node matches the root
/// constraint and every `^dep` constraint matches some node of the graph.
pub fn condition_holds(repo: &Repo, dag: &ConcreteDAG, node: &ConcreteNode, when: &AbstractSpec) -> bool {
    node_satisfies(repo, node, &when.root)
        && when
            .dependencies
            .iter()
            .all(|d| dag.nodes.iter().any(|n| node_satisfies(repo, n, d)))
}

/// Checks the validity clauses independently of the solver. An empty
/// result means the DAG is valid for `roots`.
pub fn check_validity(
    dag: &ConcreteDAG,
    repo: &Repo,
    roots: &[AbstractSpec],
    installed: Option<&InstalledDatabase>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |clause, message: String| out.push(Violation { clause, message });
    use ValidityClause::*;

    for (i, n) in dag.nodes.iter().enumerate() {
        if n.id != i {
            fail(
                ParametersAssigned,
                format!("node {} has id {} at position {i}", n.name, n.id),
            );
        }
    }
    if dag.nodes.iter().map(|n| &n.name).collect::<BTreeSet<_>>().len() != dag.nodes.len() {
        fail(ParametersAssigned, "a package appears more than once".into());
    }
    if dag
        .edges
        .iter()
        .any(|&(a, b)| a >= dag.nodes.len() || b >= dag.nodes.len())
    {
        fail(DependenciesResolved, "edge refers to a missing node".into());
        return out;
    }
    if dag.topological_order().is_none() {
        fail(Acyclic, "dependency graph has a cycle".into());
    }

    for n in &dag.nodes {
        if repo.is_virtual(&n.name) {
            fail(VirtualsReplaced, format!("virtual '{}' is a node", n.name));
            continue;
        }
        let Some(r) = repo.recipe(&n.name) else {
            fail(VirtualsReplaced, format!("'{}' is not a known package", n.name));
            continue;
        };

        // Every parameter has a legal value.
        if r.version_index(&n.version).is_none() {
            fail(
                ParametersAssigned,
                format!("{}@{} is not a declared version", n.name, n.version),
            );
        }
        let declared: BTreeSet<&str> = r.variants.iter().map(|v| v.name.as_str()).collect();
        let assigned: BTreeSet<&str> = n.variants.keys().map(String::as_str).collect();
        if declared != assigned {
            fail(
                ParametersAssigned,
                format!("{} assigns variants {assigned:?}, recipe declares {declared:?}", n.name),
            );
        }
        for v in &r.variants {
            if let Some(x) = n.variants.get(&v.name) {
                if !v.allowed.contains(x) {
                    fail(
                        ParametersAssigned,
                        format!("{} has illegal value {}={x}", n.name, v.name),
                    );
                }
            }
        }
        let cfg = &repo.config;
        match cfg
            .compilers
            .iter()
            .find(|c| c.name == n.compiler.name && c.version == n.compiler.version)
        {
            None => fail(
                ParametersAssigned,
                format!(
                    "{} uses unknown compiler {}@{}",
                    n.name, n.compiler.name, n.compiler.version
                ),
            ),
            Some(c) if !c.targets.contains(&n.target) => fail(
                ParametersAssigned,
                format!("{}@{} cannot target {} for {}", c.name, c.version, n.target, n.name),
            ),
            _ => {}
        }
        if !cfg.os.iter().any(|o| o.name == n.os) {
            fail(ParametersAssigned, format!("{} uses unknown os {}", n.name, n.os));
        }
        if cfg.target(&n.target).is_none() {
            fail(
                ParametersAssigned,
                format!("{} uses unknown target {}", n.name, n.target),
            );
        }
        if n.hash.is_some() == n.build {
            fail(
                ParametersAssigned,
                format!("{}: a hash must be present exactly when reused", n.name),
            );
        }

        // Dependencies required by held conditions are present and satisfied.
        let children: Vec<&ConcreteNode> = dag.children(n.id).map(|c| &dag.nodes[c]).collect();
        let mut justified: BTreeSet<&str> = BTreeSet::new();
        for d in &r.dependencies {
            if !condition_holds(repo, dag, n, &d.when) {
                continue;
            }
            let t = d.name();
            if repo.is_virtual(t) {
                let provs: Vec<&&ConcreteNode> = children.iter().filter(|c| provides(repo, dag, c, t)).collect();
                match provs.len() {
                    0 => fail(DependenciesResolved, format!("{} needs a provider of {t}", n.name)),
                    _ => justified.extend(provs.iter().map(|c| c.name.as_str())),
                }
            } else {
                match children.iter().find(|c| c.name == t) {
                    None => fail(DependenciesResolved, format!("{} is missing dependency {t}", n.name)),
                    Some(c) => {
                        justified.insert(t);
                        if !node_satisfies(repo, c, &d.target) {
                            fail(
                                InputConstraintsSatisfied,
                                format!("{} requires {}, got {}@{}", n.name, d.target, c.name, c.version),
                            );
                        }
                    }
                }
            }
        }
        if let (Some(h), Some(db)) = (&n.hash, installed) {
            if let Some(rec) = db.get(h) {
                for dh in &rec.dependencies {
                    if let Some(dr) = db.get(dh) {
                        justified.insert(dr.name.as_str());
                    }
                }
            }
        }
        for c in &children {
            if !justified.contains(c.name.as_str()) {
                fail(
                    DependenciesResolved,
                    format!("edge {} -> {} is not required by any dependency", n.name, c.name),
                );
            }
        }

        for c in &r.conflicts {
            if condition_holds(repo, dag, n, &c.matcher) && condition_holds(repo, dag, n, &c.when) {
                fail(
                    InputConstraintsSatisfied,
                    format!("{} triggers conflict '{}': {}", n.name, c.matcher, c.message),
                );
            }
        }

        if let Some(h) = &n.hash {
            match installed.and_then(|db| db.get(h)) {
                None => fail(InputConstraintsSatisfied, format!("{} reuses unknown hash {h}", n.name)),
                Some(rec) => {
                    let same = rec.name == n.name
                        && rec.version == n.version
                        && rec.variants == n.variants
                        && rec.compiler == n.compiler
                        && rec.os == n.os
                        && rec.target == n.target;
                    if !same {
                        fail(
                            InputConstraintsSatisfied,
                            format!("{} differs from installed record {h}", n.name),
                        );
                    }
                    for dh in &rec.dependencies {
                        if !children.iter().any(|c| c.hash.as_deref() == Some(dh)) {
                            fail(
                                InputConstraintsSatisfied,
                                format!("{} must link installed dependency {dh}", n.name),
                            );
                        }
                    }
                }
            }
        }
    }

    // Root specs.
    let mut root_ids = BTreeSet::new();
    for s in roots {
        let Some(name) = s.name() else { continue };
        let Some(root) = dag.node(name) else {
            fail(InputConstraintsSatisfied, format!("root {name} is missing"));
            continue;
        };
        root_ids.insert(root.id);
        if !node_satisfies(repo, root, &s.root) {
            fail(
                InputConstraintsSatisfied,
                format!("root {name} does not satisfy '{}'", s.root),
            );
        }
        let below = dag.reachable(root.id);
        for d in &s.dependencies {
            match dag.nodes.iter().find(|x| Some(&x.name) == d.name.as_ref()) {
                Some(x) if below.contains(&x.id) => {
                    if !node_satisfies(repo, x, d) {
                        fail(InputConstraintsSatisfied, format!("{} does not satisfy '^{d}'", x.name));
                    }
                }
                _ => fail(
                    InputConstraintsSatisfied,
                    format!("'^{d}' is not a dependency of {name}"),
                ),
            }
        }
    }
    let listed: BTreeSet<usize> = dag.roots.iter().copied().collect();
    if listed != root_ids {
        fail(
            InputConstraintsSatisfied,
            "root list does not match the requested roots".into(),
        );
    }
    let mut reach = BTreeSet::new();
    for &r in &root_ids {
        reach.extend(dag.reachable(r));
    }
    for n in &dag.nodes {
        if !reach.contains(&n.id) {
            fail(
                DependenciesResolved,
                format!("{} is not reachable from any root", n.name),
            );
        }
    }
    out.sort();
    out
}

fn provides(repo: &Repo, dag: &ConcreteDAG, node: &ConcreteNode, virtual_name: &str) -> bool {
    repo.recipe(&node.name).is_some_and(|r| {
        r.provides
            .iter()
            .any(|p| p.virtual_name == virtual_name && condition_holds(repo, dag, node, &p.when))
    })
}

fn short_line(n: &ConcreteNode) -> String {
    let mut s = format!("{}@{}", n.name, n.version);
    let mut kv = Vec::new();
    for name in &n.shown_variants {
        match n.variants.get(name) {
            Some(VariantValue::Bool(true)) => s.push_str(&format!("+{name}")),
            Some(VariantValue::Bool(false)) => s.push_str(&format!("~{name}")),
            Some(VariantValue::Str(v)) => kv.push(format!("{name}={v}")),
            None => {}
        }
    }
    for p in kv {
        s.push(' ');
        s.push_str(&p);
    }
    if let Some(h) = &n.hash {
        s.push_str(&format!(" [installed {}]", &h[..h.len().min(7)]));
    }
    s
}

/// Root-first indented tree, children by name. Within one root's tree each
/// node is printed once.
pub fn render_tree(dag: &ConcreteDAG) -> String {
    let mut out = String::new();
    fn walk(dag: &ConcreteDAG, id: usize, depth: usize, seen: &mut BTreeSet<usize>, out: &mut String) {
        if !seen.insert(id) {
            return;
        }
        let n = &dag.nodes[id];
        if depth == 0 {
            out.push_str(&short_line(n));
        } else {
            out.push_str(&format!("{}^{}", "    ".repeat(depth), short_line(n)));
        }
        out.push('\n');
        let mut kids: Vec<usize> = dag.children(id).collect();
        kids.sort_by(|a, b| dag.nodes[*a].name.cmp(&dag.nodes[*b].name));
        for k in kids {
            walk(dag, k, depth + 1, seen, out);
        }
    }
    for &r in &dag.roots {
        walk(dag, r, 0, &mut BTreeSet::new(), &mut out);
    }
    out
}

pub fn render_json(dag: &ConcreteDAG) -> String {
    serde_json::to_string_pretty(dag).expect("DAG serializes")
}

pub fn parse_json(text: &str) -> Result<ConcreteDAG, serde_json::Error> {
    serde_json::from_str(text)
}
