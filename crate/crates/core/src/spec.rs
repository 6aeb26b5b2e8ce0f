//! Abstract specs: the `name@version%compiler+variant ^dep` constraint language.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::version::{VersionConstraint, VersionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error at column {pos} in '{text}': {message}")]
    Syntax { text: String, pos: usize, message: String },
    #[error("variant '{variant}' given twice in '{text}'")]
    DuplicateVariant { text: String, variant: String },
    #[error("conflicting constraints '{left}' and '{right}': {detail}")]
    Conflict {
        left: String,
        right: String,
        detail: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariantValue {
    Bool(bool),
    Str(String),
}

impl VariantValue {
    /// `true`/`false` become booleans, anything else a string value.
    pub fn from_text(s: &str) -> Self {
        match s {
            "true" => VariantValue::Bool(true),
            "false" => VariantValue::Bool(false),
            _ => VariantValue::Str(s.to_string()),
        }
    }
}

impl fmt::Display for VariantValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariantValue::Bool(b) => write!(f, "{b}"),
            VariantValue::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompilerConstraint {
    pub name: String,
    pub versions: VersionConstraint,
}

/// Constraints on a single node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NodeConstraint {
    pub name: Option<String>,
    pub versions: VersionConstraint,
    pub compiler: Option<CompilerConstraint>,
    pub variants: BTreeMap<String, VariantValue>,
    /// A target name or a `name:` range over the target family tree.
    pub target: Option<String>,
    pub os: Option<String>,
    /// Parsed and kept, but never enforced.
    pub flags: BTreeMap<String, String>,
}

impl NodeConstraint {
    pub fn named(name: &str) -> Self {
        NodeConstraint {
            name: Some(name.to_string()),
            ..Default::default()
        }
    }

    /// True when nothing beyond (possibly) the name is constrained.
    pub fn is_bare(&self) -> bool {
        self.versions.is_any()
            && self.compiler.is_none()
            && self.variants.is_empty()
            && self.target.is_none()
            && self.os.is_none()
            && self.flags.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AbstractSpec {
    pub root: NodeConstraint,
    pub dependencies: Vec<NodeConstraint>,
}

impl AbstractSpec {
    pub fn name(&self) -> Option<&str> {
        self.root.name.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.root.name.is_none() && self.root.is_bare() && self.dependencies.is_empty()
    }
}

const FLAG_KEYS: [&str; 6] = ["cflags", "cxxflags", "fflags", "cppflags", "ldflags", "ldlibs"];

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn is_version_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | ',')
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
        self.pos > start
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        &self.text[start..self.pos]
    }

    fn error(&self, pos: usize, message: impl Into<String>) -> SpecError {
        SpecError::Syntax {
            text: self.text.to_string(),
            pos,
            message: message.into(),
        }
    }

    fn value(&mut self) -> Result<String, SpecError> {
        if self.peek() == Some('"') {
            let start = self.pos;
            self.bump();
            let v = self.take_while(|c| c != '"').to_string();
            if self.bump() != Some('"') {
                return Err(self.error(start, "unterminated quote"));
            }
            return Ok(v);
        }
        let v = self.take_while(|c| !c.is_whitespace() && !matches!(c, '^' | '%' | '@' | '+' | '~'));
        if v.is_empty() {
            return Err(self.error(self.pos, "expected a value"));
        }
        Ok(v.to_string())
    }

    fn versions(&mut self) -> Result<VersionConstraint, SpecError> {
        let start = self.pos;
        let text = self.take_while(is_version_char);
        if text.is_empty() {
            return Err(self.error(start, "expected a version after '@'"));
        }
        VersionConstraint::parse(text).map_err(|e: VersionError| self.error(start, e.to_string()))
    }
}

fn set_variant(node: &mut NodeConstraint, name: &str, value: VariantValue, text: &str) -> Result<(), SpecError> {
    if node.variants.insert(name.to_string(), value).is_some() {
        return Err(SpecError::DuplicateVariant {
            text: text.to_string(),
            variant: name.to_string(),
        });
    }
    Ok(())
}

/// Parses a spec such as `hdf5@1.10.2+mpi %gcc@10.3.1 ^zlib@1.2.8:`.
pub fn parse_spec(text: &str) -> Result<AbstractSpec, SpecError> {
    let mut lx = Lexer { text, pos: 0 };
    let mut nodes: Vec<NodeConstraint> = vec![NodeConstraint::default()];
    lx.skip_ws();
    if lx.peek().is_none() {
        return Err(lx.error(0, "empty spec"));
    }
    loop {
        lx.skip_ws();
        let start = lx.pos;
        let Some(c) = lx.peek() else { break };
        let single = nodes.len() == 1;
        let node = nodes.last_mut().unwrap();
        match c {
            '^' => {
                lx.bump();
                lx.skip_ws();
                let p = lx.pos;
                let name = lx.take_while(is_name_char);
                if name.is_empty() {
                    return Err(lx.error(p, "expected a package name after '^'"));
                }
                nodes.push(NodeConstraint::named(name));
            }
            '@' => {
                lx.bump();
                let v = lx.versions()?;
                if !node.versions.is_any() {
                    return Err(lx.error(start, "version given twice"));
                }
                node.versions = v;
            }
            '%' => {
                lx.bump();
                let p = lx.pos;
                let name = lx.take_while(is_name_char);
                if name.is_empty() {
                    return Err(lx.error(p, "expected a compiler name after '%'"));
                }
                if node.compiler.is_some() {
                    return Err(lx.error(start, "compiler given twice"));
                }
                let versions = if lx.peek() == Some('@') {
                    lx.bump();
                    lx.versions()?
                } else {
                    VersionConstraint::any()
                };
                node.compiler = Some(CompilerConstraint {
                    name: name.to_string(),
                    versions,
                });
            }
            '+' | '~' => {
                lx.bump();
                let p = lx.pos;
                let name = lx.take_while(is_name_char);
                if name.is_empty() {
                    return Err(lx.error(p, "expected a variant name"));
                }
                set_variant(node, name, VariantValue::Bool(c == '+'), text)?;
            }
            c if is_name_char(c) => {
                let word = lx.take_while(is_name_char);
                if lx.peek() == Some('=') {
                    lx.bump();
                    let value = lx.value()?;
                    match word {
                        "target" | "os" => {
                            let slot = if word == "target" {
                                &mut node.target
                            } else {
                                &mut node.os
                            };
                            if slot.replace(value).is_some() {
                                return Err(lx.error(start, format!("{word} given twice")));
                            }
                        }
                        w if FLAG_KEYS.contains(&w) => {
                            node.flags.insert(w.to_string(), value);
                        }
                        w => set_variant(node, w, VariantValue::from_text(&value), text)?,
                    }
                } else if node.name.is_none() && single && *node == NodeConstraint::default() {
                    node.name = Some(word.to_string());
                } else {
                    return Err(lx.error(start, format!("unexpected name '{word}'")));
                }
            }
            c => return Err(lx.error(start, format!("unexpected character '{c}'"))),
        }
    }
    let mut it = nodes.into_iter();
    Ok(AbstractSpec {
        root: it.next().unwrap(),
        dependencies: it.collect(),
    })
}

fn quote_if_needed(v: &str) -> String {
    if v.is_empty()
        || v.chars()
            .any(|c| c.is_whitespace() || matches!(c, '^' | '%' | '@' | '+' | '~' | '"'))
    {
        format!("\"{v}\"")
    } else {
        v.to_string()
    }
}

impl fmt::Display for NodeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let mut head = self.name.clone().unwrap_or_default();
        if !self.versions.is_any() {
            head.push_str(&format!("@{}", self.versions));
        }
        if let Some(c) = &self.compiler {
            head.push_str(&format!("%{}", c.name));
            if !c.versions.is_any() {
                head.push_str(&format!("@{}", c.versions));
            }
        }
        for (k, v) in &self.variants {
            if let VariantValue::Bool(b) = v {
                head.push_str(&format!("{}{k}", if *b { '+' } else { '~' }));
            }
        }
        if !head.is_empty() {
            parts.push(head);
        }
        for (k, v) in &self.variants {
            if let VariantValue::Str(s) = v {
                parts.push(format!("{k}={}", quote_if_needed(s)));
            }
        }
        for (k, v) in &self.flags {
            parts.push(format!("{k}={}", quote_if_needed(v)));
        }
        if let Some(t) = &self.target {
            parts.push(format!("target={t}"));
        }
        if let Some(o) = &self.os {
            parts.push(format!("os={o}"));
        }
        f.write_str(&parts.join(" "))
    }
}

impl fmt::Display for AbstractSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![self.root.to_string()];
        parts.retain(|s| !s.is_empty());
        parts.extend(self.dependencies.iter().map(|d| format!("^{d}")));
        f.write_str(&parts.join(" "))
    }
}

/// Parses several specs written one after another, as on a command line:
/// `hdf5+mpi ^zlib@1.2.8 cmake%gcc` is two specs. A bare name starts a new
/// spec unless it follows a dangling `^` or `%`.
pub fn parse_specs(text: &str) -> Result<Vec<AbstractSpec>, SpecError> {
    let mut starts = vec![0];
    let mut in_quote = false;
    let mut prev_end: Option<char> = None;
    let mut word_start = true;
    for (i, c) in text.char_indices() {
        if c == '"' {
            in_quote = !in_quote;
        }
        if in_quote {
            word_start = false;
            continue;
        }
        if c.is_whitespace() {
            word_start = true;
            continue;
        }
        if word_start && i > 0 && (c.is_ascii_alphanumeric() || c == '_') && !matches!(prev_end, Some('^' | '%') | None)
        {
            let word: String = text[i..].chars().take_while(|c| !c.is_whitespace()).collect();
            if !word.contains('=') {
                starts.push(i);
            }
        }
        word_start = false;
        prev_end = Some(c);
    }
    starts.push(text.len());
    let out: Vec<AbstractSpec> = starts
        .windows(2)
        .filter(|w| !text[w[0]..w[1]].trim().is_empty())
        .map(|w| parse_spec(text[w[0]..w[1]].trim()))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(SpecError::Syntax {
            text: text.to_string(),
            pos: 0,
            message: "empty spec".into(),
        });
    }
    Ok(out)
}

/// Canonical text; `parse_spec(&render_spec(s)) == s`.
pub fn render_spec(spec: &AbstractSpec) -> String {
    spec.to_string()
}

impl std::str::FromStr for AbstractSpec {
    type Err = SpecError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_spec(s)
    }
}

fn merge_node(a: &NodeConstraint, b: &NodeConstraint) -> Result<NodeConstraint, String> {
    let name = match (&a.name, &b.name) {
        (Some(x), Some(y)) if x != y => return Err(format!("package names differ: {x} vs {y}")),
        (x, y) => x.clone().or_else(|| y.clone()),
    };
    let versions = a
        .versions
        .intersect(&b.versions)
        .ok_or_else(|| format!("versions {} and {} do not overlap", a.versions, b.versions))?;
    let compiler = match (&a.compiler, &b.compiler) {
        (Some(x), Some(y)) => {
            if x.name != y.name {
                return Err(format!("compilers differ: {} vs {}", x.name, y.name));
            }
            let versions = x
                .versions
                .intersect(&y.versions)
                .ok_or_else(|| format!("compiler versions {} and {} do not overlap", x.versions, y.versions))?;
            Some(CompilerConstraint {
                name: x.name.clone(),
                versions,
            })
        }
        (x, y) => x.clone().or_else(|| y.clone()),
    };
    let mut variants = a.variants.clone();
    for (k, v) in &b.variants {
        match variants.get(k) {
            Some(old) if old != v => return Err(format!("variant {k} is both {old} and {v}")),
            _ => {
                variants.insert(k.clone(), v.clone());
            }
        }
    }
    let pick = |x: &Option<String>, y: &Option<String>, what: &str| match (x, y) {
        (Some(p), Some(q)) if p != q => Err(format!("{what} differs: {p} vs {q}")),
        (p, q) => Ok(p.clone().or_else(|| q.clone())),
    };
    let target = pick(&a.target, &b.target, "target")?;
    let os = pick(&a.os, &b.os, "os")?;
    let mut flags = a.flags.clone();
    for (k, v) in &b.flags {
        match flags.get(k) {
            Some(old) if old != v => return Err(format!("{k} is both {old} and {v}")),
            _ => {
                flags.insert(k.clone(), v.clone());
            }
        }
    }
    Ok(NodeConstraint {
        name,
        versions,
        compiler,
        variants,
        target,
        os,
        flags,
    })
}

/// Conjunction of two specs. Dependency constraints are merged by name and
/// sorted, which makes the result canonical.
pub fn merge_constraints(a: &AbstractSpec, b: &AbstractSpec) -> Result<AbstractSpec, SpecError> {
    let conflict = |detail: String| SpecError::Conflict {
        left: a.to_string(),
        right: b.to_string(),
        detail,
    };
    let root = merge_node(&a.root, &b.root).map_err(conflict)?;
    let mut deps: BTreeMap<String, NodeConstraint> = BTreeMap::new();
    for d in a.dependencies.iter().chain(&b.dependencies) {
        let key = d.name.clone().unwrap_or_default();
        let merged = match deps.get(&key) {
            Some(prev) => merge_node(prev, d).map_err(conflict)?,
            None => d.clone(),
        };
        deps.insert(key, merged);
    }
    Ok(AbstractSpec {
        root,
        dependencies: deps.into_values().collect(),
    })
}
