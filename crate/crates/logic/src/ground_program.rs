//! Propositional (ground) programs.

use std::collections::HashMap;
use std::fmt;

use crate::term::{GroundAtom, Value};

/// Index of an atom in a [`GroundProgram`]'s universe.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `head :- pos, not neg.` An empty body makes the rule a fact.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroundRule {
    pub head: AtomId,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

impl GroundRule {
    pub fn is_fact(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

/// `lower { elements } upper :- pos, not neg.`
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroundChoice {
    pub lower: Option<u32>,
    pub upper: Option<u32>,
    pub elements: Vec<AtomId>,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

/// `:- pos, not neg.`
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroundConstraint {
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

/// One weighted tuple of a minimize statement: contributes `weight` at
/// `level` whenever `atom` is true.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MinimizeEntry {
    pub atom: AtomId,
    pub weight: i64,
    pub level: i64,
    pub tuple: Vec<Value>,
}

#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, AtomId>,
    pub rules: Vec<GroundRule>,
    pub choices: Vec<GroundChoice>,
    pub constraints: Vec<GroundConstraint>,
    pub minimize: Vec<MinimizeEntry>,
}

impl GroundProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `atom` in the universe, returning its id.
    pub fn add_atom(&mut self, atom: GroundAtom) -> AtomId {
        if let Some(id) = self.index.get(&atom) {
            return *id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    pub fn add_fact(&mut self, head: AtomId) {
        self.add_rule(head, vec![], vec![]);
    }

    pub fn add_rule(&mut self, head: AtomId, pos: Vec<AtomId>, neg: Vec<AtomId>) {
        self.rules.push(GroundRule { head, pos, neg });
    }

    pub fn add_choice(
        &mut self,
        lower: Option<u32>,
        upper: Option<u32>,
        elements: Vec<AtomId>,
        pos: Vec<AtomId>,
        neg: Vec<AtomId>,
    ) {
        self.choices.push(GroundChoice {
            lower,
            upper,
            elements,
            pos,
            neg,
        });
    }

    pub fn add_constraint(&mut self, pos: Vec<AtomId>, neg: Vec<AtomId>) {
        self.constraints.push(GroundConstraint { pos, neg });
    }

    pub fn add_minimize(&mut self, atom: AtomId, weight: i64, level: i64, tuple: Vec<Value>) {
        self.minimize.push(MinimizeEntry {
            atom,
            weight,
            level,
            tuple,
        });
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, id: AtomId) -> &GroundAtom {
        &self.atoms[id.index()]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (AtomId, &GroundAtom)> {
        self.atoms.iter().enumerate().map(|(i, a)| (AtomId(i as u32), a))
    }

    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    /// Total count of ground rules of every kind, facts included.
    pub fn num_rules(&self) -> usize {
        self.rules.len() + self.choices.len() + self.constraints.len() + self.minimize.len()
    }

    /// Distinct minimize levels in descending order.
    pub fn levels(&self) -> Vec<i64> {
        let mut lv: Vec<i64> = self.minimize.iter().map(|m| m.level).collect();
        lv.sort_unstable_by(|a, b| b.cmp(a));
        lv.dedup();
        lv
    }

    fn write_body(&self, f: &mut fmt::Formatter<'_>, pos: &[AtomId], neg: &[AtomId]) -> fmt::Result {
        let mut first = true;
        for p in pos {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{}", self.atom(*p))?;
        }
        for n in neg {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "not {}", self.atom(*n))?;
        }
        Ok(())
    }
}

/// Renders the program in the logic language for inspection. Hidden atoms
/// keep their leading underscore, so the dump is not always re-parseable.
impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            write!(f, "{}", self.atom(r.head))?;
            if !r.is_fact() {
                f.write_str(" :- ")?;
                self.write_body(f, &r.pos, &r.neg)?;
            }
            f.write_str(".\n")?;
        }
        for c in &self.choices {
            if let Some(l) = c.lower {
                write!(f, "{l} ")?;
            }
            f.write_str("{ ")?;
            for (i, e) in c.elements.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{}", self.atom(*e))?;
            }
            f.write_str(" }")?;
            if let Some(u) = c.upper {
                write!(f, " {u}")?;
            }
            if !c.pos.is_empty() || !c.neg.is_empty() {
                f.write_str(" :- ")?;
                self.write_body(f, &c.pos, &c.neg)?;
            }
            f.write_str(".\n")?;
        }
        for c in &self.constraints {
            f.write_str(":- ")?;
            self.write_body(f, &c.pos, &c.neg)?;
            f.write_str(".\n")?;
        }
        for m in &self.minimize {
            write!(f, "#minimize {{ {}@{}", m.weight, m.level)?;
            for t in &m.tuple {
                write!(f, ",{t}")?;
            }
            writeln!(f, " : {} }}.", self.atom(m.atom))?;
        }
        Ok(())
    }
}
