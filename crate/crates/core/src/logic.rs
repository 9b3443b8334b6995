//! Atoms, worlds, and propositional formulas.
//!
//! A *world* is one row of the truth table over all registered atoms: bit `i`
//! of the world index is 1 iff atom `i` is true. Everything downstream (joint
//! distributions, observation vectors) is indexed by worlds.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{CoreError, Result};

/// Identifiers reserved by the formula grammar.
pub const RESERVED_WORDS: [&str; 2] = ["true", "false"];

/// Index of an atom in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub usize);

/// A named primitive proposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub id: AtomId,
    pub name: String,
    pub description: Option<String>,
}

/// Default cap on registered atoms; worlds are materialized densely as 2^n.
pub const DEFAULT_MAX_ATOMS: usize = 20;

/// Hard cap; beyond this the dense representation is hopeless.
pub const HARD_MAX_ATOMS: usize = 30;

/// Registry of atoms. Mutable while the universe is being declared, then
/// frozen; a frozen registry is immutable and freely shareable.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomRegistry {
    atoms: Vec<Atom>,
    by_name: HashMap<String, AtomId>,
    max_atoms: usize,
    frozen: bool,
}

impl Default for AtomRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl AtomRegistry {
    pub fn new() -> Self {
        Self::with_max_atoms(DEFAULT_MAX_ATOMS)
    }

    /// Registry with a custom atom cap (clamped to the hard cap of 30).
    pub fn with_max_atoms(max_atoms: usize) -> Self {
        AtomRegistry {
            atoms: Vec::new(),
            by_name: HashMap::new(),
            max_atoms: max_atoms.min(HARD_MAX_ATOMS),
            frozen: false,
        }
    }

    /// Registers a new atom and returns it. Ids are contiguous from 0 in
    /// declaration order.
    pub fn register(&mut self, name: &str, description: Option<&str>) -> Result<Atom> {
        if self.frozen {
            return Err(CoreError::RegistryFrozen);
        }
        if RESERVED_WORDS.contains(&name) {
            return Err(CoreError::ReservedAtomName(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(CoreError::DuplicateAtom(name.to_string()));
        }
        if self.atoms.len() >= self.max_atoms {
            return Err(CoreError::AtomLimit(self.max_atoms));
        }
        let id = AtomId(self.atoms.len());
        let atom = Atom {
            id,
            name: name.to_string(),
            description: description.map(str::to_string),
        };
        self.atoms.push(atom.clone());
        self.by_name.insert(name.to_string(), id);
        Ok(atom)
    }

    /// Freezes the registry; later `register` calls fail.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<AtomId> {
        self.by_name.get(name).copied()
    }

    pub fn atom(&self, id: AtomId) -> Option<&Atom> {
        self.atoms.get(id.0)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn name(&self, id: AtomId) -> &str {
        &self.atoms[id.0].name
    }

    /// Number of worlds, i.e. 2^n for n registered atoms.
    pub fn world_count(&self) -> u64 {
        1u64 << self.atoms.len()
    }
}

/// One truth assignment: bit `i` of the index is 1 iff atom `i` is true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World(pub usize);

impl World {
    #[inline]
    pub fn atom_true(self, id: AtomId) -> bool {
        (self.0 >> id.0) & 1 == 1
    }

    /// World index for an explicit assignment (`assignment[i]` = truth of atom `i`).
    pub fn from_assignment(assignment: &[bool]) -> World {
        let mut idx = 0usize;
        for (i, &t) in assignment.iter().enumerate() {
            if t {
                idx |= 1 << i;
            }
        }
        World(idx)
    }

    /// Conjunction-of-literals label, e.g. `A & !B`, atoms in declaration order.
    pub fn label(self, registry: &AtomRegistry) -> String {
        let mut parts = Vec::with_capacity(registry.len());
        for a in registry.atoms() {
            if self.atom_true(a.id) {
                parts.push(a.name.clone());
            } else {
                parts.push(format!("!{}", a.name));
            }
        }
        parts.join(" & ")
    }
}

/// Iterator over all worlds of an `n_atoms`-atom universe.
pub fn worlds(n_atoms: usize) -> impl Iterator<Item = World> {
    (0..(1usize << n_atoms)).map(World)
}

/// Propositional formula over registered atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(AtomId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

pub fn atom(id: AtomId) -> Formula {
    Formula::Atom(id)
}

pub fn not(f: Formula) -> Formula {
    Formula::Not(Box::new(f))
}

pub fn and(a: Formula, b: Formula) -> Formula {
    Formula::And(Box::new(a), Box::new(b))
}

pub fn or(a: Formula, b: Formula) -> Formula {
    Formula::Or(Box::new(a), Box::new(b))
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    Formula::Implies(Box::new(a), Box::new(b))
}

pub fn iff(a: Formula, b: Formula) -> Formula {
    Formula::Iff(Box::new(a), Box::new(b))
}

impl Formula {
    /// Truth value in `world` under standard propositional semantics.
    ///
    /// Atom ids are read as bare bit positions; call [`Formula::validate`]
    /// first when the formula comes from an untrusted source.
    pub fn eval(&self, world: World) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(id) => world.atom_true(*id),
            Formula::Not(f) => !f.eval(world),
            Formula::And(a, b) => a.eval(world) && b.eval(world),
            Formula::Or(a, b) => a.eval(world) || b.eval(world),
            Formula::Implies(a, b) => !a.eval(world) || b.eval(world),
            Formula::Iff(a, b) => a.eval(world) == b.eval(world),
        }
    }

    /// Largest atom id referenced, if any.
    pub fn max_atom_id(&self) -> Option<AtomId> {
        match self {
            Formula::True | Formula::False => None,
            Formula::Atom(id) => Some(*id),
            Formula::Not(f) => f.max_atom_id(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                match (a.max_atom_id(), b.max_atom_id()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, None) => x,
                    (None, y) => y,
                }
            }
        }
    }

    /// Checks that every referenced atom exists in an `n_atoms` universe.
    pub fn validate(&self, n_atoms: usize) -> Result<()> {
        if let Some(AtomId(id)) = self.max_atom_id() {
            if id >= n_atoms {
                return Err(CoreError::UnregisteredAtom { id, n_atoms });
            }
        }
        Ok(())
    }

    /// Display adapter resolving atom ids to names through `registry`.
    pub fn display<'a>(&'a self, registry: &'a AtomRegistry) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, registry }
    }
}

/// Checked evaluation: errors when `f` references an unregistered atom.
pub fn eval_formula(f: &Formula, world: World, n_atoms: usize) -> Result<bool> {
    f.validate(n_atoms)?;
    Ok(f.eval(world))
}

// Binding strength used by the printer; mirrors the text grammar
// (! > & > | > -> > <->, with -> right-associative).
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => 5,
        Formula::Not(_) => 4,
        Formula::And(..) => 3,
        Formula::Or(..) => 2,
        Formula::Implies(..) => 1,
        Formula::Iff(..) => 0,
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    registry: &'a AtomRegistry,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self.formula, self.registry)
    }
}

fn write_child(
    f: &mut fmt::Formatter<'_>,
    child: &Formula,
    registry: &AtomRegistry,
    needs_parens: bool,
) -> fmt::Result {
    if needs_parens {
        write!(f, "(")?;
        write_formula(f, child, registry)?;
        write!(f, ")")
    } else {
        write_formula(f, child, registry)
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, formula: &Formula, reg: &AtomRegistry) -> fmt::Result {
    let prec = precedence(formula);
    match formula {
        Formula::True => write!(f, "true"),
        Formula::False => write!(f, "false"),
        Formula::Atom(id) => match reg.atom(*id) {
            Some(a) => write!(f, "{}", a.name),
            None => write!(f, "?{}", id.0),
        },
        Formula::Not(x) => {
            write!(f, "!")?;
            write_child(f, x, reg, precedence(x) < prec)
        }
        // And/Or parse left-associatively, -> right-associatively; the
        // equal-precedence child on the regrouping side keeps its parens so
        // that printing round-trips to the identical tree.
        Formula::And(a, b) | Formula::Or(a, b) => {
            let op = if matches!(formula, Formula::And(..)) { "&" } else { "|" };
            write_child(f, a, reg, precedence(a) < prec)?;
            write!(f, " {} ", op)?;
            write_child(f, b, reg, precedence(b) <= prec)
        }
        Formula::Implies(a, b) => {
            write_child(f, a, reg, precedence(a) <= prec)?;
            write!(f, " -> ")?;
            write_child(f, b, reg, precedence(b) < prec)
        }
        Formula::Iff(a, b) => {
            write_child(f, a, reg, precedence(a) < prec)?;
            write!(f, " <-> ")?;
            write_child(f, b, reg, precedence(b) <= prec)
        }
    }
}

/// A frozen registry shared by everything downstream of compilation.
pub type SharedRegistry = Arc<AtomRegistry>;
