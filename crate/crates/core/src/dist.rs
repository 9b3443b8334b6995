//! Joint distributions over worlds and observation vectors over worlds.
//!
//! A joint distribution assigns a probability to each of the 2^n worlds.
//! An observation vector is the 0/1 indicator of a formula over those same
//! worlds; the probability of the formula is the dot product of the two.

use std::fmt;

use crate::error::{CoreError, Result};
use crate::logic::{worlds, Formula, World};

/// Tolerance for "the components sum to one".
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A validated joint distribution: one probability per world, componentwise
/// nonnegative, summing to 1 within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jdv {
    probs: Vec<f64>,
}

impl Jdv {
    /// Validates and wraps a probability vector. The length must be a power
    /// of two: worlds always come in blocks of 2^n.
    pub fn new(probs: Vec<f64>) -> Result<Jdv> {
        if probs.is_empty() || !probs.len().is_power_of_two() {
            return Err(CoreError::InvalidDistribution(format!(
                "length {} is not a power of two",
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(CoreError::InvalidDistribution(format!(
                    "component {} is {}",
                    i, p
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(CoreError::InvalidDistribution(format!(
                "components sum to {}, not 1",
                sum
            )));
        }
        Ok(Jdv { probs })
    }

    /// The uniform distribution over `n_atoms` atoms.
    pub fn uniform(n_atoms: usize) -> Jdv {
        let n = 1usize << n_atoms;
        Jdv { probs: vec![1.0 / n as f64; n] }
    }

    pub fn n_worlds(&self) -> usize {
        self.probs.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    pub fn prob(&self, w: World) -> f64 {
        self.probs[w.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Indicator of a formula over all worlds, stored as a bitset. Equality and
/// hashing see exactly the set of satisfied worlds, which is what term
/// aggregation keys on; the derived ordering is arbitrary but total, used
/// only to sort compiled terms canonically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservationVector {
    n_worlds: usize,
    bits: Vec<u64>,
}

impl ObservationVector {
    pub fn zeros(n_worlds: usize) -> ObservationVector {
        ObservationVector {
            n_worlds,
            bits: vec![0; n_worlds.div_ceil(64)],
        }
    }

    /// Evaluates `f` at every world of an `n_atoms` universe.
    pub fn from_formula(f: &Formula, n_atoms: usize) -> Result<ObservationVector> {
        f.validate(n_atoms)?;
        let mut ov = ObservationVector::zeros(1usize << n_atoms);
        for w in worlds(n_atoms) {
            if f.eval(w) {
                ov.set(w, true);
            }
        }
        Ok(ov)
    }

    pub fn n_worlds(&self) -> usize {
        self.n_worlds
    }

    #[inline]
    pub fn get(&self, w: World) -> bool {
        (self.bits[w.0 / 64] >> (w.0 % 64)) & 1 == 1
    }

    pub fn set(&mut self, w: World, value: bool) {
        let mask = 1u64 << (w.0 % 64);
        if value {
            self.bits[w.0 / 64] |= mask;
        } else {
            self.bits[w.0 / 64] &= !mask;
        }
    }

    /// Number of worlds satisfying the formula.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Worlds where the indicator is 1, ascending.
    pub fn iter_set(&self) -> impl Iterator<Item = World> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(World(wi * 64 + b))
                }
            })
        })
    }

    /// Pointwise AND; used to restrict an indicator to the live worlds.
    pub fn intersect(&self, other: &ObservationVector) -> ObservationVector {
        assert_eq!(self.n_worlds, other.n_worlds);
        ObservationVector {
            n_worlds: self.n_worlds,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// Pointwise complement within the world block.
    pub fn complement(&self) -> ObservationVector {
        let mut bits: Vec<u64> = self.bits.iter().map(|w| !w).collect();
        let tail = self.n_worlds % 64;
        if tail != 0 {
            *bits.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        ObservationVector { n_worlds: self.n_worlds, bits }
    }

    /// Dot product with a dense vector indexed by world.
    pub fn dot(&self, probs: &[f64]) -> f64 {
        debug_assert_eq!(probs.len(), self.n_worlds);
        let mut sum = 0.0;
        for w in self.iter_set() {
            sum += probs[w.0];
        }
        sum
    }

    /// Dense 0.0/1.0 copy, indexed by world.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_worlds];
        for w in self.iter_set() {
            v[w.0] = 1.0;
        }
        v
    }
}

impl fmt::Display for ObservationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for w in 0..self.n_worlds {
            write!(f, "{}", if self.get(World(w)) { '1' } else { '0' })?;
        }
        write!(f, "]")
    }
}

/// P(f) under `jdv`: the dot product of the indicator of `f` with `jdv`.
pub fn prob_of(f: &Formula, jdv: &Jdv) -> Result<f64> {
    let ov = ObservationVector::from_formula(f, jdv.n_atoms())?;
    Ok(ov.dot(jdv.as_slice()))
}

// Truth tables are conventionally printed with the first atom's "true" rows
// first, e.g. for two atoms: (A&B, A&!B, !A&B, !A&!B). Presentation row p
// therefore has atom i true iff bit (n-1-i) of p is 0, while world indices
// put atom i's truth at bit i.

/// World index of presentation row `p`.
pub fn presentation_to_world(p: usize, n_atoms: usize) -> World {
    let mut idx = 0usize;
    for i in 0..n_atoms {
        if (p >> (n_atoms - 1 - i)) & 1 == 0 {
            idx |= 1 << i;
        }
    }
    World(idx)
}

/// Presentation row of world `w`; inverse of [`presentation_to_world`].
pub fn world_to_presentation(w: World, n_atoms: usize) -> usize {
    let mut p = 0usize;
    for i in 0..n_atoms {
        if !w.atom_true(crate::logic::AtomId(i)) {
            p |= 1 << (n_atoms - 1 - i);
        }
    }
    p
}

/// Builds a distribution from probabilities listed in presentation order.
pub fn jdv_from_presentation(vals: &[f64]) -> Result<Jdv> {
    if vals.is_empty() || !vals.len().is_power_of_two() {
        return Err(CoreError::InvalidDistribution(format!(
            "length {} is not a power of two",
            vals.len()
        )));
    }
    let n_atoms = vals.len().trailing_zeros() as usize;
    let mut probs = vec![0.0; vals.len()];
    for (p, &v) in vals.iter().enumerate() {
        probs[presentation_to_world(p, n_atoms).0] = v;
    }
    Jdv::new(probs)
}

/// Reads a distribution back out in presentation order.
pub fn jdv_to_presentation(jdv: &Jdv) -> Vec<f64> {
    let n_atoms = jdv.n_atoms();
    (0..jdv.n_worlds())
        .map(|p| jdv.prob(presentation_to_world(p, n_atoms)))
        .collect()
}
