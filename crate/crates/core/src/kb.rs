//! Evidence assembly and compilation into a likelihood model.
//!
//! A knowledge base collects three kinds of statements about one universe of
//! atoms: experimental counts (iid Bernoulli trials of an event, optionally
//! conditional on another formula), hard axioms, and probability-interval
//! constraints. Compilation turns the counts into the exponents of a
//! likelihood polynomial over world probabilities:
//!
//! * observing F true n times out of m contributes (o_F . j)^n ((o_!F) . j)^(m-n);
//! * observing E true n times out of m among trials where X held contributes
//!   (o_{X&E} . j)^n (o_{X&!E} . j)^(m-n) / (o_X . j)^m.
//!
//! Axioms zero out the worlds they exclude, so indicators that agree on the
//! remaining worlds aggregate into a single term by summing exponents. A
//! negative aggregate exponent means some conditional evidence was not
//! backed by unconditional trials of its condition; the likelihood is then
//! not a polynomial and maximization over the closed simplex is ill-posed,
//! so compilation refuses it. Interval constraints never enter the
//! likelihood; they are carried as linear feasibility rows.

use std::collections::HashMap;
use std::sync::Arc;

use crate::dist::{Jdv, ObservationVector};
use crate::error::{CoreError, Result};
use crate::logic::{and, not, Atom, AtomRegistry, Formula, SharedRegistry, World};

/// Counted iid trials: `event` came out true `successes` times in `trials`
/// observations, all made when `condition` held (or unconditionally).
#[derive(Debug, Clone)]
pub struct Experiment {
    pub event: Formula,
    pub condition: Option<Formula>,
    pub successes: u64,
    pub trials: u64,
}

/// Constraint `lo <= P(formula) <= hi`.
#[derive(Debug, Clone)]
pub struct IntervalConstraint {
    pub formula: Formula,
    pub lo: f64,
    pub hi: f64,
}

/// Mutable collection of atoms, experiments, axioms, and interval bounds.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    registry: AtomRegistry,
    experiments: Vec<Experiment>,
    axioms: Vec<Formula>,
    intervals: Vec<IntervalConstraint>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        KnowledgeBase::default()
    }

    pub fn with_max_atoms(max_atoms: usize) -> Self {
        KnowledgeBase {
            registry: AtomRegistry::with_max_atoms(max_atoms),
            ..KnowledgeBase::default()
        }
    }

    pub fn add_atom(&mut self, name: &str, description: Option<&str>) -> Result<Atom> {
        self.registry.register(name, description)
    }

    pub fn registry(&self) -> &AtomRegistry {
        &self.registry
    }

    pub fn add_experiment(
        &mut self,
        event: Formula,
        condition: Option<Formula>,
        successes: u64,
        trials: u64,
    ) -> Result<()> {
        if trials == 0 || successes > trials {
            return Err(CoreError::InvalidCounts { successes, trials });
        }
        event.validate(self.registry.len())?;
        if let Some(c) = &condition {
            c.validate(self.registry.len())?;
        }
        self.experiments.push(Experiment { event, condition, successes, trials });
        Ok(())
    }

    /// Adds a hard axiom. Unsatisfiable single axioms are rejected here;
    /// jointly unsatisfiable sets surface at compile time.
    pub fn add_axiom(&mut self, axiom: Formula) -> Result<()> {
        let ov = ObservationVector::from_formula(&axiom, self.registry.len())?;
        if ov.is_empty() {
            return Err(CoreError::UnsatisfiableAxiom(
                axiom.display(&self.registry).to_string(),
            ));
        }
        self.axioms.push(axiom);
        Ok(())
    }

    pub fn add_interval(&mut self, formula: Formula, lo: f64, hi: f64) -> Result<()> {
        if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi > 1.0 || lo > hi {
            return Err(CoreError::InvalidInterval { lo, hi });
        }
        formula.validate(self.registry.len())?;
        self.intervals.push(IntervalConstraint { formula, lo, hi });
        Ok(())
    }

    pub fn experiments(&self) -> &[Experiment] {
        &self.experiments
    }

    pub fn axioms(&self) -> &[Formula] {
        &self.axioms
    }

    pub fn intervals(&self) -> &[IntervalConstraint] {
        &self.intervals
    }

    /// Compiles the evidence into likelihood terms and feasibility rows,
    /// freezing the atom registry.
    pub fn compile(mut self) -> Result<CompiledModel> {
        let n_atoms = self.registry.len();
        if n_atoms == 0 {
            return Err(CoreError::NoAtoms);
        }
        self.registry.freeze();
        let n_worlds = 1usize << n_atoms;

        let mut live = ObservationVector::zeros(n_worlds).complement();
        for ax in &self.axioms {
            let ov = ObservationVector::from_formula(ax, n_atoms)?;
            live = live.intersect(&ov);
        }
        if live.is_empty() {
            return Err(CoreError::AxiomsUnsatisfiable);
        }

        // A signed likelihood factor (o . j)^count, before aggregation.
        struct Piece {
            ov: ObservationVector,
            count: i64,
            label: String,
            from_condition: bool,
        }
        let mut pieces: Vec<Piece> = Vec::new();
        {
            let reg = &self.registry;
            let mut push = |f: &Formula, count: i64, from_condition: bool| -> Result<()> {
                if count == 0 {
                    return Ok(());
                }
                let ov = ObservationVector::from_formula(f, n_atoms)?;
                let label = f.display(reg).to_string();
                if ov.intersect(&live).is_empty() {
                    // Positive observations of an impossible event (or any
                    // trials under an impossible condition) cannot be
                    // explained by an admissible distribution.
                    return Err(CoreError::Contradiction {
                        observed: label,
                        count: count.unsigned_abs(),
                    });
                }
                pieces.push(Piece { ov, count, label, from_condition });
                Ok(())
            };
            for exp in &self.experiments {
                let n = exp.successes as i64;
                let m = exp.trials as i64;
                match &exp.condition {
                    None => {
                        push(&exp.event, n, false)?;
                        push(&not(exp.event.clone()), m - n, false)?;
                    }
                    Some(cond) => {
                        push(&and(cond.clone(), exp.event.clone()), n, false)?;
                        push(&and(cond.clone(), not(exp.event.clone())), m - n, false)?;
                        push(cond, -m, true)?;
                    }
                }
            }
        }

        // Aggregate by the indicator restricted to live worlds: factors the
        // axioms make pointwise equal merge into one term.
        struct Agg {
            net: i64,
            label: String,
            condition_label: Option<String>,
            order: usize,
        }
        let mut agg: HashMap<ObservationVector, Agg> = HashMap::new();
        for (order, piece) in pieces.into_iter().enumerate() {
            let key = piece.ov.intersect(&live);
            let entry = agg.entry(key).or_insert(Agg {
                net: 0,
                label: piece.label.clone(),
                condition_label: None,
                order,
            });
            entry.net += piece.count;
            if piece.from_condition && entry.condition_label.is_none() {
                entry.condition_label = Some(piece.label);
            }
        }

        let mut negatives: Vec<&Agg> = agg.values().filter(|e| e.net < 0).collect();
        negatives.sort_by_key(|e| e.order);
        if let Some(e) = negatives.first() {
            return Err(CoreError::NotPolynomial {
                condition: e.condition_label.clone().unwrap_or_else(|| e.label.clone()),
                exponent: e.net,
            });
        }

        let mut terms: Vec<Term> = agg
            .into_iter()
            .filter(|(_, e)| e.net > 0)
            .map(|(ov, e)| Term { ov, exponent: e.net as u64, label: e.label })
            .collect();
        terms.sort_by(|a, b| a.ov.cmp(&b.ov).then(a.exponent.cmp(&b.exponent)));

        let mut intervals: Vec<CompiledInterval> = Vec::new();
        for iv in &self.intervals {
            if iv.lo == 0.0 && iv.hi == 1.0 {
                continue;
            }
            let ov = ObservationVector::from_formula(&iv.formula, n_atoms)?.intersect(&live);
            intervals.push(CompiledInterval {
                ov,
                lo: iv.lo,
                hi: iv.hi,
                label: iv.formula.display(&self.registry).to_string(),
            });
        }
        intervals.sort_by(|a, b| {
            a.ov
                .cmp(&b.ov)
                .then(a.lo.total_cmp(&b.lo))
                .then(a.hi.total_cmp(&b.hi))
        });

        let live_worlds: Vec<World> = live.iter_set().collect();
        Ok(CompiledModel {
            registry: Arc::new(self.registry),
            n_atoms,
            live,
            live_worlds,
            terms,
            intervals,
        })
    }
}

/// One aggregated likelihood factor (o . j)^exponent with o restricted to
/// live worlds. The label is the first formula that produced the indicator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub ov: ObservationVector,
    pub exponent: u64,
    pub label: String,
}

/// A feasibility row `lo <= o . j <= hi`, o restricted to live worlds.
#[derive(Debug, Clone)]
pub struct CompiledInterval {
    pub ov: ObservationVector,
    pub lo: f64,
    pub hi: f64,
    pub label: String,
}

/// Frozen output of compilation: the likelihood polynomial and the linear
/// feasibility data, over a fixed universe of worlds.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    registry: SharedRegistry,
    n_atoms: usize,
    live: ObservationVector,
    live_worlds: Vec<World>,
    terms: Vec<Term>,
    intervals: Vec<CompiledInterval>,
}

impl CompiledModel {
    pub fn registry(&self) -> &SharedRegistry {
        &self.registry
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_worlds(&self) -> usize {
        1usize << self.n_atoms
    }

    /// Indicator of the worlds the axioms admit.
    pub fn live(&self) -> &ObservationVector {
        &self.live
    }

    /// Admissible worlds, ascending.
    pub fn live_worlds(&self) -> &[World] {
        &self.live_worlds
    }

    pub fn is_live(&self, w: World) -> bool {
        self.live.get(w)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn intervals(&self) -> &[CompiledInterval] {
        &self.intervals
    }

    /// Log-likelihood at a raw probability vector indexed by world.
    /// Returns negative infinity when any term's probability is zero; that
    /// is a legitimate value on the boundary of the simplex, not an error.
    pub fn log_likelihood_at(&self, probs: &[f64]) -> f64 {
        debug_assert_eq!(probs.len(), self.n_worlds());
        let mut total = 0.0;
        for t in &self.terms {
            let s = t.ov.dot(probs);
            if s <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += t.exponent as f64 * s.ln();
        }
        total
    }

    pub fn log_likelihood(&self, jdv: &Jdv) -> Result<f64> {
        if jdv.n_worlds() != self.n_worlds() {
            return Err(CoreError::DimensionMismatch {
                expected: self.n_worlds(),
                got: jdv.n_worlds(),
            });
        }
        Ok(self.log_likelihood_at(jdv.as_slice()))
    }

    /// Each term's probability under `probs`, in term order.
    pub fn term_dots(&self, probs: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| t.ov.dot(probs)).collect()
    }

    /// Gradient of the log-likelihood, indexed by world; `None` when some
    /// term's probability is zero and the gradient is undefined.
    pub fn gradient_at(&self, probs: &[f64]) -> Option<Vec<f64>> {
        debug_assert_eq!(probs.len(), self.n_worlds());
        let mut g = vec![0.0; self.n_worlds()];
        for t in &self.terms {
            let s = t.ov.dot(probs);
            if s <= 0.0 {
                return None;
            }
            let w = t.exponent as f64 / s;
            for world in t.ov.iter_set() {
                g[world.0] += w;
            }
        }
        Some(g)
    }

    pub fn gradient(&self, jdv: &Jdv) -> Result<Vec<f64>> {
        if jdv.n_worlds() != self.n_worlds() {
            return Err(CoreError::DimensionMismatch {
                expected: self.n_worlds(),
                got: jdv.n_worlds(),
            });
        }
        self.gradient_at(jdv.as_slice()).ok_or_else(|| {
            CoreError::Numerical("gradient undefined: a term has probability zero".into())
        })
    }
}
