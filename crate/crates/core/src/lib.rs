//! Maximum-likelihood combination of propositional experimental evidence.
//!
//! The model space is the set of joint distributions over the 2^n truth
//! assignments (worlds) of n primitive propositions. Evidence enters three
//! ways: iid experimental counts (possibly conditional), hard propositional
//! axioms, and probability-interval constraints. The library finds the
//! distributions maximizing the likelihood of the counts subject to the
//! constraints, then answers probability queries with the exact interval
//! each query takes over the whole maximizer set.
//!
//! ```
//! use evid_core::{KnowledgeBase, SolveOptions};
//!
//! let mut kb = KnowledgeBase::new();
//! let a = kb.add_atom("RAIN", None).unwrap();
//! let f = evid_core::logic::atom(a.id);
//! kb.add_experiment(f.clone(), None, 3, 10).unwrap();
//! let solution = kb.solve(&SolveOptions::default()).unwrap();
//! let iv = solution.query(&f, None).unwrap();
//! assert!((iv.lo - 0.3).abs() < 1e-6 && iv.degenerate);
//! ```

pub mod dist;
pub mod error;
pub mod kb;
pub mod logic;
pub mod lp;
pub mod nullspace;
pub mod optim;
pub mod parse;
pub mod polytope;
pub mod query;

pub use dist::{jdv_from_presentation, jdv_to_presentation, prob_of, Jdv, ObservationVector};
pub use error::{CoreError, Result};
pub use kb::{CompiledModel, KnowledgeBase, Term};
pub use logic::{Atom, AtomId, AtomRegistry, Formula, World};
pub use optim::{SolveOptions, SolveResult};
pub use parse::{parse_formula, ParseError};
pub use query::{MaximizerPolytope, ProbabilityInterval, Solution};
