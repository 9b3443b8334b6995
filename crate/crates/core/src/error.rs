use thiserror::Error;

/// Errors produced by model construction, compilation, and solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("atom `{0}` is already registered")]
    DuplicateAtom(String),

    #[error("`{0}` is a reserved word and cannot be used as an atom name")]
    ReservedAtomName(String),

    #[error("atom registry is frozen; no further atoms can be registered")]
    RegistryFrozen,

    #[error("atom limit of {0} reached (dense joint distributions grow as 2^n)")]
    AtomLimit(usize),

    #[error("formula references atom #{id}, but only {n_atoms} atoms are registered")]
    UnregisteredAtom { id: usize, n_atoms: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("experiment reports {successes} successes in {trials} trials")]
    InvalidCounts { successes: u64, trials: u64 },

    #[error("invalid probability interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("axiom `{0}` is unsatisfiable")]
    UnsatisfiableAxiom(String),

    #[error("axioms jointly rule out every world")]
    AxiomsUnsatisfiable,

    #[error("no atoms registered; nothing to model")]
    NoAtoms,

    #[error(
        "likelihood is not a polynomial: condition `{condition}` has net exponent {exponent}; \
         unconditional evidence must cover every trial made under a condition"
    )]
    NotPolynomial { condition: String, exponent: i64 },

    #[error(
        "evidence contradicts the axioms: `{observed}` was observed {count} times \
         but no admissible world satisfies it; discard the evidence or the axiom"
    )]
    Contradiction { observed: String, count: u64 },

    #[error("constraints are infeasible: no admissible distribution satisfies every bound")]
    Infeasible,

    #[error("no convergence after {iterations} iterations (stationarity gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("condition `{0}` has probability 0 in every maximum-likelihood distribution")]
    ImpossibleCondition(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
