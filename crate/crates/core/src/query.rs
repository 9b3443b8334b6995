//! Probability intervals over the whole set of likelihood maximizers.
//!
//! A solved model usually does not pin the distribution down to a point:
//! the maximizers form a face of the feasible polytope, cut out by fixing
//! every likelihood term's probability at its optimal value. Queries are
//! answered as exact intervals over that face, by linear programming for
//! plain events and by the Charnes-Cooper transform for conditionals.
//!
//! Interval endpoints are always attained. The conditional query
//! P(E | C) intersects the event with the condition, so the numerator
//! indicator is dominated by the denominator indicator coordinatewise;
//! over a bounded region that keeps the fractional program bounded, and
//! every basic solution of the transformed program has t > 0 and so maps
//! back to a genuine distribution. Maximizers with P(C) = 0 simply drop
//! out of the transformed feasible set; only when P(C) = 0 across the
//! entire maximizer set is the query refused.

use crate::dist::{Jdv, ObservationVector};
use crate::error::{CoreError, Result};
use crate::kb::{CompiledModel, KnowledgeBase};
use crate::logic::Formula;
use crate::lp::{solve_lp, LinearConstraint, LinearProgram};
use crate::nullspace::null_space_basis;
use crate::optim::{maximize, SolveOptions, SolveResult};
use crate::polytope::{BandRow, FeasiblePolytope};

/// Intervals at most this wide are reported as a single value.
pub const DEGENERATE_WIDTH: f64 = 1e-6;

/// Below this, a probability is treated as zero when testing whether a
/// conditioning event is possible at all.
const ZERO_PROB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityInterval {
    pub lo: f64,
    pub hi: f64,
    /// The interval is a point up to solver tolerance.
    pub degenerate: bool,
}

impl ProbabilityInterval {
    fn from_bounds(lo: f64, hi: f64) -> ProbabilityInterval {
        let hi = hi.clamp(0.0, 1.0);
        let lo = lo.clamp(0.0, 1.0).min(hi);
        ProbabilityInterval { lo, hi, degenerate: hi - lo <= DEGENERATE_WIDTH }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The face of the feasible polytope on which the likelihood is maximal:
/// every term probability is pinned to its value at the solver's point.
///
/// The pin is an exact equality row, not a small two-sided band. A band of
/// width comparable to the solver tolerance makes every downstream LP a
/// sliver problem with condition number near 1/width, which is exactly
/// where a floating-point simplex starts misjudging feasibility. Equality
/// rows keep the LP data at unit scale; the solver's error in the pinned
/// values only translates the face by the same tiny amount.
#[derive(Debug, Clone)]
pub struct MaximizerPolytope {
    polytope: FeasiblePolytope,
}

impl MaximizerPolytope {
    pub fn new(model: &CompiledModel, jstar: &Jdv) -> MaximizerPolytope {
        let feasible = FeasiblePolytope::from_model(model);
        let extra: Vec<BandRow> = model
            .terms()
            .iter()
            .map(|t| {
                let s = t.ov.dot(jstar.as_slice());
                BandRow { coeffs: feasible.indicator_row(&t.ov), lo: s, hi: s }
            })
            .collect();
        MaximizerPolytope { polytope: feasible.with_extra_rows(extra) }
    }

    pub fn polytope(&self) -> &FeasiblePolytope {
        &self.polytope
    }

    /// Exact range of P(event) over the maximizer set.
    pub fn prob_interval(&self, event: &ObservationVector) -> Result<ProbabilityInterval> {
        let row = self.polytope.indicator_row(event);
        let lo = self.polytope.minimize_linear(&row)?.value;
        let hi = self.polytope.maximize_linear(&row)?.value;
        Ok(ProbabilityInterval::from_bounds(lo, hi))
    }

    /// Exact range of P(numer) / P(denom) over the maximizers where the
    /// denominator is positive. `numer` must already be intersected with
    /// `denom`; see the module notes for why that guarantees attained
    /// endpoints.
    pub fn conditional_interval(
        &self,
        numer: &ObservationVector,
        denom: &ObservationVector,
        denom_label: &str,
    ) -> Result<ProbabilityInterval> {
        let v = self.polytope.indicator_row(denom);
        if self.polytope.maximize_linear(&v)?.value <= ZERO_PROB {
            return Err(CoreError::ImpossibleCondition(denom_label.to_string()));
        }
        let u = self.polytope.indicator_row(numer);
        let lo = self.ratio_extremum(&u, &v, false)?;
        let hi = self.ratio_extremum(&u, &v, true)?;
        Ok(ProbabilityInterval::from_bounds(lo, hi))
    }

    /// Charnes-Cooper: optimize u.y / v.y over the region by the LP in
    /// (z, t) = (y, 1) / (v.y). Every region row `lo <= c.y <= hi`
    /// homogenizes to `lo t <= c.z <= hi t`; a side that is vacuous on the
    /// simplex stays vacuous homogenized because sum z = t.
    fn ratio_extremum(&self, u: &[f64], v: &[f64], want_max: bool) -> Result<f64> {
        let n = self.polytope.n_live();
        let mut cons: Vec<LinearConstraint> = Vec::new();
        let mut simplex = vec![1.0; n];
        simplex.push(-1.0);
        cons.push(LinearConstraint::eq(simplex, 0.0));
        for row in self.polytope.rows() {
            let with_t = |bound: f64| {
                let mut c = row.coeffs.clone();
                c.push(-bound);
                c
            };
            if row.is_point() {
                cons.push(LinearConstraint::eq(with_t(row.lo), 0.0));
            } else {
                if row.lo > 0.0 {
                    cons.push(LinearConstraint::ge(with_t(row.lo), 0.0));
                }
                if row.hi < 1.0 {
                    cons.push(LinearConstraint::le(with_t(row.hi), 0.0));
                }
            }
        }
        let mut vrow = v.to_vec();
        vrow.push(0.0);
        cons.push(LinearConstraint::eq(vrow, 1.0));

        let mut obj = u.to_vec();
        obj.push(0.0);
        let lp = if want_max {
            LinearProgram::maximize(obj, cons)
        } else {
            LinearProgram::minimize(obj, cons)
        };
        Ok(solve_lp(&lp)?.value)
    }
}

/// A solved knowledge base: the maximum-likelihood point, the certificate,
/// and the query machinery over the full maximizer set.
#[derive(Debug, Clone)]
pub struct Solution {
    model: CompiledModel,
    result: SolveResult,
    maximizer: MaximizerPolytope,
}

impl Solution {
    pub fn new(model: CompiledModel, result: SolveResult) -> Solution {
        let maximizer = MaximizerPolytope::new(&model, &result.jstar);
        Solution { model, result, maximizer }
    }

    pub fn model(&self) -> &CompiledModel {
        &self.model
    }

    pub fn result(&self) -> &SolveResult {
        &self.result
    }

    /// The maximum-likelihood joint distribution found by the solver. When
    /// `null_space` is nontrivial or intervals bind, this is one point of
    /// many; `query` ranges over all of them.
    pub fn jdv(&self) -> &Jdv {
        &self.result.jstar
    }

    pub fn value(&self) -> f64 {
        self.result.value
    }

    pub fn maximizer(&self) -> &MaximizerPolytope {
        &self.maximizer
    }

    /// Basis of the directions along which no likelihood term changes;
    /// full-width vectors, zero at worlds excluded by axioms.
    pub fn null_space(&self) -> Vec<Vec<f64>> {
        null_space_basis(&self.model)
    }

    /// Exact probability interval for `event`, optionally conditioned.
    /// Conditioning on an event that is impossible everywhere on the
    /// maximizer set is reported as [`CoreError::ImpossibleCondition`].
    pub fn query(
        &self,
        event: &Formula,
        condition: Option<&Formula>,
    ) -> Result<ProbabilityInterval> {
        let n = self.model.n_atoms();
        event.validate(n)?;
        let ev = ObservationVector::from_formula(event, n)?.intersect(self.model.live());
        match condition {
            None => self.maximizer.prob_interval(&ev),
            Some(cond) => {
                cond.validate(n)?;
                let cv =
                    ObservationVector::from_formula(cond, n)?.intersect(self.model.live());
                let label = cond.display(self.model.registry()).to_string();
                self.maximizer.conditional_interval(&ev.intersect(&cv), &cv, &label)
            }
        }
    }
}

impl KnowledgeBase {
    /// Compiles and maximizes in one step, keeping the knowledge base
    /// reusable.
    pub fn solve(&self, opts: &SolveOptions) -> Result<Solution> {
        let model = self.clone().compile()?;
        let result = maximize(&model, opts)?;
        Ok(Solution::new(model, result))
    }
}
