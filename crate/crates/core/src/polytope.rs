//! The feasible region: distributions over live worlds meeting every
//! interval constraint.
//!
//! Working coordinates are the live worlds only; zeroed worlds are dropped
//! and reinstated as explicit zeros when a full-width vector is needed.
//! The region is always a polytope: the simplex `y >= 0, sum y = 1`
//! intersected with indicator band rows `lo <= c . y <= hi`.

use crate::dist::ObservationVector;
use crate::error::{CoreError, Result};
use crate::kb::CompiledModel;
use crate::lp::{solve_lp, LinearConstraint, LinearProgram, LpSolution};
use crate::logic::World;

/// Margins this small count as "no interior" in [`FeasiblePolytope::find_interior_point`].
pub const INTERIOR_EPS: f64 = 1e-9;

/// One band `lo <= coeffs . y <= hi`. Coefficients are 0/1 indicators over
/// live coordinates, which is what makes the vacuous-side tests below sound
/// (`c . y` is always within `[0, 1]` on the simplex).
#[derive(Debug, Clone)]
pub struct BandRow {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl BandRow {
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone)]
pub struct FeasiblePolytope {
    n_live: usize,
    live_worlds: Vec<World>,
    rows: Vec<BandRow>,
}

impl FeasiblePolytope {
    pub fn from_model(model: &CompiledModel) -> FeasiblePolytope {
        let live_worlds = model.live_worlds().to_vec();
        let rows = model
            .intervals()
            .iter()
            .map(|iv| BandRow {
                coeffs: live_worlds
                    .iter()
                    .map(|w| if iv.ov.get(*w) { 1.0 } else { 0.0 })
                    .collect(),
                lo: iv.lo,
                hi: iv.hi,
            })
            .collect();
        FeasiblePolytope { n_live: live_worlds.len(), live_worlds, rows }
    }

    pub fn n_live(&self) -> usize {
        self.n_live
    }

    pub fn live_worlds(&self) -> &[World] {
        &self.live_worlds
    }

    pub fn rows(&self) -> &[BandRow] {
        &self.rows
    }

    /// A copy with additional band rows (used to cut the feasible region
    /// down to the maximizer set).
    pub fn with_extra_rows(&self, extra: impl IntoIterator<Item = BandRow>) -> FeasiblePolytope {
        let mut p = self.clone();
        p.rows.extend(extra);
        p
    }

    /// 0/1 coefficients of `ov` over live coordinates.
    pub fn indicator_row(&self, ov: &ObservationVector) -> Vec<f64> {
        self.live_worlds
            .iter()
            .map(|w| if ov.get(*w) { 1.0 } else { 0.0 })
            .collect()
    }

    /// Embeds live coordinates into a full-width world vector.
    pub fn to_full(&self, y: &[f64], n_worlds: usize) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n_live);
        let mut full = vec![0.0; n_worlds];
        for (i, w) in self.live_worlds.iter().enumerate() {
            full[w.0] = y[i];
        }
        full
    }

    /// Extracts live coordinates from a full-width world vector.
    pub fn from_full(&self, probs: &[f64]) -> Vec<f64> {
        self.live_worlds.iter().map(|w| probs[w.0]).collect()
    }

    /// Constraint rows for an LP over live coordinates: the simplex equality
    /// plus the non-vacuous side of every band.
    pub fn lp_constraints(&self) -> Vec<LinearConstraint> {
        let mut cons = vec![LinearConstraint::eq(vec![1.0; self.n_live], 1.0)];
        for row in &self.rows {
            if row.is_point() {
                cons.push(LinearConstraint::eq(row.coeffs.clone(), row.lo));
            } else {
                if row.lo > 0.0 {
                    cons.push(LinearConstraint::ge(row.coeffs.clone(), row.lo));
                }
                if row.hi < 1.0 {
                    cons.push(LinearConstraint::le(row.coeffs.clone(), row.hi));
                }
            }
        }
        cons
    }

    pub fn maximize_linear(&self, objective: &[f64]) -> Result<LpSolution> {
        self.optimize_linear(objective, true)
    }

    pub fn minimize_linear(&self, objective: &[f64]) -> Result<LpSolution> {
        self.optimize_linear(objective, false)
    }

    fn optimize_linear(&self, objective: &[f64], maximize: bool) -> Result<LpSolution> {
        debug_assert_eq!(objective.len(), self.n_live);
        let lp = if maximize {
            LinearProgram::maximize(objective.to_vec(), self.lp_constraints())
        } else {
            LinearProgram::minimize(objective.to_vec(), self.lp_constraints())
        };
        match solve_lp(&lp) {
            Err(CoreError::LpInfeasible) => Err(CoreError::Infeasible),
            r => r,
        }
    }

    /// A random feasible point: a convex mixture of the max-slack point and
    /// vertices optimal for random linear objectives. Not uniform over the
    /// polytope and makes no claim to be; it exists to probe feasible space
    /// in tests.
    pub fn sample_point<R: rand::Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let (x0, _) = self.find_interior_point()?;
        let mut points = vec![x0];
        for _ in 0..3 {
            let obj: Vec<f64> = (0..self.n_live)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            points.push(self.maximize_linear(&obj)?.x);
        }
        let weights: Vec<f64> = (0..points.len())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut x = vec![0.0; self.n_live];
        for (w, p) in weights.iter().zip(&points) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += w * pi / total;
            }
        }
        let sum: f64 = x.iter().sum();
        for xi in &mut x {
            *xi /= sum;
        }
        Ok(x)
    }

    /// Maximizes the worst slack over all coordinates and non-point band
    /// sides. Returns the argmax point and the achieved slack `s`:
    /// `s < -1e-9` never happens (that is reported as [`CoreError::Infeasible`]),
    /// `|s| <= 1e-9` means feasible but with empty relative interior, and
    /// `s > 1e-9` certifies an interior point where every inequality holds
    /// strictly. Point rows (`lo == hi`) define the affine hull and carry no
    /// slack.
    ///
    /// The LP shifts the slack by one (`t = s + 1`) so the slack variable
    /// stays nonnegative; `t <= 2` bounds it. With `t = 0` every slack row
    /// is implied by `0 <= c . y <= 1`, so the LP is infeasible exactly when
    /// the simplex-plus-point-rows system is.
    pub fn find_interior_point(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.n_live;
        let nv = n + 1;
        let mut cons = Vec::new();
        let mut sum_row = vec![1.0; n];
        sum_row.push(0.0);
        cons.push(LinearConstraint::eq(sum_row, 1.0));
        for i in 0..n {
            let mut c = vec![0.0; nv];
            c[i] = 1.0;
            c[n] = -1.0;
            cons.push(LinearConstraint::ge(c, -1.0));
        }
        for row in &self.rows {
            if row.is_point() {
                let mut c = row.coeffs.clone();
                c.push(0.0);
                cons.push(LinearConstraint::eq(c, row.lo));
            } else {
                if row.lo > 0.0 {
                    let mut c = row.coeffs.clone();
                    c.push(-1.0);
                    cons.push(LinearConstraint::ge(c, row.lo - 1.0));
                }
                if row.hi < 1.0 {
                    let mut c = row.coeffs.clone();
                    c.push(1.0);
                    cons.push(LinearConstraint::le(c, row.hi + 1.0));
                }
            }
        }
        let mut cap = vec![0.0; nv];
        cap[n] = 1.0;
        cons.push(LinearConstraint::le(cap, 2.0));

        let mut obj = vec![0.0; nv];
        obj[n] = 1.0;
        match solve_lp(&LinearProgram::maximize(obj, cons)) {
            Ok(sol) => {
                let s = sol.x[n] - 1.0;
                if s < -INTERIOR_EPS {
                    return Err(CoreError::Infeasible);
                }
                Ok((sol.x[..n].to_vec(), s))
            }
            Err(CoreError::LpInfeasible) => Err(CoreError::Infeasible),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::KnowledgeBase;
    use crate::logic::atom;

    fn model_with_intervals(intervals: &[(f64, f64)]) -> CompiledModel {
        let mut kb = KnowledgeBase::new();
        let a = kb.add_atom("A", None).unwrap();
        kb.add_atom("B", None).unwrap();
        kb.add_experiment(atom(a.id), None, 1, 2).unwrap();
        for &(lo, hi) in intervals {
            kb.add_interval(atom(a.id), lo, hi).unwrap();
        }
        kb.compile().unwrap()
    }

    #[test]
    fn unconstrained_interior_point_is_uniform() {
        let model = model_with_intervals(&[]);
        let p = FeasiblePolytope::from_model(&model);
        let (x, s) = p.find_interior_point().unwrap();
        for &v in &x {
            assert!((v - 0.25).abs() < 1e-9);
        }
        assert!((s - 0.25).abs() < 1e-9);
    }

    #[test]
    fn point_constraint_defines_affine_hull_without_killing_interior() {
        let model = model_with_intervals(&[(0.6, 0.6)]);
        let p = FeasiblePolytope::from_model(&model);
        let (x, s) = p.find_interior_point().unwrap();
        let pa: f64 = p
            .rows()[0]
            .coeffs
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum();
        assert!((pa - 0.6).abs() < 1e-9);
        assert!((s - 0.2).abs() < 1e-9, "slack {}", s);
    }

    #[test]
    fn opposing_bands_leave_no_interior() {
        let model = model_with_intervals(&[(0.3, 1.0), (0.0, 0.3)]);
        let p = FeasiblePolytope::from_model(&model);
        let (x, s) = p.find_interior_point().unwrap();
        assert!(s.abs() <= 1e-9, "slack {}", s);
        let pa: f64 = p.rows()[0].coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
        assert!((pa - 0.3).abs() < 1e-8);
    }

    #[test]
    fn contradictory_bands_are_infeasible() {
        let model = model_with_intervals(&[(0.7, 1.0), (0.0, 0.3)]);
        let p = FeasiblePolytope::from_model(&model);
        assert_eq!(p.find_interior_point().unwrap_err(), CoreError::Infeasible);
        assert_eq!(
            p.maximize_linear(&vec![1.0; p.n_live()]).unwrap_err(),
            CoreError::Infeasible
        );
    }

    #[test]
    fn linear_optimization_respects_bands() {
        let model = model_with_intervals(&[(0.2, 0.7)]);
        let p = FeasiblePolytope::from_model(&model);
        let obj = p.rows()[0].coeffs.clone();
        let max = p.maximize_linear(&obj).unwrap();
        let min = p.minimize_linear(&obj).unwrap();
        assert!((max.value - 0.7).abs() < 1e-9);
        assert!((min.value - 0.2).abs() < 1e-9);
    }

    #[test]
    fn full_width_round_trip() {
        let mut kb = KnowledgeBase::new();
        let a = kb.add_atom("A", None).unwrap();
        let b = kb.add_atom("B", None).unwrap();
        kb.add_experiment(atom(a.id), None, 1, 2).unwrap();
        kb.add_axiom(crate::logic::implies(atom(b.id), atom(a.id))).unwrap();
        let model = kb.compile().unwrap();
        let p = FeasiblePolytope::from_model(&model);
        assert_eq!(p.n_live(), 3);
        let y = vec![0.2, 0.3, 0.5];
        let full = p.to_full(&y, model.n_worlds());
        assert_eq!(full.iter().filter(|&&v| v == 0.0).count(), 1);
        assert_eq!(p.from_full(&full), y);
    }
}
