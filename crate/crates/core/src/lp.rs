//! Dense two-phase simplex for linear programs over nonnegative variables.
//!
//! Small and exactly-solved LPs sit under everything here: linear
//! subproblems inside the optimizer, stationarity certificates, feasibility
//! probes, and the query intervals themselves. Problem sizes are tiny (the
//! variable count is the number of live worlds), so a dense tableau with
//! Bland's rule is the right tool: no cycling, no external dependency, and
//! behavior that is easy to audit.

use crate::error::{CoreError, Result};

/// A phase-2 reduced cost this far below zero still counts as improving.
pub const EPS_COST: f64 = 1e-9;

/// Phase-1 entering threshold. Must sit far below [`EPS_FEAS`]: when the
/// feasible region is a sliver (the query layer builds bands 1e-8 wide),
/// the last pivots that clear the artificial mass have reduced costs on
/// the order of the sliver width, and a coarse threshold would stop phase
/// 1 early and misreport the program as infeasible.
const EPS_COST_PHASE1: f64 = 1e-13;

/// Smallest acceptable pivot magnitude.
pub const EPS_PIVOT: f64 = 1e-11;

/// Phase-1 artificial mass below this counts as feasible.
const EPS_FEAS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOp {
    Le,
    Ge,
    Eq,
}

/// One row `coeffs . x (op) rhs`; variables are implicitly nonnegative.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub op: ConstraintOp,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coeffs, op: ConstraintOp::Le, rhs }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coeffs, op: ConstraintOp::Ge, rhs }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coeffs, op: ConstraintOp::Eq, rhs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>, constraints: Vec<LinearConstraint>) -> Self {
        let n_vars = objective.len();
        LinearProgram { n_vars, sense: Sense::Maximize, objective, constraints }
    }

    pub fn minimize(objective: Vec<f64>, constraints: Vec<LinearConstraint>) -> Self {
        let n_vars = objective.len();
        LinearProgram { n_vars, sense: Sense::Minimize, objective, constraints }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, cost: &mut [f64], r: usize, c: usize) {
        let inv = 1.0 / self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v *= inv;
        }
        self.b[r] *= inv;
        self.a[r][c] = 1.0;
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f != 0.0 {
                for j in 0..self.ncols {
                    self.a[i][j] -= f * self.a[r][j];
                }
                self.a[i][c] = 0.0;
                self.b[i] -= f * self.b[r];
                if self.b[i] < 0.0 && self.b[i] > -1e-12 {
                    self.b[i] = 0.0;
                }
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for j in 0..self.ncols {
                cost[j] -= f * self.a[r][j];
            }
            cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Bland's rule: lowest improving column enters, lowest-index basic
    /// variable leaves on ratio ties. Terminates without anti-cycling hacks.
    fn run_simplex(&mut self, cost: &mut [f64], allowed_cols: usize, eps_cost: f64) -> Result<()> {
        let cap = 2000 + 200 * (self.a.len() + self.ncols);
        for _ in 0..cap {
            let mut entering = None;
            for j in 0..allowed_cols {
                if cost[j] < -eps_cost {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return Ok(()) };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let arc = self.a[r][c];
                if arc > EPS_PIVOT {
                    let ratio = self.b[r] / arc;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((best_r, best)) => {
                            if ratio < best - 1e-12
                                || (ratio < best + 1e-12 && self.basis[r] < self.basis[best_r])
                            {
                                leaving = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return Err(CoreError::LpUnbounded);
            };
            self.pivot(cost, r, c);
        }
        Err(CoreError::Numerical("simplex iteration limit reached".into()))
    }
}

/// Solves `lp`; every variable is constrained to be nonnegative.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.n_vars;
    debug_assert_eq!(lp.objective.len(), n);

    // Normalize rows to nonnegative right-hand sides.
    let mut rows: Vec<(Vec<f64>, ConstraintOp, f64)> = Vec::with_capacity(lp.constraints.len());
    for con in &lp.constraints {
        debug_assert_eq!(con.coeffs.len(), n);
        let (mut coeffs, mut rhs, mut op) = (con.coeffs.clone(), con.rhs, con.op);
        if rhs < 0.0 {
            for v in &mut coeffs {
                *v = -*v;
            }
            rhs = -rhs;
            op = match op {
                ConstraintOp::Le => ConstraintOp::Ge,
                ConstraintOp::Ge => ConstraintOp::Le,
                ConstraintOp::Eq => ConstraintOp::Eq,
            };
        }
        rows.push((coeffs, op, rhs));
    }

    let n_slack = rows.iter().filter(|r| r.1 != ConstraintOp::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != ConstraintOp::Le).count();
    let n_real = n + n_slack;
    let ncols = n_real + n_art;
    let m = rows.len();

    let mut t = Tableau {
        a: vec![vec![0.0; ncols]; m],
        b: vec![0.0; m],
        basis: vec![usize::MAX; m],
        ncols,
    };
    let mut slack_col = n;
    let mut art_col = n_real;
    for (i, (coeffs, op, rhs)) in rows.iter().enumerate() {
        t.a[i][..n].copy_from_slice(coeffs);
        t.b[i] = *rhs;
        match op {
            ConstraintOp::Le => {
                t.a[i][slack_col] = 1.0;
                t.basis[i] = slack_col;
                slack_col += 1;
            }
            ConstraintOp::Ge => {
                t.a[i][slack_col] = -1.0;
                slack_col += 1;
                t.a[i][art_col] = 1.0;
                t.basis[i] = art_col;
                art_col += 1;
            }
            ConstraintOp::Eq => {
                t.a[i][art_col] = 1.0;
                t.basis[i] = art_col;
                art_col += 1;
            }
        }
    }

    if n_art > 0 {
        // Phase 1: minimize the artificial mass.
        let mut cost = vec![0.0; ncols];
        for j in n_real..ncols {
            cost[j] = 1.0;
        }
        for r in 0..m {
            if t.basis[r] >= n_real {
                for j in 0..ncols {
                    cost[j] -= t.a[r][j];
                }
                cost[t.basis[r]] = 0.0;
            }
        }
        t.run_simplex(&mut cost, ncols, EPS_COST_PHASE1)?;
        let residual: f64 = (0..m)
            .filter(|&r| t.basis[r] >= n_real)
            .map(|r| t.b[r])
            .sum();
        if residual > EPS_FEAS {
            return Err(CoreError::LpInfeasible);
        }
        // Pivot leftover artificials out; a row offering no pivot is a
        // linearly dependent constraint and is dropped.
        let mut drop_rows = Vec::new();
        for r in 0..m {
            if t.basis[r] < n_real {
                continue;
            }
            let mut pivoted = false;
            for j in 0..n_real {
                if t.a[r][j].abs() > 1e-9 {
                    t.pivot(&mut cost, r, j);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                drop_rows.push(r);
            }
        }
        for &r in drop_rows.iter().rev() {
            t.a.remove(r);
            t.b.remove(r);
            t.basis.remove(r);
        }
    }

    // Phase 2 on the real objective, converted to minimization. Artificial
    // columns are out of the basis now and barred from re-entering.
    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = match lp.sense {
            Sense::Maximize => -lp.objective[j],
            Sense::Minimize => lp.objective[j],
        };
    }
    for r in 0..t.a.len() {
        let f = cost[t.basis[r]];
        if f != 0.0 {
            for j in 0..ncols {
                cost[j] -= f * t.a[r][j];
            }
            cost[t.basis[r]] = 0.0;
        }
    }
    t.run_simplex(&mut cost, n_real, EPS_COST)?;

    let mut x = vec![0.0; n];
    for r in 0..t.a.len() {
        if t.basis[r] < n {
            x[t.basis[r]] = t.b[r].max(0.0);
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, value })
}
