//! Shared generators and independent oracles for the integration suites.
//! Each suite compiles this module separately and uses its own subset.
#![allow(dead_code)]
//!
//! Everything here is deliberately written against the public API plus the
//! simplest possible numerics (brute-force grids, subset enumeration,
//! textbook Gaussian elimination) so that agreement with the library is
//! evidence, not circularity.

use evid_core::logic::{self, Formula};
use evid_core::polytope::FeasiblePolytope;
use evid_core::{CompiledModel, KnowledgeBase, SolveOptions, Solution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random formula over atoms `0..n_atoms` with at most `depth` connective
/// levels. Constants appear rarely so most formulas carry real structure.
pub fn random_formula<R: Rng>(rng: &mut R, n_atoms: usize, depth: usize) -> Formula {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return match rng.random_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => logic::atom(evid_core::AtomId(rng.random_range(0..n_atoms))),
        };
    }
    let a = random_formula(rng, n_atoms, depth - 1);
    match rng.random_range(0..5) {
        0 => logic::not(a),
        k => {
            let b = random_formula(rng, n_atoms, depth - 1);
            match k {
                1 => logic::and(a, b),
                2 => logic::or(a, b),
                3 => logic::implies(a, b),
                _ => logic::iff(a, b),
            }
        }
    }
}

/// Random knowledge base: a few experiments, sometimes a conditional one,
/// sometimes an axiom or an interval. Compilation or solving may
/// legitimately fail (contradictions, non-polynomial conditionals); see
/// [`solvable_model`] for the retrying wrapper.
pub fn random_kb<R: Rng>(rng: &mut R, n_atoms: usize) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    for i in 0..n_atoms {
        kb.add_atom(&format!("P{}", i), None).unwrap();
    }
    let n_exp = rng.random_range(1..=4);
    for _ in 0..n_exp {
        let event = random_formula(rng, n_atoms, 2);
        let condition = if rng.random_range(0..10) < 3 {
            Some(random_formula(rng, n_atoms, 1))
        } else {
            None
        };
        let trials = rng.random_range(1..=50u64);
        let successes = rng.random_range(0..=trials);
        let _ = kb.add_experiment(event, condition, successes, trials);
    }
    if rng.random_range(0..10) < 3 {
        let _ = kb.add_axiom(random_formula(rng, n_atoms, 2));
    }
    if rng.random_range(0..10) < 3 {
        let f = random_formula(rng, n_atoms, 2);
        let lo: f64 = rng.random_range(0.0..0.5);
        let hi: f64 = lo + rng.random_range(0.0..(1.0 - lo));
        let _ = kb.add_interval(f, lo, hi);
    }
    kb
}

/// First random knowledge base derived from `seed` that compiles and
/// solves. Deterministic in `seed`.
pub fn solvable_model(seed: u64, n_atoms: usize) -> (KnowledgeBase, Solution) {
    for attempt in 0..1000u64 {
        let mut r = rng(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        let kb = random_kb(&mut r, n_atoms);
        if let Ok(solution) = kb.solve(&SolveOptions::default()) {
            return (kb, solution);
        }
    }
    panic!("no solvable model found for seed {}", seed);
}

/// First random knowledge base derived from `seed` that compiles.
pub fn compiled_model(seed: u64, n_atoms: usize) -> CompiledModel {
    for attempt in 0..1000u64 {
        let mut r = rng(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        if let Ok(model) = random_kb(&mut r, n_atoms).compile() {
            return model;
        }
    }
    panic!("no compilable model found for seed {}", seed);
}

/// Renames every atom `i` of `f` to `perm[i]`.
pub fn permute_formula(f: &Formula, perm: &[usize]) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(id) => logic::atom(evid_core::AtomId(perm[id.0])),
        Formula::Not(a) => logic::not(permute_formula(a, perm)),
        Formula::And(a, b) => logic::and(permute_formula(a, perm), permute_formula(b, perm)),
        Formula::Or(a, b) => logic::or(permute_formula(a, perm), permute_formula(b, perm)),
        Formula::Implies(a, b) => {
            logic::implies(permute_formula(a, perm), permute_formula(b, perm))
        }
        Formula::Iff(a, b) => logic::iff(permute_formula(a, perm), permute_formula(b, perm)),
    }
}

/// Best log-likelihood over the grid of distributions whose live-world
/// probabilities are multiples of 1/resolution, skipping grid points that
/// violate an interval constraint. Exhaustive, so only sensible for models
/// with at most four live worlds.
pub fn grid_best_ll(model: &CompiledModel, resolution: usize) -> f64 {
    let live = model.live_worlds();
    let nl = live.len();
    assert!(nl <= 4, "grid oracle is exponential; got {} live worlds", nl);

    let term_support: Vec<Vec<bool>> = model
        .terms()
        .iter()
        .map(|t| live.iter().map(|w| t.ov.get(*w)).collect())
        .collect();
    let exponents: Vec<f64> = model.terms().iter().map(|t| t.exponent as f64).collect();
    let iv_support: Vec<Vec<bool>> = model
        .intervals()
        .iter()
        .map(|iv| live.iter().map(|w| iv.ov.get(*w)).collect())
        .collect();
    // Integer bounds: a grid point with index sum q satisfies lo <= q/R <= hi
    // iff lo_int <= q <= hi_int.
    let iv_lo: Vec<usize> = model
        .intervals()
        .iter()
        .map(|iv| (iv.lo * resolution as f64 - 1e-9).ceil().max(0.0) as usize)
        .collect();
    let iv_hi: Vec<usize> = model
        .intervals()
        .iter()
        .map(|iv| (iv.hi * resolution as f64 + 1e-9).floor() as usize)
        .collect();
    let ln_table: Vec<f64> = (0..=resolution)
        .map(|q| {
            if q == 0 {
                f64::NEG_INFINITY
            } else {
                (q as f64 / resolution as f64).ln()
            }
        })
        .collect();

    struct Sweep<'a> {
        nl: usize,
        term_support: &'a [Vec<bool>],
        exponents: &'a [f64],
        iv_support: &'a [Vec<bool>],
        iv_lo: &'a [usize],
        iv_hi: &'a [usize],
        ln_table: &'a [f64],
        term_idx: Vec<usize>,
        iv_idx: Vec<usize>,
        best: f64,
    }

    impl Sweep<'_> {
        fn add(&mut self, level: usize, count: usize) {
            for (t, sup) in self.term_support.iter().enumerate() {
                if sup[level] {
                    self.term_idx[t] += count;
                }
            }
            for (v, sup) in self.iv_support.iter().enumerate() {
                if sup[level] {
                    self.iv_idx[v] += count;
                }
            }
        }

        fn sub(&mut self, level: usize, count: usize) {
            for (t, sup) in self.term_support.iter().enumerate() {
                if sup[level] {
                    self.term_idx[t] -= count;
                }
            }
            for (v, sup) in self.iv_support.iter().enumerate() {
                if sup[level] {
                    self.iv_idx[v] -= count;
                }
            }
        }

        fn run(&mut self, level: usize, remaining: usize) {
            if level == self.nl - 1 {
                self.add(level, remaining);
                let feasible = self
                    .iv_idx
                    .iter()
                    .zip(self.iv_lo.iter().zip(self.iv_hi))
                    .all(|(&q, (&lo, &hi))| lo <= q && q <= hi);
                if feasible {
                    let ll: f64 = self
                        .exponents
                        .iter()
                        .zip(&self.term_idx)
                        .map(|(k, &q)| k * self.ln_table[q])
                        .sum();
                    if ll > self.best {
                        self.best = ll;
                    }
                }
                self.sub(level, remaining);
                return;
            }
            for count in 0..=remaining {
                self.add(level, count);
                self.run(level + 1, remaining - count);
                self.sub(level, count);
            }
        }
    }

    let mut sweep = Sweep {
        nl,
        term_support: &term_support,
        exponents: &exponents,
        iv_support: &iv_support,
        iv_lo: &iv_lo,
        iv_hi: &iv_hi,
        ln_table: &ln_table,
        term_idx: vec![0; term_support.len()],
        iv_idx: vec![0; iv_support.len()],
        best: f64::NEG_INFINITY,
    };
    sweep.run(0, resolution);
    sweep.best
}

/// Unique solution of a (possibly overdetermined, consistent) linear
/// system by Gaussian elimination; `None` if rank-deficient or
/// inconsistent.
fn solve_exact(rows: &[(Vec<f64>, f64)], d: usize) -> Option<Vec<f64>> {
    let mut aug: Vec<Vec<f64>> = rows
        .iter()
        .map(|(c, b)| {
            let mut r = c.clone();
            r.push(*b);
            r
        })
        .collect();
    let m = aug.len();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..d {
        let piv = (row..m).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))?;
        if aug[piv][col].abs() < 1e-10 {
            continue;
        }
        aug.swap(row, piv);
        let inv = 1.0 / aug[row][col];
        for v in aug[row].iter_mut() {
            *v *= inv;
        }
        for r in 0..m {
            if r != row {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in col..=d {
                        aug[r][c] -= f * aug[row][c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    if pivot_cols.len() < d {
        return None;
    }
    for r in row..m {
        if aug[r][d].abs() > 1e-7 {
            return None;
        }
    }
    let mut x = vec![0.0; d];
    for (r, &col) in pivot_cols.iter().enumerate() {
        x[col] = aug[r][d];
    }
    Some(x)
}

/// All vertices of the polytope, by brute force over candidate active
/// sets. Exponential in the constraint count; fine for the small models
/// the query oracle uses.
pub fn polytope_vertices(p: &FeasiblePolytope) -> Vec<Vec<f64>> {
    let d = p.n_live();
    let mut eqs: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; d], 1.0)];
    let mut ineqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in p.rows() {
        if row.is_point() {
            eqs.push((row.coeffs.clone(), row.lo));
        } else {
            if row.lo > 0.0 {
                ineqs.push((row.coeffs.clone(), row.lo));
            }
            if row.hi < 1.0 {
                ineqs.push((row.coeffs.clone(), row.hi));
            }
        }
    }
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        ineqs.push((e, 0.0));
    }

    let feasible = |x: &[f64]| -> bool {
        if x.iter().any(|&v| v < -1e-7) {
            return false;
        }
        p.rows().iter().all(|row| {
            let v: f64 = row.coeffs.iter().zip(x).map(|(c, xi)| c * xi).sum();
            v >= row.lo - 1e-7 && v <= row.hi + 1e-7
        })
    };

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut push_unique = |x: Vec<f64>| {
        let dup = vertices
            .iter()
            .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-6));
        if !dup {
            vertices.push(x);
        }
    };

    // Choose enough inequality rows to pin a point together with the
    // equalities; every vertex is the unique solution of at least one such
    // choice, degenerate ones of several.
    let n_ineq = ineqs.len();
    for k in 0..=n_ineq.min(d) {
        for_each_combination(n_ineq, k, |choice| {
            let mut rows = eqs.clone();
            for &i in choice {
                rows.push(ineqs[i].clone());
            }
            if let Some(x) = solve_exact(&rows, d) {
                if feasible(&x) {
                    push_unique(x);
                }
            }
        });
    }
    vertices
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        if k == 0 {
            return;
        }
        let mut i = k;
        loop {
            i -= 1;
            if idx[i] + 1 <= n - (k - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}
