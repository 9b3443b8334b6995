//! Concave maximization of the log-likelihood over the feasible polytope.
//!
//! The engine is a feasible-direction method: Frank-Wolfe steps (linear
//! oracle by LP, exact line search by bisection on the directional
//! derivative) supply global progress and, as a byproduct, a stationarity
//! certificate. gap = max over the polytope of gradient . (y - x); by
//! concavity the optimum exceeds f(x) by at most that gap. Frank-Wolfe
//! alone closes the gap sublinearly, far too slowly for the certified
//! tolerances here, so the iteration is interleaved with Newton polishing
//! on the current guess of the active face; a polish step is accepted only
//! if it stays feasible and strictly increases the objective, so a wrong
//! face guess costs nothing. Convergence is declared exclusively on the
//! certificate, never on step sizes.
//!
//! Every iterate keeps all term probabilities strictly positive: the start
//! point mixes each term's own support-maximizing vertex, line search caps
//! the step short of any zero crossing, and polish candidates that lose a
//! term are rejected by the objective comparison (their value is -inf).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::Jdv;
use crate::error::{CoreError, Result};
use crate::kb::CompiledModel;
use crate::nullspace::independent_rows;
use crate::polytope::FeasiblePolytope;

/// A term whose probability cannot exceed this anywhere in the feasible
/// region is treated as impossible.
const SUPPORT_EPS: f64 = 1e-12;

/// Iterations with no objective progress tolerated before giving up.
const STALL_LIMIT: usize = 300;

/// Newton polish is skipped above this many live coordinates; the dense
/// KKT solve stops paying for itself and Frank-Wolfe carries on alone.
const POLISH_DIM_LIMIT: usize = 128;

/// A polished point may lose this much objective relative to where polish
/// started. Near a boundary optimum the objective is flat to double
/// precision, so demanding strict increase would freeze the iterate a few
/// ulps short of the face; the stationarity certificate still gates
/// convergence, so accepting an equal-value point closer to the face is
/// safe.
const POLISH_SLACK: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative stationarity tolerance: converged when
    /// gap <= tolerance * (1 + |value|).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Dithers the start point; `None` starts deterministically.
    pub seed: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: 1e-9, max_iterations: 10_000, seed: None }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub jstar: Jdv,
    /// Maximum log-likelihood.
    pub value: f64,
    pub iterations: usize,
    /// Certified: max over the polytope of gradient . (y - jstar).
    pub stationarity_gap: f64,
}

/// Likelihood terms reindexed to live coordinates.
struct Objective {
    /// (live-coordinate indices of the indicator, exponent) per term.
    terms: Vec<(Vec<usize>, f64)>,
    n: usize,
}

impl Objective {
    fn new(model: &CompiledModel, polytope: &FeasiblePolytope) -> Objective {
        let mut world_to_live = vec![usize::MAX; model.n_worlds()];
        for (i, w) in polytope.live_worlds().iter().enumerate() {
            world_to_live[w.0] = i;
        }
        let terms = model
            .terms()
            .iter()
            .map(|t| {
                let idx: Vec<usize> = t.ov.iter_set().map(|w| world_to_live[w.0]).collect();
                (idx, t.exponent as f64)
            })
            .collect();
        Objective { terms, n: polytope.n_live() }
    }

    fn dots(&self, x: &[f64]) -> Vec<f64> {
        self.terms
            .iter()
            .map(|(idx, _)| idx.iter().map(|&i| x[i]).sum())
            .collect()
    }

    fn value_from_dots(&self, dots: &[f64]) -> f64 {
        let mut f = 0.0;
        for ((_, k), s) in self.terms.iter().zip(dots) {
            if *s <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += k * s.ln();
        }
        f
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_from_dots(&self.dots(x))
    }

    fn gradient_from_dots(&self, dots: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for ((idx, k), s) in self.terms.iter().zip(dots) {
            let w = k / s;
            for &i in idx {
                g[i] += w;
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn renormalize(x: &mut [f64]) {
    let sum: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= sum;
    }
}

/// Maximizes the model's log-likelihood over its feasible polytope.
pub fn maximize(model: &CompiledModel, opts: &SolveOptions) -> Result<SolveResult> {
    let polytope = FeasiblePolytope::from_model(model);
    maximize_over(model, &polytope, opts)
}

/// As [`maximize`], for callers that already built the polytope.
pub fn maximize_over(
    model: &CompiledModel,
    polytope: &FeasiblePolytope,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let obj = Objective::new(model, polytope);
    let n = polytope.n_live();

    // Support probes: each term must be realizable with positive
    // probability somewhere in the region, and its argmax vertex is kept
    // as a start-point ingredient.
    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(model.terms().len());
    for t in model.terms() {
        let row = polytope.indicator_row(&t.ov);
        let sol = polytope.maximize_linear(&row)?;
        if sol.value <= SUPPORT_EPS {
            return Err(CoreError::Contradiction {
                observed: t.label.clone(),
                count: t.exponent,
            });
        }
        vertices.push(sol.x);
    }
    let (interior, _slack) = polytope.find_interior_point()?;

    // Start: a convex mixture of the max-slack point and every term's
    // argmax vertex. Each term's dot at the mixture is at least its share
    // of the vertex where it peaks, hence strictly positive.
    let mut weights = vec![1.0; vertices.len() + 1];
    if let Some(seed) = opts.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in weights.iter_mut() {
            *w = rng.random_range(0.5..1.5);
        }
    }
    let wsum: f64 = weights.iter().sum();
    let mut x = vec![0.0; n];
    for (w, point) in weights.iter().zip(std::iter::once(&interior).chain(&vertices)) {
        for (xi, pi) in x.iter_mut().zip(point) {
            *xi += w * pi / wsum;
        }
    }
    renormalize(&mut x);
    let mut fx = obj.value(&x);
    debug_assert!(fx.is_finite());

    let tol = opts.tolerance;
    let mut iterations = 0usize;
    let mut stall = 0usize;
    loop {
        let dots = obj.dots(&x);
        let g = obj.gradient_from_dots(&dots);
        let oracle = polytope.maximize_linear(&g)?;
        let gap = (oracle.value - dot(&g, &x)).max(0.0);

        if gap <= tol * (1.0 + fx.abs()) {
            let (x, fx, gap) = tighten(&obj, polytope, x, fx, gap)?;
            let full = polytope.to_full(&x, model.n_worlds());
            return Ok(SolveResult {
                jstar: Jdv::new(full)?,
                value: fx,
                iterations,
                stationarity_gap: gap,
            });
        }
        if iterations >= opts.max_iterations || stall >= STALL_LIMIT {
            return Err(CoreError::NoConvergence { iterations, gap });
        }
        iterations += 1;
        let f_before = fx;

        let (xn, fn_new) = line_search(&obj, &x, &dots, &oracle.x);
        if fn_new > fx {
            x = xn;
            fx = fn_new;
        }

        // Polish periodically, and whenever Frank-Wolfe progress fades.
        if iterations % 8 == 0 || fx - f_before <= 1e-9 * (1.0 + fx.abs()) {
            for _ in 0..5 {
                match polish(&obj, polytope, &x, fx) {
                    Some((xp, fp)) => {
                        x = xp;
                        fx = fp;
                    }
                    None => break,
                }
            }
        }

        stall = if fx - f_before <= 1e-14 * (1.0 + fx.abs()) { stall + 1 } else { 0 };
    }
}

/// Once the certificate passes, polish to exhaustion and re-certify; the
/// returned gap is the smallest one seen, and never worse than the gap
/// that already passed.
fn tighten(
    obj: &Objective,
    polytope: &FeasiblePolytope,
    mut x: Vec<f64>,
    mut fx: f64,
    gap: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let mut best = (x.clone(), fx, gap);
    for _ in 0..5 {
        let mut improved = false;
        for _ in 0..10 {
            match polish(obj, polytope, &x, fx) {
                Some((xp, fp)) => {
                    x = xp;
                    fx = fp;
                    improved = true;
                }
                None => break,
            }
        }
        if !improved {
            break;
        }
        let dots = obj.dots(&x);
        let g = obj.gradient_from_dots(&dots);
        let oracle = polytope.maximize_linear(&g)?;
        let gap = (oracle.value - dot(&g, &x)).max(0.0);
        if gap < best.2 {
            best = (x.clone(), fx, gap);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Exact line search along the chord from `x` to the oracle vertex `y`:
/// the directional derivative sum_i k_i d_i / (s_i + t d_i) is strictly
/// decreasing in t, so bisection finds its root; the step is capped just
/// short of the first zero crossing of any term probability.
fn line_search(obj: &Objective, x: &[f64], dots_x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let dots_y = obj.dots(y);
    let delta: Vec<f64> = dots_y.iter().zip(dots_x).map(|(dy, dx)| dy - dx).collect();

    let mut t_hi = 1.0f64;
    for (d, s) in delta.iter().zip(dots_x) {
        if *d < 0.0 {
            t_hi = t_hi.min((1.0 - 1e-12) * s / -d);
        }
    }
    if t_hi <= 0.0 {
        return (x.to_vec(), f64::NEG_INFINITY);
    }

    let phi_prime = |t: f64| -> f64 {
        let mut v = 0.0;
        for (((_, k), d), s) in obj.terms.iter().zip(&delta).zip(dots_x) {
            v += k * d / (s + t * d);
        }
        v
    };

    let t = if phi_prime(t_hi) >= 0.0 {
        t_hi
    } else {
        let (mut lo, mut hi) = (0.0f64, t_hi);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if phi_prime(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-17 {
                break;
            }
        }
        0.5 * (lo + hi)
    };

    let mut xn: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - t) * xi + t * yi)
        .collect();
    renormalize(&mut xn);
    let f = obj.value(&xn);
    (xn, f)
}

/// One Newton polish attempt: guess the active face (pinned coordinates and
/// bands at their bounds), then maximize over that face by iterated Newton
/// steps on the KKT system. Several guess thresholds are tried; the best
/// candidate whose objective is not materially below `fx` wins. A wrong
/// face guess yields a visibly worse objective and is dropped, so guessing
/// aggressively is safe. Returns `None` when no attempt produced an
/// acceptable point distinct from `x`.
fn polish(
    obj: &Objective,
    polytope: &FeasiblePolytope,
    x: &[f64],
    fx: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    if n > POLISH_DIM_LIMIT {
        return None;
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut tried: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
    for &theta in &[0.0, 1e-9, 1e-6, 1e-3, 3e-2] {
        // Face guess at this threshold: coordinates at most theta are
        // pinned to zero, bands within max(1e-8, theta) of a bound are
        // fixed at that bound.
        let pinned: Vec<bool> = x.iter().map(|&v| v <= theta).collect();
        let act = theta.max(1e-8);
        let mut active: Vec<usize> = Vec::new();
        for (r, row) in polytope.rows().iter().enumerate() {
            let v = dot(&row.coeffs, x);
            if row.is_point() || (row.lo > 0.0 && v - row.lo <= act) {
                active.push(2 * r);
            } else if row.hi < 1.0 && row.hi - v <= act {
                active.push(2 * r + 1);
            }
        }
        let key = (pinned, active);
        if key.0.iter().all(|&p| p) || tried.contains(&key) {
            continue;
        }
        tried.push(key);
        let (pinned, active) = tried.last().unwrap();
        if let Some((cand, fc)) = polish_on_face(obj, polytope, x, fx, pinned, active) {
            let acceptable = fc >= fx - POLISH_SLACK * (1.0 + fx.abs()) && cand != x;
            if acceptable && best.as_ref().is_none_or(|(_, fb)| fc > *fb) {
                best = Some((cand, fc));
            }
        }
    }
    best
}

/// Newton iteration restricted to one face, run until the step stalls.
/// `active` encodes band rows fixed at a bound: 2r for row r at its lower
/// bound, 2r+1 at its upper.
fn polish_on_face(
    obj: &Objective,
    polytope: &FeasiblePolytope,
    x0: &[f64],
    fx0: f64,
    pinned: &[bool],
    active: &[usize],
) -> Option<(Vec<f64>, f64)> {
    let n = x0.len();

    // Equality rows of the face. Dependent rows are discarded so the KKT
    // matrix stays nonsingular.
    let mut rows: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; n], 1.0)];
    for &code in active {
        let row = &polytope.rows()[code / 2];
        let b = if code % 2 == 0 { row.lo } else { row.hi };
        rows.push((row.coeffs.clone(), b));
    }
    for (i, &p) in pinned.iter().enumerate() {
        if p {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            rows.push((e, 0.0));
        }
    }
    let row_vecs: Vec<Vec<f64>> = rows.iter().map(|(c, _)| c.clone()).collect();
    let keep = independent_rows(&row_vecs);
    let rows: Vec<&(Vec<f64>, f64)> = keep.iter().map(|&i| &rows[i]).collect();
    let m = rows.len();

    // Rows whose equality is enforced through the KKT system are exempt
    // from step capping below; capping them against their own bound would
    // fight the pull that keeps them exact.
    let mut in_face = vec![false; polytope.rows().len()];
    for &code in active {
        in_face[code / 2] = true;
    }

    let mut x = x0.to_vec();
    let mut fx = fx0;
    for _ in 0..12 {
        let dots = obj.dots(&x);
        if dots.iter().any(|&s| s <= 0.0) {
            break;
        }
        let g = obj.gradient_from_dots(&dots);

        // Quadratic model of the log-likelihood: gradient g, curvature
        // H = sum_i k_i o_i o_i^T / s_i^2 (f(x+d) ~ f + g.d - d'Hd/2).
        let mut h = vec![vec![0.0; n]; n];
        for ((idx, k), s) in obj.terms.iter().zip(&dots) {
            let w = k / (s * s);
            for &a in idx {
                for &b in idx {
                    h[a][b] += w;
                }
            }
        }
        let diag_max = (0..n).map(|i| h[i][i]).fold(0.0f64, f64::max);
        let ridge = 1e-12 * (1.0 + diag_max);
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += ridge;
        }

        // KKT system for max g.d - d'Hd/2 s.t. A(x + d) = b:
        // [H A'; A 0] [d; lambda] = [g; b - A x]. The residual right-hand
        // side pulls the iterate exactly onto the face.
        let nn = n + m;
        let mut kkt = vec![vec![0.0; nn]; nn];
        let mut rhs = vec![0.0; nn];
        for i in 0..n {
            kkt[i][..n].copy_from_slice(&h[i]);
            rhs[i] = g[i];
        }
        for (j, (coeffs, b)) in rows.iter().enumerate() {
            for i in 0..n {
                kkt[i][n + j] = coeffs[i];
                kkt[n + j][i] = coeffs[i];
            }
            rhs[n + j] = b - dot(coeffs, &x);
        }
        let sol = lu_solve(kkt, rhs)?;
        let d = &sol[..n];
        if d.iter().all(|v| v.abs() < 1e-16) {
            break;
        }

        // Step caps: coordinates stay nonnegative, off-face bands stay
        // inside their interval, term probabilities stay strictly
        // positive. Caps are clamped at zero, never skipped: a row that is
        // already marginally past its bound (rounding dust) must block any
        // step that would push it further out. A zero cap stalls this face;
        // the sweep in `polish` then retries with that row held active,
        // which is the correct repair.
        let mut alpha = 1.0f64;
        for i in 0..n {
            if !pinned[i] && d[i] < 0.0 {
                alpha = alpha.min((x[i] / -d[i]).max(0.0));
            }
        }
        for (r, row) in polytope.rows().iter().enumerate() {
            if in_face[r] {
                continue;
            }
            let v = dot(&row.coeffs, &x);
            let dv = dot(&row.coeffs, d);
            let cap = if dv > 1e-15 {
                (row.hi - v) / dv
            } else if dv < -1e-15 {
                (v - row.lo) / -dv
            } else {
                continue;
            };
            alpha = alpha.min(cap.max(0.0));
        }
        for ((idx, _), s) in obj.terms.iter().zip(&dots) {
            let dv: f64 = idx.iter().map(|&i| d[i]).sum();
            if dv < 0.0 {
                alpha = alpha.min((1.0 - 1e-12) * s / -dv);
            }
        }
        if alpha <= 0.0 {
            break;
        }
        alpha = alpha.min(1.0);

        // Backtracking on near-monotonicity rather than strict increase:
        // at double-precision resolution the last steps onto the face do
        // not change f measurably.
        let slack = 1e-13 * (1.0 + fx.abs());
        let mut stepped = false;
        let mut a = alpha;
        for _ in 0..30 {
            let mut cand: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
            for c in cand.iter_mut() {
                if *c < 0.0 {
                    *c = 0.0;
                }
            }
            renormalize(&mut cand);
            let fc = obj.value(&cand);
            if fc >= fx - slack {
                x = cand;
                fx = fc;
                stepped = true;
                break;
            }
            a *= 0.5;
        }
        if !stepped {
            break;
        }
    }

    // Last line of defense: a candidate that drifted outside the polytope
    // is worthless no matter how good its objective looks, because the
    // stationarity certificate is only meaningful at feasible points.
    let feasible = polytope.rows().iter().all(|row| {
        let v = dot(&row.coeffs, &x);
        v >= row.lo - 1e-9 && v <= row.hi + 1e-9
    });
    if !feasible || x == x0 {
        None
    } else {
        Some((x, fx))
    }
}

/// Dense LU with partial pivoting; `None` when the matrix is numerically
/// singular.
fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let amax = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    let pivot_floor = 1e-14 * amax.max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut pv = a[col][col].abs();
        for r in col + 1..n {
            let v = a[r][col].abs();
            if v > pv {
                piv = r;
                pv = v;
            }
        }
        if pv < pivot_floor {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = 1.0 / a[col][col];
        for r in col + 1..n {
            let f = a[r][col] * inv;
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}
