//! Rank-revealing orthogonalization over live worlds.
//!
//! The observation space is the linear span of the term indicator vectors;
//! its orthogonal complement (within the live-world coordinates) is the null
//! space: directions of distribution change the evidence cannot see. The
//! basis is diagnostic output; queries never translate along it.

use crate::kb::CompiledModel;

/// Residual norms at or below this fraction of the original norm count as
/// linearly dependent.
const RANK_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Subtracts the projection of `v` onto each of the orthonormal `basis`
/// vectors, twice; the second pass mops up cancellation error.
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
}

/// Orthonormal basis of the span of `rows` (modified Gram-Schmidt).
pub fn orthonormal_basis(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let original = norm(row);
        if original == 0.0 {
            continue;
        }
        let mut v = row.clone();
        project_out(&mut v, &basis);
        let n = norm(&v);
        if n > RANK_TOL * original {
            for vi in &mut v {
                *vi /= n;
            }
            basis.push(v);
        }
    }
    basis
}

/// Indices of a maximal linearly independent subset of `rows`, greedily
/// from the front.
pub fn independent_rows(rows: &[Vec<f64>]) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let original = norm(row);
        if original == 0.0 {
            continue;
        }
        let mut v = row.clone();
        project_out(&mut v, &basis);
        let n = norm(&v);
        if n > RANK_TOL * original {
            for vi in &mut v {
                *vi /= n;
            }
            basis.push(v);
            kept.push(i);
        }
    }
    kept
}

/// Orthonormal basis of the orthogonal complement of `span` within R^dim,
/// found by completing with standard basis vectors.
pub fn orthogonal_complement(span: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let span_basis = orthonormal_basis(span);
    let mut complement: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        project_out(&mut v, &span_basis);
        project_out(&mut v, &complement);
        let n = norm(&v);
        if n > RANK_TOL {
            for vi in &mut v {
                *vi /= n;
            }
            complement.push(v);
        }
    }
    complement
}

/// Orthonormal null-space basis of the model: full-width vectors, zero at
/// zeroed worlds, perpendicular to every term indicator. The dimension is
/// the number of live worlds minus the rank of the term matrix.
pub fn null_space_basis(model: &CompiledModel) -> Vec<Vec<f64>> {
    let live_worlds = model.live_worlds();
    let n_live = live_worlds.len();
    let span: Vec<Vec<f64>> = model
        .terms()
        .iter()
        .map(|t| {
            live_worlds
                .iter()
                .map(|w| if t.ov.get(*w) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    orthogonal_complement(&span, n_live)
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; model.n_worlds()];
            for (i, w) in live_worlds.iter().enumerate() {
                full[w.0] = v[i];
            }
            full
        })
        .collect()
}
