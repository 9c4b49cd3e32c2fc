use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{project_onto_polyhedron, Polyhedron, KKT_TOL};
use crate::error::{Error, Result};
use crate::linalg;

/// Enumerable upper bound on the Hoffman constant of a half-space system.
///
/// With unit normals, `d(x, ∩W_i) <= c · max_i d(x, W_i)` holds for
/// `c = max_J sqrt(|J|) / σ_min(A_J)` over row subsets `J` of maximal rank.
/// For a full-rank system this is `sqrt(n) · max ||A_S^{-1}||_2` over
/// invertible `n`-subsets. The bound can be loose; pair it with
/// [`hoffman_empirical_ratio`].
pub fn hoffman_constant(halfspaces: &Polyhedron, _tol: f64) -> Result<f64> {
    let q = halfspaces.normalized().ok_or(Error::EmptyIntersection)?;
    if !q.is_feasible() {
        return Err(Error::EmptyIntersection);
    }
    let n = q.dim;
    if q.normals.is_empty() || n == 0 {
        return Ok(1.0);
    }
    let r = linalg::rank(&q.normals, n, 1e-10);
    if r == 0 {
        return Ok(1.0);
    }
    let mut best = 1.0_f64;
    for subset in linalg::combinations(q.normals.len(), r) {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| q.normals[i].clone()).collect();
        let smin = if r == n {
            linalg::min_singular_value(&rows, n)
        } else {
            // σ_min over the r nonzero singular values of an r x n matrix
            linalg::min_singular_value(&transpose(&rows, n), r)
        };
        if smin <= 1e-10 {
            continue;
        }
        best = best.max((r as f64).sqrt() / smin);
    }
    Ok(best)
}

fn transpose(rows: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
    (0..cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// `d(x, ∩W_i) / max_i d(x, W_i)`; `None` when `x` is inside every half-space.
pub fn hoffman_ratio_at(halfspaces: &Polyhedron, x: &[f64]) -> Result<Option<f64>> {
    let maxd = (0..halfspaces.num_constraints())
        .map(|i| halfspaces.halfspace_distance(i, x))
        .fold(0.0_f64, f64::max);
    if maxd <= 1e-12 {
        return Ok(None);
    }
    let pr = project_onto_polyhedron(halfspaces, x, KKT_TOL).map_err(|e| match e {
        Error::EmptyPolyhedron => Error::EmptyIntersection,
        other => other,
    })?;
    Ok(Some(pr.distance / maxd))
}

/// Largest sampled ratio over `samples` points drawn uniformly from the cube of
/// half-width `radius` around the projection of the origin.
pub fn hoffman_empirical_ratio(
    halfspaces: &Polyhedron,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    let n = halfspaces.dim;
    let center = project_onto_polyhedron(halfspaces, &vec![0.0; n], KKT_TOL)
        .map_err(|_| Error::EmptyIntersection)?
        .point;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let x: Vec<f64> = center
            .iter()
            .map(|c| c + rng.random_range(-radius..=radius))
            .collect();
        if let Some(r) = hoffman_ratio_at(halfspaces, &x)? {
            best = best.max(r);
        }
    }
    Ok(best)
}
