use super::{PointSet, Polyhedron};
use crate::linalg;

/// All basic feasible solutions of `P`: for every invertible `n`-subset of
/// constraints, solve the equality system and keep the feasible solutions.
///
/// Returns an empty set when `P` has no extreme points (e.g. it contains a
/// line). Output is deduplicated with tolerance `tol * (1 + |v|)` and sorted
/// lexicographically.
pub fn enumerate_vertices(p: &Polyhedron, tol: f64) -> PointSet {
    let n = p.dim;
    let Some(q) = p.normalized() else {
        return PointSet::empty(n);
    };
    let m = q.normals.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if n == 0 {
        if q.offsets.iter().all(|&c| c >= -tol) {
            out.push(Vec::new());
        }
        return PointSet { dim: 0, points: out };
    }
    for subset in linalg::combinations(m, n) {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| q.normals[i].clone()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| q.offsets[i]).collect();
        let Some(v) = linalg::solve_square(&rows, &rhs, 1e-10) else {
            continue;
        };
        let feas = 1e-9 * (1.0 + linalg::norm(&v));
        if q.max_violation(&v) > feas {
            continue;
        }
        if !out
            .iter()
            .any(|w| linalg::dist(w, &v) <= tol * (1.0 + linalg::norm(&v)))
        {
            // +0.0 folds -0.0 into 0.0
            out.push(v.into_iter().map(|c| c + 0.0).collect());
        }
    }
    out.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.partial_cmp(y).unwrap() {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    PointSet { dim: n, points: out }
}
