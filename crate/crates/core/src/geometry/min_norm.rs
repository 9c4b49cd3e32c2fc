use serde::{Deserialize, Serialize};

use super::PointSet;
use crate::error::{Error, Result};
use crate::linalg;

const MAX_MAJOR: usize = 1000;

/// Minimum-norm point of a convex hull together with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Indices (into the input set) with positive convex weight.
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Final Wolfe gap `|v|^2 - min_p v^T p`, in the caller's units.
    pub gap: f64,
}

/// Wolfe's minimum-norm-point algorithm on `conv(hull)`.
///
/// Points are rescaled by the largest norm before iterating, so `tol` is a
/// bound on the gap of the normalised problem.
pub fn min_norm_point(hull: &PointSet, tol: f64) -> Result<MinNormPoint> {
    if hull.is_empty() {
        return Err(Error::BadParams("min_norm_point on an empty set".into()));
    }
    if tol <= 0.0 {
        return Err(Error::BadParams("tolerance must be positive".into()));
    }
    let n = hull.dim;
    for p in hull.iter() {
        if !linalg::all_finite(p) {
            return Err(Error::NonFinite("hull point"));
        }
    }
    let s = hull
        .iter()
        .map(|p| linalg::norm(p))
        .fold(0.0_f64, f64::max);
    if s == 0.0 {
        return Ok(MinNormPoint {
            point: vec![0.0; n],
            support: vec![0],
            weights: vec![1.0],
            gap: 0.0,
        });
    }
    let pts: Vec<Vec<f64>> = hull.iter().map(|p| linalg::scale(p, 1.0 / s)).collect();

    let start = (0..pts.len())
        .min_by(|&a, &b| {
            linalg::norm(&pts[a])
                .partial_cmp(&linalg::norm(&pts[b]))
                .unwrap()
        })
        .unwrap();
    let mut set: Vec<usize> = vec![start];
    let mut lam: Vec<f64> = vec![1.0];
    let mut x = pts[start].clone();

    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut prev_xx = f64::INFINITY;
    for _ in 0..MAX_MAJOR {
        let xx = linalg::dot(&x, &x);
        let (j, xp) = (0..pts.len())
            .map(|i| (i, linalg::dot(&x, &pts[i])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        gap = xx - xp;
        if gap <= tol {
            converged = true;
            break;
        }
        if set.contains(&j) || xx >= prev_xx {
            // Rounding stalls the last few digits; accept a tiny residual gap.
            converged = gap <= tol.max(1e-10);
            break;
        }
        prev_xx = xx;
        set.push(j);
        lam.push(0.0);

        // minor cycle
        loop {
            let alpha = affine_weights(&pts, &set, n);
            if alpha.iter().all(|&a| a > 1e-15) {
                lam = alpha;
                x = if set.len() == n + 1 && full_affine_rank(&pts, &set, n) {
                    // the affine hull is all of R^n, so the origin is inside
                    vec![0.0; n]
                } else {
                    combine(&pts, &set, &lam, n)
                };
                break;
            }
            let mut theta = 1.0_f64;
            for (l, a) in lam.iter().zip(&alpha) {
                if *a <= 1e-15 {
                    let denom = l - a;
                    if denom > 0.0 {
                        theta = theta.min(l / denom);
                    }
                }
            }
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut keep_set = Vec::with_capacity(set.len());
            let mut keep_lam = Vec::with_capacity(set.len());
            for (&i, &l) in set.iter().zip(&lam) {
                if l > 1e-15 {
                    keep_set.push(i);
                    keep_lam.push(l);
                }
            }
            if keep_set.len() == set.len() {
                // drop the smallest weight to guarantee progress
                let k = lam
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(k, _)| k)
                    .unwrap();
                keep_set.remove(k);
                keep_lam.remove(k);
            }
            let total: f64 = keep_lam.iter().sum();
            set = keep_set;
            lam = keep_lam.iter().map(|l| l / total).collect();
            x = combine(&pts, &set, &lam, n);
            if set.len() <= 1 {
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "min_norm_point",
            iterations: MAX_MAJOR,
        });
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by_key(|&k| set[k]);
    Ok(MinNormPoint {
        point: linalg::scale(&x, s),
        support: order.iter().map(|&k| set[k]).collect(),
        weights: order.iter().map(|&k| lam[k]).collect(),
        gap: gap.max(0.0) * s * s,
    })
}

fn full_affine_rank(pts: &[Vec<f64>], set: &[usize], n: usize) -> bool {
    let p0 = &pts[set[0]];
    let diffs: Vec<Vec<f64>> = set[1..].iter().map(|&i| linalg::sub(&pts[i], p0)).collect();
    linalg::rank(&diffs, n, 1e-10) == n
}

fn combine(pts: &[Vec<f64>], set: &[usize], w: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&i, &wi) in set.iter().zip(w) {
        for (xk, pk) in x.iter_mut().zip(&pts[i]) {
            *xk += wi * pk;
        }
    }
    x
}

/// Affine weights (summing to one) of the min-norm point of `aff{pts[i] : i in set}`.
fn affine_weights(pts: &[Vec<f64>], set: &[usize], n: usize) -> Vec<f64> {
    let k = set.len();
    if k == 1 {
        return vec![1.0];
    }
    let p0 = &pts[set[0]];
    let diffs: Vec<Vec<f64>> = set[1..].iter().map(|&i| linalg::sub(&pts[i], p0)).collect();
    // rows of the n x (k-1) matrix with columns = diffs
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| diffs.iter().map(|d| d[r]).collect())
        .collect();
    let rhs: Vec<f64> = p0.iter().map(|v| -v).collect();
    let c = linalg::lstsq(&rows, k - 1, &rhs, 1e-13);
    let mut w = Vec::with_capacity(k);
    w.push(1.0 - c.iter().sum::<f64>());
    w.extend(c);
    w
}

/// Minimum-norm point of the affine hull of `points` (the projection of the
/// origin onto it).
pub fn affine_min_norm_point(points: &PointSet) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::BadParams("affine hull of an empty set".into()));
    }
    let n = points.dim;
    let p0 = &points.points[0];
    let diffs: Vec<Vec<f64>> = points.points[1..]
        .iter()
        .map(|p| linalg::sub(p, p0))
        .collect();
    if diffs.is_empty() {
        return Ok(p0.clone());
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| diffs.iter().map(|d| d[r]).collect())
        .collect();
    let rhs: Vec<f64> = p0.iter().map(|v| -v).collect();
    let c = linalg::lstsq(&rows, diffs.len(), &rhs, 1e-12);
    let mut w = p0.clone();
    for (ci, d) in c.iter().zip(&diffs) {
        for (wk, dk) in w.iter_mut().zip(d) {
            *wk += ci * dk;
        }
    }
    Ok(w)
}
