//! Lawson–Hanson non-negative least squares, used by the least-distance
//! projection.

use crate::error::{Error, Result};
use crate::linalg;

/// Solve `min |E u - f|` subject to `u >= 0`. `e_cols[j]` is column `j` of `E`.
pub(crate) fn nnls(e_cols: &[Vec<f64>], f: &[f64]) -> Result<Vec<f64>> {
    let m = e_cols.len();
    let rows = f.len();
    let mut u = vec![0.0; m];
    let mut passive = vec![false; m];
    let scale = e_cols
        .iter()
        .map(|c| linalg::norm(c))
        .fold(linalg::norm(f), f64::max)
        .max(1.0);
    let tol = 1e-13 * scale * scale;
    let max_outer = 10 * m + 50;
    let mut excluded = vec![false; m];

    let residual = |u: &[f64]| -> Vec<f64> {
        let mut r = f.to_vec();
        for (uj, col) in u.iter().zip(e_cols) {
            if *uj != 0.0 {
                for (rk, ck) in r.iter_mut().zip(col) {
                    *rk -= uj * ck;
                }
            }
        }
        r
    };

    for _ in 0..max_outer {
        let r = residual(&u);
        let w: Vec<f64> = e_cols.iter().map(|c| linalg::dot(c, &r)).collect();
        let cand = (0..m)
            .filter(|&j| !passive[j] && !excluded[j])
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        let t = match cand {
            Some(t) if w[t] > tol => t,
            _ => return Ok(u),
        };
        passive[t] = true;
        let before = u.clone();

        let mut inner = 0;
        loop {
            inner += 1;
            if inner > 3 * m + 10 {
                return Err(Error::NoConvergence {
                    what: "nnls",
                    iterations: inner,
                });
            }
            let idx: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
            let a_rows: Vec<Vec<f64>> = (0..rows)
                .map(|r| idx.iter().map(|&j| e_cols[j][r]).collect())
                .collect();
            let sol = linalg::lstsq(&a_rows, idx.len(), f, 1e-14);
            let mut z = vec![0.0; m];
            for (k, &j) in idx.iter().enumerate() {
                z[j] = sol[k];
            }
            if idx.iter().all(|&j| z[j] > 0.0) {
                u = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &idx {
                if z[j] <= 0.0 {
                    let d = u[j] - z[j];
                    if d > 0.0 {
                        alpha = alpha.min(u[j] / d);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for j in 0..m {
                u[j] += alpha * (z[j] - u[j]);
            }
            let mut moved = false;
            for &j in &idx {
                if u[j] <= 1e-15 * scale {
                    u[j] = 0.0;
                    passive[j] = false;
                    moved = true;
                }
            }
            if !moved {
                // numerical stall: drop the most negative candidate
                if let Some(&j) = idx
                    .iter()
                    .min_by(|&&a, &&b| z[a].partial_cmp(&z[b]).unwrap())
                {
                    u[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        if u == before {
            // degenerate step: skip t until the iterate moves
            excluded[t] = true;
        } else {
            excluded.iter_mut().for_each(|e| *e = false);
        }
    }
    Err(Error::NoConvergence {
        what: "nnls",
        iterations: max_outer,
    })
}
