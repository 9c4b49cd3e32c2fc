use serde::{Deserialize, Serialize};

use super::nnls::nnls;
use super::Polyhedron;
use crate::error::{Error, Result};
use crate::linalg;

/// Euclidean projection onto a polyhedron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
}

/// Project `x` onto `P = {y : A y <= c}`.
///
/// Posed as the least-distance program `min |z|` s.t. `A z <= c - A x` and
/// solved through its NNLS dual (Lawson–Hanson), which also certifies
/// infeasibility. The active face is then re-projected to polish the result.
pub fn project_onto_polyhedron(p: &Polyhedron, x: &[f64], tol: f64) -> Result<Projection> {
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: x.len(),
        });
    }
    if !linalg::all_finite(x) {
        return Err(Error::NonFinite("projection point"));
    }
    let n = p.dim;
    let q = p.normalized().ok_or(Error::EmptyPolyhedron)?;
    let m = q.normals.len();
    let h: Vec<f64> = q
        .normals
        .iter()
        .zip(&q.offsets)
        .map(|(a, c)| c - linalg::dot(a, x))
        .collect();
    let s = h.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    let feas_tol = tol * (1.0 + linalg::norm(x));
    if h.iter().all(|&v| v >= -feas_tol) {
        return Ok(Projection {
            point: x.to_vec(),
            distance: 0.0,
        });
    }

    // LDP: min |z| s.t. G z >= g, G = -A, g = -h/s.
    // E = [G^T; g^T] ((n+1) x m), f = e_{n+1}.
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut c: Vec<f64> = q.normals[i].iter().map(|v| -v).collect();
            c.push(-h[i] / s);
            c
        })
        .collect();
    let mut f = vec![0.0; n + 1];
    f[n] = 1.0;
    let u = nnls(&cols, &f)?;
    let mut r: Vec<f64> = f.iter().map(|v| -v).collect();
    for (uj, col) in u.iter().zip(&cols) {
        for (rk, ck) in r.iter_mut().zip(col) {
            *rk += uj * ck;
        }
    }
    let rn = linalg::norm(&r);
    if rn * rn < 1e-12 || r[n] > -1e-14 {
        return Err(Error::EmptyPolyhedron);
    }
    let z: Vec<f64> = r[..n].iter().map(|v| -v / r[n] * s).collect();
    let mut y = linalg::add(x, &z);

    // Polish: re-project onto the affine hull of the (near-)active rows.
    let act: Vec<usize> = (0..m)
        .filter(|&i| (linalg::dot(&q.normals[i], &y) - q.offsets[i]).abs() <= 1e-7 * (1.0 + s))
        .collect();
    if !act.is_empty() {
        let rows: Vec<Vec<f64>> = act.iter().map(|&i| q.normals[i].clone()).collect();
        let resid: Vec<f64> = act
            .iter()
            .map(|&i| linalg::dot(&q.normals[i], x) - q.offsets[i])
            .collect();
        // y' = x - A^T (A A^T)^+ (A x - c) = x - pinv(A) (A x - c)
        let corr = linalg::lstsq(&rows, n, &resid, 1e-12);
        let yp = linalg::sub(x, &corr);
        let viol = q.max_violation(&yp);
        if viol <= 1e-12 * (1.0 + s) && linalg::dist(&yp, &y) <= 1e-6 * (1.0 + s) {
            y = yp;
        }
    }
    let viol = q.max_violation(&y);
    if viol > tol.max(1e-9) * (1.0 + s) {
        return Err(Error::NoConvergence {
            what: "project_onto_polyhedron",
            iterations: m,
        });
    }
    let distance = linalg::dist(x, &y);
    Ok(Projection { point: y, distance })
}
