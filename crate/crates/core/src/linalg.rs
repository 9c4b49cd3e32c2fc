//! Dense vector helpers on `&[f64]` plus a few nalgebra-backed decompositions.

use nalgebra::DMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Row-stacked matrix from a list of equal-length rows.
pub fn rows_to_matrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

/// Numerical rank with threshold `rel_tol * max(1, largest singular value)`.
pub fn rank(rows: &[Vec<f64>], cols: usize, rel_tol: f64) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let m = rows_to_matrix(rows, cols);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = rel_tol * top.max(1.0);
    sv.iter().filter(|&&s| s > thresh).count()
}

/// Orthonormal basis of the row space of `rows` (rank determined as in [`rank`]).
pub fn row_space_basis(rows: &[Vec<f64>], cols: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() || cols == 0 {
        return Vec::new();
    }
    let m = rows_to_matrix(rows, cols);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = rel_tol * top.max(1.0);
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > thresh {
            out.push((0..cols).map(|j| v_t[(k, j)]).collect());
        }
    }
    out
}

/// Smallest singular value of the row-stacked matrix.
pub fn min_singular_value(rows: &[Vec<f64>], cols: usize) -> f64 {
    let m = rows_to_matrix(rows, cols);
    m.singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Solve the square system `A x = b`; `None` when `A` is numerically singular.
pub fn solve_square(rows: &[Vec<f64>], rhs: &[f64], cond_tol: f64) -> Option<Vec<f64>> {
    let n = rhs.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let a = rows_to_matrix(rows, n);
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= cond_tol * smax {
        return None;
    }
    let b = nalgebra::DVector::from_column_slice(rhs);
    a.lu().solve(&b).map(|x| x.iter().cloned().collect())
}

/// Minimum-norm least-squares solution of `A x ≈ b` via the pseudo-inverse.
pub fn lstsq(rows: &[Vec<f64>], cols: usize, rhs: &[f64], rel_tol: f64) -> Vec<f64> {
    if rows.is_empty() || cols == 0 {
        return vec![0.0; cols];
    }
    let a = rows_to_matrix(rows, cols);
    let svd = a.svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = rel_tol * top.max(f64::MIN_POSITIVE);
    let b = nalgebra::DVector::from_column_slice(rhs);
    match svd.solve(&b, eps) {
        Ok(x) => x.iter().cloned().collect(),
        Err(_) => vec![0.0; cols],
    }
}

/// Gram–Schmidt completion: extends the orthonormal set `basis` (and keeps it
/// orthogonal to every vector in `exclude`) with standard basis vectors until
/// `target` vectors are present.
pub fn complete_basis(
    basis: &[Vec<f64>],
    exclude: &[Vec<f64>],
    dim: usize,
    target: usize,
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = basis.to_vec();
    let mut against: Vec<Vec<f64>> = exclude.to_vec();
    against.extend(out.iter().cloned());
    for i in 0..dim {
        if out.len() >= target {
            break;
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &against {
                let c = dot(&v, q);
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= c * qk;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            let u = scale(&v, 1.0 / nv);
            against.push(u.clone());
            out.push(u);
        }
    }
    out
}

/// Flip sign so that the first coordinate with magnitude above `tol` is positive.
pub fn canonical_sign(v: &mut [f64], tol: f64) {
    if let Some(first) = v.iter().find(|x| x.abs() > tol) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// All `k`-element index subsets of `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
