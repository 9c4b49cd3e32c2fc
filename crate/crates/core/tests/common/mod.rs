#![allow(dead_code)]

/// Zooming grid search over the simplex for `argmin |Σ λ_i p_i|`.
pub fn grid_min_norm(points: &[Vec<f64>]) -> Vec<f64> {
    let k = points.len();
    let n = points[0].len();
    let eval = |lam: &[f64]| -> (f64, Vec<f64>) {
        let mut v = vec![0.0; n];
        for (l, p) in lam.iter().zip(points) {
            for (vi, pi) in v.iter_mut().zip(p) {
                *vi += l * pi;
            }
        }
        (v.iter().map(|x| x * x).sum(), v)
    };
    let to_simplex = |free: &[f64]| -> Vec<f64> {
        let mut f: Vec<f64> = free.iter().map(|x| x.clamp(0.0, 1.0)).collect();
        let s: f64 = f.iter().sum();
        if s > 1.0 {
            for x in f.iter_mut() {
                *x /= s;
            }
        }
        let s: f64 = f.iter().sum();
        f.push((1.0 - s).max(0.0));
        f
    };
    if k == 1 {
        return points[0].clone();
    }
    let dims = k - 1;
    let mut center = vec![1.0 / k as f64; dims];
    let mut half = 0.5;
    let steps = 6usize;
    let (mut best_val, mut best_v) = eval(&to_simplex(&center));
    // pattern search: move to the best grid point, shrink only when the center wins
    let mut iters = 0;
    while half > 1e-13 && iters < 20_000 {
        iters += 1;
        let total = (steps + 1).pow(dims as u32);
        let mut moved = None;
        for idx in 0..total {
            let mut r = idx;
            let free: Vec<f64> = (0..dims)
                .map(|d| {
                    let g = r % (steps + 1);
                    r /= steps + 1;
                    center[d] - half + 2.0 * half * g as f64 / steps as f64
                })
                .collect();
            let lam = to_simplex(&free);
            let (val, v) = eval(&lam);
            if val < best_val {
                best_val = val;
                best_v = v;
                moved = Some(lam[..dims].to_vec());
            }
        }
        match moved {
            Some(c) => center = c,
            None => half *= 0.5,
        }
    }
    best_v
}

/// Vertices by brute force, with Gaussian elimination written out by hand.
pub fn brute_vertices(normals: &[Vec<f64>], offsets: &[f64]) -> Vec<Vec<f64>> {
    let n = normals[0].len();
    let m = normals.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let mut a: Vec<Vec<f64>> = subset
            .iter()
            .map(|&i| {
                let mut r = normals[i].clone();
                r.push(offsets[i]);
                r
            })
            .collect();
        if let Some(x) = gauss(&mut a, n) {
            let feasible = normals
                .iter()
                .zip(offsets)
                .all(|(nr, c)| nr.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= c + 1e-9);
            let fresh = !out.iter().any(|v| {
                let d: f64 = v.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                d <= 1e-8 * (1.0 + x.iter().map(|t| t * t).sum::<f64>().sqrt())
            });
            if feasible && fresh {
                out.push(x);
            }
        }
        // next subset
        let mut i = n;
        loop {
            if i == 0 {
                out.sort_by(|p, q| p.partial_cmp(q).unwrap());
                return out;
            }
            i -= 1;
            if subset[i] < m - n + i {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss(a: &mut [Vec<f64>], n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().flat_map(|r| r[..n].iter()).fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())?;
        if a[piv][col].abs() <= 1e-10 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Explicit Euler on `ẋ = μ_argmax + λ` (ties broken by lowest index).
pub fn euler(phi: &fpcs_core::PwlPotential, x0: &[f64], horizon: f64, h: f64) -> Vec<(f64, Vec<f64>)> {
    let steps = (horizon / h).round() as usize;
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps / 100 + 2);
    out.push((0.0, x.clone()));
    for k in 1..=steps {
        let vals = phi.piece_values(&x);
        let mut best = 0;
        for i in 1..vals.len() {
            if vals[i] > vals[best] {
                best = i;
            }
        }
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += h * (phi.drifts[best][j] + phi.lambda[j]);
        }
        if k % 100 == 0 || k == steps {
            out.push((k as f64 * h, x.clone()));
        }
    }
    out
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

pub fn two_queues(lambda: Option<Vec<f64>>) -> fpcs_core::PwlPotential {
    fpcs_core::PwlPotential::new(
        2,
        vec![(vec![-1.0, 0.0], 0.0), (vec![0.0, -1.0], 0.0), (vec![0.0, 0.0], 0.0)],
        lambda,
    )
    .unwrap()
}
