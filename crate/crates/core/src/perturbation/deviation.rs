use serde::{Deserialize, Serialize};

use super::PerturbationPath;
use crate::error::{Error, Result};
use crate::linalg;
use crate::trajectory::Trajectory;

/// Distance between an unperturbed and a perturbed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub sup_deviation: f64,
    pub sup_perturbation: f64,
    /// `sup_deviation / sup_perturbation`; `None` when `U ≡ 0`.
    pub ratio: Option<f64>,
    pub cumulative_abs: f64,
    /// `(t, |x̃(t) - x(t)|)` at the merged breakpoints (left limits included at jumps).
    pub deviation_samples: Vec<(f64, f64)>,
}

/// Exact `sup_t |x̃(t) - x(t)|`. Between merged breakpoints the difference is
/// affine in `t`, so its norm is convex and peaks at an endpoint.
pub fn measure_deviation(
    x: &Trajectory,
    xt: &Trajectory,
    u: &PerturbationPath,
) -> Result<DeviationReport> {
    if x.dim != xt.dim || u.dim != x.dim {
        return Err(Error::DimensionMismatch {
            expected: x.dim,
            found: if xt.dim != x.dim { xt.dim } else { u.dim },
        });
    }
    if x.horizon != xt.horizon {
        return Err(Error::HorizonMismatch(x.horizon, xt.horizon));
    }
    let samples = deviation_samples(x, xt);
    let sup_deviation = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let sup_perturbation = u.sup_norm_until(x.horizon);
    let ratio = (sup_perturbation > 0.0).then(|| sup_deviation / sup_perturbation);
    Ok(DeviationReport {
        sup_deviation,
        sup_perturbation,
        ratio,
        cumulative_abs: u.cumulative_abs(),
        deviation_samples: samples,
    })
}

pub(crate) fn merged_times(x: &Trajectory, xt: &Trajectory) -> Vec<f64> {
    let mut ts: Vec<f64> = x
        .breakpoints
        .iter()
        .chain(xt.breakpoints.iter())
        .map(|b| b.t)
        .filter(|&t| t <= x.horizon)
        .collect();
    ts.push(0.0);
    ts.push(x.horizon);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    ts
}

pub(crate) fn deviation_samples(x: &Trajectory, xt: &Trajectory) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for t in merged_times(x, xt) {
        if t > 0.0 {
            let l = linalg::dist(&x.left_limit(t), &xt.left_limit(t));
            let r = linalg::dist(&x.value_at(t), &xt.value_at(t));
            out.push((t, l));
            if r != l {
                out.push((t, r));
            }
        } else {
            out.push((t, linalg::dist(&x.value_at(t), &xt.value_at(t))));
        }
    }
    out
}
