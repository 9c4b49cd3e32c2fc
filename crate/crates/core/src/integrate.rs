//! Exact event-driven integration of the unperturbed dynamics.

use crate::error::{Error, Result};
use crate::linalg;
use crate::system::{persisting_subset, PwlPotential};
use crate::trajectory::{Terminal, Trajectory, TrajectoryBuilder};

/// Drift norms at or below this end the integration at an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
/// Event candidates closer than this are merged into the current active set.
pub const IMMEDIATE_EVENT: f64 = 1e-12;
/// Allowed gap between `ξ` and the min-norm drift of the persisting set.
pub const DRIFT_CONSISTENCY_TOL: f64 = 1e-8;
/// Segment guard for a single unperturbed trajectory.
pub const SEGMENT_GUARD: usize = 1_000_000;

/// Integrate `ẋ = min-norm(conv{μ + λ : μ ∈ M(x)})` from `x0` over `[0, horizon]`.
pub fn integrate_unperturbed(phi: &PwlPotential, x0: &[f64], horizon: f64) -> Result<Trajectory> {
    check_inputs(phi, x0, horizon)?;
    let mut b = TrajectoryBuilder::new(0.0, x0.to_vec());
    let eq = flow_until(phi, &mut b, horizon, SEGMENT_GUARD)?;
    let terminal = if eq {
        Terminal::Equilibrium
    } else {
        Terminal::HorizonCapped
    };
    Ok(b.finish(horizon, terminal))
}

pub(crate) fn check_inputs(phi: &PwlPotential, x0: &[f64], horizon: f64) -> Result<()> {
    if x0.len() != phi.dim {
        return Err(Error::DimensionMismatch {
            expected: phi.dim,
            found: x0.len(),
        });
    }
    if !linalg::all_finite(x0) {
        return Err(Error::NonFinite("initial state"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::BadParams(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// Advance the builder until `t_end` or an equilibrium. Returns `true` when an
/// equilibrium was reached (the builder then stops at the equilibrium time).
pub(crate) fn flow_until(
    phi: &PwlPotential,
    b: &mut TrajectoryBuilder,
    t_end: f64,
    guard: usize,
) -> Result<bool> {
    let m = phi.num_pieces();
    let nu: Vec<Vec<f64>> = (0..m).map(|i| phi.shifted_drift(i)).collect();
    let scale = phi.drift_scale();
    let rate_eps = 1e-12 * scale * scale;

    let (_, act) = phi.evaluate(b.state())?;
    let mut active = act.indices;
    let mut left_behind: Vec<usize> = Vec::new();

    loop {
        if b.segments() >= guard {
            return Err(Error::ZenoGuard {
                segments: b.segments(),
            });
        }
        let t = b.time();
        let x = b.state().to_vec();
        let d = phi.shifted_min_norm(&active)?;
        if linalg::norm(&d) <= EQUILIBRIUM_TOL {
            return Ok(true);
        }
        if t >= t_end {
            return Ok(false);
        }
        let pers = persisting_subset(phi, &phi.active_set(active.clone()), &d).indices;
        let d_p = phi.shifted_min_norm(&pers)?;
        let gap = linalg::dist(&d_p, &d);
        if gap > DRIFT_CONSISTENCY_TOL * (1.0 + linalg::norm(&d)) {
            return Err(Error::DriftInconsistency { time: t, gap });
        }

        let vals = phi.piece_values(&x);
        let vstar = pers
            .iter()
            .map(|&i| vals[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let dd = linalg::dot(&d, &d);
        let mut s_star = f64::INFINITY;
        let mut cand: Vec<(usize, f64)> = Vec::new();
        for j in 0..m {
            if pers.contains(&j) {
                continue;
            }
            let r = dd - linalg::dot(&nu[j], &d);
            if r <= rate_eps {
                continue;
            }
            let s = ((vstar - vals[j]) / r).max(0.0);
            cand.push((j, s));
            s_star = s_star.min(s);
        }

        if s_star < IMMEDIATE_EVENT {
            let mut merged = pers.clone();
            for &(j, s) in &cand {
                if s < IMMEDIATE_EVENT {
                    merged.push(j);
                }
            }
            merged.sort_unstable();
            if merged == active {
                // every candidate already active yet still catching up: numerical noise
                return Err(Error::DriftInconsistency { time: t, gap: s_star });
            }
            active = merged;
            continue;
        }

        let t_next = t + s_star;
        if t_next >= t_end {
            b.flow_to(t_end, d);
            return Ok(false);
        }
        b.flow_to(t_next, d.clone());

        let mut next: Vec<usize> = pers.clone();
        let hit_tol = s_star * 1e-9 + IMMEDIATE_EVENT;
        for &(j, s) in &cand {
            if s <= s_star + hit_tol {
                next.push(j);
            }
        }
        left_behind.clear();
        left_behind.extend(active.iter().filter(|i| !pers.contains(i)));
        let (_, act) = phi.evaluate(b.state())?;
        for i in act.indices {
            if !next.contains(&i) && !left_behind.contains(&i) {
                next.push(i);
            }
        }
        next.sort_unstable();
        next.dedup();
        active = next;
    }
}
