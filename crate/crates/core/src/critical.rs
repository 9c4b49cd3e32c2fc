//! Critical points, conic neighbourhood constant, basins and the `γ` estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    enumerate_vertices, hoffman_constant, min_norm_point, project_onto_polyhedron, PointSet,
    Polyhedron, KKT_TOL, MIN_NORM_TOL, VERTEX_TOL,
};
use crate::integrate_unperturbed;
use crate::linalg;
use crate::random::rng_for;
use crate::system::{ActiveSet, PwlPotential};
use crate::trajectory::{Move, Trajectory};

/// Relative threshold for the rank tests.
pub const RANK_TOL: f64 = 1e-9;

/// Effective regions of a system with cached emptiness.
#[derive(Debug, Clone)]
pub struct Regions {
    polys: Vec<Polyhedron>,
    nonempty: Vec<bool>,
}

impl Regions {
    pub fn new(phi: &PwlPotential) -> Self {
        let polys: Vec<Polyhedron> = (0..phi.num_pieces()).map(|i| phi.region(i)).collect();
        let nonempty = polys.iter().map(|p| p.is_feasible()).collect();
        Self { polys, nonempty }
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn region(&self, i: usize) -> &Polyhedron {
        &self.polys[i]
    }

    pub fn is_nonempty(&self, i: usize) -> bool {
        self.nonempty[i]
    }

    /// `d(x, R_i)`, `+inf` for an empty region.
    pub fn distance(&self, i: usize, x: &[f64]) -> Result<f64> {
        if !self.nonempty[i] {
            return Ok(f64::INFINITY);
        }
        match project_onto_polyhedron(&self.polys[i], x, KKT_TOL) {
            Ok(p) => Ok(p.distance),
            Err(Error::EmptyPolyhedron) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    pub fn distances(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.len()).map(|i| self.distance(i, x)).collect()
    }
}

/// True iff the affine span of `s` is a proper subspace (singletons included).
pub fn is_low_dimensional(s: &PointSet) -> bool {
    if s.dim == 0 {
        return false;
    }
    let Some(first) = s.points.first() else {
        return true;
    };
    let diffs: Vec<Vec<f64>> = s.points[1..].iter().map(|p| linalg::sub(p, first)).collect();
    linalg::rank(&diffs, s.dim, RANK_TOL) < s.dim
}

/// Active drifts at `p` span the space affinely.
pub fn is_critical(phi: &PwlPotential, p: &[f64]) -> Result<bool> {
    let (_, act) = phi.evaluate(p)?;
    Ok(phi.dim > 0 && !is_low_dimensional(&act.drifts))
}

/// All critical points: the vertices of the effective regions that pass the
/// rank test, deduplicated and sorted.
pub fn find_critical_points(phi: &PwlPotential) -> Result<PointSet> {
    let n = phi.dim;
    let mut out: Vec<Vec<f64>> = Vec::new();
    if n == 0 {
        return Ok(PointSet::empty(0));
    }
    for i in 0..phi.num_pieces() {
        for v in enumerate_vertices(&phi.region(i), VERTEX_TOL).points {
            if out
                .iter()
                .any(|w| linalg::dist(w, &v) <= VERTEX_TOL * (1.0 + linalg::norm(&v)))
            {
                continue;
            }
            if is_critical(phi, &v)? {
                out.push(v);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PointSet { dim: n, points: out })
}

/// Half the smallest distance from a critical point to a non-empty region not
/// containing it; `+inf` when there is no such pair.
pub fn compute_cnc(phi: &PwlPotential, c: &PointSet) -> Result<f64> {
    let regions = Regions::new(phi);
    cnc_with(phi, &regions, c)
}

fn cnc_with(phi: &PwlPotential, regions: &Regions, c: &PointSet) -> Result<f64> {
    let mut best = f64::INFINITY;
    for p in c.iter() {
        let (_, act) = phi.evaluate(p)?;
        for i in 0..phi.num_pieces() {
            if act.indices.contains(&i) {
                continue;
            }
            best = best.min(regions.distance(i, p)?);
        }
    }
    Ok(0.5 * best)
}

/// `U_r(x)`: pieces whose (non-empty) region meets the closed `r`-ball around `x`.
pub fn drift_neighborhood(phi: &PwlPotential, x: &[f64], r: f64) -> Result<ActiveSet> {
    neighborhood_with(phi, &Regions::new(phi), x, r)
}

fn neighborhood_with(phi: &PwlPotential, regions: &Regions, x: &[f64], r: f64) -> Result<ActiveSet> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::BadParams(format!("radius must be >= 0, got {r}")));
    }
    let (_, act) = phi.evaluate(x)?;
    let tol = 1e-9 * (1.0 + linalg::norm(x));
    let mut idx = Vec::new();
    for i in 0..phi.num_pieces() {
        if act.indices.contains(&i) || (regions.is_nonempty(i) && regions.distance(i, x)? <= r + tol) {
            idx.push(i);
        }
    }
    Ok(phi.active_set(idx))
}

/// Checks `ξ(p)ᵀy >= |ξ(p)|²` for every drift `y` in `U_ρ(p)` (the condition is
/// linear in `y`, so the hull is covered). Uses the field-free system.
pub fn verify_basin(phi: &PwlPotential, p: &[f64], rho: f64) -> Result<bool> {
    verify_basin_with(phi, &Regions::new(phi), p, rho)
}

fn verify_basin_with(phi: &PwlPotential, regions: &Regions, p: &[f64], rho: f64) -> Result<bool> {
    if !is_critical(phi, p)? {
        return Err(Error::NotCritical);
    }
    let xi = phi.xi(p)?;
    let u = neighborhood_with(phi, regions, p, rho)?;
    let xx = linalg::dot(&xi, &xi);
    let tol = 1e-9 * phi.drift_scale().powi(2);
    let ok = u.drifts.iter().all(|y| linalg::dot(&xi, y) >= xx - tol);
    Ok(ok)
}

/// Provable and sampled values of the constant `γ` in
/// `d(x, C) > γ r  ⇒  U_r(x) low-dimensional`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma_bound: f64,
    pub gamma_empirical: f64,
}

/// A set of `n + 1` drifts with full affine span and their common tie point.
#[derive(Debug, Clone)]
struct SpanningSubset {
    members: Vec<usize>,
    tie: Vec<f64>,
}

fn spanning_subsets(phi: &PwlPotential, regions: &Regions) -> Vec<SpanningSubset> {
    let n = phi.dim;
    let usable: Vec<usize> = (0..phi.num_pieces()).filter(|&i| regions.is_nonempty(i)).collect();
    let mut out = Vec::new();
    for comb in linalg::combinations(usable.len(), n + 1) {
        let members: Vec<usize> = comb.iter().map(|&k| usable[k]).collect();
        let last = members[n];
        let rows: Vec<Vec<f64>> = members[..n]
            .iter()
            .map(|&i| linalg::sub(&phi.drifts[i], &phi.drifts[last]))
            .collect();
        if linalg::rank(&rows, n, RANK_TOL) < n {
            continue;
        }
        let rhs: Vec<f64> = members[..n]
            .iter()
            .map(|&i| phi.offsets[i] - phi.offsets[last])
            .collect();
        if let Some(tie) = linalg::solve_square(&rows, &rhs, 1e-13) {
            out.push(SpanningSubset { members, tie });
        }
    }
    out
}

/// `r(x)`: the smallest radius at which `U_r(x)` stops being low-dimensional,
/// i.e. the min over spanning subsets of the max region distance.
pub fn neighborhood_radius(phi: &PwlPotential, x: &[f64]) -> Result<f64> {
    let regions = Regions::new(phi);
    let subs = spanning_subsets(phi, &regions);
    radius_with(&regions.distances(x)?, &subs)
}

fn radius_with(dists: &[f64], subs: &[SpanningSubset]) -> Result<f64> {
    Ok(subs
        .iter()
        .map(|s| s.members.iter().map(|&i| dists[i]).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min))
}

/// `γ` bound and sampled estimate.
///
/// For a spanning subset `D` with tie point `p_D` and Hoffman constant `c_D`
/// of the pairwise half-spaces `W_ij`, every `x` satisfies
/// `d(x, p_D) <= c_D max_{i∈D} d(x, R_i)`. If `p_D` is critical this gives
/// `γ_D = c_D`; otherwise `a_D = max_{i∈D} d(p_D, R_i) > 0` bounds the radius
/// from below and `γ_D = c_D + (1 + c_D) d(p_D, C) / a_D`. The bound is the
/// largest `γ_D`, clamped to at least 1.
pub fn estimate_gamma(phi: &PwlPotential, c: &PointSet, samples: usize, seed: u64) -> Result<GammaEstimate> {
    let regions = Regions::new(phi);
    gamma_with(phi, &regions, c, samples, seed)
}

fn gamma_with(
    phi: &PwlPotential,
    regions: &Regions,
    c: &PointSet,
    samples: usize,
    seed: u64,
) -> Result<GammaEstimate> {
    let trivial = GammaEstimate {
        gamma_bound: 1.0,
        gamma_empirical: 1.0,
    };
    if c.is_empty() || phi.dim == 0 {
        return Ok(trivial);
    }
    let subs = spanning_subsets(phi, regions);
    if subs.is_empty() {
        return Ok(trivial);
    }
    let mut bound = 1.0_f64;
    for s in &subs {
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for &i in &s.members {
            for &j in &s.members {
                if i != j {
                    normals.push(linalg::sub(&phi.drifts[i], &phi.drifts[j]));
                    offsets.push(phi.offsets[i] - phi.offsets[j]);
                }
            }
        }
        let w = Polyhedron {
            dim: phi.dim,
            normals,
            offsets,
        };
        let cd = hoffman_constant(&w, KKT_TOL)?;
        let mut a = 0.0_f64;
        for &i in &s.members {
            a = a.max(regions.distance(i, &s.tie)?);
        }
        let dc = c.distance_to(&s.tie);
        let g = if a <= 1e-9 * (1.0 + linalg::norm(&s.tie)) || dc == 0.0 {
            cd
        } else {
            cd + (1.0 + cd) * dc / a
        };
        bound = bound.max(g);
    }

    let mut rng = rng_for(seed, 0);
    let spread = 2.0 * c.diameter() + 2.0;
    let mut emp = 1.0_f64;
    for k in 0..samples {
        let center = &c.points[k % c.len()];
        let scale = spread * 10f64.powf(rng.random_range(-2.0..=1.0));
        let x: Vec<f64> = center
            .iter()
            .map(|v| v + scale * rng.random_range(-1.0..=1.0))
            .collect();
        let dc = c.distance_to(&x);
        if dc <= 1e-9 {
            continue;
        }
        let r = radius_with(&regions.distances(&x)?, &subs)?;
        if r > 0.0 && r.is_finite() {
            emp = emp.max(dc / r);
        }
    }
    Ok(GammaEstimate {
        gamma_bound: bound,
        gamma_empirical: emp,
    })
}

/// Outcome of the no-revisit check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum NoRevisit {
    Held,
    /// Returned within `ρ/3` at time `t` after having left the `ρ`-ball.
    Violated { t: f64 },
    /// `p` is not critical or `ρ` is not a verified basin radius.
    Vacuous,
}

impl NoRevisit {
    pub fn holds(&self) -> bool {
        !matches!(self, NoRevisit::Violated { .. })
    }
}

/// Simulates from `x0` and checks that once the trajectory has been within
/// `ρ/3` of `p` and then farther than `ρ`, it never comes back within `ρ/3`.
pub fn no_revisit_check(phi: &PwlPotential, p: &[f64], rho: f64, x0: &[f64], horizon: f64) -> Result<NoRevisit> {
    if !is_critical(phi, p)? || !verify_basin(phi, p, rho)? {
        return Ok(NoRevisit::Vacuous);
    }
    let tr = integrate_unperturbed(phi, x0, horizon)?;
    Ok(revisit_scan(&tr, p, rho))
}

pub(crate) fn revisit_scan(tr: &Trajectory, p: &[f64], rho: f64) -> NoRevisit {
    #[derive(PartialEq)]
    enum Phase {
        Away,
        Near,
        Left,
    }
    let mut phase = Phase::Away;
    let inner = rho / 3.0;
    let step = |event_inner: bool, t: f64, phase: &mut Phase| -> Option<NoRevisit> {
        if event_inner {
            if *phase == Phase::Left {
                return Some(NoRevisit::Violated { t });
            }
            *phase = Phase::Near;
        } else if *phase == Phase::Near {
            *phase = Phase::Left;
        }
        None
    };
    for (k, mv) in tr.moves.iter().enumerate() {
        let a = &tr.breakpoints[k];
        let b = &tr.breakpoints[k + 1];
        let Move::Flow { drift } = mv else {
            continue;
        };
        let dur = b.t - a.t;
        let e = linalg::sub(&a.x, p);
        let within = |r: f64| -> Option<(f64, f64)> { sublevel(&e, drift, r, dur) };
        let outer = within(rho);
        let inn = within(inner);
        // ordered events along the segment
        let mut events: Vec<(f64, bool)> = Vec::new();
        match outer {
            None => events.push((a.t, false)),
            Some((u1, u2)) => {
                if u1 > 0.0 {
                    events.push((a.t, false));
                }
                if let Some((s1, _)) = inn {
                    events.push((a.t + s1, true));
                }
                if u2 < dur {
                    events.push((a.t + u2, false));
                }
            }
        }
        for (t, is_inner) in events {
            if let Some(v) = step(is_inner, t, &mut phase) {
                return v;
            }
        }
    }
    let last = tr.end();
    let d = linalg::dist(&last.x, p);
    if d <= inner {
        if let Some(v) = step(true, last.t, &mut phase) {
            return v;
        }
    }
    NoRevisit::Held
}

/// `{s ∈ [0, dur] : |e + s d| <= r}` as an interval, if non-empty.
fn sublevel(e: &[f64], d: &[f64], r: f64, dur: f64) -> Option<(f64, f64)> {
    let a = linalg::dot(d, d);
    let b = 2.0 * linalg::dot(e, d);
    let c = linalg::dot(e, e) - r * r;
    if a <= 1e-300 {
        return (c <= 0.0).then_some((0.0, dur));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lo = ((-b - sq) / (2.0 * a)).max(0.0);
    let hi = ((-b + sq) / (2.0 * a)).min(dur);
    (lo <= hi).then_some((lo, hi))
}

/// Basin certificate for a critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinCertificate {
    pub point: Vec<f64>,
    #[serde(with = "crate::serde_num")]
    pub radius: f64,
    pub verified: bool,
    /// Whether all of space is a basin of this point.
    pub global: bool,
}

/// Everything the critical-point pass produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalAnalysis {
    pub critical_points: PointSet,
    #[serde(with = "crate::serde_num")]
    pub cnc: f64,
    #[serde(rename = "D_C", with = "crate::serde_num")]
    pub diameter: f64,
    pub basins: Vec<BasinCertificate>,
    #[serde(with = "crate::serde_num")]
    pub gamma_bound: f64,
    #[serde(with = "crate::serde_num")]
    pub gamma_empirical: f64,
}

/// Default sample count for the empirical `γ`.
pub const GAMMA_SAMPLES: usize = 2000;

pub fn analyze(phi: &PwlPotential, samples: usize, seed: u64) -> Result<CriticalAnalysis> {
    let regions = Regions::new(phi);
    let c = find_critical_points(phi)?;
    let cnc = cnc_with(phi, &regions, &c)?;
    let mut basins = Vec::with_capacity(c.len());
    for p in c.iter() {
        basins.push(BasinCertificate {
            point: p.clone(),
            radius: cnc,
            verified: verify_basin_with(phi, &regions, p, cnc)?,
            global: verify_basin_with(phi, &regions, p, f64::INFINITY)?,
        });
    }
    let g = gamma_with(phi, &regions, &c, samples, seed)?;
    Ok(CriticalAnalysis {
        diameter: c.diameter(),
        critical_points: c,
        cnc,
        basins,
        gamma_bound: g.gamma_bound,
        gamma_empirical: g.gamma_empirical,
    })
}

/// Min-norm point of `M(x)`, exposed for the basin property tests.
pub fn xi_of(phi: &PwlPotential, x: &[f64]) -> Result<Vec<f64>> {
    let (_, act) = phi.evaluate(x)?;
    Ok(min_norm_point(&act.drifts, MIN_NORM_TOL)?.point)
}
