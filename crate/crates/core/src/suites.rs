//! Randomized property suites over generated systems.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{certify_kappa, compute_constants, project_subsystem, CertifyParams, ConstantsOptions};
use crate::critical::{
    compute_cnc, drift_neighborhood, estimate_gamma, find_critical_points, is_low_dimensional, no_revisit_check,
    verify_basin, xi_of, Regions,
};
use crate::error::Result;
use crate::geometry::{min_norm_point, project_onto_polyhedron, PointSet, Polyhedron, KKT_TOL, MIN_NORM_TOL};
use crate::integrate_unperturbed;
use crate::linalg;
use crate::maxweight::SchedulingScenario;
use crate::random::{random_point, random_small_system, random_system, rng_for};
use crate::system::PwlPotential;

pub const SUITE_NAMES: [&str; 6] = ["lemma2", "nonexpansive", "monotone", "critical", "claim1", "certify"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// First few failure descriptions.
    pub failures: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

const MAX_LISTED_FAILURES: usize = 20;

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            cases: 0,
            failures: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(msg);
        }
    }

    fn absorb(&mut self, outcome: CaseOutcome) {
        self.cases += outcome.cases;
        for f in outcome.failures {
            self.fail(f);
        }
        for (k, v) in outcome.maxima {
            let e = self.metrics.entry(k).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
    }
}

#[derive(Default)]
struct CaseOutcome {
    cases: usize,
    failures: Vec<String>,
    maxima: Vec<(String, f64)>,
}

impl CaseOutcome {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    fn error(&mut self, ctx: &str, e: crate::Error) {
        self.cases += 1;
        self.failures.push(format!("{ctx}: {e}"));
    }
}

/// Sizes for [`run_suite`]; zero means the suite default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SuiteSizes {
    pub systems: usize,
    pub per_system: usize,
}

fn pick(v: usize, default: usize) -> usize {
    if v == 0 {
        default
    } else {
        v
    }
}

/// Runs a suite by name; `None` for an unknown name.
pub fn run_suite(name: &str, seed: u64, sizes: SuiteSizes) -> Option<SuiteReport> {
    Some(match name {
        "lemma2" => lemma2(seed, pick(sizes.systems, 500)),
        "nonexpansive" => nonexpansive(seed, pick(sizes.systems, 100), pick(sizes.per_system, 100)),
        "monotone" => monotone(seed, pick(sizes.systems, 100), pick(sizes.per_system, 100)),
        "critical" => critical(seed, pick(sizes.systems, 100)),
        "claim1" => claim1(seed, pick(sizes.systems, 50), pick(sizes.per_system, 20)),
        "certify" => certify(seed),
        _ => return None,
    })
}

/// The two-queue example with optional field.
pub fn example_system(lambda: Option<Vec<f64>>) -> PwlPotential {
    SchedulingScenario::two_parallel_queues(lambda)
        .to_fpcs()
        .expect("example scenario is valid")
}

fn merge(name: &str, outcomes: Vec<CaseOutcome>) -> SuiteReport {
    let mut rep = SuiteReport::new(name);
    for o in outcomes {
        rep.absorb(o);
    }
    rep
}

/// Segment count `<= 2^m - 1` and strictly decreasing drift norms.
pub fn lemma2(seed: u64, systems: usize) -> SuiteReport {
    let outcomes = (0..systems as u64)
        .into_par_iter()
        .map(|k| {
            let mut o = CaseOutcome::default();
            let mut rng = rng_for(seed, k);
            let phi = random_small_system(&mut rng, 3, 6);
            let x0 = random_point(&mut rng, phi.dim, 3.0);
            match integrate_unperturbed(&phi, &x0, 50.0) {
                Err(e) => o.error(&format!("system {k}"), e),
                Ok(tr) => {
                    let m = phi.num_pieces();
                    let segs = tr.segment_count();
                    o.check(segs < 1 << m, || format!("system {k}: {segs} segments with m = {m}"));
                    let norms: Vec<f64> = tr.segment_drifts().iter().map(|d| linalg::norm(d)).collect();
                    let ok = norms.windows(2).all(|w| w[1] < w[0] - 1e-10);
                    o.check(ok, || format!("system {k}: drift norms {norms:?}"));
                    o.maxima.push(("max_segments".into(), segs as f64));
                }
            }
            o
        })
        .collect();
    merge("lemma2", outcomes)
}

/// Distance between two trajectories never increases (checked at merged breakpoints).
pub fn nonexpansive(seed: u64, systems: usize, pairs: usize) -> SuiteReport {
    let outcomes = (0..systems as u64)
        .into_par_iter()
        .map(|k| {
            let mut o = CaseOutcome::default();
            let mut rng = rng_for(seed, k);
            let phi = random_small_system(&mut rng, 3, 6);
            let mut worst = f64::NEG_INFINITY;
            for j in 0..pairs {
                let a = random_point(&mut rng, phi.dim, 3.0);
                let b = random_point(&mut rng, phi.dim, 3.0);
                let (ta, tb) = match (integrate_unperturbed(&phi, &a, 20.0), integrate_unperturbed(&phi, &b, 20.0)) {
                    (Ok(x), Ok(y)) => (x, y),
                    (Err(e), _) | (_, Err(e)) => {
                        o.error(&format!("system {k} pair {j}"), e);
                        continue;
                    }
                };
                let mut ts: Vec<f64> = ta.times().into_iter().chain(tb.times()).collect();
                ts.push(20.0);
                ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
                ts.dedup();
                let d: Vec<f64> = ts.iter().map(|&t| linalg::dist(&ta.value_at(t), &tb.value_at(t))).collect();
                let inc = d.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(inc);
                o.check(inc <= 1e-9, || format!("system {k} pair {j}: distance grew by {inc:e}"));
            }
            o.maxima.push(("max_distance_increase".into(), worst));
            o
        })
        .collect();
    merge("nonexpansive", outcomes)
}

/// `(ξ(x1) - ξ(x2))ᵀ(x1 - x2) <= 0`.
pub fn monotone(seed: u64, systems: usize, pairs: usize) -> SuiteReport {
    let outcomes = (0..systems as u64)
        .into_par_iter()
        .map(|k| {
            let mut o = CaseOutcome::default();
            let mut rng = rng_for(seed, k);
            let phi = random_small_system(&mut rng, 3, 6);
            let mut worst = f64::NEG_INFINITY;
            for j in 0..pairs {
                let a = random_point(&mut rng, phi.dim, 3.0);
                let b = if j % 2 == 0 {
                    random_point(&mut rng, phi.dim, 3.0)
                } else {
                    linalg::add(&a, &random_point(&mut rng, phi.dim, 0.05))
                };
                match (phi.xi(&a), phi.xi(&b)) {
                    (Ok(va), Ok(vb)) => {
                        let s = linalg::dot(&linalg::sub(&va, &vb), &linalg::sub(&a, &b));
                        worst = worst.max(s);
                        o.check(s <= 1e-9, || format!("system {k} pair {j}: {s:e}"));
                    }
                    (Err(e), _) | (_, Err(e)) => o.error(&format!("system {k} pair {j}"), e),
                }
            }
            o.maxima.push(("max_inner_product".into(), worst));
            o
        })
        .collect();
    merge("monotone", outcomes)
}

fn critical_case(phi: &PwlPotential, label: &str, seed: u64) -> Result<CaseOutcome> {
    let mut o = CaseOutcome::default();
    let mut rng = rng_for(seed, 1 << 32);
    let c = find_critical_points(phi)?;
    let cnc = compute_cnc(phi, &c)?;
    o.check(cnc > 0.0, || format!("{label}: cnc = {cnc}"));
    for p in c.iter() {
        let (_, act) = phi.evaluate(p)?;
        o.check(!is_low_dimensional(&act.drifts), || format!("{label}: {p:?} fails the rank test"));
    }

    // CNC is a basin radius of every critical point
    for p in c.iter() {
        o.check(verify_basin(phi, p, cnc)?, || format!("{label}: cnc basin fails at {p:?}"));
    }
    // some critical point has all of space as a basin
    if !c.is_empty() {
        let mut any = false;
        for p in c.iter() {
            any |= verify_basin(phi, p, f64::INFINITY)?;
        }
        o.check(any, || format!("{label}: no critical point has a global basin"));
    }
    // minimum-norm drift inside a basin
    for p in c.iter() {
        let xi = xi_of(phi, p)?;
        let u = drift_neighborhood(phi, p, cnc)?;
        let nx = linalg::norm(&xi);
        let ok = u.drifts.iter().all(|y| nx <= linalg::norm(y) + 1e-9);
        o.check(ok, || format!("{label}: ξ({p:?}) is not of minimum norm in its basin"));
    }
    // invariance under a constant field, with the shift written into the drifts
    let lam = random_point(&mut rng, phi.dim, 1.0);
    let shifted = PwlPotential::new(
        phi.dim,
        phi.drifts
            .iter()
            .zip(&phi.offsets)
            .map(|(d, b)| (linalg::add(d, &lam), *b))
            .collect(),
        None,
    )?;
    let c2 = find_critical_points(&shifted)?;
    let cnc2 = compute_cnc(&shifted, &c2)?;
    let same_points = c.len() == c2.len()
        && c.iter().zip(c2.iter()).all(|(a, b)| linalg::dist(a, b) <= 1e-9 * (1.0 + linalg::norm(a)));
    o.check(same_points, || format!("{label}: critical points moved under a field"));
    let same_cnc = (cnc.is_infinite() && cnc2.is_infinite()) || (cnc - cnc2).abs() <= 1e-9 * (1.0 + cnc.abs());
    o.check(same_cnc, || format!("{label}: cnc {cnc} vs {cnc2} under a field"));
    for _ in 0..20 {
        let x = random_point(&mut rng, phi.dim, 3.0);
        let (_, a) = phi.evaluate(&x)?;
        let (_, b) = shifted.evaluate(&x)?;
        o.check(a.indices == b.indices, || format!("{label}: regions differ at {x:?}"));
    }

    // far from C, neighbourhoods are low-dimensional
    let g = estimate_gamma(phi, &c, 300, seed)?;
    o.check(g.gamma_bound >= 1.0 && g.gamma_empirical <= g.gamma_bound + 1e-6, || {
        format!("{label}: gamma pair {g:?}")
    });
    o.maxima.push(("max_gamma_empirical_over_bound".into(), g.gamma_empirical / g.gamma_bound));
    let spread = 2.0 * c.diameter() + 3.0;
    let center = c.points.first().cloned().unwrap_or_else(|| vec![0.0; phi.dim]);
    for _ in 0..30 {
        let x = linalg::add(&center, &random_point(&mut rng, phi.dim, spread));
        let dc = c.distance_to(&x);
        let r = if dc.is_finite() {
            dc / g.gamma_bound * rng.random_range(0.0..1.0)
        } else {
            10f64.powf(rng.random_range(-2.0..2.0))
        };
        let u = drift_neighborhood(phi, &x, r)?;
        o.check(is_low_dimensional(&u.drifts), || format!("{label}: U_r({x:?}) full-dimensional at r = {r}"));
    }

    // no return to a basin after leaving it
    for p in c.iter() {
        let rho = cnc.min(2.0);
        for _ in 0..3 {
            let x0 = linalg::add(p, &random_point(&mut rng, phi.dim, 2.0 * rho));
            let r = no_revisit_check(phi, p, rho, &x0, 30.0)?;
            o.check(r.holds(), || format!("{label}: revisit near {p:?} from {x0:?}"));
        }
    }
    Ok(o)
}

/// Critical points, basins, field invariance, `γ` and no-revisit properties.
pub fn critical(seed: u64, systems: usize) -> SuiteReport {
    let mut outcomes: Vec<CaseOutcome> = (0..systems as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k);
            let phi = random_small_system(&mut rng, 3, 6);
            critical_case(&phi, &format!("system {k}"), seed.wrapping_add(k)).unwrap_or_else(|e| {
                let mut o = CaseOutcome::default();
                o.error(&format!("system {k}"), e);
                o
            })
        })
        .collect();
    let ex = critical_case(&example_system(None), "example", seed).unwrap_or_else(|e| {
        let mut o = CaseOutcome::default();
        o.error("example", e);
        o
    });
    outcomes.push(ex);
    merge("critical", outcomes)
}

fn claim1_case(phi: &PwlPotential, label: &str, seed: u64, samples: usize) -> Result<CaseOutcome> {
    let mut o = CaseOutcome::default();
    let mut rng = rng_for(seed, 1 << 33);
    let regions = Regions::new(phi);
    let n = phi.dim;
    let m = phi.num_pieces();
    let mut worst = 0.0_f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < samples && attempts < 50 * samples {
        attempts += 1;
        // land on a face shared by a few random pieces
        let k = rng.random_range(1..=n.min(m));
        let mut subset: Vec<usize> = Vec::new();
        while subset.len() < k {
            let i = rng.random_range(0..m);
            if !subset.contains(&i) {
                subset.push(i);
            }
        }
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for &i in &subset {
            normals.extend(regions.region(i).normals.iter().cloned());
            offsets.extend(regions.region(i).offsets.iter().cloned());
        }
        let face = Polyhedron { dim: n, normals, offsets };
        let Ok(pr) = project_onto_polyhedron(&face, &random_point(&mut rng, n, 3.0), KKT_TOL) else {
            continue;
        };
        let x = pr.point;
        let (_, act) = phi.evaluate(&x)?;
        let mut tilde = act.indices.clone();
        // optionally widen the subset while it stays low-dimensional
        if rng.random_bool(0.5) {
            let extra = rng.random_range(0..m);
            if !tilde.contains(&extra) {
                let mut t2 = tilde.clone();
                t2.push(extra);
                t2.sort_unstable();
                let pts = PointSet {
                    dim: n,
                    points: t2.iter().map(|&i| phi.drifts[i].clone()).collect(),
                };
                if is_low_dimensional(&pts) {
                    tilde = t2;
                }
            }
        }
        let pts = PointSet {
            dim: n,
            points: tilde.iter().map(|&i| phi.drifts[i].clone()).collect(),
        };
        if !is_low_dimensional(&pts) {
            continue;
        }
        let proj = project_subsystem(phi, &tilde)?;
        let xi = phi.xi(&x)?;
        let xy = proj.coords(&x);
        let (_, cact) = proj.child.evaluate(&xy)?;
        let child_xi = min_norm_point(&cact.drifts, MIN_NORM_TOL)?.point;
        let recon = linalg::add(&proj.w, &proj.lift(&child_xi));
        let res = linalg::dist(&recon, &xi);
        worst = worst.max(res);
        o.check(res <= 1e-9, || format!("{label}: residual {res:e} at {x:?} for subset {tilde:?}"));
        done += 1;
    }
    o.maxima.push(("max_residual".into(), worst));
    Ok(o)
}

/// `ξ(x) = w + Y ξ_Y(Yᵀx)` whenever `M(x)` lies in a low-dimensional subset.
pub fn claim1(seed: u64, systems: usize, samples: usize) -> SuiteReport {
    let mut outcomes: Vec<CaseOutcome> = (0..systems as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k);
            let n = rng.random_range(2..=3);
            let m = rng.random_range(2..=6);
            let phi = random_system(&mut rng, n, m);
            claim1_case(&phi, &format!("system {k}"), seed.wrapping_add(k), samples).unwrap_or_else(|e| {
                let mut o = CaseOutcome::default();
                o.error(&format!("system {k}"), e);
                o
            })
        })
        .collect();
    let ex = claim1_case(&example_system(None), "example", seed, samples).unwrap_or_else(|e| {
        let mut o = CaseOutcome::default();
        o.error("example", e);
        o
    });
    outcomes.push(ex);
    merge("claim1", outcomes)
}

/// The example's `κ = 1921` bound over the default certification sweep, with
/// and without the field `(0.3, 0.3)`.
pub fn certify(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("certify");
    let phi = example_system(None);
    let opts = ConstantsOptions {
        gamma_override: Some(1.0),
        ..Default::default()
    };
    let result = compute_constants(&phi, &opts).and_then(|r| {
        let params = CertifyParams {
            lambdas: vec![vec![0.3, 0.3]],
            seed,
            ..Default::default()
        };
        certify_kappa(&phi, &r, &params)
    });
    match result {
        Ok(out) => {
            rep.cases = out.runs;
            rep.metrics.insert("kappa".into(), out.kappa);
            rep.metrics.insert("max_ratio".into(), out.max_ratio);
            if !out.passed {
                rep.fail(format!("ratio {} exceeds kappa {} ({:?})", out.max_ratio, out.kappa, out.worst));
            }
        }
        Err(e) => rep.fail(e.to_string()),
    }
    rep
}
