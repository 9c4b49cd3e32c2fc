//! The recursive sensitivity constant `κ`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{estimate_gamma, find_critical_points, is_low_dimensional, Regions, GAMMA_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::{affine_min_norm_point, PointSet};
use crate::linalg;
use crate::perturbation::{
    integrate_perturbed, make_path_with, measure_deviation, PathSpec, PerturbationPath,
};
use crate::random::{random_point, rng_for};
use crate::system::PwlPotential;
use crate::integrate_unperturbed;

/// Restriction of a system to a low-dimensional drift subset, written in
/// coordinates of the `(n-1)`-dimensional subspace `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedSystem {
    pub subset: Vec<usize>,
    /// Min-norm point of the affine hull of the subset.
    pub w: Vec<f64>,
    /// Orthonormal basis (`n - 1` vectors).
    pub basis: Vec<Vec<f64>>,
    pub child: PwlPotential,
}

impl ProjectedSystem {
    /// `Yᵀx`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|y| linalg::dot(y, x)).collect()
    }

    /// `Y c`.
    pub fn lift(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.w.len()];
        for (y, ck) in self.basis.iter().zip(c) {
            for (o, yk) in out.iter_mut().zip(y) {
                *o += ck * yk;
            }
        }
        out
    }
}

/// Project `phi` onto the pieces in `subset`: `w` is the min-norm point of
/// their affine hull and the child has drifts `Yᵀ(μ - w)` with the original
/// offsets.
pub fn project_subsystem(phi: &PwlPotential, subset: &[usize]) -> Result<ProjectedSystem> {
    let n = phi.dim;
    if subset.is_empty() || n == 0 {
        return Err(Error::NotLowDimensional);
    }
    let pts = PointSet {
        dim: n,
        points: subset.iter().map(|&i| phi.drifts[i].clone()).collect(),
    };
    if !is_low_dimensional(&pts) {
        return Err(Error::NotLowDimensional);
    }
    let w = affine_min_norm_point(&pts)?;
    let diffs: Vec<Vec<f64>> = pts.points[1..]
        .iter()
        .map(|p| linalg::sub(p, &pts.points[0]))
        .collect();
    let span = linalg::row_space_basis(&diffs, n, crate::critical::RANK_TOL);
    let nw = linalg::norm(&w);
    let exclude = if nw > 1e-12 {
        vec![linalg::scale(&w, 1.0 / nw)]
    } else {
        Vec::new()
    };
    let mut basis = linalg::complete_basis(&span, &exclude, n, n - 1);
    for y in basis.iter_mut() {
        linalg::canonical_sign(y, 1e-12);
    }
    let scale = pts.points.iter().map(|p| linalg::norm(p)).fold(1.0, f64::max);
    for d in &diffs {
        if linalg::dot(d, &w).abs() > 1e-9 * scale * scale {
            return Err(Error::InvalidSystem("affine min-norm point not orthogonal to the hull".into()));
        }
    }
    let mut pieces = Vec::with_capacity(subset.len());
    for &i in subset {
        let rel = linalg::sub(&phi.drifts[i], &w);
        let c: Vec<f64> = basis.iter().map(|y| linalg::dot(y, &rel)).collect();
        let back: Vec<f64> = {
            let mut o = vec![0.0; n];
            for (y, ck) in basis.iter().zip(&c) {
                for (ok, yk) in o.iter_mut().zip(y) {
                    *ok += ck * yk;
                }
            }
            o
        };
        if linalg::dist(&back, &rel) > 1e-9 * scale {
            return Err(Error::InvalidSystem("projected drift leaves the subspace".into()));
        }
        pieces.push((c, phi.offsets[i]));
    }
    let child = PwlPotential::new(n - 1, pieces, None)?;
    Ok(ProjectedSystem {
        subset: subset.to_vec(),
        w,
        basis,
        child,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    Override,
    Bound,
    /// Not needed by the branch taken.
    Unused,
}

/// Which formula produced `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBranch {
    ZeroDimensional,
    SinglePiece,
    OneDimensional,
    NoCriticalPoints,
    /// Every region contains the unique critical point: `κ = 4(γ+1)η + 1`.
    SingleCriticalPoint,
    /// `κ = 4 D^C / θ* + 5 (M+2)(γ+1) η`.
    General,
}

/// Child constant for one low-dimensional drift subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetTrace {
    pub subset: Vec<usize>,
    pub child_dim: usize,
    pub child_pieces: usize,
    #[serde(with = "crate::serde_num")]
    pub kappa: f64,
    pub branch: KappaBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub n: usize,
    /// Pieces with a non-empty region (the only ones that can ever be active).
    pub m: usize,
    /// Number of critical points.
    #[serde(rename = "M")]
    pub num_critical: usize,
    #[serde(rename = "D_C", with = "crate::serde_num")]
    pub diameter: f64,
    #[serde(with = "crate::serde_num")]
    pub gamma: f64,
    pub gamma_source: GammaSource,
    #[serde(with = "crate::serde_num")]
    pub gamma_min: f64,
    #[serde(with = "crate::serde_num")]
    pub sigma: f64,
    #[serde(with = "crate::serde_num")]
    pub eta: f64,
    #[serde(with = "crate::serde_num")]
    pub theta_star: f64,
    #[serde(with = "crate::serde_num")]
    pub kappa: f64,
    pub branch: KappaBranch,
    pub trace: Vec<SubsetTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsOptions {
    /// Replaces the computed `γ` at the top level.
    pub gamma_override: Option<f64>,
    /// Constant used for every one-dimensional system with at least two pieces.
    pub one_dim_kappa: f64,
    /// Total number of drift subsets the recursion may enumerate.
    pub subset_budget: u64,
    pub gamma_samples: usize,
    pub seed: u64,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        Self {
            gamma_override: None,
            one_dim_kappa: 1.0,
            subset_budget: 1 << 16,
            gamma_samples: 200,
            seed: 0,
        }
    }
}

struct Ctx {
    opts: ConstantsOptions,
    used: u64,
    memo: HashMap<String, (f64, KappaBranch)>,
}

pub fn compute_constants(phi: &PwlPotential, opts: &ConstantsOptions) -> Result<ConstantsReport> {
    if let Some(g) = opts.gamma_override {
        if !(g.is_finite() && g >= 1.0) {
            return Err(Error::BadParams(format!("gamma override must be finite and >= 1, got {g}")));
        }
    }
    let mut ctx = Ctx {
        opts: *opts,
        used: 0,
        memo: HashMap::new(),
    };
    report(phi, &mut ctx, true)
}

/// Drops pieces whose region is empty; they never influence the dynamics.
fn prune(phi: &PwlPotential) -> Result<PwlPotential> {
    let regions = Regions::new(phi);
    let pieces: Vec<(Vec<f64>, f64)> = (0..phi.num_pieces())
        .filter(|&i| regions.is_nonempty(i))
        .map(|i| (phi.drifts[i].clone(), phi.offsets[i]))
        .collect();
    let mut out = PwlPotential::new(phi.dim, pieces, None)?;
    out.active_tol = phi.active_tol;
    Ok(out)
}

fn canonical_key(phi: &PwlPotential) -> String {
    let mut rows: Vec<String> = phi
        .drifts
        .iter()
        .zip(&phi.offsets)
        .map(|(d, b)| {
            let mut s: Vec<String> = d.iter().map(|v| format!("{:.9}", v + 0.0)).collect();
            s.push(format!("{:.9}", b + 0.0));
            s.join(",")
        })
        .collect();
    rows.sort();
    format!("{}|{}", phi.dim, rows.join(";"))
}

fn report(phi: &PwlPotential, ctx: &mut Ctx, top: bool) -> Result<ConstantsReport> {
    let phi = if phi.dim == 0 { phi.clone() } else { prune(phi)? };
    let n = phi.dim;
    let m = phi.num_pieces();
    let base = |kappa: f64, branch: KappaBranch| ConstantsReport {
        n,
        m,
        num_critical: 0,
        diameter: 0.0,
        gamma: 1.0,
        gamma_source: GammaSource::Unused,
        gamma_min: f64::INFINITY,
        sigma: 0.0,
        eta: 0.0,
        theta_star: f64::INFINITY,
        kappa,
        branch,
        trace: Vec::new(),
    };
    if n == 0 {
        return Ok(base(0.0, KappaBranch::ZeroDimensional));
    }
    if m == 1 {
        return Ok(base(1.0, KappaBranch::SinglePiece));
    }
    if n == 1 {
        let mut r = base(ctx.opts.one_dim_kappa, KappaBranch::OneDimensional);
        let c = find_critical_points(&phi)?;
        r.num_critical = c.len();
        r.diameter = c.diameter();
        return Ok(r);
    }

    let needed = ctx.used.saturating_add(1u64.checked_shl(m as u32).unwrap_or(u64::MAX));
    if m >= 63 || needed > ctx.opts.subset_budget {
        return Err(Error::ScaleLimit {
            needed,
            budget: ctx.opts.subset_budget,
        });
    }
    ctx.used = needed;

    // children over every non-empty low-dimensional subset
    let mut trace = Vec::new();
    let mut max_child = 0.0_f64;
    for mask in 1u64..(1u64 << m) {
        let subset: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let pts = PointSet {
            dim: n,
            points: subset.iter().map(|&i| phi.drifts[i].clone()).collect(),
        };
        if !is_low_dimensional(&pts) {
            continue;
        }
        let proj = project_subsystem(&phi, &subset)?;
        let key = canonical_key(&proj.child);
        let (kappa, branch) = match ctx.memo.get(&key) {
            Some(v) => *v,
            None => {
                let r = report(&proj.child, ctx, false)?;
                ctx.memo.insert(key, (r.kappa, r.branch));
                (r.kappa, r.branch)
            }
        };
        max_child = max_child.max(kappa);
        trace.push(SubsetTrace {
            subset,
            child_dim: proj.child.dim,
            child_pieces: proj.child.num_pieces(),
            kappa,
            branch,
        });
    }
    let sigma = 4.0 + max_child;
    log::debug!("n={n} m={m}: {} low-dimensional subsets, max child kappa {max_child}", trace.len());
    let eta = m as f64 * 2f64.powi(m as i32 + 1) * sigma;

    let c = find_critical_points(&phi)?;
    let num_critical = c.len();
    let diameter = c.diameter();
    let gamma_min = crate::critical::compute_cnc(&phi, &c)?;
    let mut out = ConstantsReport {
        n,
        m,
        num_critical,
        diameter,
        gamma: 1.0,
        gamma_source: GammaSource::Unused,
        gamma_min,
        sigma,
        eta,
        theta_star: f64::INFINITY,
        kappa: eta,
        branch: KappaBranch::NoCriticalPoints,
        trace,
    };
    if c.is_empty() {
        return Ok(out);
    }
    let (gamma, source) = match (top, ctx.opts.gamma_override) {
        (true, Some(g)) => (g, GammaSource::Override),
        _ => {
            let g = estimate_gamma(&phi, &c, ctx.opts.gamma_samples, ctx.opts.seed)?;
            (g.gamma_bound, GammaSource::Bound)
        }
    };
    out.gamma = gamma;
    out.gamma_source = source;
    let mm = num_critical as f64;
    out.theta_star = gamma_min / (40.0 * (mm + 2.0) * (gamma + 1.0) * eta);
    if gamma_min.is_infinite() && diameter == 0.0 {
        out.branch = KappaBranch::SingleCriticalPoint;
        out.kappa = 4.0 * (gamma + 1.0) * eta + 1.0;
    } else {
        out.branch = KappaBranch::General;
        out.kappa = 4.0 * diameter / out.theta_star + 5.0 * (mm + 2.0) * (gamma + 1.0) * eta;
    }
    Ok(out)
}

/// Relative slack when comparing a measured ratio against `κ`; absorbs
/// rounding in trajectories that are exact in real arithmetic.
pub const RATIO_REL_TOL: f64 = 1e-9;

pub fn ratio_within(ratio: f64, kappa: f64) -> bool {
    ratio <= kappa * (1.0 + RATIO_REL_TOL)
}

/// Sweep parameters for [`certify_kappa`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub thetas: Vec<f64>,
    pub horizon: f64,
    /// Bernoulli runs per (start, field, θ).
    pub bernoulli_runs: usize,
    /// Starting points; random ones are drawn when empty.
    pub initial_states: Vec<Vec<f64>>,
    /// External fields to try; the system's own field is always included.
    pub lambdas: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            thetas: vec![0.01, 0.1, 1.0],
            horizon: 20.0,
            bernoulli_runs: 6,
            initial_states: Vec::new(),
            lambdas: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutcome {
    pub passed: bool,
    pub kappa: f64,
    pub runs: usize,
    pub max_ratio: f64,
    /// Description of the run attaining `max_ratio`.
    pub worst: Option<String>,
}

/// Deterministic perturbations aimed at the system's geometry: a held step
/// and square waves of periods 1 and 4 along `±e_i` and every normalized drift.
pub fn adversarial_paths(phi: &PwlPotential, theta: f64, horizon: f64) -> Result<Vec<(String, PerturbationPath)>> {
    let n = phi.dim;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut push = |v: Vec<f64>| {
        let nv = linalg::norm(&v);
        if nv > 1e-12 {
            let u = linalg::scale(&v, 1.0 / nv);
            if !dirs.iter().any(|d| linalg::dist(d, &u) < 1e-9) {
                dirs.push(u);
            }
        }
    };
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        push(e.clone());
        push(linalg::scale(&e, -1.0));
    }
    for d in &phi.drifts {
        push(d.clone());
        push(linalg::scale(d, -1.0));
    }
    let mut out = Vec::new();
    for (k, u) in dirs.iter().enumerate() {
        let step = PerturbationPath::new(n, vec![(horizon.min(1.0) * 0.5, linalg::scale(u, theta))])?;
        out.push((format!("step dir#{k}"), step));
        for period in [1.0, 4.0] {
            let spec = PathSpec::SquareWave {
                amplitude: theta,
                period,
                horizon,
                direction: Some(u.clone()),
            };
            let p = make_path_with(&spec, n, &mut rng_for(0, 0))?;
            out.push((format!("square period {period} dir#{k}"), p));
        }
    }
    Ok(out)
}

/// Runs perturbed simulations over square-wave, adversarial and Bernoulli
/// families (for every start, field and θ) and checks each ratio against `κ`.
pub fn certify_kappa(phi: &PwlPotential, report: &ConstantsReport, params: &CertifyParams) -> Result<CertifyOutcome> {
    let n = phi.dim;
    let mut starts = params.initial_states.clone();
    if starts.is_empty() {
        let mut rng = rng_for(params.seed, u64::MAX);
        starts.push(vec![0.0; n]);
        for _ in 0..3 {
            starts.push(random_point(&mut rng, n, 3.0));
        }
    }
    let mut fields = vec![phi.lambda.clone()];
    for l in &params.lambdas {
        if !fields.contains(l) {
            fields.push(l.clone());
        }
    }

    let mut jobs: Vec<(String, PwlPotential, Vec<f64>, PerturbationPath)> = Vec::new();
    let mut stream = 0u64;
    for lambda in &fields {
        let sys = phi.with_lambda(lambda.clone())?;
        for (si, x0) in starts.iter().enumerate() {
            for &theta in &params.thetas {
                let tag = format!("lambda={lambda:?} start#{si} theta={theta}");
                for (name, p) in adversarial_paths(phi, theta, params.horizon)? {
                    jobs.push((format!("{tag} {name}"), sys.clone(), x0.clone(), p));
                }
                let count = params.horizon.floor() as usize;
                for r in 0..params.bernoulli_runs {
                    let spec = PathSpec::BernoulliSteps { amplitude: theta, count };
                    let p = make_path_with(&spec, n, &mut rng_for(params.seed, stream))?;
                    stream += 1;
                    jobs.push((format!("{tag} bernoulli#{r}"), sys.clone(), x0.clone(), p));
                }
            }
        }
    }
    let ratios: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|(_, sys, x0, u)| {
            let x = integrate_unperturbed(sys, x0, params.horizon)?;
            let xt = integrate_perturbed(sys, x0, u, params.horizon)?;
            Ok(measure_deviation(&x, &xt, u)?.ratio.unwrap_or(0.0))
        })
        .collect();
    let mut max_ratio = 0.0_f64;
    let mut worst = None;
    for (job, r) in jobs.iter().zip(ratios) {
        let r = r?;
        if r > max_ratio {
            max_ratio = r;
            worst = Some(job.0.clone());
        }
    }
    Ok(CertifyOutcome {
        passed: ratio_within(max_ratio, report.kappa),
        kappa: report.kappa,
        runs: jobs.len(),
        max_ratio,
        worst,
    })
}

/// Sample count used by the CLI for `γ` estimates.
pub const DEFAULT_GAMMA_SAMPLES: usize = GAMMA_SAMPLES;

#[cfg(test)]
mod tests {
    use super::*;

    fn two_queues() -> PwlPotential {
        PwlPotential::new(
            2,
            vec![(vec![-1.0, 0.0], 0.0), (vec![0.0, -1.0], 0.0), (vec![0.0, 0.0], 0.0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn two_queues_worked_constants() {
        let opts = ConstantsOptions {
            gamma_override: Some(1.0),
            ..Default::default()
        };
        let r = compute_constants(&two_queues(), &opts).unwrap();
        assert_eq!(r.num_critical, 1);
        assert_eq!(r.diameter, 0.0);
        assert_eq!(r.sigma, 5.0);
        assert_eq!(r.eta, 240.0);
        assert_eq!(r.kappa, 1921.0);
        assert_eq!(r.branch, KappaBranch::SingleCriticalPoint);
        assert_eq!(r.gamma_source, GammaSource::Override);
        assert!(r.trace.iter().all(|t| t.kappa == 1.0));
        assert_eq!(r.trace.len(), 6);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["kappa"], serde_json::json!(1921));
        assert_eq!(json["gamma_min"], serde_json::json!("inf"));
    }

    #[test]
    fn two_queues_default_gamma_uses_bound() {
        let r = compute_constants(&two_queues(), &ConstantsOptions::default()).unwrap();
        assert_eq!(r.gamma_source, GammaSource::Bound);
        assert!(r.gamma >= 2f64.sqrt());
        assert_eq!(r.kappa, 4.0 * (r.gamma + 1.0) * 240.0 + 1.0);
    }

    #[test]
    fn single_piece_kappa_is_one() {
        let phi = PwlPotential::new(2, vec![(vec![1.0, 2.0], 0.0)], None).unwrap();
        assert_eq!(compute_constants(&phi, &ConstantsOptions::default()).unwrap().kappa, 1.0);
    }

    #[test]
    fn field_does_not_change_constants() {
        let a = compute_constants(&two_queues(), &ConstantsOptions::default()).unwrap();
        let b = compute_constants(&two_queues().with_lambda(vec![0.3, 0.3]).unwrap(), &ConstantsOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn projection_examples() {
        let phi = two_queues();
        let p = project_subsystem(&phi, &[0, 2]).unwrap();
        assert!(linalg::norm(&p.w) < 1e-12);
        assert_eq!(p.basis, vec![vec![1.0, 0.0]]);
        assert_eq!(p.child.drifts, vec![vec![-1.0], vec![0.0]]);

        let p = project_subsystem(&phi, &[0, 1]).unwrap();
        assert!(linalg::dist(&p.w, &[-0.5, -0.5]) < 1e-12);
        let s = 0.5f64.sqrt();
        assert!(linalg::dist(&p.basis[0], &[s, -s]) < 1e-12);
        let mut d: Vec<f64> = p.child.drifts.iter().map(|v| v[0]).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((d[0] + s).abs() < 1e-12 && (d[1] - s).abs() < 1e-12);

        let p = project_subsystem(&phi, &[1]).unwrap();
        assert_eq!(p.w, vec![0.0, -1.0]);
        assert_eq!(p.child.drifts, vec![vec![0.0]]);
        assert_eq!(project_subsystem(&phi, &[0, 1, 2]).unwrap_err(), Error::NotLowDimensional);
    }

    #[test]
    fn budget_is_enforced() {
        let opts = ConstantsOptions {
            subset_budget: 4,
            ..Default::default()
        };
        assert!(matches!(
            compute_constants(&two_queues(), &opts),
            Err(Error::ScaleLimit { .. })
        ));
    }

    #[test]
    fn certify_single_piece() {
        let phi = PwlPotential::new(2, vec![(vec![0.5, 0.0], 0.0)], None).unwrap();
        let r = compute_constants(&phi, &ConstantsOptions::default()).unwrap();
        let params = CertifyParams {
            bernoulli_runs: 2,
            ..Default::default()
        };
        let out = certify_kappa(&phi, &r, &params).unwrap();
        assert!(out.passed, "{out:?}");
        assert!((out.max_ratio - 1.0).abs() < 1e-9);
    }
}
