use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrate_perturbed, make_path_with, measure_deviation, PathSpec};
use crate::error::Result;
use crate::integrate_unperturbed;
use crate::linalg;
use crate::random::rng_for;
use crate::system::PwlPotential;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub path: PathSpec,
    pub runs: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Number of log-spaced growth-curve checkpoints.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
}

fn default_checkpoints() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub sup_deviation: f64,
    pub sup_perturbation: f64,
    pub ratio: Option<f64>,
    pub cumulative_abs: f64,
}

/// Prefix statistics across runs at a checkpoint time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub t: f64,
    pub max_sup_deviation: f64,
    pub mean_sup_deviation: f64,
    pub median_sup_deviation: f64,
    pub max_sup_perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub runs: usize,
    /// Largest defined ratio; `None` if every run had `U ≡ 0`.
    pub ratio: Option<f64>,
    /// Same as `ratio` but `0` when undefined.
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Runs with `sup |U| = 0`, excluded from the ratio statistics.
    pub zero_perturbation_runs: usize,
    pub max_sup_deviation: f64,
    pub max_sup_perturbation: f64,
    pub per_run: Vec<RunSummary>,
    pub growth_curve: Vec<GrowthPoint>,
}

/// A run's summary and its prefix sup deviations at the checkpoints.
type RunOutput = (RunSummary, Vec<(f64, f64)>);

/// `k` log-spaced times ending at `horizon`, starting at `min(1, horizon / 100)`.
pub fn growth_checkpoints(horizon: f64, k: usize) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![horizon];
    }
    let lo = (horizon / 100.0).min(1.0).ln();
    let hi = horizon.ln();
    (0..k)
        .map(|i| {
            if i + 1 == k {
                horizon
            } else {
                (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect()
}

/// Independent perturbed runs from `x0`; run `i` draws its path from stream `i`
/// of `seed`. Runs execute on the current rayon pool and are collected in order.
pub fn sensitivity_sweep(phi: &PwlPotential, x0: &[f64], cfg: &SweepConfig) -> Result<SweepSummary> {
    let base = integrate_unperturbed(phi, x0, cfg.horizon)?;
    let checkpoints = growth_checkpoints(cfg.horizon, cfg.checkpoints);
    log::debug!("sweep: {} runs to horizon {}", cfg.runs, cfg.horizon);
    let results: Vec<Result<RunOutput>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = rng_for(cfg.seed, run as u64);
            let u = make_path_with(&cfg.path, phi.dim, &mut rng)?;
            let xt = integrate_perturbed(phi, x0, &u, cfg.horizon)?;
            let rep = measure_deviation(&base, &xt, &u)?;
            let growth = prefix_sups(&base, &xt, &rep.deviation_samples, &u, &checkpoints);
            Ok((
                RunSummary {
                    run,
                    sup_deviation: rep.sup_deviation,
                    sup_perturbation: rep.sup_perturbation,
                    ratio: rep.ratio,
                    cumulative_abs: rep.cumulative_abs,
                },
                growth,
            ))
        })
        .collect();
    let mut per_run = Vec::with_capacity(cfg.runs);
    let mut growth_runs = Vec::with_capacity(cfg.runs);
    for r in results {
        let (s, g) = r?;
        per_run.push(s);
        growth_runs.push(g);
    }

    let ratios: Vec<f64> = per_run.iter().filter_map(|r| r.ratio).collect();
    let ratio = ratios.iter().cloned().reduce(f64::max);
    let mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let growth_curve = checkpoints
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut devs: Vec<f64> = growth_runs.iter().map(|g| g[i].0).collect();
            let pmax = growth_runs.iter().map(|g| g[i].1).fold(0.0, f64::max);
            devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            GrowthPoint {
                t,
                max_sup_deviation: devs.last().copied().unwrap_or(0.0),
                mean_sup_deviation: if devs.is_empty() {
                    0.0
                } else {
                    devs.iter().sum::<f64>() / devs.len() as f64
                },
                median_sup_deviation: median(&devs),
                max_sup_perturbation: pmax,
            }
        })
        .collect();
    Ok(SweepSummary {
        runs: cfg.runs,
        ratio,
        max_ratio: ratio.unwrap_or(0.0),
        mean_ratio,
        zero_perturbation_runs: per_run.iter().filter(|r| r.ratio.is_none()).count(),
        max_sup_deviation: per_run.iter().map(|r| r.sup_deviation).fold(0.0, f64::max),
        max_sup_perturbation: per_run.iter().map(|r| r.sup_perturbation).fold(0.0, f64::max),
        per_run,
        growth_curve,
    })
}

/// Median of a sorted slice (`0` when empty).
pub(crate) fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => sorted[n / 2],
        _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

fn prefix_sups(
    x: &Trajectory,
    xt: &Trajectory,
    samples: &[(f64, f64)],
    u: &super::PerturbationPath,
    checkpoints: &[f64],
) -> Vec<(f64, f64)> {
    checkpoints
        .iter()
        .map(|&t| {
            let mut dev = samples
                .iter()
                .take_while(|s| s.0 <= t)
                .map(|s| s.1)
                .fold(0.0, f64::max);
            dev = dev
                .max(linalg::dist(&x.value_at(t), &xt.value_at(t)))
                .max(linalg::dist(&x.left_limit(t), &xt.left_limit(t)));
            (dev, u.sup_norm_until(t))
        })
        .collect()
}

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
    fn zero_perturbation_is_flagged() {
        let cfg = SweepConfig {
            path: PathSpec::Deterministic { jumps: vec![] },
            runs: 1,
            horizon: 5.0,
            seed: 0,
            checkpoints: 3,
        };
        let s = sensitivity_sweep(&two_queues(), &[1.0, 2.0], &cfg).unwrap();
        assert_eq!(s.ratio, None);
        assert_eq!(s.max_ratio, 0.0);
        assert_eq!(s.zero_perturbation_runs, 1);
        assert_eq!(s.max_sup_deviation, 0.0);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let cfg = SweepConfig {
            path: PathSpec::BernoulliSteps {
                amplitude: 0.5,
                count: 30,
            },
            runs: 8,
            horizon: 30.0,
            seed: 4,
            checkpoints: 5,
        };
        let a = sensitivity_sweep(&two_queues(), &[1.0, 2.0], &cfg).unwrap();
        let b = sensitivity_sweep(&two_queues(), &[1.0, 2.0], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.growth_curve.len(), 5);
        assert_eq!(a.growth_curve[4].max_sup_deviation, a.max_sup_deviation);
        for w in a.growth_curve.windows(2) {
            assert!(w[0].max_sup_deviation <= w[1].max_sup_deviation);
        }
    }

    #[test]
    fn checkpoints_are_log_spaced() {
        let c = growth_checkpoints(1e4, 3);
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 100.0).abs() < 1e-9 && c[2] == 1e4);
    }
}
