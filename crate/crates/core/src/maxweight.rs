//! Max-Weight scheduling fluid models as FPCS systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::perturbation::PerturbationPath;
use crate::system::PwlPotential;

/// Queues served by a Max-Weight scheduler choosing among service vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulingScenario {
    pub services: Vec<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    #[serde(default = "default_idle")]
    pub idle: bool,
    /// Per-queue weights; the scheduler maximizes `Σ w_i x_i s_i`.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn default_idle() -> bool {
    true
}

impl SchedulingScenario {
    /// Two parallel unit-rate queues with an idle option.
    pub fn two_parallel_queues(lambda: Option<Vec<f64>>) -> Self {
        Self {
            services: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            lambda,
            idle: true,
            weights: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.services.first().map_or(0, |s| s.len())
    }

    /// Pieces `μ_i = -s_i` (weighted: `-w ∘ s_i`) with zero offsets, plus the
    /// zero piece when idling is allowed; the arrival rate becomes the field.
    pub fn to_fpcs(&self) -> Result<PwlPotential> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidSystem("at least one queue and one service vector are required".into()));
        }
        let weights = match &self.weights {
            Some(w) => {
                check_len(n, w.len())?;
                if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::BadParams("weights must be positive".into()));
                }
                w.clone()
            }
            None => vec![1.0; n],
        };
        let mut drifts: Vec<Vec<f64>> = Vec::new();
        for s in &self.services {
            check_len(n, s.len())?;
            if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::BadParams("service rates must be finite and nonnegative".into()));
            }
            drifts.push(s.iter().zip(&weights).map(|(a, w)| -a * w).collect());
        }
        if self.idle {
            drifts.push(vec![0.0; n]);
        }
        for i in 0..drifts.len() {
            for j in 0..i {
                if linalg::dist(&drifts[i], &drifts[j]) <= crate::system::ACTIVE_TOL {
                    return Err(Error::DuplicateVectors(j, i));
                }
            }
        }
        let lambda = match &self.lambda {
            Some(l) => {
                check_len(n, l.len())?;
                Some(l.clone())
            }
            None => None,
        };
        PwlPotential::new(n, drifts.into_iter().map(|d| (d, 0.0)).collect(), lambda)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Centered arrival noise: slot `k` contributes a jump `counts_k - λ` at time `k + 1`.
pub fn arrivals_to_perturbation(counts: &[Vec<f64>], lambda: &[f64]) -> Result<PerturbationPath> {
    let n = lambda.len();
    let mut jumps = Vec::with_capacity(counts.len());
    for (k, c) in counts.iter().enumerate() {
        check_len(n, c.len())?;
        if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadParams(format!("arrival counts in slot {k} must be nonnegative")));
        }
        jumps.push(((k + 1) as f64, linalg::sub(c, lambda)));
    }
    PerturbationPath::new(n, jumps)
}
