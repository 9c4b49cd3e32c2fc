use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::random::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationJump {
    pub t: f64,
    pub increment: Vec<f64>,
}

/// Right-continuous piecewise-constant `U` with `U(0-) = 0` and
/// `U(t) = Σ_{t_k <= t} ΔU_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPath {
    pub dim: usize,
    pub jumps: Vec<PerturbationJump>,
}

impl PerturbationPath {
    /// Sorts by time, merges simultaneous jumps and drops zero increments.
    pub fn new(dim: usize, jumps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let mut js = jumps;
        for (t, inc) in &js {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::BadParams(format!("jump time {t} must be finite and >= 0")));
            }
            if inc.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: inc.len(),
                });
            }
            if !linalg::all_finite(inc) {
                return Err(Error::NonFinite("jump increment"));
            }
        }
        js.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out: Vec<PerturbationJump> = Vec::with_capacity(js.len());
        for (t, inc) in js {
            match out.last_mut() {
                Some(last) if last.t == t => {
                    last.increment = linalg::add(&last.increment, &inc);
                }
                _ => out.push(PerturbationJump { t, increment: inc }),
            }
        }
        out.retain(|j| j.increment.iter().any(|&v| v != 0.0));
        Ok(Self { dim, jumps: out })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            jumps: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.dim];
        for j in self.jumps.iter().take_while(|j| j.t <= t) {
            u = linalg::add(&u, &j.increment);
        }
        u
    }

    /// `U(0)`.
    pub fn initial(&self) -> Vec<f64> {
        self.value_at(0.0)
    }

    /// `sup_{τ <= t} |U(τ)|`, exact from the partial sums.
    pub fn sup_norm_until(&self, t: f64) -> f64 {
        let mut u = vec![0.0; self.dim];
        let mut best = 0.0_f64;
        for j in self.jumps.iter().take_while(|j| j.t <= t) {
            u = linalg::add(&u, &j.increment);
            best = best.max(linalg::norm(&u));
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_until(f64::INFINITY)
    }

    /// `Σ_k |ΔU_k|`.
    pub fn cumulative_abs(&self) -> f64 {
        self.jumps.iter().map(|j| linalg::norm(&j.increment)).fold(0.0, |a, b| a + b)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.jumps.last().map(|j| j.t)
    }

    /// Partial sums `(t_k, U(t_k))`.
    pub fn values(&self) -> Vec<(f64, Vec<f64>)> {
        let mut u = vec![0.0; self.dim];
        self.jumps
            .iter()
            .map(|j| {
                u = linalg::add(&u, &j.increment);
                (j.t, u.clone())
            })
            .collect()
    }
}

/// Perturbation families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    /// Explicit `(time, increment)` list.
    Deterministic { jumps: Vec<(f64, Vec<f64>)> },
    /// `count` jumps at `t = 1, 2, ...`, each `±amplitude` along a uniformly
    /// chosen coordinate.
    BernoulliSteps { amplitude: f64, count: usize },
    /// Brownian increments `N(0, volatility² h)` per coordinate at multiples of `h`.
    DiscretizedWiener {
        volatility: f64,
        #[serde(default = "default_wiener_step")]
        step: f64,
        horizon: f64,
    },
    /// `+amplitude·direction` at `t = 0`, then alternating `∓2·amplitude·direction`
    /// every half period before `horizon`.
    SquareWave {
        amplitude: f64,
        period: f64,
        horizon: f64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
}

fn default_wiener_step() -> f64 {
    1e-2
}

/// Build a path from `spec`, drawing randomness from stream 0 of `seed`.
pub fn make_path(spec: &PathSpec, dim: usize, seed: u64) -> Result<PerturbationPath> {
    make_path_with(spec, dim, &mut rng_for(seed, 0))
}

pub fn make_path_with<R: Rng>(spec: &PathSpec, dim: usize, rng: &mut R) -> Result<PerturbationPath> {
    let bad = |s: &str| Err(Error::BadParams(s.to_string()));
    match spec {
        PathSpec::Deterministic { jumps } => PerturbationPath::new(dim, jumps.clone()),
        PathSpec::BernoulliSteps { amplitude, count } => {
            if !(amplitude.is_finite() && *amplitude >= 0.0) {
                return bad("bernoulli_steps amplitude must be finite and >= 0");
            }
            if dim == 0 {
                return Ok(PerturbationPath::zero(0));
            }
            let jumps = (1..=*count)
                .map(|k| {
                    let mut inc = vec![0.0; dim];
                    let i = rng.random_range(0..dim);
                    inc[i] = if rng.random_bool(0.5) { *amplitude } else { -*amplitude };
                    (k as f64, inc)
                })
                .collect();
            PerturbationPath::new(dim, jumps)
        }
        PathSpec::DiscretizedWiener {
            volatility,
            step,
            horizon,
        } => {
            if !(volatility.is_finite() && *volatility >= 0.0) {
                return bad("discretized_wiener volatility must be finite and >= 0");
            }
            if !(step.is_finite() && *step > 0.0 && horizon.is_finite() && *horizon >= 0.0) {
                return bad("discretized_wiener step must be > 0 and horizon >= 0");
            }
            let normal = Normal::new(0.0, volatility * step.sqrt())
                .map_err(|e| Error::BadParams(e.to_string()))?;
            let count = (horizon / step + 1e-9).floor() as usize;
            let jumps = (1..=count)
                .map(|k| (k as f64 * step, (0..dim).map(|_| normal.sample(rng)).collect()))
                .collect();
            PerturbationPath::new(dim, jumps)
        }
        PathSpec::SquareWave {
            amplitude,
            period,
            horizon,
            direction,
        } => {
            if !(amplitude.is_finite() && period.is_finite() && *period > 0.0 && horizon.is_finite()) {
                return bad("square_wave needs finite amplitude, period > 0 and finite horizon");
            }
            let dir = match direction {
                Some(d) => {
                    if d.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: d.len(),
                        });
                    }
                    let nd = linalg::norm(d);
                    if !(nd.is_finite() && nd > 0.0) {
                        return bad("square_wave direction must be a finite nonzero vector");
                    }
                    linalg::scale(d, 1.0 / nd)
                }
                None => {
                    if dim == 0 {
                        return Ok(PerturbationPath::zero(0));
                    }
                    let mut e = vec![0.0; dim];
                    e[0] = 1.0;
                    e
                }
            };
            let half = period / 2.0;
            let mut jumps = vec![(0.0, linalg::scale(&dir, *amplitude))];
            let mut k = 1usize;
            while (k as f64) * half < *horizon {
                let sign = if k % 2 == 1 { -2.0 } else { 2.0 };
                jumps.push((k as f64 * half, linalg::scale(&dir, sign * amplitude)));
                k += 1;
            }
            PerturbationPath::new(dim, jumps)
        }
    }
}
