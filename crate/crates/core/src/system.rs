use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_norm_point, PointSet, Polyhedron, MIN_NORM_TOL};
use crate::linalg;

/// Default relative tolerance for ties in the maximum.
pub const ACTIVE_TOL: f64 = 1e-9;

/// `Φ(x) = max_i (-μ_iᵀx + b_i)` together with a constant external field `λ`.
///
/// The dynamics are `ẋ ∈ -∂Φ(x) + λ`, i.e. the FPCS system whose drifts are
/// `μ_i + λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlPotential {
    pub dim: usize,
    pub drifts: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub lambda: Vec<f64>,
    pub active_tol: f64,
}

/// Indices of the pieces attaining the maximum and their drifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub drifts: PointSet,
}

impl PwlPotential {
    /// Build a potential from `(μ, b)` pairs. Pieces sharing a drift (within
    /// the active tolerance) are collapsed onto the one with the largest
    /// offset, since the others are never active.
    pub fn new(dim: usize, pieces: Vec<(Vec<f64>, f64)>, lambda: Option<Vec<f64>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidSystem("at least one piece is required".into()));
        }
        let lambda = lambda.unwrap_or_else(|| vec![0.0; dim]);
        if lambda.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: lambda.len(),
            });
        }
        if !linalg::all_finite(&lambda) {
            return Err(Error::NonFinite("external field"));
        }
        let mut drifts: Vec<Vec<f64>> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        for (mu, b) in pieces {
            if mu.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: mu.len(),
                });
            }
            if !linalg::all_finite(&mu) || !b.is_finite() {
                return Err(Error::NonFinite("piece"));
            }
            match drifts.iter().position(|d| linalg::dist(d, &mu) <= ACTIVE_TOL) {
                Some(k) => offsets[k] = offsets[k].max(b),
                None => {
                    drifts.push(mu);
                    offsets.push(b);
                }
            }
        }
        Ok(Self {
            dim,
            drifts,
            offsets,
            lambda,
            active_tol: ACTIVE_TOL,
        })
    }

    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        let pieces = self
            .drifts
            .iter()
            .cloned()
            .zip(self.offsets.iter().cloned())
            .collect();
        let mut out = Self::new(self.dim, pieces, Some(lambda))?;
        out.active_tol = self.active_tol;
        Ok(out)
    }

    pub fn num_pieces(&self) -> usize {
        self.drifts.len()
    }

    pub fn has_field(&self) -> bool {
        self.lambda.iter().any(|&v| v != 0.0)
    }

    /// Drifts of the shifted system, `μ_i + λ`.
    pub fn shifted_drift(&self, i: usize) -> Vec<f64> {
        linalg::add(&self.drifts[i], &self.lambda)
    }

    /// Values `-μ_iᵀx + b_i` of every piece.
    pub fn piece_values(&self, x: &[f64]) -> Vec<f64> {
        self.drifts
            .iter()
            .zip(&self.offsets)
            .map(|(mu, b)| -linalg::dot(mu, x) + b)
            .collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if !linalg::all_finite(x) {
            return Err(Error::NonFinite("state"));
        }
        Ok(())
    }

    /// `Φ(x)` and the active set `M(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<(f64, ActiveSet)> {
        self.check_point(x)?;
        let vals = self.piece_values(x);
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = self.active_tol * (1.0 + top.abs());
        let indices: Vec<usize> = (0..vals.len()).filter(|&i| top - vals[i] <= tol).collect();
        Ok((top, self.active_set(indices)))
    }

    pub fn active_set(&self, indices: Vec<usize>) -> ActiveSet {
        let points = indices.iter().map(|&i| self.drifts[i].clone()).collect();
        ActiveSet {
            indices,
            drifts: PointSet {
                dim: self.dim,
                points,
            },
        }
    }

    /// `ξ(x)`, the min-norm element of `conv M(x)`, ignoring the field.
    pub fn xi(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, act) = self.evaluate(x)?;
        Ok(min_norm_point(&act.drifts, MIN_NORM_TOL)?.point)
    }

    /// Right derivative of the trajectory through `x`: the min-norm element of
    /// `conv{μ + λ : μ ∈ M(x)}`. Equals `ξ(x)` when there is no field.
    pub fn actual_drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, act) = self.evaluate(x)?;
        self.shifted_min_norm(&act.indices)
    }

    pub(crate) fn shifted_min_norm(&self, indices: &[usize]) -> Result<Vec<f64>> {
        let pts = PointSet {
            dim: self.dim,
            points: indices.iter().map(|&i| self.shifted_drift(i)).collect(),
        };
        Ok(min_norm_point(&pts, MIN_NORM_TOL)?.point)
    }

    /// Effective region `R_i = {x : (μ_i - μ_j)ᵀx <= b_i - b_j, j ≠ i}`.
    pub fn region(&self, i: usize) -> Polyhedron {
        let mut normals = Vec::with_capacity(self.num_pieces() - 1);
        let mut offsets = Vec::with_capacity(self.num_pieces() - 1);
        for j in 0..self.num_pieces() {
            if j != i {
                normals.push(linalg::sub(&self.drifts[i], &self.drifts[j]));
                offsets.push(self.offsets[i] - self.offsets[j]);
            }
        }
        Polyhedron {
            dim: self.dim,
            normals,
            offsets,
        }
    }

    /// Largest drift norm, used to scale tolerances.
    pub fn drift_scale(&self) -> f64 {
        self.drifts
            .iter()
            .map(|d| linalg::norm(&linalg::add(d, &self.lambda)))
            .fold(1.0, f64::max)
    }
}

/// Pieces of `active` that stay maximal when moving along `xi`: the argmax of
/// `-μᵀξ` over the active drifts.
pub fn persisting_subset(phi: &PwlPotential, active: &ActiveSet, xi: &[f64]) -> ActiveSet {
    let rates: Vec<f64> = active
        .indices
        .iter()
        .map(|&i| -linalg::dot(&phi.drifts[i], xi))
        .collect();
    let top = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + phi.drift_scale() * linalg::norm(xi));
    let indices = active
        .indices
        .iter()
        .zip(&rates)
        .filter(|(_, &r)| top - r <= tol)
        .map(|(&i, _)| i)
        .collect();
    phi.active_set(indices)
}
