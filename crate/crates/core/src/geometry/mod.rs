//! Small dense polyhedral primitives.
//!
//! Everything here works on desk-scale instances (dimension up to ~6, a few
//! dozen constraints) in double precision. All functions are pure.

mod hoffman;
mod min_norm;
mod nnls;
mod projection;
mod vertices;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub use hoffman::{hoffman_constant, hoffman_empirical_ratio, hoffman_ratio_at};
pub use min_norm::{affine_min_norm_point, min_norm_point, MinNormPoint};
pub use projection::{project_onto_polyhedron, Projection};
pub use vertices::enumerate_vertices;

/// Default duality-gap tolerance for [`min_norm_point`] (inputs are pre-scaled).
pub const MIN_NORM_TOL: f64 = 1e-12;
/// Default KKT tolerance for [`project_onto_polyhedron`].
pub const KKT_TOL: f64 = 1e-10;
/// Relative vertex deduplication tolerance.
pub const VERTEX_TOL: f64 = 1e-8;

/// A finite list of points in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        Ok(Self { dim, points })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.points.iter()
    }

    /// True if some stored point lies within `tol * (1 + |p|)` of `p`.
    pub fn contains_approx(&self, p: &[f64], tol: f64) -> bool {
        self.points
            .iter()
            .any(|q| linalg::dist(p, q) <= tol * (1.0 + linalg::norm(p)))
    }

    /// Largest pairwise distance; zero for fewer than two points.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0_f64;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(linalg::dist(p, q));
            }
        }
        d
    }

    /// Distance from `x` to the nearest point, `+inf` for an empty set.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|q| linalg::dist(x, q))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `{x : a_i^T x <= c_i for all i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub dim: usize,
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl Polyhedron {
    pub fn new(dim: usize, normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: normals.len(),
                found: offsets.len(),
            });
        }
        for a in &normals {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            if !linalg::all_finite(a) {
                return Err(Error::NonFinite("polyhedron normal"));
            }
        }
        if !linalg::all_finite(&offsets) {
            return Err(Error::NonFinite("polyhedron offset"));
        }
        Ok(Self {
            dim,
            normals,
            offsets,
        })
    }

    /// The whole space (no constraints).
    pub fn whole(dim: usize) -> Self {
        Self {
            dim,
            normals: Vec::new(),
            offsets: Vec::new(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.normals.len()
    }

    /// Largest constraint violation `max_i (a_i^T x - c_i)`, or `-inf` without constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, c)| linalg::dot(a, x) - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, c)| linalg::dot(a, x) - c <= tol * (1.0 + linalg::norm(a) * (1.0 + linalg::norm(x))))
    }

    pub fn is_feasible(&self) -> bool {
        project_onto_polyhedron(self, &vec![0.0; self.dim], KKT_TOL).is_ok()
    }

    /// Rows rescaled to unit length; zero rows are dropped (`None` if a zero
    /// row is violated, i.e. `0 <= c` fails).
    pub fn normalized(&self) -> Option<Self> {
        let mut normals = Vec::with_capacity(self.normals.len());
        let mut offsets = Vec::with_capacity(self.normals.len());
        for (a, &c) in self.normals.iter().zip(&self.offsets) {
            let na = linalg::norm(a);
            if na <= 1e-300 {
                if c < 0.0 {
                    return None;
                }
                continue;
            }
            normals.push(linalg::scale(a, 1.0 / na));
            offsets.push(c / na);
        }
        Some(Self {
            dim: self.dim,
            normals,
            offsets,
        })
    }

    /// Distance to the single half-space `i` (zero when satisfied).
    pub fn halfspace_distance(&self, i: usize, x: &[f64]) -> f64 {
        let a = &self.normals[i];
        let na = linalg::norm(a);
        if na == 0.0 {
            return 0.0;
        }
        ((linalg::dot(a, x) - self.offsets[i]) / na).max(0.0)
    }
}
