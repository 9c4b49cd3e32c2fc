//! Piecewise-constant perturbations, the perturbed-trajectory engine and
//! deviation measurement.

mod deviation;
mod engine;
mod path;
mod sweep;

pub use deviation::{measure_deviation, DeviationReport};
pub use engine::{integrate_perturbed, PERTURBED_SEGMENT_GUARD};
pub use path::{make_path, make_path_with, PathSpec, PerturbationJump, PerturbationPath};
pub use sweep::{growth_checkpoints, sensitivity_sweep, GrowthPoint, RunSummary, SweepConfig, SweepSummary};
