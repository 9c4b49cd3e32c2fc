//! Simulation and analysis of finitely piecewise constant subgradient systems.

pub mod constants;
pub mod critical;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod linalg;
pub mod maxweight;
pub mod perturbation;
pub mod random;
pub mod serde_num;
pub mod suites;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use integrate::integrate_unperturbed;
pub use system::{persisting_subset, ActiveSet, PwlPotential};
pub use trajectory::{Breakpoint, Move, Terminal, Trajectory};
pub use perturbation::{
    integrate_perturbed, make_path, measure_deviation, sensitivity_sweep, DeviationReport, PathSpec,
    PerturbationPath, SweepConfig, SweepSummary,
};
pub use critical::{
    analyze, compute_cnc, drift_neighborhood, estimate_gamma, find_critical_points, is_low_dimensional,
    no_revisit_check, verify_basin, CriticalAnalysis, GammaEstimate, NoRevisit,
};
pub use constants::{
    certify_kappa, compute_constants, project_subsystem, CertifyParams, ConstantsOptions, ConstantsReport,
    KappaBranch, ProjectedSystem,
};
pub use maxweight::{arrivals_to_perturbation, SchedulingScenario};
