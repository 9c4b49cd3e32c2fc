use super::PerturbationPath;
use crate::error::{Error, Result};
use crate::integrate::{check_inputs, flow_until};
use crate::system::PwlPotential;
use crate::trajectory::{Terminal, Trajectory, TrajectoryBuilder};

/// Segment guard for a perturbed trajectory (flows plus jumps).
pub const PERTURBED_SEGMENT_GUARD: usize = 10_000_000;

/// Solution of `x̃(t) = x0 + ∫ f̃ dτ + U(t)` for piecewise-constant `U`.
///
/// Between jumps the state follows the unperturbed flow; each jump is recorded
/// as a zero-duration breakpoint. A jump at `t = 0` is folded into the start.
pub fn integrate_perturbed(
    phi: &PwlPotential,
    x0: &[f64],
    u: &PerturbationPath,
    horizon: f64,
) -> Result<Trajectory> {
    check_inputs(phi, x0, horizon)?;
    if u.dim != phi.dim {
        return Err(Error::DimensionMismatch {
            expected: phi.dim,
            found: u.dim,
        });
    }
    if let Some(t) = u.last_time() {
        if t > horizon {
            return Err(Error::BadParams(format!(
                "perturbation jump at {t} lies beyond the horizon {horizon}"
            )));
        }
    }
    let start = crate::linalg::add(x0, &u.initial());
    let mut b = TrajectoryBuilder::new(0.0, start);
    for j in u.jumps.iter().filter(|j| j.t > 0.0) {
        let eq = flow_until(phi, &mut b, j.t, PERTURBED_SEGMENT_GUARD)?;
        if eq {
            b.flow_to(j.t, vec![0.0; phi.dim]);
        }
        b.jump(j.increment.clone());
    }
    let eq = flow_until(phi, &mut b, horizon, PERTURBED_SEGMENT_GUARD)?;
    let terminal = if eq {
        Terminal::Equilibrium
    } else {
        Terminal::HorizonCapped
    };
    Ok(b.finish(horizon, terminal))
}
