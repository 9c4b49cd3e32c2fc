use serde::{Deserialize, Serialize};

use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub x: Vec<f64>,
}

/// What happens between two consecutive breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    Flow { drift: Vec<f64> },
    /// Zero-duration translation by a perturbation increment.
    Jump { increment: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// Reached a point with zero drift; the state stays there forever.
    Equilibrium,
    HorizonCapped,
}

/// Piecewise-linear path with optional jumps. `moves[k]` connects
/// `breakpoints[k]` and `breakpoints[k + 1]`; after the last breakpoint the
/// state is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub breakpoints: Vec<Breakpoint>,
    pub moves: Vec<Move>,
    pub horizon: f64,
    pub terminal: Terminal,
}

impl Trajectory {
    pub fn start(&self) -> &[f64] {
        &self.breakpoints[0].x
    }

    pub fn end(&self) -> &Breakpoint {
        self.breakpoints.last().expect("trajectory has a start point")
    }

    /// Drifts of the flow segments, in order.
    pub fn segment_drifts(&self) -> Vec<&[f64]> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Flow { drift } => Some(drift.as_slice()),
                Move::Jump { .. } => None,
            })
            .collect()
    }

    pub fn segment_count(&self) -> usize {
        self.segment_drifts().len()
    }

    pub fn jump_count(&self) -> usize {
        self.moves.len() - self.segment_count()
    }

    /// State at time `t` (right-continuous at jumps).
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let k = self.breakpoints.partition_point(|b| b.t <= t);
        self.extrapolate(k.saturating_sub(1), t)
    }

    /// `lim_{s↑t} x(s)`; the initial state for `t` at or before the start.
    pub fn left_limit(&self, t: f64) -> Vec<f64> {
        let k = self.breakpoints.partition_point(|b| b.t < t);
        if k == 0 {
            return self.breakpoints[0].x.clone();
        }
        self.extrapolate(k - 1, t)
    }

    fn extrapolate(&self, k: usize, t: f64) -> Vec<f64> {
        let b = &self.breakpoints[k];
        match self.moves.get(k) {
            Some(Move::Flow { drift }) => linalg::axpy(&b.x, t - b.t, drift),
            _ => b.x.clone(),
        }
    }

    /// Times of all breakpoints (jump times appear twice).
    pub fn times(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|b| b.t).collect()
    }
}

/// Incremental construction used by the integrators.
#[derive(Debug, Clone)]
pub(crate) struct TrajectoryBuilder {
    breakpoints: Vec<Breakpoint>,
    moves: Vec<Move>,
    dim: usize,
}

const MERGE_TOL: f64 = 1e-9;

impl TrajectoryBuilder {
    pub fn new(t0: f64, x0: Vec<f64>) -> Self {
        Self {
            dim: x0.len(),
            breakpoints: vec![Breakpoint { t: t0, x: x0 }],
            moves: Vec::new(),
        }
    }

    pub fn time(&self) -> f64 {
        self.breakpoints.last().unwrap().t
    }

    pub fn state(&self) -> &[f64] {
        &self.breakpoints.last().unwrap().x
    }

    pub fn segments(&self) -> usize {
        self.moves.len()
    }

    /// Flow with `drift` until `t_end`; merges with the previous segment when
    /// the drift is unchanged.
    pub fn flow_to(&mut self, t_end: f64, drift: Vec<f64>) {
        if t_end <= self.time() {
            return;
        }
        let n = self.breakpoints.len();
        if let Some(Move::Flow { drift: prev }) = self.moves.last() {
            if linalg::dist(prev, &drift) <= MERGE_TOL * (1.0 + linalg::norm(prev)) {
                let start = &self.breakpoints[n - 2];
                let x = linalg::axpy(&start.x, t_end - start.t, prev);
                self.breakpoints[n - 1] = Breakpoint { t: t_end, x };
                return;
            }
        }
        let last = &self.breakpoints[n - 1];
        let x = linalg::axpy(&last.x, t_end - last.t, &drift);
        self.breakpoints.push(Breakpoint { t: t_end, x });
        self.moves.push(Move::Flow { drift });
    }

    pub fn jump(&mut self, increment: Vec<f64>) {
        let last = self.breakpoints.last().unwrap();
        let x = linalg::add(&last.x, &increment);
        let t = last.t;
        self.breakpoints.push(Breakpoint { t, x });
        self.moves.push(Move::Jump { increment });
    }

    pub fn finish(self, horizon: f64, terminal: Terminal) -> Trajectory {
        Trajectory {
            dim: self.dim,
            breakpoints: self.breakpoints,
            moves: self.moves,
            horizon,
            terminal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let mut b = TrajectoryBuilder::new(0.0, vec![2.0, 1.0]);
        b.flow_to(1.0, vec![-1.0, 0.0]);
        b.jump(vec![0.5, 0.0]);
        b.flow_to(2.0, vec![-0.5, -0.5]);
        b.finish(5.0, Terminal::Equilibrium)
    }

    #[test]
    fn right_continuous_lookup() {
        let tr = sample();
        assert_eq!(tr.value_at(0.5), vec![1.5, 1.0]);
        assert_eq!(tr.value_at(1.0), vec![1.5, 1.0]);
        assert_eq!(tr.left_limit(1.0), vec![1.0, 1.0]);
        assert_eq!(tr.value_at(4.0), vec![1.0, 0.5]);
        assert_eq!(tr.segment_count(), 2);
        assert_eq!(tr.jump_count(), 1);
    }

    #[test]
    fn equal_drifts_merge() {
        let mut b = TrajectoryBuilder::new(0.0, vec![0.0]);
        b.flow_to(1.0, vec![1.0]);
        b.flow_to(3.0, vec![1.0]);
        let tr = b.finish(3.0, Terminal::HorizonCapped);
        assert_eq!(tr.breakpoints.len(), 2);
        assert_eq!(tr.end().x, vec![3.0]);
    }
}
