//! CSV emission. Numbers use 17 significant digits so they round-trip.

use std::fmt::Write;

use fpcs_core::perturbation::GrowthPoint;
use fpcs_core::{Move, Trajectory};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=n {
        let _ = write!(h, ",x_{i}");
    }
    h.push_str(",segment_id,kind\n");
    h
}

/// One row per breakpoint. `segment_id` is the index of the move leaving the
/// breakpoint (the last breakpoint repeats the final move). Rows reached by a
/// jump are labelled `jump`.
pub fn trajectory_rows(out: &mut String, tr: &Trajectory, label: &str) {
    let last = tr.moves.len().saturating_sub(1);
    for (k, b) in tr.breakpoints.iter().enumerate() {
        let kind = match k.checked_sub(1).map(|j| &tr.moves[j]) {
            Some(Move::Jump { .. }) => "jump",
            _ => label,
        };
        out.push_str(&num(b.t));
        for v in &b.x {
            out.push(',');
            out.push_str(&num(*v));
        }
        let _ = writeln!(out, ",{},{kind}", k.min(last));
    }
}

pub fn growth_csv(curve: &[GrowthPoint]) -> String {
    let mut s = String::from("t,max_sup_deviation,mean_sup_deviation,median_sup_deviation,max_sup_perturbation\n");
    for g in curve {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(g.t),
            num(g.max_sup_deviation),
            num(g.mean_sup_deviation),
            num(g.median_sup_deviation),
            num(g.max_sup_perturbation)
        );
    }
    s
}
