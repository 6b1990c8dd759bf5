//! The two-exit test problem with a known discontinuous solution: unit speed,
//! path length as both costs, exits `A_1 = (0, 0.5)` (penalty 1.5) and
//! `A_2 = (1, 0.5)` (free).

use serde::Serialize;

use crate::augmented::AugmentedField;
use crate::error::Result;
use crate::field::INF;
use crate::grid::{BudgetAxes, BudgetAxis, Grid2, Point};
use crate::model::{ControlProblem, CostModel, SpeedModel, TerminalCost};

pub const EXIT_PENALIZED: Point = [0.0, 0.5];
pub const EXIT_FREE: Point = [1.0, 0.5];
pub const PENALTY: f64 = 1.5;

#[inline]
fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Exact `w(x, b)`. Reaching an exit ends the motion, so at the penalized
/// exit itself the value is the penalty even when the free exit is in range.
pub fn analytic_w(x: Point, b: f64) -> f64 {
    if x == EXIT_PENALIZED && b >= 0.0 {
        return PENALTY;
    }
    let d2 = dist(x, EXIT_FREE);
    let d1 = dist(x, EXIT_PENALIZED);
    if d2 <= b {
        d2
    } else if d1 <= b {
        d1 + PENALTY
    } else {
        INF
    }
}

/// The problem on an `n × n` grid with budget axis `[0, bound]`.
pub fn problem(grid: Grid2, axis: BudgetAxis) -> Result<ControlProblem> {
    let a1 = {
        let (i, j) = grid.nearest(EXIT_PENALIZED);
        grid.index(i, j)
    };
    let a2 = {
        let (i, j) = grid.nearest(EXIT_FREE);
        grid.index(i, j)
    };
    let mut q0 = TerminalCost::new();
    q0.insert(a1, PENALTY);
    q0.insert(a2, 0.0);
    let mut q1 = TerminalCost::new();
    q1.insert(a1, 0.0);
    q1.insert(a2, 0.0);
    ControlProblem::new(
        grid,
        SpeedModel::Constant(1.0),
        vec![CostModel::PathLength, CostModel::PathLength],
        vec![q0, q1],
        BudgetAxes::new(vec![axis])?,
        vec![],
    )
}

/// Allowed angular intervals of a circle of radius `r` around `c`: points
/// inside the unit square and, if `avoid` is given, outside that disc.
fn arcs(c: Point, r: f64, avoid: Option<(Point, f64)>) -> Vec<(f64, f64)> {
    const SAMPLES: usize = 4096;
    let ok = |th: f64| {
        let p = [c[0] + r * th.cos(), c[1] + r * th.sin()];
        let inside = (-1e-12..=1.0 + 1e-12).contains(&p[0]) && (-1e-12..=1.0 + 1e-12).contains(&p[1]);
        inside && avoid.is_none_or(|(a, ra)| dist(p, a) >= ra)
    };
    let tau = std::f64::consts::TAU;
    let refine = |mut lo: f64, mut hi: f64, lo_ok: bool| {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) == lo_ok {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut out = Vec::new();
    let mut start: Option<f64> = if ok(0.0) { Some(0.0) } else { None };
    let mut prev_ok = ok(0.0);
    for k in 1..=SAMPLES {
        let th = tau * k as f64 / SAMPLES as f64;
        let now = ok(th);
        if now != prev_ok {
            let edge = refine(tau * (k - 1) as f64 / SAMPLES as f64, th, prev_ok);
            if now {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                out.push((s, edge));
            }
        }
        prev_ok = now;
    }
    if let Some(s) = start {
        out.push((s, tau));
    }
    out
}

fn distance_to_arcs(x: Point, c: Point, r: f64, arcs: &[(f64, f64)]) -> f64 {
    let mut best = INF;
    let phi = (x[1] - c[1]).atan2(x[0] - c[0]).rem_euclid(std::f64::consts::TAU);
    for &(a, b) in arcs {
        if phi >= a && phi <= b {
            best = best.min((dist(x, c) - r).abs());
        }
        for th in [a, b] {
            best = best.min(dist(x, [c[0] + r * th.cos(), c[1] + r * th.sin()]));
        }
    }
    best
}

/// Distance from `x` to the set where `w(·, b)` is discontinuous: the circle
/// of radius `b` around the free exit, and the part of the circle around the
/// penalized exit outside that disc (both restricted to the unit square),
/// plus the penalized exit itself once the free exit is within reach.
pub struct Discontinuities {
    b: f64,
    free: Vec<(f64, f64)>,
    penalized: Vec<(f64, f64)>,
}

impl Discontinuities {
    pub fn new(b: f64) -> Self {
        if b <= 0.0 {
            return Discontinuities {
                b,
                free: Vec::new(),
                penalized: Vec::new(),
            };
        }
        Discontinuities {
            b,
            free: arcs(EXIT_FREE, b, None),
            penalized: arcs(EXIT_PENALIZED, b, Some((EXIT_FREE, b))),
        }
    }

    pub fn distance(&self, x: Point) -> f64 {
        if self.b <= 0.0 {
            return INF;
        }
        let arcs = distance_to_arcs(x, EXIT_FREE, self.b, &self.free).min(distance_to_arcs(
            x,
            EXIT_PENALIZED,
            self.b,
            &self.penalized,
        ));
        if self.b >= dist(EXIT_PENALIZED, EXIT_FREE) {
            arcs.min(dist(x, EXIT_PENALIZED))
        } else {
            arcs
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceErrors {
    /// `Σ |W - w| h² Δb_1` over gridpoints where both are finite.
    pub l1: f64,
    /// Max error over points at distance at least `1.5 Δb_1` from the
    /// discontinuities (where both are finite).
    pub linf: f64,
    /// Gridpoints where exactly one of `W`, `w` is finite.
    pub finiteness_mismatches: usize,
    /// Of those, how many lie in the `L_∞` region.
    pub mismatches_away_from_jumps: usize,
}

pub fn errors(field: &AugmentedField) -> ConvergenceErrors {
    let grid = field.grid;
    let axis = field.budgets.axis(0);
    let h = grid.h();
    let db = axis.delta();
    let mut out = ConvergenceErrors {
        l1: 0.0,
        linf: 0.0,
        finiteness_mismatches: 0,
        mismatches_away_from_jumps: 0,
    };
    for s in 0..axis.count {
        let b = axis.value(s);
        let jumps = Discontinuities::new(b);
        for k in grid.indices() {
            let x = grid.point_of(k);
            let exact = analytic_w(x, b);
            let w = field.value(s, k, 0);
            let away = jumps.distance(x) >= 1.5 * db;
            match (exact.is_finite(), w.is_finite()) {
                (true, true) => {
                    let e = (w - exact).abs();
                    out.l1 += e * h * h * db;
                    if away {
                        out.linf = out.linf.max(e);
                    }
                }
                (false, false) => {}
                _ => {
                    out.finiteness_mismatches += 1;
                    if away {
                        out.mismatches_away_from_jumps += 1;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        assert!((analytic_w([0.25, 0.5], 1.0) - 0.75).abs() < 1e-15);
        assert!((analytic_w([0.25, 0.5], 0.5) - 1.75).abs() < 1e-15);
        assert_eq!(analytic_w([0.25, 0.5], 0.2), INF);
    }

    #[test]
    fn discontinuity_distance() {
        let d = Discontinuities::new(0.5);
        // On the free-exit circle.
        assert!(d.distance([0.5, 0.5]) < 1e-9);
        // Circle around A_1 of radius 0.5 touches the free disc only at (0.5, 0.5).
        assert!(d.distance([0.0, 1.0]) < 1e-9);
        assert!((d.distance([0.25, 0.5]) - 0.25).abs() < 1e-9);
        // Small radius: arcs lie inside the square only partially.
        let d = Discontinuities::new(0.2);
        assert!((d.distance([0.5, 0.5]) - 0.3).abs() < 1e-9);
    }
}
