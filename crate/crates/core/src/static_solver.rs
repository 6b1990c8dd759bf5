//! Semi-Lagrangian solver for the static HJB equation
//! `max_a { (∇u · a) f(x,a) + K(x,a) } ... = 0` with exit cost `q`, using
//! Gauss-Seidel sweeps in four alternating orders.

use serde::{Deserialize, Serialize};

use crate::angles::{unit, AngleSearch};
use crate::error::{Error, Result};
use crate::field::{bilinear_weights, max_finite, ScalarField, INF};
use crate::grid::Point;
use crate::medium::{step_in_square, Medium};
use crate::model::TerminalCost;

/// Convergence threshold on the max-norm of one sweep's updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum SweepTolerance {
    Absolute(f64),
    /// Multiple of the largest finite value.
    Relative(f64),
}

impl SweepTolerance {
    pub fn resolve(&self, values: &[f64]) -> f64 {
        match *self {
            SweepTolerance::Absolute(t) => t,
            SweepTolerance::Relative(r) => r * max_finite(values).unwrap_or(0.0).max(1e-12),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticSolveParams {
    /// Pseudo-time step. `None` picks it per direction so the foot lands on
    /// the boundary of the gridpoint's 3x3 neighbourhood, which keeps
    /// interpolation along a single cell edge.
    pub tau: Option<f64>,
    pub sweep_tolerance: SweepTolerance,
    pub max_sweeps: usize,
    pub search: AngleSearch,
    /// Order in which the four sweep directions are cycled; entries are
    /// `0: (+x,+y), 1: (-x,+y), 2: (-x,-y), 3: (+x,-y)`.
    pub sweep_orders: [u8; 4],
}

impl Default for StaticSolveParams {
    fn default() -> Self {
        StaticSolveParams {
            tau: None,
            sweep_tolerance: SweepTolerance::Relative(1e-9),
            max_sweeps: 2000,
            search: AngleSearch::default(),
            sweep_orders: [0, 1, 2, 3],
        }
    }
}

impl StaticSolveParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(Error::param("tau", format!("must be positive, got {t}")));
            }
        }
        let tol = match self.sweep_tolerance {
            SweepTolerance::Absolute(t) | SweepTolerance::Relative(t) => t,
        };
        if !(tol > 0.0) {
            return Err(Error::param("sweep_tolerance", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::param("max_sweeps", "must be at least 1"));
        }
        AngleSearch::new(self.search.restarts, self.search.tolerance)?;
        let mut seen = [false; 4];
        for &o in &self.sweep_orders {
            if o > 3 || std::mem::replace(&mut seen[o as usize], true) {
                return Err(Error::param("sweep_orders", "must be a permutation of 0..4"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct StaticSolve {
    pub field: ScalarField,
    pub sweeps: usize,
    pub last_change: f64,
}

/// Interpolation stencil of the foot of one characteristic step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Foot {
    pub corners: [usize; 4],
    pub weights: [f64; 4],
    pub tau: f64,
}

impl Foot {
    /// Solves `U = τK + Σ w_c U_c` for `U` at `self_idx`, treating the
    /// gridpoint's own weight implicitly.
    #[inline]
    pub fn implicit_value(&self, self_idx: usize, values: &[f64], running: f64) -> f64 {
        let mut rest = 0.0;
        let mut w_self = 0.0;
        for c in 0..4 {
            let w = self.weights[c];
            if w <= 0.0 {
                continue;
            }
            if self.corners[c] == self_idx {
                w_self += w;
            } else {
                let v = values[self.corners[c]];
                if v == INF {
                    return INF;
                }
                rest += w * v;
            }
        }
        if w_self >= 1.0 - 1e-12 {
            return INF;
        }
        (running + rest) / (1.0 - w_self)
    }
}

/// One-step geometry shared by the static and restricted solvers.
pub(crate) struct Stencil<'a> {
    pub medium: &'a Medium,
    pub tau: Option<f64>,
}

impl<'a> Stencil<'a> {
    /// Reach of a step from `idx` (an upper bound on |foot - x|).
    #[inline]
    pub fn reach_at(&self, idx: usize) -> f64 {
        match self.tau {
            Some(t) => t * self.medium.max_speed_node(idx),
            None => self.medium.grid().h() * std::f64::consts::SQRT_2,
        }
    }

    /// Foot of the step from gridpoint `idx` in direction `a`, and the speed
    /// used. `None` if the step degenerates or crosses an obstacle.
    #[inline]
    pub fn foot(&self, idx: usize, p: Point, a: [f64; 2], near_obstacle: bool) -> Option<(Foot, f64)> {
        let grid = self.medium.grid();
        let f = self.medium.speed_node(idx, a);
        if !(f > 0.0) {
            return None;
        }
        let tau = match self.tau {
            Some(t) => t,
            None => grid.h() / (f * a[0].abs().max(a[1].abs())),
        };
        let step = step_in_square(p, a, f, tau);
        if step.tau <= 1e-14 {
            return None;
        }
        if near_obstacle && self.medium.segment_blocked(p, step.foot) {
            return None;
        }
        let (i0, j0, gx, gy) = grid.cell_snapped(step.foot);
        let nx = grid.nx();
        let k = j0 * nx + i0;
        Some((
            Foot {
                corners: [k, k + 1, k + nx, k + nx + 1],
                weights: bilinear_weights(gx, gy),
                tau: step.tau,
            },
            f,
        ))
    }
}

/// Solves for the value function of running cost `cost` (an index into the
/// medium's costs) and terminal cost `terminal`.
pub fn solve_static(
    medium: &Medium,
    cost: usize,
    terminal: &TerminalCost,
    params: &StaticSolveParams,
) -> Result<ScalarField> {
    solve_static_detailed(medium, cost, terminal, params).map(|s| s.field)
}

pub fn solve_static_detailed(
    medium: &Medium,
    cost: usize,
    terminal: &TerminalCost,
    params: &StaticSolveParams,
) -> Result<StaticSolve> {
    params.validate()?;
    let grid = *medium.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let n = grid.len();
    let h = grid.h();
    let stencil = Stencil {
        medium,
        tau: params.tau,
    };

    let mut values = vec![INF; n];
    // Gridpoints that are never updated: terminal points and obstacles.
    let mut fixed = vec![false; n];
    for k in 0..n {
        if medium.blocked(k) {
            fixed[k] = true;
        }
    }
    for (k, q) in terminal.finite_entries() {
        if !medium.blocked(k) {
            values[k] = q;
            fixed[k] = true;
        }
    }
    if !fixed.iter().zip(&values).any(|(f, v)| *f && v.is_finite()) {
        return Err(Error::InvalidProblem(
            "terminal cost is +INF everywhere outside obstacles".into(),
        ));
    }

    let local_feet = params.tau.is_none() || (0..n).all(|k| stencil.reach_at(k) <= h * (1.0 + 1e-12));
    let octants = local_feet && params.search.restarts % 4 == 0;
    let near: Vec<bool> = (0..n)
        .map(|k| medium.near_obstacle(grid.point_of(k), stencil.reach_at(k) + 1e-12))
        .collect();

    // Sweep number of a gridpoint's last change / last evaluation.
    let mut changed_at = vec![1u32; n];
    let mut evaluated_at = vec![0u32; n];

    let mut sweeps = 0;
    let mut last_change = INF;
    let mut quiet_orders = 0;
    while sweeps < params.max_sweeps {
        sweeps += 1;
        let stamp = sweeps as u32;
        let order = params.sweep_orders[(sweeps - 1) % 4];
        let (rev_i, rev_j) = match order {
            0 => (false, false),
            1 => (true, false),
            2 => (true, true),
            _ => (false, true),
        };
        let mut max_change = 0.0f64;
        let mut gained = false;
        for jj in 0..ny {
            let j = if rev_j { ny - 1 - jj } else { jj };
            for ii in 0..nx {
                let i = if rev_i { nx - 1 - ii } else { ii };
                let idx = j * nx + i;
                if fixed[idx] {
                    continue;
                }
                if local_feet {
                    let last = evaluated_at[idx];
                    let mut dirty = false;
                    'nb: for dj in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                        for di in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
                            if changed_at[dj * nx + di] >= last {
                                dirty = true;
                                break 'nb;
                            }
                        }
                    }
                    if !dirty {
                        continue;
                    }
                }
                evaluated_at[idx] = stamp;
                let p = grid.point(i, j);
                let old = values[idx];
                let new = update_node(&stencil, cost, &values, idx, i, j, p, near[idx], octants, &params.search);
                if new < old {
                    values[idx] = new;
                    changed_at[idx] = stamp;
                    if old == INF {
                        gained = true;
                    } else {
                        max_change = max_change.max(old - new);
                    }
                }
            }
        }
        last_change = if gained { INF } else { max_change };
        let tol = params.sweep_tolerance.resolve(&values);
        if !gained && max_change <= tol {
            quiet_orders += 1;
        } else {
            quiet_orders = 0;
        }
        // A quiet sweep after the first full cycle means no direction has
        // anything left to propagate.
        if quiet_orders >= 1 && sweeps >= 4 {
            return Ok(StaticSolve {
                field: ScalarField::from_values(grid, values),
                sweeps,
                last_change,
            });
        }
    }
    Err(Error::NotConverged {
        sweeps,
        residual: last_change,
        field: Box::new(ScalarField::from_values(grid, values)),
    })
}

#[allow(clippy::too_many_arguments)]
fn update_node(
    stencil: &Stencil,
    cost: usize,
    values: &[f64],
    idx: usize,
    i: usize,
    j: usize,
    p: Point,
    near: bool,
    octants: bool,
    search: &AngleSearch,
) -> f64 {
    let medium = stencil.medium;
    let objective = |theta: f64| -> f64 {
        let a = unit(theta);
        match stencil.foot(idx, p, a, near) {
            Some((foot, f)) => {
                let k = medium.cost_node(cost, idx, f);
                if !k.is_finite() {
                    return INF;
                }
                foot.implicit_value(idx, values, foot.tau * k)
            }
            None => INF,
        }
    };
    if !octants {
        return search.minimize(objective).value;
    }
    let grid = medium.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let per_quadrant = search.restarts / 4;
    let mut quadrant_open = [false; 4];
    for (q, open) in quadrant_open.iter_mut().enumerate() {
        let (sx, sy): (isize, isize) = match q {
            0 => (1, 1),
            1 => (-1, 1),
            2 => (-1, -1),
            _ => (1, -1),
        };
        let ci = i as isize + sx;
        let cj = j as isize + sy;
        if ci < 0 || cj < 0 || ci >= nx as isize || cj >= ny as isize {
            continue;
        }
        let (ci, cj) = (ci as usize, cj as usize);
        *open = values[j * nx + ci] < INF && values[cj * nx + i] < INF && values[cj * nx + ci] < INF;
    }
    search
        .minimize_skipping(objective, |k| !quadrant_open[k / per_quadrant])
        .value
}
