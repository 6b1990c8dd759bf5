//! Optimal trajectories recovered by following characteristics of solved
//! value functions.

use serde::{Deserialize, Serialize};

use crate::angles::{unit, AngleSearch};
use crate::augmented::AugmentedField;
use crate::error::{Error, Result};
use crate::field::{ScalarField, INF};
use crate::grid::Point;
use crate::medium::{step_in_square, Medium};
use crate::model::TerminalCost;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedTarget,
    BudgetExhausted,
    StepLimit,
    Stalled,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<Point>,
    /// Remaining budgets at every point (empty for unconstrained paths).
    pub budgets: Vec<Vec<f64>>,
    /// Accumulated value of every cost at every point.
    pub cumulative: Vec<Vec<f64>>,
    /// Total of every cost, terminal cost included.
    pub cost_totals: Vec<f64>,
    pub terminated: Termination,
}

impl Trajectory {
    fn start(p: Point, n_costs: usize, budget: Vec<f64>) -> Self {
        Trajectory {
            points: vec![p],
            budgets: if budget.is_empty() { Vec::new() } else { vec![budget] },
            cumulative: vec![vec![0.0; n_costs]],
            cost_totals: vec![0.0; n_costs],
            terminated: Termination::StepLimit,
        }
    }

    fn push(&mut self, p: Point, increments: &[f64], budget: Option<Vec<f64>>) {
        let mut c = self.cumulative.last().cloned().unwrap_or_default();
        for (k, d) in increments.iter().enumerate() {
            c[k] += d;
        }
        self.cost_totals.clone_from(&c);
        self.cumulative.push(c);
        self.points.push(p);
        if let Some(b) = budget {
            self.budgets.push(b);
        }
    }

    fn add_terminal(&mut self, terminals: &[&TerminalCost], node: usize) {
        for (k, q) in terminals.iter().enumerate() {
            self.cost_totals[k] += q.value(node);
        }
    }

    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub search: AngleSearch,
    /// Step length of unconstrained tracing; `None` uses `h / 2`.
    pub step: Option<f64>,
    /// Distance to an exit gridpoint, in units of `h`, at which tracing
    /// finishes with a straight segment.
    pub target_radius: f64,
    /// Consecutive non-improving steps after which tracing gives up.
    pub stall_steps: usize,
    pub stall_tolerance: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            search: AngleSearch::default(),
            step: None,
            target_radius: 1.5,
            stall_steps: 10,
            stall_tolerance: 1e-10,
        }
    }
}

/// Cheapest straight finish to an exit gridpoint within `radius` of `p`:
/// `(node, time, cost of the segment + exit cost)` for cost `cost`.
fn nearby_exit(
    medium: &Medium,
    cost: usize,
    terminal: &TerminalCost,
    p: Point,
    radius: f64,
    mut allowed: impl FnMut(usize, f64, [f64; 2]) -> bool,
) -> Option<(usize, f64, f64)> {
    let grid = medium.grid();
    let h = grid.h();
    let reach = (radius / h).ceil() as isize + 1;
    let (ci, cj) = grid.nearest(p);
    let mut best: Option<(usize, f64, f64)> = None;
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let (i, j) = (ci as isize + di, cj as isize + dj);
            if i < 0 || j < 0 || i >= grid.nx() as isize || j >= grid.ny() as isize {
                continue;
            }
            let node = grid.index(i as usize, j as usize);
            let q = terminal.value(node);
            if !q.is_finite() || medium.blocked(node) {
                continue;
            }
            let t = grid.point_of(node);
            let d = (t[0] - p[0]).hypot(t[1] - p[1]);
            if d > radius {
                continue;
            }
            let (time, total, a) = if d == 0.0 {
                (0.0, q, [0.0, 0.0])
            } else {
                let a = [(t[0] - p[0]) / d, (t[1] - p[1]) / d];
                let f = medium.speed_at(p, a);
                if !(f > 0.0) {
                    continue;
                }
                let time = d / f;
                (time, time * medium.cost_at(cost, p, f) + q, a)
            };
            if !total.is_finite() || (d > 0.0 && medium.segment_blocked(p, t)) || !allowed(node, time, a) {
                continue;
            }
            if best.is_none_or(|b| total < b.2) {
                best = Some((node, time, total));
            }
        }
    }
    best
}

/// Cost increments of moving along `a` for time `time` from `p`, every cost
/// evaluated at the segment midpoint.
fn increments(medium: &Medium, p: Point, a: [f64; 2], time: f64) -> Vec<f64> {
    let f0 = medium.speed_at(p, a);
    let mid = [p[0] + 0.5 * time * f0 * a[0], p[1] + 0.5 * time * f0 * a[1]];
    let f = medium.speed_at(mid, a);
    (0..medium.n_costs())
        .map(|k| time * medium.cost_at(k, mid, f))
        .collect()
}

/// Follows the characteristics of the value function `u` of cost `cost` with
/// exit cost `terminal`, starting at `start`.
pub fn follow_static(
    medium: &Medium,
    u: &ScalarField,
    cost: usize,
    terminals: &[&TerminalCost],
    start: Point,
    params: &TraceParams,
) -> Result<Trajectory> {
    let grid = *medium.grid();
    grid.check(start)?;
    if medium.inside_obstacle(start) {
        return Err(Error::InsideObstacle { x: start[0], y: start[1] });
    }
    if !u.sample(start).is_finite() {
        return Err(Error::InfeasibleStart { x: start[0], y: start[1] });
    }
    let terminal = terminals[cost];
    let h = grid.h();
    let step = params.step.unwrap_or(0.5 * h);
    let radius = params.target_radius * h;
    let mut out = Trajectory::start(start, medium.n_costs(), Vec::new());
    let mut p = start;
    let mut stalled = 0;
    let mut current = u.sample(p);
    for _ in 0..grid.len() {
        let objective = |theta: f64| -> f64 {
            let a = unit(theta);
            let f = medium.speed_at(p, a);
            if !(f > 0.0) {
                return INF;
            }
            let s = step_in_square(p, a, f, step / f);
            if s.tau <= 0.0 || medium.segment_blocked(p, s.foot) {
                return INF;
            }
            let k = medium.cost_at(cost, p, f);
            s.tau * k + u.sample(s.foot)
        };
        let best = params.search.minimize(objective);
        let exit = nearby_exit(medium, cost, terminal, p, radius, |_, _, _| true);
        if let Some((node, time, total)) = exit {
            if total <= best.value {
                let q = grid.point_of(node);
                let d = (q[0] - p[0]).hypot(q[1] - p[1]);
                let inc = if d > 0.0 {
                    increments(medium, p, [(q[0] - p[0]) / d, (q[1] - p[1]) / d], time)
                } else {
                    vec![0.0; medium.n_costs()]
                };
                if d > 0.0 {
                    out.push(q, &inc, None);
                }
                out.add_terminal(terminals, node);
                out.terminated = Termination::ReachedTarget;
                return Ok(out);
            }
        }
        if best.value == INF {
            out.terminated = Termination::Stalled;
            return Ok(out);
        }
        let a = best.direction();
        let f = medium.speed_at(p, a);
        let s = step_in_square(p, a, f, step / f);
        let inc = increments(medium, p, a, s.tau);
        p = s.foot;
        out.push(p, &inc, None);
        let next = u.sample(p);
        if next < current - params.stall_tolerance {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= params.stall_steps {
                out.terminated = Termination::Stalled;
                return Ok(out);
            }
        }
        current = next;
    }
    out.terminated = Termination::StepLimit;
    Ok(out)
}

/// Follows a constrained-optimal trajectory of `field` from `start` with
/// budgets `budget`. Each step spends exactly one `b_1` step of the first
/// constrained cost (shorter only when it reaches the domain boundary), the
/// same control horizon the march uses.
///
/// Right above the minimal feasible level, interpolation error can leave no
/// direction whose foot is still feasible. The first time that happens every
/// budget is extended by one budget step for the rest of the path. If that
/// runs dry too and `guides` holds the static value of every constrained cost,
/// the rest of the path descends the guide of the tightest budget: the
/// cheapest way to finish for that budget, overspending only by what the
/// path had already lost to discretization.
pub fn follow_constrained(
    medium: &Medium,
    terminals: &[&TerminalCost],
    field: &AugmentedField,
    guides: &[&ScalarField],
    start: Point,
    budget: &[f64],
    params: &TraceParams,
) -> Result<Trajectory> {
    let grid = *medium.grid();
    grid.check(start)?;
    if medium.inside_obstacle(start) {
        return Err(Error::InsideObstacle { x: start[0], y: start[1] });
    }
    let r = field.budgets.r();
    if budget.len() != r {
        return Err(Error::param("budget", format!("need {r} values, got {}", budget.len())));
    }
    if !guides.is_empty() && guides.len() != r {
        return Err(Error::param("guides", format!("need 0 or {r} fields, got {}", guides.len())));
    }
    let w0 = field.sample(start, budget);
    if !w0.is_finite() {
        return Err(Error::InfeasibleStart { x: start[0], y: start[1] });
    }
    let primary = field.primary;
    let constrained = &field.constrained;
    let db1 = field.budgets.axis(0).delta();
    let h = grid.h();
    let can_stop = |node: usize, b: &[f64]| {
        terminals[primary].value(node).is_finite()
            && constrained
                .iter()
                .zip(b)
                .all(|(&c, &bi)| bi >= terminals[c].value(node) - 1e-12)
    };
    let mut out = Trajectory::start(start, medium.n_costs(), budget.to_vec());
    let mut p = start;
    let mut b = budget.to_vec();
    let steps: Vec<f64> = field.budgets.axes().iter().map(|a| a.delta()).collect();
    let mut slack = vec![0.0; r];
    let with_slack = |b: &[f64], slack: &[f64]| -> Vec<f64> { b.iter().zip(slack).map(|(x, s)| x + s).collect() };
    let max_steps = 4 * field.n_slices() + grid.nx() + grid.ny();
    let mut guided: Option<usize> = None;
    for _ in 0..max_steps {
        if let Some(g) = guided {
            match guided_step(medium, terminals, constrained[g], guides[g], p, db1, params) {
                GuidedStep::Exit(node, time, a) => {
                    let inc = increments(medium, p, a, time);
                    for (i, &c) in constrained.iter().enumerate() {
                        b[i] -= inc[c];
                    }
                    if time > 0.0 {
                        out.push(grid.point_of(node), &inc, Some(b.clone()));
                    }
                    out.add_terminal(terminals, node);
                    out.terminated = Termination::ReachedTarget;
                    return Ok(out);
                }
                GuidedStep::Move(foot, a, tau) => {
                    let inc = increments(medium, p, a, tau);
                    for (i, &c) in constrained.iter().enumerate() {
                        b[i] -= inc[c];
                    }
                    p = foot;
                    out.push(p, &inc, Some(b.clone()));
                    continue;
                }
                GuidedStep::Stuck => {
                    out.terminated = Termination::BudgetExhausted;
                    return Err(Error::BudgetExhausted { partial: Box::new(out) });
                }
            }
        }

        // Stopping right here.
        let here = grid.nearest(p);
        let here = grid.index(here.0, here.1);
        let at_node = {
            let q = grid.point_of(here);
            (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-12
        };
        if at_node && can_stop(here, &with_slack(&b, &slack)) {
            out.add_terminal(terminals, here);
            out.terminated = Termination::ReachedTarget;
            return Ok(out);
        }

        let step = |theta: f64| -> Option<(f64, Point, Vec<f64>, bool)> {
            let a = unit(theta);
            let f = medium.speed_at(p, a);
            if !(f > 0.0) {
                return None;
            }
            let k1 = medium.cost_at(constrained[0], p, f);
            if !(k1 > 0.0 && k1.is_finite()) {
                return None;
            }
            let s = step_in_square(p, a, f, db1 / k1);
            if s.tau <= 1e-14 || medium.segment_blocked(p, s.foot) {
                return None;
            }
            let mut nb = b.clone();
            for (i, &c) in constrained.iter().enumerate() {
                nb[i] -= s.tau * medium.cost_at(c, p, f);
            }
            if nb.iter().zip(&slack).any(|(&x, &sl)| x < -sl - 1e-9) {
                return None;
            }
            for (x, &sl) in nb.iter_mut().zip(&slack) {
                *x = x.max(-sl);
            }
            Some((s.tau, s.foot, nb, s.clipped))
        };
        let boundary_exit = |foot: Point, nb: &[f64]| -> f64 {
            let (i0, j0, gx, gy) = grid.cell_snapped(foot);
            let nx = grid.nx();
            let (n0, n1, w) = if foot[0] <= 0.0 || foot[0] >= 1.0 {
                let i = if foot[0] <= 0.0 { 0 } else { nx - 1 };
                (j0 * nx + i, (j0 + 1) * nx + i, gy)
            } else {
                let j = if foot[1] <= 0.0 { 0 } else { grid.ny() - 1 };
                (j * nx + i0, j * nx + i0 + 1, gx)
            };
            let mut acc = 0.0;
            for (n, wt) in [(n0, 1.0 - w), (n1, w)] {
                if wt <= 0.0 {
                    continue;
                }
                if !can_stop(n, nb) {
                    return INF;
                }
                acc += wt * terminals[primary].value(n);
            }
            acc
        };
        let objective = |theta: f64| -> f64 {
            let Some((tau, foot, nb, clipped)) = step(theta) else {
                return INF;
            };
            let a = unit(theta);
            let k0 = medium.cost_at(primary, p, medium.speed_at(p, a));
            let nb = with_slack(&nb, &slack);
            let rest = if clipped {
                boundary_exit(foot, &nb).min(field.sample(foot, &nb))
            } else {
                field.sample(foot, &nb)
            };
            tau * k0 + rest
        };
        let best = params.search.minimize(objective);

        // Straight finish to an exit gridpoint within one step.
        let radius = (params.target_radius * h).max(db1 * speed_over_cost(medium, constrained[0], p));
        let exit = nearby_exit(medium, primary, terminals[primary], p, radius, |node, time, a| {
            let f = medium.speed_at(p, a);
            let mut nb = b.clone();
            for (i, &c) in constrained.iter().enumerate() {
                let k = if time > 0.0 { medium.cost_at(c, p, f) } else { 0.0 };
                nb[i] -= time * k;
            }
            let spent_first = b[0] - nb[0];
            spent_first <= db1 * (1.0 + 1e-9) && can_stop(node, &with_slack(&nb, &slack))
        });
        if let Some((node, time, total)) = exit {
            if total <= best.value {
                let q = grid.point_of(node);
                let d = (q[0] - p[0]).hypot(q[1] - p[1]);
                if d > 0.0 {
                    let a = [(q[0] - p[0]) / d, (q[1] - p[1]) / d];
                    let inc = increments(medium, p, a, time);
                    let nb: Vec<f64> = constrained.iter().zip(&b).map(|(&c, &bi)| bi - inc[c]).collect();
                    out.push(q, &inc, Some(nb));
                }
                out.add_terminal(terminals, node);
                out.terminated = Termination::ReachedTarget;
                return Ok(out);
            }
        }

        if best.value == INF && slack.iter().all(|&x| x == 0.0) {
            slack.clone_from(&steps);
            continue;
        }
        if best.value == INF && !guides.is_empty() {
            // Tightest budget relative to the least it takes to finish.
            let margin = |i: usize| b[i] - guides[i].sample(p);
            guided = (0..r).min_by(|&i, &j| margin(i).total_cmp(&margin(j)));
            continue;
        }
        if best.value == INF {
            out.terminated = Termination::BudgetExhausted;
            return Err(Error::BudgetExhausted { partial: Box::new(out) });
        }
        let (tau, foot, _, clipped) = step(best.angle).expect("finite objective implies a feasible step");
        let a = best.direction();
        let inc = increments(medium, p, a, tau);
        for (i, &c) in constrained.iter().enumerate() {
            b[i] = (b[i] - inc[c]).max(-slack[i]);
        }
        p = foot;
        out.push(p, &inc, Some(b.clone()));
        if clipped && boundary_exit(foot, &with_slack(&b, &slack)) < INF {
            let (i, j) = grid.nearest(p);
            let node = grid.index(i, j);
            out.add_terminal(terminals, node);
            out.terminated = Termination::ReachedTarget;
            return Ok(out);
        }
    }
    out.terminated = Termination::StepLimit;
    Err(Error::BudgetExhausted { partial: Box::new(out) })
}

enum GuidedStep {
    Exit(usize, f64, [f64; 2]),
    Move(Point, [f64; 2], f64),
    Stuck,
}

/// One step down the static value `guide` of cost `cost`, spending `spend` of
/// it, or a straight finish when an exit is that close.
fn guided_step(
    medium: &Medium,
    terminals: &[&TerminalCost],
    cost: usize,
    guide: &ScalarField,
    p: Point,
    spend: f64,
    params: &TraceParams,
) -> GuidedStep {
    let h = medium.grid().h();
    let objective = |theta: f64| -> f64 {
        let a = unit(theta);
        let f = medium.speed_at(p, a);
        let k = medium.cost_at(cost, p, f);
        if !(f > 0.0 && k > 0.0 && k.is_finite()) {
            return INF;
        }
        let s = step_in_square(p, a, f, spend / k);
        if s.tau <= 1e-14 || medium.segment_blocked(p, s.foot) {
            return INF;
        }
        s.tau * k + guide.sample(s.foot)
    };
    let best = params.search.minimize(objective);
    let radius = (params.target_radius * h).max(spend * speed_over_cost(medium, cost, p));
    let primary_exit = |node: usize, _: f64, _: [f64; 2]| terminals.iter().all(|t| t.value(node).is_finite());
    if let Some((node, time, total)) = nearby_exit(medium, cost, terminals[cost], p, radius, primary_exit) {
        if total <= best.value {
            let q = medium.grid().point_of(node);
            let d = (q[0] - p[0]).hypot(q[1] - p[1]);
            let a = if d > 0.0 { [(q[0] - p[0]) / d, (q[1] - p[1]) / d] } else { [0.0, 0.0] };
            return GuidedStep::Exit(node, time, a);
        }
    }
    if best.value == INF {
        return GuidedStep::Stuck;
    }
    let a = best.direction();
    let f = medium.speed_at(p, a);
    let s = step_in_square(p, a, f, spend / medium.cost_at(cost, p, f));
    GuidedStep::Move(s.foot, a, s.tau)
}

/// Distance covered while spending one unit of cost `c` at `p`, maximized
/// over directions sampled on the axes and diagonals.
fn speed_over_cost(medium: &Medium, c: usize, p: Point) -> f64 {
    (0..8)
        .map(|k| {
            let a = unit(k as f64 * std::f64::consts::FRAC_PI_4);
            let f = medium.speed_at(p, a);
            let k = medium.cost_at(c, p, f);
            if k > 0.0 {
                f / k
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::model::{CostModel, SpeedModel};
    use crate::static_solver::{solve_static, StaticSolveParams};

    #[test]
    fn straight_path_to_corner() {
        let grid = Grid2::square(41).unwrap();
        let m = Medium::new(grid, SpeedModel::Constant(1.0), vec![CostModel::Constant(1.0)], vec![]);
        let q = TerminalCost::at_point(&grid, [1.0, 1.0], 0.0);
        let u = solve_static(&m, 0, &q, &StaticSolveParams::default()).unwrap();
        let t = follow_static(&m, &u, 0, &[&q], [0.1, 0.1], &TraceParams::default()).unwrap();
        assert_eq!(t.terminated, Termination::ReachedTarget);
        let exact = 0.9 * std::f64::consts::SQRT_2;
        assert!((t.length() - exact).abs() < 2.0 * 0.5 * grid.h(), "{}", t.length());
        assert!((t.cost_totals[0] - exact).abs() < 2.0 * 0.5 * grid.h());
        assert_eq!(t.points.last().copied(), Some([1.0, 1.0]));
    }

    #[test]
    fn start_on_target_is_empty() {
        let grid = Grid2::square(21).unwrap();
        let m = Medium::new(grid, SpeedModel::Constant(1.0), vec![CostModel::Constant(1.0)], vec![]);
        let q = TerminalCost::at_point(&grid, [1.0, 1.0], 0.0);
        let u = solve_static(&m, 0, &q, &StaticSolveParams::default()).unwrap();
        let t = follow_static(&m, &u, 0, &[&q], [1.0, 1.0], &TraceParams::default()).unwrap();
        assert_eq!(t.points.len(), 1);
        assert_eq!(t.cost_totals, vec![0.0]);
        assert_eq!(t.terminated, Termination::ReachedTarget);
    }
}
