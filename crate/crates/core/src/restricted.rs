//! Costs accumulated along the optimal trajectories of another cost.
//!
//! Given the value function `u` of a governing cost, `v_k(x)` is the cost
//! `J_k` of following `u`'s optimal controls from `x`. It is the fixed point of
//! `v_k(x) = τ K_k(x, a*) + v_k(x + τ f(x, a*) a*)` where `a*` minimizes the
//! discrete operator of `u`; when several directions are optimal, the one
//! giving the smaller `v_k` is used.

use crate::angles::{unit, AngleMin};
use crate::error::{Error, Result};
use crate::field::{ScalarField, INF};
use crate::medium::Medium;
use crate::model::TerminalCost;
use crate::par;
use crate::static_solver::{Foot, StaticSolveParams, Stencil};

/// The solved value function whose optimal controls are followed.
#[derive(Clone, Copy)]
pub struct Governing<'a> {
    pub cost: usize,
    pub terminal: &'a TerminalCost,
    pub u: &'a ScalarField,
}

/// Near-optimal control angles of `u` at every gridpoint.
#[derive(Clone, Debug, Default)]
pub struct DirectionCache {
    offsets: Vec<usize>,
    angles: Vec<f64>,
}

impl DirectionCache {
    pub fn angles(&self, idx: usize) -> &[f64] {
        &self.angles[self.offsets[idx]..self.offsets[idx + 1]]
    }

    /// Number of gridpoints with more than one optimal direction.
    pub fn ambiguous_count(&self) -> usize {
        self.offsets.windows(2).filter(|w| w[1] - w[0] > 1).count()
    }
}

#[derive(Clone, Debug)]
pub struct RestrictedSolve {
    pub u: ScalarField,
    pub direction_cache: DirectionCache,
    pub v: Vec<ScalarField>,
}

struct Candidate {
    foot: Foot,
    speed: f64,
}

/// Computes `v_k` for every requested cost index in `costs`, with terminal
/// costs `terminals[k]`.
pub fn solve_restricted(
    medium: &Medium,
    governing: Governing,
    costs: &[usize],
    terminals: &[&TerminalCost],
    params: &StaticSolveParams,
) -> Result<RestrictedSolve> {
    params.validate()?;
    if costs.len() != terminals.len() {
        return Err(Error::param("terminals", "need one terminal cost per requested cost"));
    }
    let grid = *medium.grid();
    let n = grid.len();
    let stencil = Stencil {
        medium,
        tau: params.tau,
    };
    let u = governing.u.values();
    let tie = 10.0 * params.sweep_tolerance.resolve(u);
    let fixed: Vec<bool> = (0..n)
        .map(|k| medium.blocked(k) || governing.terminal.value(k).is_finite())
        .collect();

    let per_node: Vec<(Vec<f64>, Vec<Candidate>)> = par::map_range(n, |idx| {
        if fixed[idx] || !u[idx].is_finite() {
            return (Vec::new(), Vec::new());
        }
        let p = grid.point_of(idx);
        let near = medium.near_obstacle(p, stencil.reach_at(idx) + 1e-12);
        let objective = |theta: f64| match stencil.foot(idx, p, unit(theta), near) {
            Some((foot, f)) => {
                let k = medium.cost_node(governing.cost, idx, f);
                if k.is_finite() {
                    foot.implicit_value(idx, u, foot.tau * k)
                } else {
                    INF
                }
            }
            None => INF,
        };
        let mut minima: Vec<AngleMin> = Vec::new();
        params.search.bracket_minima(objective, &mut minima);
        let best = minima.iter().map(|m| m.value).fold(INF, f64::min);
        if best == INF {
            return (Vec::new(), Vec::new());
        }
        let mut angles: Vec<f64> = Vec::new();
        let mut cands = Vec::new();
        for m in minima.iter().filter(|m| m.value <= best + tie) {
            let dup = angles.iter().any(|&a: &f64| {
                let d = (a - m.angle).rem_euclid(std::f64::consts::TAU);
                d.min(std::f64::consts::TAU - d) < 1e-5
            });
            if dup {
                continue;
            }
            if let Some((foot, f)) = stencil.foot(idx, p, unit(m.angle), near) {
                angles.push(m.angle);
                cands.push(Candidate { foot, speed: f });
            }
        }
        (angles, cands)
    });

    let mut offsets = Vec::with_capacity(n + 1);
    let mut angles = Vec::new();
    offsets.push(0);
    for (a, _) in &per_node {
        angles.extend_from_slice(a);
        offsets.push(angles.len());
    }
    let cache = DirectionCache { offsets, angles };

    // Process in ascending u so that most feet are already final.
    let mut order: Vec<usize> = (0..n).filter(|&k| !per_node[k].1.is_empty()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));

    let solve_one = |slot: usize| -> Result<ScalarField> {
        let cost = costs[slot];
        let term = terminals[slot];
        let mut v = vec![INF; n];
        for k in 0..n {
            if !medium.blocked(k) && governing.terminal.value(k).is_finite() {
                v[k] = term.value(k);
            }
        }
        let running: Vec<Vec<f64>> = per_node
            .iter()
            .enumerate()
            .map(|(idx, (_, c))| {
                c.iter()
                    .map(|c| c.foot.tau * medium.cost_node(cost, idx, c.speed))
                    .collect()
            })
            .collect();
        let mut passes = 0;
        loop {
            passes += 1;
            let mut change = 0.0f64;
            let mut gained = false;
            for &idx in &order {
                let mut best = INF;
                for (c, r) in per_node[idx].1.iter().zip(&running[idx]) {
                    if r.is_finite() {
                        best = best.min(c.foot.implicit_value(idx, &v, *r));
                    }
                }
                let old = v[idx];
                if best != old {
                    if old == INF || best == INF {
                        gained = true;
                    } else {
                        change = change.max((old - best).abs());
                    }
                    v[idx] = best;
                }
            }
            let tol = params.sweep_tolerance.resolve(&v);
            if !gained && change <= tol {
                return Ok(ScalarField::from_values(grid, v));
            }
            if passes >= params.max_sweeps {
                return Err(Error::NotConverged {
                    sweeps: passes,
                    residual: if gained { INF } else { change },
                    field: Box::new(ScalarField::from_values(grid, v)),
                });
            }
        }
    };

    let results = par::map_range(costs.len(), solve_one);
    let v = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RestrictedSolve {
        u: governing.u.clone(),
        direction_cache: cache,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::model::{CostModel, SpeedModel};
    use crate::static_solver::solve_static;

    #[test]
    fn time_equals_length_at_unit_speed() {
        let g = Grid2::square(31).unwrap();
        let m = Medium::new(g, SpeedModel::Constant(1.0), vec![CostModel::time(), CostModel::PathLength], vec![]);
        let q = TerminalCost::at_point(&g, [1.0, 1.0], 0.0);
        let p = StaticSolveParams::default();
        let u = solve_static(&m, 0, &q, &p).unwrap();
        let r = solve_restricted(&m, Governing { cost: 0, terminal: &q, u: &u }, &[1, 0], &[&q, &q], &p).unwrap();
        for k in g.indices() {
            assert!((r.v[0].at(k) - u.at(k)).abs() < 1e-9);
            assert!((r.v[1].at(k) - u.at(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn two_exits_with_penalty() {
        // Path length to the nearer of two exits, cost 0 charges 1.5 at the left one.
        let g = Grid2::square(41).unwrap();
        let m = Medium::new(g, SpeedModel::Constant(1.0), vec![CostModel::PathLength, CostModel::PathLength], vec![]);
        let mut q_len = TerminalCost::at_point(&g, [0.0, 0.5], 0.0);
        q_len.insert(g.index(40, 20), 0.0);
        let mut q_pen = TerminalCost::at_point(&g, [0.0, 0.5], 1.5);
        q_pen.insert(g.index(40, 20), 0.0);
        let p = StaticSolveParams::default();
        let u = solve_static(&m, 1, &q_len, &p).unwrap();
        let r = solve_restricted(&m, Governing { cost: 1, terminal: &q_len, u: &u }, &[0], &[&q_pen], &p).unwrap();
        let v = &r.v[0];
        let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        for k in g.indices() {
            let x = g.point_of(k);
            let (d1, d2) = (d(x, [0.0, 0.5]), d(x, [1.0, 0.5]));
            if (d1 - d2).abs() < 0.1 {
                continue;
            }
            let exact = if d2 <= d1 { d2 } else { d1 + 1.5 };
            assert!((v.at(k) - exact).abs() < 0.05, "{x:?}: {} vs {exact}", v.at(k));
        }
    }
}

/// Value functions `u_i` of every cost and the cross costs `v_ji` (cost `i`
/// along `u_j`-optimal trajectories).
#[derive(Clone, Debug)]
pub struct ValueTable {
    u: Vec<ScalarField>,
    v: Vec<Vec<ScalarField>>,
}

impl ValueTable {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self, i: usize) -> &ScalarField {
        &self.u[i]
    }

    /// Cost `i` accumulated along `u_j`-optimal trajectories; `v(j, j) = u_j`.
    pub fn v(&self, j: usize, i: usize) -> &ScalarField {
        &self.v[j][i]
    }
}

/// Solves every `u_i` (in parallel) and then every `v_ji`.
pub fn solve_value_table(medium: &Medium, terminals: &[&TerminalCost], params: &StaticSolveParams) -> Result<ValueTable> {
    let n = medium.n_costs();
    if terminals.len() != n {
        return Err(Error::param("terminals", "need one terminal cost per running cost"));
    }
    let u = par::map_range(n, |i| crate::static_solver::solve_static(medium, i, terminals[i], params))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let v = par::map_range(n, |j| -> Result<Vec<ScalarField>> {
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let terms: Vec<&TerminalCost> = others.iter().map(|&i| terminals[i]).collect();
        let solved = solve_restricted(
            medium,
            Governing {
                cost: j,
                terminal: terminals[j],
                u: &u[j],
            },
            &others,
            &terms,
            params,
        )?;
        let mut row: Vec<Option<ScalarField>> = vec![None; n];
        for (k, field) in others.iter().zip(solved.v) {
            row[*k] = Some(field);
        }
        row[j] = Some(u[j].clone());
        Ok(row.into_iter().map(|f| f.expect("every cost solved")).collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ValueTable { u, v })
}
