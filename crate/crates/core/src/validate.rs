//! Sampling checks of the standing assumptions on a problem: some finite
//! terminal cost per criterion, speed positive and bounded, running costs
//! bounded between positive constants, and controllability (positive speed
//! and finite primary cost off obstacles).

use std::fmt;

use serde::Serialize;

use crate::angles::unit;
use crate::medium::Medium;
use crate::model::ControlProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assumption {
    ReachableExit,
    BoundedSpeed,
    BoundedCost,
    Controllable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub assumption: Assumption,
    /// Cost index the check refers to, if any.
    pub cost: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Sampled `(k_1, k_2)` per cost, over gridpoints outside obstacles.
    pub cost_bounds: Vec<(f64, f64)>,
    /// Sampled `(min f, max f)` outside obstacles.
    pub speed_bounds: (f64, f64),
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Largest sampled cost bound `k_2` over all costs.
    pub fn k2(&self) -> f64 {
        self.cost_bounds.iter().map(|b| b.1).fold(0.0, f64::max)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let what = match c.cost {
                Some(i) => format!("{:?} (cost {i})", c.assumption),
                None => format!("{:?}", c.assumption),
            };
            writeln!(f, "{} {what}: {}", if c.passed { "ok  " } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}

/// Samples `f` and every `K_i` at all gridpoints and `angle_samples` control
/// directions.
pub fn validate_problem(problem: &ControlProblem) -> ValidationReport {
    validate_with(problem, 16)
}

pub fn validate_with(problem: &ControlProblem, angle_samples: usize) -> ValidationReport {
    let medium = Medium::from_problem(problem);
    let grid = problem.grid;
    let mut checks = Vec::new();

    for (i, t) in problem.terminals.iter().enumerate() {
        let finite: Vec<f64> = t.finite_entries().map(|(_, v)| v).collect();
        let negative = finite.iter().filter(|v| **v < 0.0).count();
        let passed = !finite.is_empty() && negative == 0;
        let detail = if finite.is_empty() {
            "terminal cost is +INF everywhere".to_string()
        } else if negative > 0 {
            format!("{negative} negative terminal values")
        } else {
            format!("{} finite terminal gridpoints", finite.len())
        };
        checks.push(Check {
            assumption: Assumption::ReachableExit,
            cost: Some(i),
            passed,
            detail,
        });
    }

    let dirs: Vec<[f64; 2]> = (0..angle_samples.max(1))
        .map(|k| unit(std::f64::consts::TAU * k as f64 / angle_samples.max(1) as f64))
        .collect();
    let mut fmin = f64::INFINITY;
    let mut fmax = 0.0f64;
    let mut fbad = 0usize;
    let mut bounds = vec![(f64::INFINITY, 0.0f64); problem.costs.len()];
    let mut kbad = vec![0usize; problem.costs.len()];
    let mut primary_inf = 0usize;
    let mut free = 0usize;
    for idx in grid.indices() {
        if medium.blocked(idx) {
            continue;
        }
        free += 1;
        for &a in &dirs {
            let f = medium.speed_node(idx, a);
            if !(f > 0.0 && f.is_finite()) {
                fbad += 1;
            } else {
                fmin = fmin.min(f);
                fmax = fmax.max(f);
            }
            for (c, b) in bounds.iter_mut().enumerate() {
                let k = medium.cost_node(c, idx, f);
                if !(k > 0.0 && k.is_finite()) {
                    kbad[c] += 1;
                    if c == 0 && !k.is_finite() {
                        primary_inf += 1;
                    }
                } else {
                    b.0 = b.0.min(k);
                    b.1 = b.1.max(k);
                }
            }
        }
    }
    checks.push(Check {
        assumption: Assumption::BoundedSpeed,
        cost: None,
        passed: fbad == 0 && free > 0,
        detail: if fbad == 0 {
            format!("speed in [{fmin:.6}, {fmax:.6}]")
        } else {
            format!("{fbad} samples with non-positive or infinite speed")
        },
    });
    for (c, b) in bounds.iter().enumerate() {
        checks.push(Check {
            assumption: Assumption::BoundedCost,
            cost: Some(c),
            passed: kbad[c] == 0,
            detail: if kbad[c] == 0 {
                format!("rate in [{:.6}, {:.6}]", b.0, b.1)
            } else {
                format!("{} samples outside (0, +INF)", kbad[c])
            },
        });
    }
    checks.push(Check {
        assumption: Assumption::Controllable,
        cost: None,
        passed: fbad == 0 && primary_inf == 0,
        detail: format!(
            "{free} gridpoints outside obstacles, {} with infinite primary cost",
            primary_inf / dirs.len()
        ),
    });

    ValidationReport {
        checks,
        cost_bounds: bounds,
        speed_bounds: (fmin, fmax),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BudgetAxes, Grid2};
    use crate::model::{CostModel, Rect, Region, SpeedModel, TerminalCost};

    fn problem(cost1: CostModel, terminal: TerminalCost) -> ControlProblem {
        let g = Grid2::square(11).unwrap();
        ControlProblem::new(
            g,
            SpeedModel::Constant(1.0),
            vec![CostModel::time(), cost1],
            vec![TerminalCost::at_point(&g, [0.0, 0.0], 0.0), terminal],
            BudgetAxes::single(1.0, 11).unwrap(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn simple_problem_passes() {
        let g = Grid2::square(11).unwrap();
        let r = validate_problem(&problem(CostModel::time(), TerminalCost::at_point(&g, [0.0, 0.0], 0.0)));
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn zero_cost_region_violates_a2() {
        let g = Grid2::square(11).unwrap();
        let c = CostModel::Regions {
            regions: vec![Region {
                rect: Rect::new([0.2, 0.2], [0.4, 0.4]).unwrap(),
                rate: 0.0,
            }],
            outside: 1.0,
        };
        let r = validate_problem(&problem(c, TerminalCost::at_point(&g, [0.0, 0.0], 0.0)));
        assert!(!r.passed());
        let fail: Vec<_> = r.failures().collect();
        assert_eq!(fail.len(), 1);
        assert_eq!(fail[0].assumption, Assumption::BoundedCost);
        assert_eq!(fail[0].cost, Some(1));
    }

    #[test]
    fn infinite_terminal_violates_a0() {
        let mut t = TerminalCost::new();
        t.insert(0, f64::INFINITY);
        let r = validate_problem(&problem(CostModel::time(), t));
        assert!(r.failures().any(|c| c.assumption == Assumption::ReachableExit && c.cost == Some(1)));
    }
}
