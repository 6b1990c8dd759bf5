//! Browser demo: solve a built-in single-budget scenario at low resolution,
//! then explore it by budget (heatmap), by start point (constrained path) and
//! by front.
//!
//! [`Session`] holds the logic and runs natively in tests; [`Demo`] is the
//! thin JavaScript-facing wrapper.

use paretomarch::config::{Overrides, Scenario, ScenarioConfig};
use paretomarch::pareto::extract_front;
use paretomarch::pipeline::{self, front_threshold, Solution};
use paretomarch::trajectory::follow_constrained;
use paretomarch::{scenario, Error, Point};
use wasm_bindgen::prelude::*;

/// Largest grid the demo will solve; keeps a solve under a few seconds.
pub const MAX_N: usize = 121;

pub struct Session {
    config: ScenarioConfig,
    scenario: Scenario,
    solution: Solution,
    /// Color scale of the heatmap.
    low: f64,
    high: f64,
}

/// A path with its totals.
pub struct Path {
    pub points: Vec<Point>,
    pub primary: f64,
    pub spent: f64,
    pub complete: bool,
}

impl Session {
    /// Solves built-in scenario `name` on an `n × n` grid with `slices`
    /// budget gridlines.
    pub fn new(name: &str, n: usize, slices: usize) -> Result<Self, String> {
        if !(3..=MAX_N).contains(&n) {
            return Err(format!("grid size must be between 3 and {MAX_N}"));
        }
        let mut config = scenario::builtin(name).map_err(|e| e.to_string())?;
        if config.budgets.bound.len() != 1 {
            return Err(format!("{name} has {} budgets; the demo handles one", config.budgets.bound.len()));
        }
        config
            .apply(&Overrides {
                h: Some(1.0 / (n - 1) as f64),
                ..Default::default()
            })
            .map_err(|e| e.to_string())?;
        config.budgets.count = vec![slices.max(2)];
        let scenario = config.build().map_err(|e| e.to_string())?;
        let solution = pipeline::solve(&scenario.problem, &scenario.options).map_err(|e| e.to_string())?;
        let low = solution.table.u(0).values().iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
        let high = solution
            .mfl
            .value_on_mfl
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(low, f64::max);
        Ok(Session {
            config,
            scenario,
            solution,
            low,
            high,
        })
    }

    pub fn n(&self) -> usize {
        self.scenario.problem.grid.nx()
    }

    pub fn budget_bound(&self) -> f64 {
        self.scenario.problem.budgets.axis(0).bound
    }

    /// Default start point of the scenario.
    pub fn start(&self) -> Point {
        self.config
            .front
            .as_ref()
            .map(|f| f.start)
            .or_else(|| self.config.trace.first().map(|t| t.start))
            .unwrap_or([0.1, 0.1])
    }

    /// RGBA pixels of `W(·, b)`, top row at `y = 1`. Infeasible points are
    /// dark gray, obstacles black.
    pub fn heatmap(&self, b: f64) -> Vec<u8> {
        let grid = self.scenario.problem.grid;
        let n = grid.nx();
        let mut px = Vec::with_capacity(n * n * 4);
        for j in (0..n).rev() {
            for i in 0..n {
                let k = grid.index(i, j);
                let rgb = if self.solution.medium.blocked(k) {
                    [0, 0, 0]
                } else {
                    let w = self.solution.field.sample(grid.point(i, j), &[b]);
                    if w.is_finite() {
                        let span = (self.high - self.low).max(1e-12);
                        ramp(((w - self.low) / span).clamp(0.0, 1.0))
                    } else {
                        [48, 48, 48]
                    }
                };
                px.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
            }
        }
        px
    }

    /// Constrained-optimal path from `p` with budget `b`. A path that runs
    /// out of budget is returned as far as it got.
    pub fn trace(&self, p: Point, b: f64) -> Result<Path, String> {
        let s = &self.scenario;
        let terminals = pipeline::terminals(&s.problem);
        let res = follow_constrained(
            &self.solution.medium,
            &terminals,
            &self.solution.field,
            &self.solution.budget_guides(),
            p,
            &[b],
            &self.config.trace_params(),
        );
        let (t, complete) = match res {
            Ok(t) => (t, true),
            Err(Error::BudgetExhausted { partial }) => (*partial, false),
            Err(e) => return Err(e.to_string()),
        };
        Ok(Path {
            primary: t.cost_totals[0],
            spent: t.cost_totals[1],
            complete,
            points: t.points,
        })
    }

    /// Front at `p` as `(budget, primary cost)` pairs by increasing budget.
    pub fn front(&self, p: Point) -> Result<Vec<(f64, f64)>, String> {
        let theta = front_threshold(&self.scenario.problem, self.config.front.as_ref().map_or(1.0, |f| f.theta));
        let f = extract_front(&self.solution.medium, &self.solution.field, p, theta).map_err(|e| e.to_string())?;
        Ok(f.points.iter().map(|q| (q[1], q[0])).collect())
    }
}

/// Dark blue through teal to yellow.
fn ramp(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 4] = [[30.0, 40.0, 110.0], [30.0, 130.0, 140.0], [120.0, 200.0, 90.0], [250.0, 230.0, 60.0]];
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c])).round() as u8;
    }
    out
}

/// Single-budget built-in scenarios, one per line.
#[wasm_bindgen]
pub fn scenario_names() -> String {
    scenario::names()
        .filter(|n| scenario::builtin(n).is_ok_and(|c| c.budgets.bound.len() == 1))
        .collect::<Vec<_>>()
        .join("\n")
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str, n: usize, slices: usize) -> Result<Demo, JsError> {
        Session::new(name, n, slices).map(|session| Demo { session }).map_err(|e| JsError::new(&e))
    }

    pub fn n(&self) -> usize {
        self.session.n()
    }

    pub fn budget_bound(&self) -> f64 {
        self.session.budget_bound()
    }

    /// `[x, y]` of the scenario's default start.
    pub fn start(&self) -> Vec<f64> {
        self.session.start().to_vec()
    }

    pub fn heatmap(&self, b: f64) -> Vec<u8> {
        self.session.heatmap(b)
    }

    /// `[primary, spent, complete, x0, y0, x1, y1, …]`.
    pub fn trace(&self, x: f64, y: f64, b: f64) -> Result<Vec<f64>, JsError> {
        let p = self.session.trace([x, y], b).map_err(|e| JsError::new(&e))?;
        let mut out = vec![p.primary, p.spent, if p.complete { 1.0 } else { 0.0 }];
        out.extend(p.points.iter().flatten());
        Ok(out)
    }

    /// `[b0, J0, b1, J1, …]`.
    pub fn front(&self, x: f64, y: f64) -> Result<Vec<f64>, JsError> {
        let f = self.session.front([x, y]).map_err(|e| JsError::new(&e))?;
        Ok(f.into_iter().flat_map(|(b, j)| [b, j]).collect())
    }
}
