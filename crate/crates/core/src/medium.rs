//! Node-sampled coefficients used by the hot loops of the solvers.

use crate::field::INF;
use crate::grid::{Grid2, Point};
use crate::model::{ControlProblem, CostModel, EllipticProfile, Rect, SpeedModel};

#[derive(Clone, Debug)]
enum NodeSpeed {
    Isotropic(Vec<f64>),
    Elliptic { f2: f64, axis: Vec<[f64; 2]> },
}

/// Speed, running costs and obstacles of a problem, pre-sampled at the
/// gridpoints. Off-grid evaluation falls back to the underlying models.
#[derive(Clone, Debug)]
pub struct Medium {
    grid: Grid2,
    speed: SpeedModel,
    costs: Vec<CostModel>,
    obstacles: Vec<Rect>,
    node_speed: NodeSpeed,
    node_max_speed: Vec<f64>,
    // (c, d) with K = c + d·f, per cost and node.
    node_costs: Vec<Vec<(f64, f64)>>,
    blocked: Vec<bool>,
}

impl Medium {
    pub fn new(grid: Grid2, speed: SpeedModel, costs: Vec<CostModel>, obstacles: Vec<Rect>) -> Self {
        let n = grid.len();
        let blocked: Vec<bool> = (0..n)
            .map(|k| {
                let p = grid.point_of(k);
                obstacles.iter().any(|o| o.contains(p))
            })
            .collect();
        let node_speed = match &speed {
            SpeedModel::Elliptic(e) => NodeSpeed::Elliptic {
                f2: e.f2,
                axis: (0..n).map(|k| e.axis(grid.point_of(k)[0])).collect(),
            },
            other => NodeSpeed::Isotropic((0..n).map(|k| other.isotropic_at(grid.point_of(k))).collect()),
        };
        let node_max_speed = (0..n).map(|k| speed.max_at(grid.point_of(k))).collect();
        let node_costs = costs
            .iter()
            .map(|c| (0..n).map(|k| c.affine_at(grid.point_of(k))).collect())
            .collect();
        Medium {
            grid,
            speed,
            costs,
            obstacles,
            node_speed,
            node_max_speed,
            node_costs,
            blocked,
        }
    }

    pub fn from_problem(problem: &ControlProblem) -> Self {
        Self::new(
            problem.grid,
            problem.speed.clone(),
            problem.costs.clone(),
            problem.obstacles.clone(),
        )
    }

    /// Same speed and obstacles with a different list of costs.
    pub fn with_costs(&self, costs: Vec<CostModel>) -> Self {
        let n = self.grid.len();
        let node_costs = costs
            .iter()
            .map(|c| (0..n).map(|k| c.affine_at(self.grid.point_of(k))).collect())
            .collect();
        Medium {
            costs,
            node_costs,
            ..self.clone()
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn speed_model(&self) -> &SpeedModel {
        &self.speed
    }

    pub fn cost_model(&self, k: usize) -> &CostModel {
        &self.costs[k]
    }

    pub fn n_costs(&self) -> usize {
        self.costs.len()
    }

    pub fn obstacles(&self) -> &[Rect] {
        &self.obstacles
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.node_speed, NodeSpeed::Isotropic(_))
    }

    #[inline]
    pub fn blocked(&self, idx: usize) -> bool {
        self.blocked[idx]
    }

    pub fn blocked_mask(&self) -> &[bool] {
        &self.blocked
    }

    #[inline]
    pub fn speed_node(&self, idx: usize, a: [f64; 2]) -> f64 {
        match &self.node_speed {
            NodeSpeed::Isotropic(v) => v[idx],
            NodeSpeed::Elliptic { f2, axis } => EllipticProfile::speed_with_axis(*f2, axis[idx], a),
        }
    }

    #[inline]
    pub fn max_speed_node(&self, idx: usize) -> f64 {
        self.node_max_speed[idx]
    }

    #[inline]
    pub fn cost_node(&self, k: usize, idx: usize, speed: f64) -> f64 {
        if self.blocked[idx] {
            return INF;
        }
        let (c, d) = self.node_costs[k][idx];
        if d == 0.0 {
            c
        } else {
            c + d * speed
        }
    }

    #[inline]
    pub fn speed_at(&self, p: Point, a: [f64; 2]) -> f64 {
        self.speed.eval(p, a)
    }

    #[inline]
    pub fn cost_at(&self, k: usize, p: Point, speed: f64) -> f64 {
        self.costs[k].eval(p, speed)
    }

    pub fn inside_obstacle(&self, p: Point) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Whether the segment `a`–`b` touches any obstacle.
    #[inline]
    pub fn segment_blocked(&self, a: Point, b: Point) -> bool {
        !self.obstacles.is_empty() && self.obstacles.iter().any(|o| o.intersects_segment(a, b))
    }

    /// Whether an obstacle lies within distance `reach` of `p`.
    #[inline]
    pub fn near_obstacle(&self, p: Point, reach: f64) -> bool {
        !self.obstacles.is_empty() && self.obstacles.iter().any(|o| o.distance(p) <= reach)
    }

    /// Per-node flags: an obstacle lies within `reach` of the gridpoint.
    pub fn obstacle_proximity(&self, reach: f64) -> Vec<bool> {
        self.grid
            .indices()
            .map(|k| self.near_obstacle(self.grid.point_of(k), reach))
            .collect()
    }
}

/// Result of advancing from `p` along `a` for time `tau` at speed `f`, with the
/// step shortened so the foot stays in the unit square.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Step {
    pub tau: f64,
    pub foot: Point,
    pub clipped: bool,
}

#[inline]
pub(crate) fn step_in_square(p: Point, a: [f64; 2], f: f64, tau: f64) -> Step {
    let v = [f * a[0], f * a[1]];
    let mut t = tau;
    let mut clipped = false;
    let mut pin: [Option<f64>; 2] = [None, None];
    for k in 0..2 {
        let end = p[k] + t * v[k];
        if end > 1.0 {
            t = ((1.0 - p[k]) / v[k]).max(0.0);
            clipped = true;
            pin = [None, None];
            pin[k] = Some(1.0);
        } else if end < 0.0 {
            t = ((0.0 - p[k]) / v[k]).max(0.0);
            clipped = true;
            pin = [None, None];
            pin[k] = Some(0.0);
        }
    }
    let mut foot = [p[0] + t * v[0], p[1] + t * v[1]];
    for k in 0..2 {
        if let Some(b) = pin[k] {
            foot[k] = b;
        }
        foot[k] = foot[k].clamp(0.0, 1.0);
    }
    Step { tau: t, foot, clipped }
}
