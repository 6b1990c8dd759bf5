use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, INF};
use crate::grid::{BudgetAxes, Grid2, Point};

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

const RECT_EPS: f64 = 1e-12;

/// Offset used to look at both sides of a region edge.
const EDGE_PROBE: f64 = 1e-9;

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        if !(min[0] <= max[0] && min[1] <= max[1]) {
            return Err(Error::InvalidProblem(format!(
                "rectangle min {min:?} must not exceed max {max:?}"
            )));
        }
        Ok(Rect { min, max })
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] - RECT_EPS
            && p[0] <= self.max[0] + RECT_EPS
            && p[1] >= self.min[1] - RECT_EPS
            && p[1] <= self.max[1] + RECT_EPS
    }

    pub fn within_unit_square(&self) -> bool {
        self.min[0] >= 0.0 && self.min[1] >= 0.0 && self.max[0] <= 1.0 && self.max[1] <= 1.0
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    #[inline]
    pub fn distance(&self, p: Point) -> f64 {
        let dx = (self.min[0] - p[0]).max(p[0] - self.max[0]).max(0.0);
        let dy = (self.min[1] - p[1]).max(p[1] - self.max[1]).max(0.0);
        dx.hypot(dy)
    }

    /// Whether the closed segment `a`–`b` meets the closed rectangle
    /// (Liang–Barsky clipping).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        let d = [b[0] - a[0], b[1] - a[1]];
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for k in 0..2 {
            let lo = self.min[k] - RECT_EPS;
            let hi = self.max[k] + RECT_EPS;
            if d[k] == 0.0 {
                if a[k] < lo || a[k] > hi {
                    return false;
                }
            } else {
                let mut ta = (lo - a[k]) / d[k];
                let mut tb = (hi - a[k]) / d[k];
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Velocity profile from the elliptic example: the speed ellipse has semi-axes
/// `f2` along the graph of `C(x) = c_amplitude·sin(c_frequency·π·x)` and `f1`
/// across it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticProfile {
    pub c_amplitude: f64,
    pub c_frequency: f64,
    pub f1: f64,
    pub f2: f64,
}

impl EllipticProfile {
    /// The vector `[p, q]` at abscissa `x`.
    #[inline]
    pub fn axis(&self, x: f64) -> [f64; 2] {
        let slope = self.c_amplitude * self.c_frequency * PI * (self.c_frequency * PI * x).cos();
        let ratio = self.f2 / self.f1;
        let scale = (ratio * ratio - 1.0).max(0.0).sqrt() / (1.0 + slope * slope).sqrt();
        [scale * slope, -scale]
    }

    #[inline]
    pub fn speed_with_axis(f2: f64, axis: [f64; 2], a: [f64; 2]) -> f64 {
        let d = axis[0] * a[0] + axis[1] * a[1];
        f2 / (1.0 + d * d).sqrt()
    }

    #[inline]
    pub fn speed(&self, p: Point, a: [f64; 2]) -> f64 {
        Self::speed_with_axis(self.f2, self.axis(p[0]), a)
    }
}

/// Evaluates `f(x, a)` for the elliptic profile.
pub fn eval_anisotropic_speed(model: &EllipticProfile, p: Point, a: [f64; 2]) -> f64 {
    model.speed(p, a)
}

/// Speed of motion `f(x, a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpeedModel {
    Constant(f64),
    /// `base + amplitude·sin(freq_x·π·x)·sin(freq_y·π·y)`.
    SineProduct {
        base: f64,
        amplitude: f64,
        freq_x: f64,
        freq_y: f64,
    },
    /// Isotropic speed sampled bilinearly from a grid field.
    Field(ScalarField),
    Elliptic(EllipticProfile),
}

impl SpeedModel {
    pub fn is_isotropic(&self) -> bool {
        !matches!(self, SpeedModel::Elliptic(_))
    }

    /// Speed for isotropic models.
    #[inline]
    pub fn isotropic_at(&self, p: Point) -> f64 {
        match self {
            SpeedModel::Constant(v) => *v,
            SpeedModel::SineProduct {
                base,
                amplitude,
                freq_x,
                freq_y,
            } => base + amplitude * (freq_x * PI * p[0]).sin() * (freq_y * PI * p[1]).sin(),
            SpeedModel::Field(f) => f.sample(p),
            SpeedModel::Elliptic(e) => e.f2,
        }
    }

    #[inline]
    pub fn eval(&self, p: Point, a: [f64; 2]) -> f64 {
        match self {
            SpeedModel::Elliptic(e) => e.speed(p, a),
            _ => self.isotropic_at(p),
        }
    }

    /// `max_a f(x, a)`.
    pub fn max_at(&self, p: Point) -> f64 {
        match self {
            SpeedModel::Elliptic(e) => e.f2,
            _ => self.isotropic_at(p),
        }
    }

    pub fn min_at(&self, p: Point) -> f64 {
        match self {
            SpeedModel::Elliptic(e) => e.f1.min(e.f2),
            _ => self.isotropic_at(p),
        }
    }
}

/// How a grid-sampled cost is read between gridpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Bilinear,
    Nearest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub rect: Rect,
    pub rate: f64,
}

/// Running cost `K(x, a)`. Every model is of the form `c(x) + d(x)·f(x, a)`,
/// so direction dependence enters only through the speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CostModel {
    Constant(f64),
    /// First region containing the point wins; `outside` elsewhere. Points
    /// on an edge get the smallest adjacent rate.
    Regions { regions: Vec<Region>, outside: f64 },
    /// `K = f(x, a)`: the accumulated cost is the path length.
    PathLength,
    Field { field: ScalarField, sampling: Sampling },
    /// Linear combination of other costs.
    Sum(Vec<(f64, CostModel)>),
}

impl CostModel {
    /// Time: `K = 1`.
    pub fn time() -> Self {
        CostModel::Constant(1.0)
    }

    /// Coefficients `(c, d)` with `K = c + d·f` at `p`.
    pub fn affine_at(&self, p: Point) -> (f64, f64) {
        match self {
            CostModel::Constant(v) => (*v, 0.0),
            CostModel::Regions { regions, outside } => {
                // On a region edge take the cheapest adjacent rate: a path
                // can always run just beside the edge, so the value function
                // only sees the lower envelope of the rate there.
                let rate_at = |q: Point| {
                    regions
                        .iter()
                        .find(|r| r.rect.contains(q))
                        .map_or(*outside, |r| r.rate)
                };
                let e = EDGE_PROBE;
                let rate = [[-e, -e], [e, -e], [-e, e], [e, e]]
                    .iter()
                    .map(|d| [p[0] + d[0], p[1] + d[1]])
                    .filter(|q| (0..2).all(|k| (0.0..=1.0).contains(&q[k])))
                    .map(rate_at)
                    .fold(INF, f64::min);
                let rate = if rate.is_finite() { rate } else { rate_at(p) };
                (rate, 0.0)
            }
            CostModel::PathLength => (0.0, 1.0),
            CostModel::Field { field, sampling } => {
                let v = match sampling {
                    Sampling::Bilinear => field.sample(p),
                    Sampling::Nearest => {
                        let (i, j) = field.grid().nearest(p);
                        field.get(i, j)
                    }
                };
                (v, 0.0)
            }
            CostModel::Sum(terms) => {
                let mut c = 0.0;
                let mut d = 0.0;
                for (w, m) in terms {
                    if *w == 0.0 {
                        continue;
                    }
                    let (ci, di) = m.affine_at(p);
                    c += w * ci;
                    d += w * di;
                }
                (c, d)
            }
        }
    }

    #[inline]
    pub fn eval(&self, p: Point, speed: f64) -> f64 {
        let (c, d) = self.affine_at(p);
        if d == 0.0 {
            c
        } else {
            c + d * speed
        }
    }
}

/// Terminal cost `q`: finite on a set of gridpoints, `+INF` elsewhere.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TerminalCost {
    entries: BTreeMap<usize, f64>,
}

impl TerminalCost {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, idx: usize, value: f64) {
        self.entries.insert(idx, value);
    }

    /// Single target at the gridpoint nearest to `p`.
    pub fn at_point(grid: &Grid2, p: Point, value: f64) -> Self {
        let mut t = Self::new();
        let (i, j) = grid.nearest(p);
        t.insert(grid.index(i, j), value);
        t
    }

    /// `q = value` on every boundary gridpoint.
    pub fn on_boundary(grid: &Grid2, value: f64) -> Self {
        let mut t = Self::new();
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if grid.is_boundary(i, j) {
                    t.insert(grid.index(i, j), value);
                }
            }
        }
        t
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.entries.get(&idx).copied().unwrap_or(INF)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn finite_entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries().filter(|(_, v)| v.is_finite())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pointwise linear combination; `+INF` wherever any term with positive
    /// weight is infinite.
    pub fn combine(terms: &[(f64, &TerminalCost)]) -> Self {
        let mut keys: Vec<usize> = terms.iter().flat_map(|(_, t)| t.entries.keys().copied()).collect();
        keys.sort_unstable();
        keys.dedup();
        let mut out = Self::new();
        for k in keys {
            let mut v = 0.0;
            for (w, t) in terms {
                if *w > 0.0 {
                    v += w * t.value(k);
                }
            }
            out.insert(k, v);
        }
        out
    }
}

/// Multi-criterion exit-time control problem on the unit square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlProblem {
    pub grid: Grid2,
    pub speed: SpeedModel,
    /// `K_0..K_r`; index 0 is the primary cost, index 1 the marching direction.
    pub costs: Vec<CostModel>,
    pub terminals: Vec<TerminalCost>,
    pub budgets: BudgetAxes,
    pub obstacles: Vec<Rect>,
}

impl ControlProblem {
    pub fn new(
        grid: Grid2,
        speed: SpeedModel,
        costs: Vec<CostModel>,
        terminals: Vec<TerminalCost>,
        budgets: BudgetAxes,
        obstacles: Vec<Rect>,
    ) -> Result<Self> {
        let p = ControlProblem {
            grid,
            speed,
            costs,
            terminals,
            budgets,
            obstacles,
        };
        p.check_shape()?;
        Ok(p)
    }

    pub fn check_shape(&self) -> Result<()> {
        let r = self.budgets.r();
        if self.costs.len() != r + 1 {
            return Err(Error::InvalidProblem(format!(
                "{} budget axes need {} running costs, got {}",
                r,
                r + 1,
                self.costs.len()
            )));
        }
        if self.terminals.len() != self.costs.len() {
            return Err(Error::InvalidProblem(format!(
                "{} running costs but {} terminal costs",
                self.costs.len(),
                self.terminals.len()
            )));
        }
        for t in &self.terminals {
            if let Some((k, _)) = t.entries().find(|(k, _)| *k >= self.grid.len()) {
                return Err(Error::InvalidProblem(format!("terminal index {k} outside the grid")));
            }
        }
        if let Some(o) = self.obstacles.iter().find(|o| !o.within_unit_square()) {
            return Err(Error::InvalidProblem(format!(
                "obstacle {:?}-{:?} leaves the unit square",
                o.min, o.max
            )));
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.budgets.r()
    }

    pub fn h_hat(&self) -> f64 {
        self.budgets.h_hat(&self.grid)
    }

    pub fn inside_obstacle(&self, p: Point) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }
}
