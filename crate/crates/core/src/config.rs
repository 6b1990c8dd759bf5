//! TOML scenario files.
//!
//! ```toml
//! name = "weather"
//!
//! [grid]
//! n = 201
//!
//! [budgets]
//! bound = [1.5]
//! count = [401]
//!
//! [speed]
//! kind = "constant"
//! value = 1.0
//!
//! [[cost]]
//! kind = "path-length"
//!
//! [[terminal]]
//! targets = [{ at = [1.0, 1.0], value = 0.0 }]
//! ```
//!
//! One `[[cost]]` and one `[[terminal]]` per criterion, primary first.
//! Observer costs refer to `[[observer]]` entries by position.

use serde::{Deserialize, Serialize};

use crate::augmented::{Algorithm, MarchParams};
use crate::angles::AngleSearch;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{BudgetAxes, BudgetAxis, Grid2, Point};
use crate::model::{ControlProblem, CostModel, EllipticProfile, Rect, Region, Sampling, SpeedModel, TerminalCost};
use crate::pipeline::SolveOptions;
use crate::static_solver::{StaticSolveParams, SweepTolerance};
use crate::trajectory::TraceParams;
use crate::visibility::{compute_visibility, observability_cost, Visibility, DEFAULT_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Free-form provenance remarks (e.g. which values are invented).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub grid: GridConfig,
    pub budgets: BudgetConfig,
    pub speed: SpeedConfig,
    pub cost: Vec<CostConfig>,
    pub terminal: Vec<TerminalConfig>,
    #[serde(default)]
    pub obstacle: Vec<RectConfig>,
    #[serde(default)]
    pub observer: Vec<ObserverConfig>,
    #[serde(default)]
    pub march: MarchConfig,
    #[serde(default, rename = "static")]
    pub statics: StaticConfig,
    #[serde(default)]
    pub trace: Vec<TraceConfig>,
    #[serde(default)]
    pub front: Option<FrontConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Gridpoints per side.
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// Upper budget `B_i` per constrained cost.
    pub bound: Vec<f64>,
    /// Budget gridpoints per axis, including 0 and `B_i`.
    pub count: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpeedConfig {
    Constant {
        value: f64,
    },
    SineProduct {
        base: f64,
        amplitude: f64,
        freq_x: f64,
        freq_y: f64,
    },
    Elliptic {
        c_amplitude: f64,
        c_frequency: f64,
        f1: f64,
        f2: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub min: Point,
    pub max: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub min: Point,
    pub max: Point,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostConfig {
    Constant {
        value: f64,
    },
    PathLength,
    /// First matching region wins.
    Regions {
        outside: f64,
        regions: Vec<RegionConfig>,
    },
    /// Regions rasterized on the grid, then box-averaged over `kernel × kernel`
    /// gridpoints (clamped at the border) and sampled bilinearly.
    SmoothedRegions {
        outside: f64,
        regions: Vec<RegionConfig>,
        #[serde(default = "default_kernel")]
        kernel: usize,
    },
    /// `visible` where `[[observer]]` number `observer` sees the point,
    /// `hidden` elsewhere.
    Observer {
        observer: usize,
        visible: f64,
        hidden: f64,
    },
}

fn default_kernel() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub at: Point,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    /// Exit value on the whole boundary; targets override it.
    #[serde(default)]
    pub boundary: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub at: Point,
    /// Hidden when the detour around obstacles exceeds this many `h`.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarchConfig {
    pub algorithm: u8,
    pub restarts: usize,
    pub angle_tolerance: f64,
}

impl Default for MarchConfig {
    fn default() -> Self {
        let s = AngleSearch::default();
        MarchConfig {
            algorithm: 1,
            restarts: s.restarts,
            angle_tolerance: s.tolerance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticConfig {
    /// Fixed pseudo-time step; absent means the per-direction default.
    pub tau: Option<f64>,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for StaticConfig {
    fn default() -> Self {
        let p = StaticSolveParams::default();
        let tolerance = match p.sweep_tolerance {
            SweepTolerance::Absolute(t) | SweepTolerance::Relative(t) => t,
        };
        StaticConfig {
            tau: p.tau,
            tolerance,
            max_sweeps: p.max_sweeps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub start: Point,
    /// One entry per budget axis.
    pub budget: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontConfig {
    pub start: Point,
    /// Weights per side of the weighted-sum mesh.
    #[serde(default = "default_weights")]
    pub weights: usize,
    /// Tightness threshold in units of `ĥ·k_2`.
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_weights() -> usize {
    21
}

fn default_theta() -> f64 {
    1.0
}

/// Command-line style overrides applied on top of a config.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Overrides {
    /// Spatial step; `1/h` must be an integer.
    pub h: Option<f64>,
    /// First budget step; `B_1/Δb_1` is rounded to the nearest integer.
    pub db: Option<f64>,
    pub bound: Option<f64>,
    pub algorithm: Option<u8>,
}

/// A config turned into a solvable problem.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub problem: ControlProblem,
    pub options: SolveOptions,
    pub visibility: Vec<Visibility>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(h) = o.h {
            self.grid.n = Grid2::with_spacing(h)?.nx();
        }
        if let Some(b) = o.bound {
            let Some(first) = self.budgets.bound.first_mut() else {
                return Err(Error::Config("budgets.bound: no budget axis to override".into()));
            };
            *first = b;
        }
        if let Some(db) = o.db {
            if !(db > 0.0) {
                return Err(Error::param("db", "must be positive"));
            }
            let (Some(&b), Some(count)) = (self.budgets.bound.first(), self.budgets.count.first_mut()) else {
                return Err(Error::Config("budgets.count: no budget axis to override".into()));
            };
            *count = (b / db).round() as usize + 1;
        }
        if let Some(a) = o.algorithm {
            self.march.algorithm = a;
        }
        Ok(())
    }

    /// Every problem with the config, one line per field.
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n_costs = self.cost.len();
        if self.grid.n < 3 {
            out.push(format!("grid.n: need at least 3 gridpoints per side, got {}", self.grid.n));
        }
        if self.budgets.bound.len() != self.budgets.count.len() {
            out.push(format!(
                "budgets: {} bounds but {} counts",
                self.budgets.bound.len(),
                self.budgets.count.len()
            ));
        }
        if !(1..=2).contains(&self.budgets.bound.len()) {
            out.push(format!("budgets.bound: need 1 or 2 axes, got {}", self.budgets.bound.len()));
        }
        for (i, b) in self.budgets.bound.iter().enumerate() {
            if !(*b > 0.0 && b.is_finite()) {
                out.push(format!("budgets.bound[{i}]: must be positive, got {b}"));
            }
        }
        for (i, c) in self.budgets.count.iter().enumerate() {
            if *c < 2 {
                out.push(format!("budgets.count[{i}]: need at least 2 budget gridpoints, got {c}"));
            }
        }
        if n_costs != self.budgets.bound.len() + 1 {
            out.push(format!(
                "cost: {} budget axes need {} costs, got {n_costs}",
                self.budgets.bound.len(),
                self.budgets.bound.len() + 1
            ));
        }
        if self.terminal.len() != n_costs {
            out.push(format!("terminal: need one entry per cost ({n_costs}), got {}", self.terminal.len()));
        }
        match self.speed {
            SpeedConfig::Constant { value } if !(value > 0.0) => {
                out.push(format!("speed.value: must be positive, got {value}"))
            }
            SpeedConfig::SineProduct { base, amplitude, .. } if !(base - amplitude.abs() > 0.0) => {
                out.push(format!("speed: base - |amplitude| must be positive, got {}", base - amplitude.abs()))
            }
            SpeedConfig::Elliptic { f1, f2, .. } if !(f1 > 0.0 && f2 > 0.0) => {
                out.push("speed: f1 and f2 must be positive".into())
            }
            _ => {}
        }
        for (k, c) in self.cost.iter().enumerate() {
            let mut rate = |name: &str, v: f64| {
                if !(v > 0.0 && v.is_finite()) {
                    out.push(format!("cost[{k}].{name}: must be positive and finite, got {v}"));
                }
            };
            match c {
                CostConfig::Constant { value } => rate("value", *value),
                CostConfig::PathLength => {}
                CostConfig::Regions { outside, regions } | CostConfig::SmoothedRegions { outside, regions, .. } => {
                    rate("outside", *outside);
                    for r in regions {
                        rate("regions.rate", r.rate);
                    }
                }
                CostConfig::Observer {
                    observer,
                    visible,
                    hidden,
                } => {
                    rate("visible", *visible);
                    rate("hidden", *hidden);
                    if *observer >= self.observer.len() {
                        out.push(format!(
                            "cost[{k}].observer: no observer number {observer} ({} defined)",
                            self.observer.len()
                        ));
                    }
                }
            }
            if let CostConfig::SmoothedRegions { kernel, .. } = c {
                if kernel % 2 == 0 {
                    out.push(format!("cost[{k}].kernel: must be odd, got {kernel}"));
                }
            }
            if let CostConfig::Regions { regions, .. } | CostConfig::SmoothedRegions { regions, .. } = c {
                for (i, r) in regions.iter().enumerate() {
                    if Rect::new(r.min, r.max).is_err() {
                        out.push(format!("cost[{k}].regions[{i}]: min must not exceed max"));
                    }
                }
            }
        }
        let in_square = |p: Point| p.iter().all(|v| (0.0..=1.0).contains(v));
        for (k, t) in self.terminal.iter().enumerate() {
            if t.targets.is_empty() && t.boundary.is_none() {
                out.push(format!("terminal[{k}]: needs targets or a boundary value"));
            }
            for (i, tg) in t.targets.iter().enumerate() {
                if !in_square(tg.at) {
                    out.push(format!("terminal[{k}].targets[{i}].at: outside the unit square"));
                }
                if tg.value.is_nan() || tg.value < 0.0 {
                    out.push(format!("terminal[{k}].targets[{i}].value: must be non-negative"));
                }
            }
        }
        for (i, o) in self.obstacle.iter().enumerate() {
            match Rect::new(o.min, o.max) {
                Ok(r) if r.within_unit_square() => {}
                Ok(_) => out.push(format!("obstacle[{i}]: leaves the unit square")),
                Err(_) => out.push(format!("obstacle[{i}]: min must not exceed max")),
            }
        }
        for (i, o) in self.observer.iter().enumerate() {
            if !in_square(o.at) {
                out.push(format!("observer[{i}].at: outside the unit square"));
            } else if self.obstacle.iter().any(|r| rect(r).contains(o.at)) {
                out.push(format!("observer[{i}].at: inside an obstacle"));
            }
            if !(o.threshold >= 0.0) {
                out.push(format!("observer[{i}].threshold: must be non-negative"));
            }
        }
        if Algorithm::try_from(self.march.algorithm).is_err() {
            out.push(format!("march.algorithm: must be 1, 2 or 3, got {}", self.march.algorithm));
        }
        if self.march.restarts == 0 {
            out.push("march.restarts: must be at least 1".into());
        }
        for (i, t) in self.trace.iter().enumerate() {
            if !in_square(t.start) {
                out.push(format!("trace[{i}].start: outside the unit square"));
            }
            if t.budget.len() != self.budgets.bound.len() {
                out.push(format!(
                    "trace[{i}].budget: need {} entries, got {}",
                    self.budgets.bound.len(),
                    t.budget.len()
                ));
            }
        }
        if let Some(f) = &self.front {
            if !in_square(f.start) {
                out.push("front.start: outside the unit square".into());
            }
            if f.weights < 2 {
                out.push("front.weights: need at least 2".into());
            }
        }
        out
    }

    pub fn solve_options(&self) -> Result<SolveOptions> {
        let algorithm = Algorithm::try_from(self.march.algorithm).map_err(|e| Error::Config(e))?;
        let search = AngleSearch {
            restarts: self.march.restarts,
            tolerance: self.march.angle_tolerance,
        };
        Ok(SolveOptions {
            statics: StaticSolveParams {
                tau: self.statics.tau,
                sweep_tolerance: SweepTolerance::Relative(self.statics.tolerance),
                max_sweeps: self.statics.max_sweeps,
                search,
                ..Default::default()
            },
            march: MarchParams {
                algorithm,
                search,
                ..Default::default()
            },
        })
    }

    pub fn trace_params(&self) -> TraceParams {
        TraceParams {
            search: AngleSearch {
                restarts: self.march.restarts,
                tolerance: self.march.angle_tolerance,
            },
            ..Default::default()
        }
    }

    /// Validates and assembles the problem, computing observer masks.
    pub fn build(&self) -> Result<Scenario> {
        let issues = self.issues();
        if !issues.is_empty() {
            return Err(Error::Config(issues.join("\n")));
        }
        let grid = Grid2::square(self.grid.n)?;
        let obstacles: Vec<Rect> = self.obstacle.iter().map(rect).collect();
        let visibility = self
            .observer
            .iter()
            .map(|o| compute_visibility(&grid, o.at, &obstacles, o.threshold))
            .collect::<Result<Vec<_>>>()?;
        let costs = self
            .cost
            .iter()
            .map(|c| self.cost_model(c, &grid, &visibility))
            .collect::<Result<Vec<_>>>()?;
        let terminals = self.terminal.iter().map(|t| terminal(t, &grid)).collect();
        let axes = self
            .budgets
            .bound
            .iter()
            .zip(&self.budgets.count)
            .map(|(&b, &c)| BudgetAxis::new(b, c))
            .collect::<Result<Vec<_>>>()?;
        let problem = ControlProblem::new(grid, self.speed(), costs, terminals, BudgetAxes::new(axes)?, obstacles)?;
        Ok(Scenario {
            config: self.clone(),
            problem,
            options: self.solve_options()?,
            visibility,
        })
    }

    fn speed(&self) -> SpeedModel {
        match self.speed {
            SpeedConfig::Constant { value } => SpeedModel::Constant(value),
            SpeedConfig::SineProduct {
                base,
                amplitude,
                freq_x,
                freq_y,
            } => SpeedModel::SineProduct {
                base,
                amplitude,
                freq_x,
                freq_y,
            },
            SpeedConfig::Elliptic {
                c_amplitude,
                c_frequency,
                f1,
                f2,
            } => SpeedModel::Elliptic(EllipticProfile {
                c_amplitude,
                c_frequency,
                f1,
                f2,
            }),
        }
    }

    fn cost_model(&self, c: &CostConfig, grid: &Grid2, vis: &[Visibility]) -> Result<CostModel> {
        Ok(match c {
            CostConfig::Constant { value } => CostModel::Constant(*value),
            CostConfig::PathLength => CostModel::PathLength,
            CostConfig::Regions { outside, regions } => CostModel::Regions {
                regions: regions.iter().map(region).collect(),
                outside: *outside,
            },
            CostConfig::SmoothedRegions {
                outside,
                regions,
                kernel,
            } => {
                let regions: Vec<Region> = regions.iter().map(region).collect();
                let raw = ScalarField::from_fn(*grid, |p| {
                    regions.iter().find(|r| r.rect.contains(p)).map_or(*outside, |r| r.rate)
                });
                CostModel::Field {
                    field: box_smooth(&raw, *kernel),
                    sampling: Sampling::Bilinear,
                }
            }
            CostConfig::Observer {
                observer,
                visible,
                hidden,
            } => observability_cost(&vis[*observer], *visible, *hidden)?,
        })
    }
}

fn rect(r: &RectConfig) -> Rect {
    Rect { min: r.min, max: r.max }
}

fn region(r: &RegionConfig) -> Region {
    Region {
        rect: Rect { min: r.min, max: r.max },
        rate: r.rate,
    }
}

fn terminal(t: &TerminalConfig, grid: &Grid2) -> TerminalCost {
    let mut q = match t.boundary {
        Some(v) => TerminalCost::on_boundary(grid, v),
        None => TerminalCost::new(),
    };
    for tg in &t.targets {
        let (i, j) = grid.nearest(tg.at);
        q.insert(grid.index(i, j), tg.value);
    }
    q
}

/// Mean over the `k × k` window of gridpoints, window clipped at the border.
pub fn box_smooth(field: &ScalarField, k: usize) -> ScalarField {
    let grid = *field.grid();
    let r = (k / 2) as isize;
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let mut out = field.clone();
    for j in 0..ny {
        for i in 0..nx {
            let mut sum = 0.0;
            let mut n = 0.0;
            for dj in -r..=r {
                for di in -r..=r {
                    let (a, b) = (i + di, j + dj);
                    if (0..nx).contains(&a) && (0..ny).contains(&b) {
                        sum += field.get(a as usize, b as usize);
                        n += 1.0;
                    }
                }
            }
            out.set(i as usize, j as usize, sum / n);
        }
    }
    out
}
