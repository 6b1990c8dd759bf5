//! Budget-augmented value function `w(x, b)`: the minimal primary cost from
//! `x` among controls whose secondary costs stay within the budgets `b`.
//!
//! `w` is computed on `Ω × [0,B_1] (× [0,B_2])` slice by slice in increasing
//! `b_1`. Below the minimal feasible level (MFL) `w = +INF`; where the
//! primary-optimal control already fits the budgets `w = u_0`.

mod march;
mod mfl;
mod report;

pub use march::{march_augmented, march_streaming, CapData, CompanionSpec, MarchSpec, SliceView};
pub use mfl::{build_mfl, build_mfl_pair, build_mfl_single, MflSurface, NOT_FEASIBLE};
pub use report::{domain_reduction_report, DomainReduction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bilinear_weights, INF};
use crate::grid::{locate, snap, BudgetAxes, Grid2, Point};
use crate::angles::AngleSearch;

/// Choice of the characteristic step in the march.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Algorithm {
    /// Step until `b_1` has dropped by exactly one slice; interpolate there.
    SliceStep,
    /// Walk the ray cell by cell, re-evaluating speed and costs on every face,
    /// until the previous slice is reached.
    RayWalk,
    /// Like [`RayWalk`](Algorithm::RayWalk), but stop on the first face whose
    /// corners are already computed in the current slice.
    EarlyStop,
}

impl Algorithm {
    pub fn number(self) -> u8 {
        match self {
            Algorithm::SliceStep => 1,
            Algorithm::RayWalk => 2,
            Algorithm::EarlyStop => 3,
        }
    }
}

impl TryFrom<u8> for Algorithm {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Algorithm::SliceStep),
            2 => Ok(Algorithm::RayWalk),
            3 => Ok(Algorithm::EarlyStop),
            _ => Err(format!("algorithm must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<Algorithm> for u8 {
    fn from(a: Algorithm) -> u8 {
        a.number()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarchParams {
    pub algorithm: Algorithm,
    pub search: AngleSearch,
    /// Cap on cells visited by one ray walk; `None` uses `N_1 + nx + ny`.
    pub max_cells_traversed: Option<usize>,
}

impl Default for MarchParams {
    fn default() -> Self {
        MarchParams {
            algorithm: Algorithm::SliceStep,
            search: AngleSearch::default(),
            max_cells_traversed: None,
        }
    }
}

impl MarchParams {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        MarchParams {
            algorithm,
            ..Default::default()
        }
    }

    pub(crate) fn cell_limit(&self, grid: &Grid2, budgets: &BudgetAxes) -> Result<usize> {
        let floor = budgets.axis(0).count + grid.nx() + grid.ny();
        match self.max_cells_traversed {
            None => Ok(floor),
            Some(c) if c >= floor => Ok(c),
            Some(c) => Err(Error::param(
                "max_cells_traversed",
                format!("must be at least N_1 + nx + ny = {floor}, got {c}"),
            )),
        }
    }
}

/// Why a point of the extended grid holds its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum PointTag {
    /// Gridpoint inside an obstacle.
    Blocked = 0,
    /// Budget below the snapped minimal feasible level: `+INF`.
    BelowMfl = 1,
    /// On the snapped minimal feasible level: initialized from the MFL value.
    Mfl = 2,
    /// Primary-optimal control fits the budgets: `w = u_0`.
    Capped = 3,
    /// Exit gridpoint with enough budget to stop there.
    Terminal = 4,
    /// Computed by the march.
    Active = 5,
}

/// Counters gathered during a march.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarchStats {
    /// Gridpoints updated by the semi-Lagrangian minimization.
    pub marched_points: u64,
    /// Objective evaluations (one ray per control sample).
    pub rays: u64,
    /// Extended-grid cells traversed over all rays.
    pub cells_traversed: u64,
}

impl MarchStats {
    pub fn cells_per_ray(&self) -> f64 {
        if self.rays == 0 {
            0.0
        } else {
            self.cells_traversed as f64 / self.rays as f64
        }
    }

    pub(crate) fn add(&mut self, o: &MarchStats) {
        self.marched_points += o.marched_points;
        self.rays += o.rays;
        self.cells_traversed += o.cells_traversed;
    }
}

/// `w` on the extended grid, stored as consecutive `b_1`-slices; within a
/// slice the index is `node * N_2 + t` (`t` indexes `b_2`, absent for `r = 1`).
#[derive(Clone, Debug)]
pub struct AugmentedField {
    pub grid: Grid2,
    pub budgets: BudgetAxes,
    pub values: Vec<f64>,
    pub tags: Vec<PointTag>,
    /// Cost index and values of each companion cost carried along the march.
    pub companions: Vec<(usize, Vec<f64>)>,
    pub stats: MarchStats,
    pub primary: usize,
    pub constrained: Vec<usize>,
}

impl AugmentedField {
    #[inline]
    pub fn n_inner(&self) -> usize {
        self.budgets.inner_count()
    }

    #[inline]
    pub fn n_slices(&self) -> usize {
        self.budgets.axis(0).count
    }

    #[inline]
    pub fn slice_len(&self) -> usize {
        self.grid.len() * self.n_inner()
    }

    #[inline]
    pub fn index(&self, s: usize, node: usize, t: usize) -> usize {
        (s * self.grid.len() + node) * self.n_inner() + t
    }

    #[inline]
    pub fn value(&self, s: usize, node: usize, t: usize) -> f64 {
        self.values[self.index(s, node, t)]
    }

    #[inline]
    pub fn tag(&self, s: usize, node: usize, t: usize) -> PointTag {
        self.tags[self.index(s, node, t)]
    }

    pub fn slice(&self, s: usize) -> &[f64] {
        let n = self.slice_len();
        &self.values[s * n..(s + 1) * n]
    }

    /// Budget coordinates of gridline `(s, t)`.
    pub fn budget_at(&self, s: usize, t: usize) -> Vec<f64> {
        let mut b = vec![self.budgets.axis(0).value(s)];
        if self.budgets.r() > 1 {
            b.push(self.budgets.axis(1).value(t));
        }
        b
    }

    /// Multilinear interpolation of `w` at `(p, b)`; budgets above the bound
    /// are clamped to it, negative budgets give `+INF`.
    pub fn sample(&self, p: Point, b: &[f64]) -> f64 {
        sample_layer(&self.grid, &self.budgets, &self.values, p, b)
    }

    pub fn sample_companion(&self, k: usize, p: Point, b: &[f64]) -> f64 {
        sample_layer(&self.grid, &self.budgets, &self.companions[k].1, p, b)
    }
}

pub(crate) fn sample_layer(grid: &Grid2, budgets: &BudgetAxes, layer: &[f64], p: Point, b: &[f64]) -> f64 {
    let r = budgets.r();
    let mut cell = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for k in 0..r {
        let ax = budgets.axis(k);
        if b[k] < -1e-12 {
            return INF;
        }
        let scaled = b[k].clamp(0.0, ax.bound) / ax.delta();
        let (c, g) = locate(scaled, ax.count - 2);
        cell[k] = c;
        frac[k] = snap(g);
    }
    let n_inner = budgets.inner_count();
    let m = grid.len();
    let (i0, j0, gx, gy) = grid.cell_snapped(p);
    let nx = grid.nx();
    let base = j0 * nx + i0;
    let nodes = [base, base + 1, base + nx, base + nx + 1];
    let ws = bilinear_weights(gx, gy);
    let mut acc = 0.0;
    let b2_steps = if r > 1 { 2 } else { 1 };
    for (ds, ws1) in [(0usize, 1.0 - frac[0]), (1, frac[0])] {
        if ws1 <= 0.0 {
            continue;
        }
        for dt in 0..b2_steps {
            let wt = if r > 1 {
                if dt == 0 {
                    1.0 - frac[1]
                } else {
                    frac[1]
                }
            } else {
                1.0
            };
            if wt <= 0.0 {
                continue;
            }
            for c in 0..4 {
                let w = ws[c] * ws1 * wt;
                if w <= 0.0 {
                    continue;
                }
                let t = if r > 1 { cell[1] + dt } else { 0 };
                let v = layer[((cell[0] + ds) * m + nodes[c]) * n_inner + t];
                if v == INF {
                    return INF;
                }
                acc += w * v;
            }
        }
    }
    acc
}
