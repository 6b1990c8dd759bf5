use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A position in the unit square.
pub type Point = [f64; 2];

/// Uniform node-centred grid on `[0,1]²` with equal spacing on both axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2 {
    nx: usize,
    ny: usize,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 gridpoints per axis, got {nx}x{ny}"
            )));
        }
        if nx != ny {
            return Err(Error::InvalidGrid(format!(
                "spacing must be equal on both axes, got {nx}x{ny}"
            )));
        }
        Ok(Grid2 { nx, ny })
    }

    /// `n × n` grid with spacing `1/(n-1)`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    /// Grid whose spacing is `h`; `1/h` must be (close to) an integer.
    pub fn with_spacing(h: f64) -> Result<Self> {
        let cells = 1.0 / h;
        let rounded = cells.round();
        if !(h > 0.0) || (cells - rounded).abs() > 1e-6 * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!("1/h must be an integer, got h = {h}")));
        }
        Self::square(rounded as usize + 1)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index, x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Point {
        let h = self.h();
        [i as f64 * h, j as f64 * h]
    }

    #[inline]
    pub fn point_of(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        self.point(i, j)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])
    }

    pub fn check(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x: p[0], y: p[1] })
        }
    }

    /// Nearest gridpoint to `p` (clamped to the grid).
    pub fn nearest(&self, p: Point) -> (usize, usize) {
        let h = self.h();
        let i = (p[0] / h).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = (p[1] / h).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Lower-left corner of the cell containing `p` and the local coordinates
    /// in `[0,1]²`. Points on the upper boundary map to the last cell.
    #[inline]
    pub fn cell(&self, p: Point) -> (usize, usize, f64, f64) {
        let inv_h = (self.nx - 1) as f64;
        let (i0, gx) = locate(p[0] * inv_h, self.nx - 2);
        let (j0, gy) = locate(p[1] * inv_h, self.ny - 2);
        (i0, j0, gx, gy)
    }

    /// Like [`cell`](Self::cell), with fractions within `SNAP` of a gridline
    /// moved onto it. Solvers use this for characteristic feet, where angle
    /// search noise otherwise puts negligible weight on neighbouring nodes.
    #[inline]
    pub fn cell_snapped(&self, p: Point) -> (usize, usize, f64, f64) {
        let (i0, j0, gx, gy) = self.cell(p);
        (i0, j0, snap(gx), snap(gy))
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        0..self.len()
    }
}

pub(crate) const SNAP: f64 = 1e-6;

#[inline]
pub(crate) fn snap(g: f64) -> f64 {
    if g < SNAP {
        0.0
    } else if g > 1.0 - SNAP {
        1.0
    } else {
        g
    }
}

/// Splits a scaled coordinate into a cell index in `0..=last` and a fraction.
#[inline]
pub(crate) fn locate(scaled: f64, last: usize) -> (usize, f64) {
    let fl = scaled.floor();
    if fl < 0.0 {
        (0, (scaled).max(0.0))
    } else if fl as usize > last {
        (last, (scaled - last as f64).min(1.0))
    } else {
        (fl as usize, scaled - fl)
    }
}

/// One budget dimension `b_i ∈ [0, B_i]` sampled at `count` gridpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetAxis {
    pub bound: f64,
    pub count: usize,
}

impl BudgetAxis {
    pub fn new(bound: f64, count: usize) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::param("budget bound", format!("must be positive, got {bound}")));
        }
        if count < 2 {
            return Err(Error::param("budget count", format!("need at least 2 gridpoints, got {count}")));
        }
        Ok(BudgetAxis { bound, count })
    }

    /// Axis with spacing `delta`; `bound/delta` must be an integer.
    pub fn with_spacing(bound: f64, delta: f64) -> Result<Self> {
        let steps = bound / delta;
        let rounded = steps.round();
        if !(delta > 0.0) || (steps - rounded).abs() > 1e-6 * steps.max(1.0) || rounded < 1.0 {
            return Err(Error::param(
                "budget spacing",
                format!("bound {bound} is not a multiple of spacing {delta}"),
            ));
        }
        Self::new(bound, rounded as usize + 1)
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.bound / (self.count - 1) as f64
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        k as f64 * self.delta()
    }
}

/// The `r` budget axes of the extended state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetAxes {
    axes: Vec<BudgetAxis>,
}

impl BudgetAxes {
    pub fn new(axes: Vec<BudgetAxis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::param(
                "budgets",
                format!("between 1 and 2 secondary costs are supported, got {}", axes.len()),
            ));
        }
        Ok(BudgetAxes { axes })
    }

    pub fn single(bound: f64, count: usize) -> Result<Self> {
        Self::new(vec![BudgetAxis::new(bound, count)?])
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axis(&self, i: usize) -> &BudgetAxis {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[BudgetAxis] {
        &self.axes
    }

    pub fn axes_mut(&mut self) -> &mut [BudgetAxis] {
        &mut self.axes
    }

    /// Number of gridpoints per b_1-slice in the budget directions other than b_1.
    pub fn inner_count(&self) -> usize {
        self.axes[1..].iter().map(|a| a.count).product()
    }

    /// `ĥ = max(h, max_i Δb_i)`.
    pub fn h_hat(&self, grid: &Grid2) -> f64 {
        self.axes.iter().map(|a| a.delta()).fold(grid.h(), f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_unequal_or_tiny() {
        assert!(Grid2::new(1, 1).is_err());
        assert!(Grid2::new(10, 11).is_err());
        let g = Grid2::square(41).unwrap();
        assert!((g.h() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn spacing_round_trip() {
        let g = Grid2::with_spacing(1.0 / 160.0).unwrap();
        assert_eq!(g.nx(), 161);
        assert!(Grid2::with_spacing(0.3).is_err());
        let a = BudgetAxis::with_spacing(1.5, 1.0 / 40.0).unwrap();
        assert_eq!(a.count, 61);
        assert!(BudgetAxis::with_spacing(1.0, 0.3).is_err());
    }

    #[test]
    fn cell_lookup_clamps_upper_edge() {
        let g = Grid2::square(11).unwrap();
        let (i, j, gx, gy) = g.cell([1.0, 0.55]);
        assert_eq!((i, j), (9, 5));
        assert!((gx - 1.0).abs() < 1e-12);
        assert!((gy - 0.5).abs() < 1e-9);
    }

    #[test]
    fn h_hat_is_max_spacing() {
        let g = Grid2::square(101).unwrap();
        let b = BudgetAxes::single(2.0, 101).unwrap();
        assert!((b.h_hat(&g) - 0.02).abs() < 1e-15);
    }
}
