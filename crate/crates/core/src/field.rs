use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Grid2, Point};

/// Sentinel for unreachable / infeasible values.
pub const INF: f64 = f64::INFINITY;

/// Values on the nodes of a [`Grid2`], `+INF` where undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid2,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn filled(grid: Grid2, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field size does not match grid");
        ScalarField { grid, values }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(Point) -> f64) -> Self {
        let values = grid.indices().map(|k| f(grid.point_of(k))).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Largest finite value, or `None` if every value is `+INF`.
    pub fn max_finite(&self) -> Option<f64> {
        max_finite(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(INF, f64::min)
    }

    pub fn finite_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }

    /// Bilinear interpolation at `p`; errors outside the unit square.
    pub fn interpolate(&self, p: Point) -> Result<f64> {
        self.grid.check(p)?;
        Ok(self.sample(p))
    }

    /// Bilinear interpolation at a point assumed to lie in the domain.
    #[inline]
    pub fn sample(&self, p: Point) -> f64 {
        sample_bilinear(&self.grid, &self.values, p)
    }
}

pub(crate) fn max_finite(values: &[f64]) -> Option<f64> {
    values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// Convenience wrapper matching the field method.
pub fn interpolate_bilinear(field: &ScalarField, p: Point) -> Result<f64> {
    field.interpolate(p)
}

/// Bilinear weights of the four corners `(i0,j0), (i0+1,j0), (i0,j0+1), (i0+1,j0+1)`.
#[inline]
pub(crate) fn bilinear_weights(gx: f64, gy: f64) -> [f64; 4] {
    [
        (1.0 - gx) * (1.0 - gy),
        gx * (1.0 - gy),
        (1.0 - gx) * gy,
        gx * gy,
    ]
}

/// Weighted sum ignoring zero-weight corners; any `+INF` corner with positive
/// weight makes the result `+INF`.
#[inline]
pub(crate) fn blend<const N: usize>(weights: &[f64; N], values: &[f64; N]) -> f64 {
    let mut acc = 0.0;
    for k in 0..N {
        if weights[k] > 0.0 {
            if values[k] == INF {
                return INF;
            }
            acc += weights[k] * values[k];
        }
    }
    acc
}

#[inline]
pub(crate) fn sample_bilinear(grid: &Grid2, values: &[f64], p: Point) -> f64 {
    let (i0, j0, gx, gy) = grid.cell(p);
    let nx = grid.nx();
    let k = j0 * nx + i0;
    let w = bilinear_weights(gx, gy);
    blend(&w, &[values[k], values[k + 1], values[k + nx], values[k + nx + 1]])
}
