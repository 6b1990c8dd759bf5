//! Dijkstra-like fast marching for the isotropic eikonal equation `|∇ψ| f = 1`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::field::{ScalarField, INF};
use crate::grid::{Grid2, Point};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Seed {
    pub index: usize,
    pub value: f64,
}

/// Seeds at the four corners of the cell containing `p`, valued by their
/// Euclidean distance to `p` over the local speed. Corners with zero speed
/// are skipped.
pub fn point_seeds(grid: &Grid2, p: Point, speed: &[f64]) -> Vec<Seed> {
    let (i0, j0, _, _) = grid.cell(p);
    let mut seeds = Vec::with_capacity(4);
    for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let idx = grid.index(i0 + di, j0 + dj);
        let f = speed[idx];
        if f > 0.0 {
            let c = grid.point_of(idx);
            seeds.push(Seed {
                index: idx,
                value: (c[0] - p[0]).hypot(c[1] - p[1]) / f,
            });
        }
    }
    seeds
}

/// Solves `|∇ψ| f = 1` from the given seeds; `speed` is sampled at the
/// gridpoints and may be zero (such points stay `+INF` unless seeded).
pub fn fast_march_unit(grid: &Grid2, seeds: &[Seed], speed: &[f64]) -> Result<ScalarField> {
    fast_march_with_order(grid, seeds, speed).map(|(f, _)| f)
}

/// Same as [`fast_march_unit`], also returning the acceptance order.
pub fn fast_march_with_order(grid: &Grid2, seeds: &[Seed], speed: &[f64]) -> Result<(ScalarField, Vec<usize>)> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    assert_eq!(speed.len(), grid.len(), "speed size does not match grid");
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.h();
    let mut psi = vec![INF; grid.len()];
    let mut accepted = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    for s in seeds {
        if s.value < psi[s.index] {
            psi[s.index] = s.value;
            heap.push(Reverse((OrderedFloat(s.value), s.index)));
        }
    }
    let mut order = Vec::with_capacity(grid.len());
    while let Some(Reverse((OrderedFloat(t), idx))) = heap.pop() {
        if accepted[idx] || t > psi[idx] {
            continue;
        }
        accepted[idx] = true;
        order.push(idx);
        let (i, j) = grid.coords(idx);
        let mut visit = |ni: usize, nj: usize| {
            let n = nj * nx + ni;
            if accepted[n] || !(speed[n] > 0.0) {
                return;
            }
            let known = |k: Option<usize>| k.filter(|&k| accepted[k]).map_or(INF, |k| psi[k]);
            let a = known((ni > 0).then(|| n - 1)).min(known((ni + 1 < nx).then(|| n + 1)));
            let b = known((nj > 0).then(|| n - nx)).min(known((nj + 1 < ny).then(|| n + nx)));
            let step = h / speed[n];
            let cand = if (a - b).abs() >= step || !a.is_finite() || !b.is_finite() {
                a.min(b) + step
            } else {
                0.5 * (a + b + (2.0 * step * step - (a - b) * (a - b)).sqrt())
            };
            if cand < psi[n] {
                psi[n] = cand;
                heap.push(Reverse((OrderedFloat(cand), n)));
            }
        };
        if i > 0 {
            visit(i - 1, j);
        }
        if i + 1 < nx {
            visit(i + 1, j);
        }
        if j > 0 {
            visit(i, j - 1);
        }
        if j + 1 < ny {
            visit(i, j + 1);
        }
    }
    Ok((ScalarField::from_values(*grid, psi), order))
}
