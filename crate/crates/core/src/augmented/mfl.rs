use crate::error::{Error, Result};
use crate::field::{ScalarField, INF};
use crate::grid::{BudgetAxes, BudgetAxis};
use crate::medium::Medium;
use crate::model::TerminalCost;
use crate::restricted::ValueTable;

use super::march::{march_augmented, CapData, CompanionSpec, MarchSpec};
use super::{AugmentedField, MarchParams};

/// Marker in [`MflSurface::snapped_index`] for points infeasible at every budget.
pub const NOT_FEASIBLE: u32 = u32::MAX;

/// The minimal feasible `b_1` per `(x, b_2)` and the value of `w` there.
#[derive(Clone, Debug)]
pub struct MflSurface {
    /// Entries per gridpoint (`N_2`, or 1 for a single budget).
    pub n_inner: usize,
    /// Minimal feasible `b_1`, indexed `node * n_inner + t`.
    pub level: Vec<f64>,
    pub value_on_mfl: Vec<f64>,
    /// Companion costs on the surface, in march order.
    pub companions: Vec<Vec<f64>>,
    /// Smallest slice `i` with `level <= i Δb_1`, or [`NOT_FEASIBLE`].
    pub snapped_index: Vec<u32>,
    /// The `b_1` axis used for snapping.
    pub axis: BudgetAxis,
}

impl MflSurface {
    pub fn new(n_inner: usize, level: Vec<f64>, value_on_mfl: Vec<f64>, companions: Vec<Vec<f64>>, axis: BudgetAxis) -> Self {
        let db = axis.delta();
        let last = (axis.count - 1) as f64;
        let snapped_index = level
            .iter()
            .map(|&l| {
                if !l.is_finite() {
                    return NOT_FEASIBLE;
                }
                // Conservative upward snapping; the slack absorbs round-off
                // on levels that sit exactly on a gridline.
                let i = (l / db - 1e-9).ceil().max(0.0);
                if i > last {
                    NOT_FEASIBLE
                } else {
                    i as u32
                }
            })
            .collect();
        MflSurface {
            n_inner,
            level,
            value_on_mfl,
            companions,
            snapped_index,
            axis,
        }
    }

    #[inline]
    pub fn snapped(&self, node: usize, t: usize) -> u32 {
        self.snapped_index[node * self.n_inner + t]
    }

    #[inline]
    pub fn level_at(&self, node: usize, t: usize) -> f64 {
        self.level[node * self.n_inner + t]
    }

    #[inline]
    pub fn value_at(&self, node: usize, t: usize) -> f64 {
        self.value_on_mfl[node * self.n_inner + t]
    }
}

/// Single budget: the surface is the graph of `u_1` carrying `v_{01}`.
pub fn build_mfl_single(
    level: &ScalarField,
    value: &ScalarField,
    companions: &[&ScalarField],
    axis: BudgetAxis,
) -> MflSurface {
    let value_on_mfl = level
        .values()
        .iter()
        .zip(value.values())
        .map(|(l, v)| if l.is_finite() { *v } else { INF })
        .collect();
    MflSurface::new(
        1,
        level.values().to_vec(),
        value_on_mfl,
        companions.iter().map(|c| c.values().to_vec()).collect(),
        axis,
    )
}

/// Two budgets: the surface is the graph of `w_1(x, b_2)`, the least `J_1`
/// reachable with `J_2 <= b_2`, obtained by a single-budget march with `K_1`
/// as primary and `K_2` as constraint. `J_0` is carried along that march to
/// give the value of `w` on the surface. Returns the surface and `w_1`.
pub fn build_mfl_pair(
    medium: &Medium,
    terminals: &[&TerminalCost],
    budgets: &BudgetAxes,
    table: &ValueTable,
    params: &MarchParams,
) -> Result<(MflSurface, AugmentedField)> {
    if budgets.r() != 2 {
        return Err(Error::param("budgets", "the recursive surface needs two budget axes"));
    }
    let inner = BudgetAxes::new(vec![*budgets.axis(1)])?;
    let spec = MarchSpec {
        medium,
        primary: 1,
        constrained: vec![2],
        terminals: terminals.to_vec(),
        budgets: inner.clone(),
        companions: vec![CompanionSpec {
            cost: 0,
            on_cap: table.v(1, 0),
        }],
    };
    let sub_mfl = build_mfl_single(table.u(2), table.v(2, 1), &[table.v(2, 0)], *inner.axis(0));
    let cap = CapData {
        u0: table.u(1),
        thresholds: vec![table.v(1, 2)],
    };
    let w1 = march_augmented(&spec, &sub_mfl, &cap, params)?;
    let m = medium.grid().len();
    let n2 = budgets.axis(1).count;
    let mut level = vec![INF; m * n2];
    let mut value = vec![INF; m * n2];
    for node in 0..m {
        for t in 0..n2 {
            let k = node * n2 + t;
            level[k] = w1.value(t, node, 0);
            value[k] = w1.companions[0].1[w1.index(t, node, 0)];
            // A path that fits a smaller b_2 fits this one too. The cap can
            // lift w_1 above a marched value one slice earlier; keep the
            // surface nonincreasing in b_2 by reusing that earlier path.
            if t > 0 && level[k - 1] < level[k] {
                level[k] = level[k - 1];
                value[k] = value[k - 1];
            }
        }
    }
    let surface = MflSurface::new(n2, level, value, Vec::new(), *budgets.axis(0));
    Ok((surface, w1))
}

/// Builds the surface for one or two budgets from the solved value table.
pub fn build_mfl(
    medium: &Medium,
    terminals: &[&TerminalCost],
    budgets: &BudgetAxes,
    table: &ValueTable,
    params: &MarchParams,
) -> Result<(MflSurface, Option<AugmentedField>)> {
    match budgets.r() {
        1 => Ok((build_mfl_single(table.u(1), table.v(1, 0), &[], *budgets.axis(0)), None)),
        _ => build_mfl_pair(medium, terminals, budgets, table, params).map(|(s, w)| (s, Some(w))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;

    #[test]
    fn snapping_is_conservative() {
        let g = Grid2::square(3).unwrap();
        let axis = BudgetAxis::new(1.0, 11).unwrap();
        let level = ScalarField::from_values(g, vec![0.0, 0.1, 0.15, 0.3000000000001, 0.95, 1.2, INF, 0.99999, 1.0]);
        let s = build_mfl_single(&level, &level, &[], axis);
        assert_eq!(
            s.snapped_index,
            vec![0, 1, 2, 3, 10, NOT_FEASIBLE, NOT_FEASIBLE, 10, 10]
        );
        for (k, &i) in s.snapped_index.iter().enumerate() {
            if i != NOT_FEASIBLE {
                assert!(i as f64 * 0.1 >= s.level[k] - 1e-9);
            }
        }
    }
}
