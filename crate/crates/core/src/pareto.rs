//! Pareto fronts at a start point: read off the augmented field, and the
//! weighted-sum baseline that only finds the convex part of the front.

use serde::Serialize;

use crate::augmented::AugmentedField;
use crate::error::{Error, Result};
use crate::field::INF;
use crate::grid::Point;
use crate::medium::Medium;
use crate::model::{CostModel, TerminalCost};
use crate::par;
use crate::restricted::{solve_restricted, Governing};
use crate::static_solver::{solve_static, StaticSolveParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontSource {
    Augmented,
    WeightedSum,
}

impl FrontSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FrontSource::Augmented => "augmented",
            FrontSource::WeightedSum => "weighted-sum",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParetoFront {
    pub start: Point,
    /// Cost vectors `(J_0, J_1 [, J_2])`, ascending in `J_1`. For fronts read
    /// from the augmented field the secondary entries are the budgets.
    pub points: Vec<Vec<f64>>,
    pub tight: Vec<bool>,
    pub source: FrontSource,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reads the front at `start` from `field`. A budget gridline `b` gives a
/// front point when lowering any single `b_i` by one step raises `W` by more
/// than `theta`; points whose `J_0` is within `theta` of an already kept point
/// with smaller budgets are dropped.
pub fn extract_front(medium: &Medium, field: &AugmentedField, start: Point, theta: f64) -> Result<ParetoFront> {
    field.grid.check(start)?;
    if medium.inside_obstacle(start) {
        return Err(Error::InsideObstacle {
            x: start[0],
            y: start[1],
        });
    }
    let r = field.budgets.r();
    let n1 = field.n_slices();
    let n2 = field.n_inner();
    let at = |s: isize, t: isize| -> f64 {
        if s < 0 || t < 0 {
            return INF;
        }
        let b = field.budget_at(s as usize, t as usize);
        field.sample(start, &b)
    };
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in 0..n1 as isize {
        for t in 0..n2 as isize {
            let w = at(s, t);
            if !w.is_finite() {
                continue;
            }
            let tight_b1 = at(s - 1, t) > w + theta;
            let tight_b2 = r < 2 || at(s, t - 1) > w + theta;
            if tight_b1 && tight_b2 {
                candidates.push((field.budget_at(s as usize, t as usize), w));
            }
        }
    }
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (b, w) in candidates {
        let duplicate = kept
            .iter()
            .any(|(kb, kw)| (kw - w).abs() <= theta && kb.iter().zip(&b).all(|(x, y)| x <= y));
        if !duplicate {
            kept.push((b, w));
        }
    }
    kept.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite budgets"));
    let points: Vec<Vec<f64>> = kept
        .into_iter()
        .map(|(b, w)| std::iter::once(w).chain(b).collect())
        .collect();
    Ok(ParetoFront {
        start,
        tight: vec![true; points.len()],
        points,
        source: FrontSource::Augmented,
    })
}

/// Weight vectors on the simplex `{λ ≥ 0, Σλ = 1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightMesh {
    pub lambdas: Vec<Vec<f64>>,
}

impl WeightMesh {
    pub fn new(lambdas: Vec<Vec<f64>>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::param("lambdas", "mesh is empty"));
        }
        for l in &lambdas {
            let sum: f64 = l.iter().sum();
            if l.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::param("lambdas", format!("{l:?} is not on the simplex")));
            }
        }
        Ok(WeightMesh { lambdas })
    }

    /// Lattice with spacing `1 / (per_side - 1)` on the simplex in `r + 1`
    /// dimensions (`per_side` points along each edge).
    pub fn uniform(r: usize, per_side: usize) -> Result<Self> {
        if per_side < 2 {
            return Err(Error::param("per_side", "need at least 2"));
        }
        let m = per_side - 1;
        let mut out = Vec::new();
        let mut stack = vec![(Vec::<usize>::new(), m)];
        while let Some((prefix, left)) = stack.pop() {
            if prefix.len() == r {
                let mut l: Vec<f64> = prefix.iter().map(|&k| k as f64 / m as f64).collect();
                l.insert(0, left as f64 / m as f64);
                // Exact sum despite rounding.
                let rest: f64 = l[1..].iter().sum();
                l[0] = 1.0 - rest;
                out.push(l);
                continue;
            }
            for k in (0..=left).rev() {
                let mut p = prefix.clone();
                p.push(k);
                stack.push((p, left - k));
            }
        }
        WeightMesh::new(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightFailure {
    pub lambda: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedSumFront {
    pub front: ParetoFront,
    /// Weight vector of each front point.
    pub lambdas: Vec<Vec<f64>>,
    pub failures: Vec<WeightFailure>,
}

/// For every `λ` solves for the value function of `Σ λ_i K_i` and records the
/// costs `(v_0, …, v_r)` of its optimal path from `start`.
pub fn weighted_sum_front(
    medium: &Medium,
    terminals: &[&TerminalCost],
    mesh: &WeightMesh,
    start: Point,
    params: &StaticSolveParams,
) -> Result<WeightedSumFront> {
    medium.grid().check(start)?;
    let n = medium.n_costs();
    if terminals.len() != n {
        return Err(Error::param("terminals", "need one terminal cost per running cost"));
    }
    if let Some(l) = mesh.lambdas.iter().find(|l| l.len() != n) {
        return Err(Error::param("lambdas", format!("{l:?} has the wrong dimension")));
    }
    let results = par::map_range(mesh.lambdas.len(), |k| solve_weight(medium, terminals, &mesh.lambdas[k], start, params));
    let mut points = Vec::new();
    let mut lambdas = Vec::new();
    let mut failures = Vec::new();
    for (l, res) in mesh.lambdas.iter().zip(results) {
        match res {
            Ok(p) => {
                points.push(p);
                lambdas.push(l.clone());
            }
            Err(reason) => failures.push(WeightFailure {
                lambda: l.clone(),
                reason,
            }),
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][1..].partial_cmp(&points[b][1..]).expect("finite costs"));
    let points: Vec<Vec<f64>> = order.iter().map(|&k| points[k].clone()).collect();
    let lambdas = order.iter().map(|&k| lambdas[k].clone()).collect();
    Ok(WeightedSumFront {
        front: ParetoFront {
            start,
            tight: vec![true; points.len()],
            points,
            source: FrontSource::WeightedSum,
        },
        lambdas,
        failures,
    })
}

fn solve_weight(
    medium: &Medium,
    terminals: &[&TerminalCost],
    lambda: &[f64],
    start: Point,
    params: &StaticSolveParams,
) -> std::result::Result<Vec<f64>, String> {
    let n = medium.n_costs();
    let combined = CostModel::Sum(
        (0..n)
            .filter(|&i| lambda[i] > 0.0)
            .map(|i| (lambda[i], medium.cost_model(i).clone()))
            .collect(),
    );
    let grid = medium.grid();
    for k in grid.indices() {
        if medium.blocked(k) {
            continue;
        }
        let p = grid.point_of(k);
        let (c, d) = combined.affine_at(p);
        let lowest = c + d * medium.speed_model().min_at(p);
        if !(lowest > 0.0) {
            return Err(format!(
                "combined running cost is not positive at ({:.4}, {:.4})",
                p[0], p[1]
            ));
        }
    }
    let mut costs: Vec<CostModel> = (0..n).map(|i| medium.cost_model(i).clone()).collect();
    costs.push(combined);
    let extended = medium.with_costs(costs);
    let weighted: Vec<(f64, &TerminalCost)> = (0..n).map(|i| (lambda[i], terminals[i])).collect();
    let q = TerminalCost::combine(&weighted);
    let u = solve_static(&extended, n, &q, params).map_err(|e| e.to_string())?;
    let indices: Vec<usize> = (0..n).collect();
    let solved = solve_restricted(
        &extended,
        Governing {
            cost: n,
            terminal: &q,
            u: &u,
        },
        &indices,
        terminals,
        params,
    )
    .map_err(|e| e.to_string())?;
    let point: Vec<f64> = solved.v.iter().map(|v| v.sample(start)).collect();
    if point.iter().any(|v| !v.is_finite()) {
        return Err(format!("no finite path from ({:.4}, {:.4})", start[0], start[1]));
    }
    Ok(point)
}

/// Lower convex envelope of `(x, y)` points, as vertices ascending in `x`.
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Height of the piecewise-linear envelope at `x`, `None` outside its range.
pub fn envelope_at(envelope: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = envelope.first()?;
    let last = envelope.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    if envelope.len() == 1 {
        return Some(first.1);
    }
    let k = envelope.partition_point(|p| p.0 < x).clamp(1, envelope.len() - 1);
    let (a, b) = (envelope[k - 1], envelope[k]);
    let g = if b.0 > a.0 { (x - a.0) / (b.0 - a.0) } else { 0.0 };
    Some(a.1 + g * (b.1 - a.1))
}

/// How far augmented front points sit above the lower convex envelope of the
/// weighted-sum points, in the `(J_1, J_0)` plane (`r = 1`). Every point of a
/// Pareto front lies on or above the convex envelope of the front, and the
/// weighted-sum method can only reach the envelope, so a point clearly above
/// it marks a non-convex segment the baseline misses.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeGap {
    /// Largest `J_0 - envelope(J_1)` over augmented points inside the
    /// envelope's `J_1` range (0 when none lies above).
    pub max_gap: f64,
    /// `J_1` of the point attaining `max_gap`.
    pub at_j1: Option<f64>,
    /// Augmented points above the envelope by more than `threshold`.
    pub points_beyond: usize,
    pub threshold: f64,
}

pub fn envelope_gap(augmented: &ParetoFront, weighted: &ParetoFront, threshold: f64) -> EnvelopeGap {
    let pts: Vec<(f64, f64)> = weighted.points.iter().map(|p| (p[1], p[0])).collect();
    let env = lower_convex_envelope(&pts);
    let mut out = EnvelopeGap {
        max_gap: 0.0,
        at_j1: None,
        points_beyond: 0,
        threshold,
    };
    for p in &augmented.points {
        if let Some(e) = envelope_at(&env, p[1]) {
            let gap = p[0] - e;
            if gap > out.max_gap {
                out.max_gap = gap;
                out.at_j1 = Some(p[1]);
            }
            if gap > threshold {
                out.points_beyond += 1;
            }
        }
    }
    out
}

/// Symmetric Hausdorff distance between two point sets (max norm of the
/// per-point nearest Euclidean distances). `+INF` if exactly one is empty.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return INF;
    }
    let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let one_way = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| d(p, q)).fold(INF, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_mesh_r1() {
        let m = WeightMesh::uniform(1, 21).unwrap();
        assert_eq!(m.lambdas.len(), 21);
        assert!(m.lambdas.contains(&vec![1.0, 0.0]));
        assert!(m.lambdas.contains(&vec![0.0, 1.0]));
    }

    #[test]
    fn uniform_mesh_r2() {
        let m = WeightMesh::uniform(2, 5).unwrap();
        assert_eq!(m.lambdas.len(), 15);
        for l in &m.lambdas {
            assert!((l.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn envelope_of_a_non_convex_set() {
        let pts = [(0.0, 2.0), (1.0, 1.5), (2.0, 0.0)];
        let env = lower_convex_envelope(&pts);
        assert_eq!(env, vec![(0.0, 2.0), (2.0, 0.0)]);
        assert_eq!(envelope_at(&env, 1.0), Some(1.0));
        assert_eq!(envelope_at(&env, 3.0), None);
    }

    #[test]
    fn gap_flags_points_off_the_convex_envelope() {
        let front = |pts: &[(f64, f64)], source| ParetoFront {
            start: [0.0, 0.0],
            points: pts.iter().map(|&(j1, j0)| vec![j0, j1]).collect(),
            tight: vec![true; pts.len()],
            source,
        };
        let ws = front(&[(0.0, 2.0), (2.0, 0.0)], FrontSource::WeightedSum);
        let dent = front(&[(0.0, 2.0), (1.0, 1.5), (2.0, 0.0)], FrontSource::Augmented);
        let g = envelope_gap(&dent, &ws, 0.1);
        assert!((g.max_gap - 0.5).abs() < 1e-12);
        assert_eq!(g.at_j1, Some(1.0));
        assert_eq!(g.points_beyond, 1);
        let convex = front(&[(0.0, 2.0), (1.0, 0.8), (2.0, 0.0)], FrontSource::Augmented);
        assert_eq!(envelope_gap(&convex, &ws, 0.1).points_beyond, 0);
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 0.0]];
        assert_eq!(hausdorff(&a, &b), 1.0);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }

    proptest! {
        #[test]
        fn envelope_lies_below_points(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..30)) {
            let env = lower_convex_envelope(&pts);
            for &(x, y) in &pts {
                let e = envelope_at(&env, x).unwrap();
                prop_assert!(e <= y + 1e-9);
            }
        }
    }
}
