//! Solver output against independent references.

mod common;

use common::{Lattice, Patch};
use paretomarch::fast_march::{fast_march_unit, point_seeds};
use paretomarch::medium::Medium;
use paretomarch::model::{CostModel, Region, SpeedModel, TerminalCost};
use paretomarch::static_solver::{solve_static, StaticSolveParams};
use paretomarch::visibility::{compute_visibility, DEFAULT_THRESHOLD};
use paretomarch::{convergence, Grid2, Rect};

const METRICATION: f64 = 1.0824;

/// Static value of a piecewise-constant cost sits between the 8-connected
/// lattice distance and that distance shrunk by the metrication factor.
#[test]
fn static_value_brackets_lattice_distance() {
    let n = 41;
    let grid = Grid2::square(n).unwrap();
    let patch = Patch {
        min: [0.2, 0.3],
        max: [0.8, 0.7],
        rate: 5.0,
    };
    let cost = CostModel::Regions {
        regions: vec![Region {
            rect: Rect::new(patch.min, patch.max).unwrap(),
            rate: patch.rate,
        }],
        outside: 1.0,
    };
    let medium = Medium::new(grid, SpeedModel::Constant(1.0), vec![cost], vec![]);
    let q = TerminalCost::at_point(&grid, [1.0, 1.0], 0.0);
    let u = solve_static(&medium, 0, &q, &StaticSolveParams::default()).unwrap();

    let lat = Lattice { n };
    let g = common::dijkstra(lat, lat.node(n - 1, n - 1), &vec![false; n * n], |a, b| {
        common::segment_cost(1.0, &[patch], a, b)
    });
    let tol = 2.0 * grid.h();
    for k in 0..n * n {
        let (uk, gk) = (u.at(k), g[k]);
        assert!(uk <= gk + tol, "node {k}: u {uk} above lattice {gk}");
        assert!(gk <= METRICATION * uk + tol, "node {k}: lattice {gk} far above u {uk}");
    }
}

#[test]
fn fast_marching_distance_is_close_to_euclidean() {
    let grid = Grid2::square(101).unwrap();
    let speed = vec![1.0; grid.len()];
    let src = [0.3, 0.6];
    let d = fast_march_unit(&grid, &point_seeds(&grid, src, &speed), &speed).unwrap();
    let h = grid.h();
    for k in grid.indices() {
        let p = grid.point_of(k);
        let exact = (p[0] - src[0]).hypot(p[1] - src[1]);
        // First-order upwind fast marching overestimates along diagonals.
        assert!(d.at(k) >= exact - 1e-9, "{p:?}");
        assert!(d.at(k) <= exact + 0.12 * exact + 2.0 * h, "{p:?}: {} vs {exact}", d.at(k));
    }
}

#[test]
fn single_rectangle_shadow_matches_ray_casting() {
    let n = 251;
    let grid = Grid2::square(n).unwrap();
    let rect = ([0.4, 0.35], [0.55, 0.5]);
    let observer = [0.1, 0.1];
    let vis = compute_visibility(&grid, observer, &[Rect::new(rect.0, rect.1).unwrap()], DEFAULT_THRESHOLD).unwrap();
    let exact = common::raycast_hidden(Lattice { n }, observer, &[rect]);
    assert!(vis.is_hidden([1.0, 1.0]));
    assert!(!vis.is_hidden([1.0, 0.1]));
    let same = vis.hidden.iter().zip(&exact).filter(|(a, b)| a == b).count();
    let share = same as f64 / exact.len() as f64;
    assert!(share >= 0.95, "agreement {share}");
}

#[test]
fn observer_scenario_target_is_hidden() {
    let c = paretomarch::scenario::builtin("avoid-observer").unwrap();
    let s = c.build().unwrap();
    assert!(s.visibility[0].is_hidden([1.0, 1.0]));
    assert!(!s.visibility[0].is_hidden([0.1, 0.1]));
}

#[test]
fn two_exit_problem_matches_exact_solution_at_coarse_resolution() {
    let mut c = paretomarch::scenario::builtin("convergence").unwrap();
    c.apply(&paretomarch::config::Overrides {
        h: Some(1.0 / 40.0),
        db: Some(1.0 / 20.0),
        ..Default::default()
    })
    .unwrap();
    let s = c.build().unwrap();
    let sol = common::solve(&s);
    let hh = s.problem.h_hat();
    // Points well away from both jump sets.
    for (x, b) in [([0.6, 0.5], 0.5), ([0.25, 0.5], 0.5), ([0.25, 0.25], 1.2), ([0.5, 0.9], 0.8)] {
        let exact = convergence::analytic_w(x, b);
        let w = sol.field.sample(x, &[b]);
        assert!((w - exact).abs() <= 3.0 * hh, "W({x:?}, {b}) = {w}, exact {exact}");
    }
}
