//! Invariants on randomly generated small problems.

use paretomarch::augmented::PointTag;
use paretomarch::config::{CostConfig, RegionConfig, ScenarioConfig};
use paretomarch::fast_march::{fast_march_with_order, point_seeds};
use paretomarch::pareto::extract_front;
use paretomarch::pipeline::{self, front_threshold};
use paretomarch::visibility::compute_visibility;
use paretomarch::{scenario, Grid2, Rect};
use proptest::prelude::*;

fn rect() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    (0.1..0.7f64, 0.1..0.7f64, 0.05..0.25f64, 0.05..0.25f64).prop_map(|(x, y, w, h)| ([x, y], [x + w, y + h]))
}

/// `rcsp-check` with a random expensive patch.
fn small_problem(patch: ([f64; 2], [f64; 2]), rate: f64, n: usize) -> ScenarioConfig {
    let mut c = scenario::builtin("rcsp-check").unwrap();
    c.grid.n = n;
    c.budgets.count = vec![n];
    c.cost[0] = CostConfig::Regions {
        outside: 1.0,
        regions: vec![RegionConfig {
            min: patch.0,
            max: patch.1,
            rate,
        }],
    };
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn augmented_value_invariants(patch in rect(), rate in 2.0..8.0f64) {
        let c = small_problem(patch, rate, 15);
        let s = c.build().unwrap();
        let sol = pipeline::solve(&s.problem, &s.options).unwrap();
        let f = &sol.field;
        let hh = s.problem.h_hat();
        let u0 = sol.table.u(0);
        for k in s.problem.grid.indices() {
            for sl in 0..f.n_slices() {
                let w = f.value(sl, k, 0);
                if sl > 0 {
                    prop_assert!(w <= f.value(sl - 1, k, 0) + 2.0 * hh * rate);
                }
                if w.is_finite() {
                    prop_assert!(w >= u0.at(k) - 2.0 * hh);
                }
                if f.tag(sl, k, 0) == PointTag::Capped {
                    prop_assert_eq!(w, u0.at(k));
                }
            }
        }
        // Front points are mutually non-dominated.
        let theta = front_threshold(&s.problem, 1.0);
        let front = extract_front(&sol.medium, f, [0.0, 0.0], theta).unwrap();
        for (i, a) in front.points.iter().enumerate() {
            for b in &front.points[i + 1..] {
                let dominates = |p: &[f64], q: &[f64]| p.iter().zip(q).all(|(x, y)| x <= y) && p != q;
                prop_assert!(!dominates(a, b) && !dominates(b, a), "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn fast_marching_accepts_in_nondecreasing_order(src in (0.0..1.0f64, 0.0..1.0f64), slow in rect()) {
        let grid = Grid2::square(31).unwrap();
        let r = Rect::new(slow.0, slow.1).unwrap();
        let speed: Vec<f64> = grid.indices().map(|k| if r.contains(grid.point_of(k)) { 0.3 } else { 1.0 }).collect();
        let seeds = point_seeds(&grid, [src.0, src.1], &speed);
        let (u, order) = fast_march_with_order(&grid, &seeds, &speed).unwrap();
        for w in order.windows(2) {
            prop_assert!(u.at(w[0]) <= u.at(w[1]) + 1e-12);
        }
    }

    #[test]
    fn larger_threshold_hides_less(obs in (0.0..1.0f64, 0.0..0.05f64), a in rect(), b in rect(), t in 0.0..3.0f64) {
        let grid = Grid2::square(41).unwrap();
        let rects = vec![Rect::new(a.0, a.1).unwrap(), Rect::new(b.0, b.1).unwrap()];
        let lo = compute_visibility(&grid, [obs.0, obs.1], &rects, t).unwrap();
        let hi = compute_visibility(&grid, [obs.0, obs.1], &rects, t + 0.5).unwrap();
        for (h, l) in hi.hidden.iter().zip(&lo.hidden) {
            prop_assert!(!h || *l);
        }
    }

    #[test]
    fn scenario_toml_round_trips(name in prop::sample::select(scenario::names().collect::<Vec<_>>())) {
        let c = scenario::builtin(name).unwrap();
        let back = ScenarioConfig::from_toml(&c.to_toml()).unwrap();
        prop_assert_eq!(c, back);
    }
}
