//! Independent oracles and helpers shared by the integration tests. Nothing
//! here calls into the solver code it is used to check.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use paretomarch::config::{Overrides, Scenario, ScenarioConfig};
use paretomarch::pipeline::{self, Solution};
use paretomarch::scenario;

pub type Pt = [f64; 2];

/// Axis-aligned rectangle with a rate, as plain data.
#[derive(Clone, Copy, Debug)]
pub struct Patch {
    pub min: Pt,
    pub max: Pt,
    pub rate: f64,
}

/// Parameter interval `[t0, t1]` of `a + t (b - a)` inside the closed
/// rectangle, if any.
fn clip(min: Pt, max: Pt, a: Pt, b: Pt) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for k in 0..2 {
        let d = b[k] - a[k];
        if d == 0.0 {
            if a[k] < min[k] || a[k] > max[k] {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = ((min[k] - a[k]) / d, (max[k] - a[k]) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn len(a: Pt, b: Pt) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Length of segment `a`-`b` inside the open rectangle. A segment running
/// along an edge counts as outside, which matches the infimum over paths
/// that hug the edge from the cheap side.
pub fn length_inside(min: Pt, max: Pt, a: Pt, b: Pt) -> f64 {
    let Some((t0, t1)) = clip(min, max, a, b) else {
        return 0.0;
    };
    let tm = 0.5 * (t0 + t1);
    let m = [a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1])];
    let eps = 1e-12;
    let interior = (0..2).all(|k| m[k] > min[k] + eps && m[k] < max[k] - eps);
    if interior {
        (t1 - t0) * len(a, b)
    } else {
        0.0
    }
}

/// Exact integral of a piecewise-constant rate over a straight segment when
/// the patches do not overlap.
pub fn segment_cost(outside: f64, patches: &[Patch], a: Pt, b: Pt) -> f64 {
    let mut c = outside * len(a, b);
    for p in patches {
        c += (p.rate - outside) * length_inside(p.min, p.max, a, b);
    }
    c
}

const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Node count per side, node coordinates on `[0,1]²`.
#[derive(Clone, Copy, Debug)]
pub struct Lattice {
    pub n: usize,
}

impl Lattice {
    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }
    pub fn point(&self, k: usize) -> Pt {
        [(k % self.n) as f64 * self.h(), (k / self.n) as f64 * self.h()]
    }
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
    pub fn neighbours(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = ((k % self.n) as i64, (k / self.n) as i64);
        let n = self.n as i64;
        STEPS.iter().filter_map(move |&(di, dj)| {
            let (a, b) = (i + di, j + dj);
            (a >= 0 && b >= 0 && a < n && b < n).then(|| (b * n + a) as usize)
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    resource: f64,
    cost: f64,
    node: usize,
}

impl Eq for Label {}

impl Ord for Label {
    // Min-heap on (resource, cost).
    fn cmp(&self, o: &Self) -> Ordering {
        o.resource
            .total_cmp(&self.resource)
            .then(o.cost.total_cmp(&self.cost))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Label-setting resource-constrained shortest paths to one target on the
/// 8-connected lattice. Every node keeps its Pareto set of (resource, cost)
/// pairs over paths ending at the target.
pub struct Rcsp {
    /// Per node: labels by increasing resource and strictly decreasing cost.
    pub labels: Vec<Vec<(f64, f64)>>,
}

impl Rcsp {
    /// `cost(a, b)` and `resource(a, b)` give the edge weights; paths longer
    /// than `max_resource` are dropped.
    pub fn solve(
        lat: Lattice,
        target: usize,
        blocked: &[bool],
        max_resource: f64,
        cost: impl Fn(Pt, Pt) -> f64,
        resource: impl Fn(Pt, Pt) -> f64,
    ) -> Self {
        let mut labels: Vec<Vec<(f64, f64)>> = vec![Vec::new(); lat.n * lat.n];
        let mut heap = BinaryHeap::new();
        heap.push(Label {
            resource: 0.0,
            cost: 0.0,
            node: target,
        });
        while let Some(l) = heap.pop() {
            let best = labels[l.node].last().map_or(f64::INFINITY, |x| x.1);
            // Everything already accepted here used no more resource.
            if l.cost >= best - 1e-12 {
                continue;
            }
            labels[l.node].push((l.resource, l.cost));
            let p = lat.point(l.node);
            for m in lat.neighbours(l.node) {
                if blocked[m] || m == target {
                    continue;
                }
                let q = lat.point(m);
                let r = l.resource + resource(q, p);
                if r > max_resource {
                    continue;
                }
                let c = l.cost + cost(q, p);
                if c < labels[m].last().map_or(f64::INFINITY, |x| x.1) - 1e-12 {
                    heap.push(Label {
                        resource: r,
                        cost: c,
                        node: m,
                    });
                }
            }
        }
        Rcsp { labels }
    }

    /// Cheapest cost from `node` using at most `budget` resource.
    pub fn value(&self, node: usize, budget: f64) -> f64 {
        let ls = &self.labels[node];
        let k = ls.partition_point(|l| l.0 <= budget + 1e-12);
        if k == 0 {
            f64::INFINITY
        } else {
            ls[k - 1].1
        }
    }
}

/// Shortest path costs to `target` on the 8-connected lattice.
pub fn dijkstra(lat: Lattice, target: usize, blocked: &[bool], cost: impl Fn(Pt, Pt) -> f64) -> Vec<f64> {
    use petgraph::graph::{NodeIndex, UnGraph};
    let mut g = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<NodeIndex> = (0..lat.n * lat.n).map(|_| g.add_node(())).collect();
    for k in 0..lat.n * lat.n {
        if blocked[k] {
            continue;
        }
        for m in lat.neighbours(k) {
            if m > k && !blocked[m] {
                g.add_edge(nodes[k], nodes[m], cost(lat.point(k), lat.point(m)));
            }
        }
    }
    let dist = petgraph::algo::dijkstra(&g, nodes[target], None, |e| *e.weight());
    (0..lat.n * lat.n)
        .map(|k| dist.get(&nodes[k]).copied().unwrap_or(f64::INFINITY))
        .collect()
}

/// Exact hidden mask: a gridpoint is hidden when it lies in an obstacle or
/// the segment from the observer meets one.
pub fn raycast_hidden(lat: Lattice, observer: Pt, rects: &[(Pt, Pt)]) -> Vec<bool> {
    (0..lat.n * lat.n)
        .map(|k| {
            let p = lat.point(k);
            rects.iter().any(|&(min, max)| clip(min, max, observer, p).is_some())
        })
        .collect()
}

/// Built-in scenario with its grid replaced by `n` points per side and the
/// budget slice counts by `counts` (unchanged where `None`).
pub fn scenario_at(name: &str, n: Option<usize>, counts: &[Option<usize>]) -> (ScenarioConfig, Scenario) {
    let mut c = scenario::builtin(name).unwrap();
    if let Some(n) = n {
        c.apply(&Overrides {
            h: Some(1.0 / (n - 1) as f64),
            ..Default::default()
        })
        .unwrap();
    }
    for (i, k) in counts.iter().enumerate() {
        if let Some(k) = k {
            c.budgets.count[i] = *k;
        }
    }
    let s = c.build().unwrap();
    (c, s)
}

pub fn solve(s: &Scenario) -> Solution {
    pipeline::solve(&s.problem, &s.options).unwrap()
}
