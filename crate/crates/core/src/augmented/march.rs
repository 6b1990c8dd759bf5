use crate::angles::unit;
use crate::error::{Error, Result};
use crate::field::{bilinear_weights, ScalarField, INF};
use crate::grid::{locate, snap, BudgetAxes, Grid2, Point};
use crate::medium::{step_in_square, Medium};
use crate::model::TerminalCost;

use super::mfl::{MflSurface, NOT_FEASIBLE};
use super::{Algorithm, AugmentedField, MarchParams, MarchStats, PointTag};

/// Most layers (primary plus companions) carried by one march.
const MAX_LAYERS: usize = 4;
/// Direct straight-line exits are only tried when there are at most this many
/// exit gridpoints; larger exit sets are reached through boundary clipping.
const MAX_DIRECT_TARGETS: usize = 64;
const BUDGET_EPS: f64 = 1e-12;

/// What to march.
pub struct MarchSpec<'a> {
    pub medium: &'a Medium,
    /// Cost index minimized.
    pub primary: usize,
    /// Cost indices bounded by the budgets; the first sets the marching direction.
    pub constrained: Vec<usize>,
    /// Terminal costs, indexed like the medium's costs.
    pub terminals: Vec<&'a TerminalCost>,
    pub budgets: BudgetAxes,
    /// Further costs integrated along the computed optimal controls.
    pub companions: Vec<CompanionSpec<'a>>,
}

/// A cost carried along the march without being optimized.
pub struct CompanionSpec<'a> {
    pub cost: usize,
    /// Its value where the cap applies: the cost along primary-optimal paths.
    pub on_cap: &'a ScalarField,
}

/// Data for the cap `w = u_0` where every budget covers the corresponding
/// cost of the primary-optimal path.
pub struct CapData<'a> {
    pub u0: &'a ScalarField,
    /// `v_{i0}` for every constrained cost, in order.
    pub thresholds: Vec<&'a ScalarField>,
}

/// One finished `b_1`-slice.
pub struct SliceView<'a> {
    pub index: usize,
    layers: usize,
    data: &'a [f64],
    pub tags: &'a [PointTag],
}

impl<'a> SliceView<'a> {
    /// Value of layer `k` (0 = `w`, then companions) at `(node, t)`.
    #[inline]
    pub fn value(&self, flat: usize, k: usize) -> f64 {
        self.data[flat * self.layers + k]
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// Marches the full augmented field, keeping every slice.
pub fn march_augmented(
    spec: &MarchSpec,
    mfl: &MflSurface,
    cap: &CapData,
    params: &MarchParams,
) -> Result<AugmentedField> {
    let m = spec.medium.grid().len();
    let n_inner = spec.budgets.inner_count();
    let n1 = spec.budgets.axis(0).count;
    let total = n1 * m * n_inner;
    let mut values = Vec::with_capacity(total);
    let mut tags = Vec::with_capacity(total);
    let mut comps: Vec<Vec<f64>> = spec.companions.iter().map(|_| Vec::with_capacity(total)).collect();
    let stats = march_streaming(spec, mfl, cap, params, |view| {
        for flat in 0..view.len() {
            values.push(view.value(flat, 0));
            for (k, c) in comps.iter_mut().enumerate() {
                c.push(view.value(flat, k + 1));
            }
        }
        tags.extend_from_slice(view.tags);
        Ok(())
    })?;
    Ok(AugmentedField {
        grid: *spec.medium.grid(),
        budgets: spec.budgets.clone(),
        values,
        tags,
        companions: spec.companions.iter().map(|c| c.cost).zip(comps).collect(),
        stats,
        primary: spec.primary,
        constrained: spec.constrained.clone(),
    })
}

/// Marches slice by slice keeping only the previous and the current slice in
/// memory; `visit` receives every finished slice in order.
pub fn march_streaming(
    spec: &MarchSpec,
    mfl: &MflSurface,
    cap: &CapData,
    params: &MarchParams,
    mut visit: impl FnMut(SliceView) -> Result<()>,
) -> Result<MarchStats> {
    let ctx = Ctx::new(spec, mfl, cap, params)?;
    let slice_len = ctx.m * ctx.n2;
    let l = ctx.layers;
    let mut prev = vec![INF; slice_len * l];
    let mut cur = vec![INF; slice_len * l];
    let mut tags = vec![PointTag::BelowMfl; slice_len];
    let mut stats = MarchStats::default();
    for s in 0..ctx.n1 {
        let st = match ctx.algorithm {
            Algorithm::SliceStep | Algorithm::RayWalk => ctx.slice_parallel(s, &prev, &mut cur, &mut tags)?,
            Algorithm::EarlyStop => ctx.slice_ordered(s, &prev, &mut cur, &mut tags)?,
        };
        stats.add(&st);
        visit(SliceView {
            index: s,
            layers: l,
            data: &cur,
            tags: &tags,
        })?;
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(stats)
}

/// Where a characteristic step ends.
#[derive(Clone, Copy, Debug)]
enum Landing {
    Infeasible,
    /// Inside the slab between slices `s-1` and `s`: `[x, y, b1, b2]`.
    At([f64; 4]),
    /// On the domain boundary with the remaining budgets.
    Exit(Point, [f64; 2]),
}

/// Interpolation stencil within the slab between slices `s-1` and `s`.
struct Corners {
    n: usize,
    current: [bool; 16],
    flat: [usize; 16],
    weight: [f64; 16],
}

struct Ctx<'a> {
    medium: &'a Medium,
    spec: &'a MarchSpec<'a>,
    mfl: &'a MflSurface,
    cap: &'a CapData<'a>,
    grid: Grid2,
    m: usize,
    n1: usize,
    n2: usize,
    r: usize,
    db1: f64,
    db2: f64,
    march_cost: usize,
    second_cost: Option<usize>,
    /// Cost index of each layer: primary, then companions.
    tracked: Vec<usize>,
    layers: usize,
    exit_node: Vec<bool>,
    near: Vec<bool>,
    targets: Vec<usize>,
    has_obstacles: bool,
    algorithm: Algorithm,
    params: &'a MarchParams,
    cell_limit: usize,
}

impl<'a> Ctx<'a> {
    fn new(spec: &'a MarchSpec<'a>, mfl: &'a MflSurface, cap: &'a CapData<'a>, params: &'a MarchParams) -> Result<Self> {
        let medium = spec.medium;
        let grid = *medium.grid();
        let r = spec.budgets.r();
        if spec.constrained.len() != r {
            return Err(Error::InvalidProblem(format!(
                "{} budget axes but {} constrained costs",
                r,
                spec.constrained.len()
            )));
        }
        if spec.terminals.len() != medium.n_costs() {
            return Err(Error::InvalidProblem("need one terminal cost per running cost".into()));
        }
        if cap.thresholds.len() != r {
            return Err(Error::InvalidProblem("need one cap threshold per constrained cost".into()));
        }
        let n2 = spec.budgets.inner_count();
        if mfl.n_inner != n2 || mfl.level.len() != grid.len() * n2 {
            return Err(Error::MflMismatch(format!(
                "surface has {} entries per gridpoint, march needs {}",
                mfl.n_inner, n2
            )));
        }
        if mfl.companions.len() != spec.companions.len() {
            return Err(Error::MflMismatch(format!(
                "surface carries {} companion costs, march needs {}",
                mfl.companions.len(),
                spec.companions.len()
            )));
        }
        if mfl.axis != *spec.budgets.axis(0) {
            return Err(Error::MflMismatch("surface was snapped to a different b_1 axis".into()));
        }
        let layers = 1 + spec.companions.len();
        if layers > MAX_LAYERS {
            return Err(Error::param("companions", format!("at most {} supported", MAX_LAYERS - 1)));
        }
        params.search.validate()?;
        let cell_limit = params.cell_limit(&grid, &spec.budgets)?;

        let mut involved = vec![spec.primary];
        involved.extend(&spec.constrained);
        involved.extend(spec.companions.iter().map(|c| c.cost));
        let exit_node: Vec<bool> = grid
            .indices()
            .map(|k| !medium.blocked(k) && involved.iter().all(|&c| spec.terminals[c].value(k).is_finite()))
            .collect();
        let exits: Vec<usize> = grid.indices().filter(|&k| exit_node[k]).collect();
        let targets = if exits.len() <= MAX_DIRECT_TARGETS { exits } else { Vec::new() };

        let db1 = spec.budgets.axis(0).delta();
        let march_cost = spec.constrained[0];
        // Longest possible one-slice step, for the obstacle proximity test.
        let mut reach = 0.0f64;
        for k in grid.indices() {
            if medium.blocked(k) {
                continue;
            }
            let fmax = medium.max_speed_node(k);
            let kmin = medium.cost_model(march_cost).affine_at(grid.point_of(k));
            let kmin = kmin.0 + kmin.1 * medium.speed_model().min_at(grid.point_of(k));
            if kmin > 0.0 {
                reach = reach.max(db1 * fmax / kmin);
            }
        }
        let has_obstacles = !medium.obstacles().is_empty();
        let near = if has_obstacles {
            medium.obstacle_proximity(reach + grid.h())
        } else {
            vec![false; grid.len()]
        };
        let mut tracked = vec![spec.primary];
        tracked.extend(spec.companions.iter().map(|c| c.cost));
        Ok(Ctx {
            medium,
            spec,
            mfl,
            cap,
            grid,
            m: grid.len(),
            n1: spec.budgets.axis(0).count,
            n2,
            r,
            db1,
            db2: if r > 1 { spec.budgets.axis(1).delta() } else { 0.0 },
            march_cost,
            second_cost: spec.constrained.get(1).copied(),
            tracked,
            layers,
            exit_node,
            near,
            targets,
            has_obstacles,
            algorithm: params.algorithm,
            params,
            cell_limit,
        })
    }

    #[inline]
    fn budgets_of(&self, s: usize, t: usize) -> [f64; 2] {
        [s as f64 * self.db1, t as f64 * self.db2]
    }

    /// Whether the remaining budgets allow stopping at exit node `n`.
    #[inline]
    fn can_stop(&self, n: usize, b: [f64; 2]) -> bool {
        self.exit_node[n]
            && self
                .spec
                .constrained
                .iter()
                .enumerate()
                .all(|(i, &c)| b[i] >= self.spec.terminals[c].value(n) - BUDGET_EPS)
    }

    /// Value of every layer when the point is not marched, or `None`.
    fn classify(&self, s: usize, node: usize, t: usize) -> Option<(PointTag, [f64; MAX_LAYERS])> {
        let mut out = [INF; MAX_LAYERS];
        if self.medium.blocked(node) {
            return Some((PointTag::Blocked, out));
        }
        let b = self.budgets_of(s, t);
        if self.can_stop(node, b) {
            for (k, &c) in self.tracked.iter().enumerate() {
                out[k] = self.spec.terminals[c].value(node);
            }
            return Some((PointTag::Terminal, out));
        }
        let sn = self.mfl.snapped(node, t);
        if sn == NOT_FEASIBLE || (s as u32) < sn {
            return Some((PointTag::BelowMfl, out));
        }
        let capped = self
            .cap
            .thresholds
            .iter()
            .enumerate()
            .all(|(i, v)| b[i] >= v.at(node) - BUDGET_EPS);
        if capped && self.cap.u0.at(node).is_finite() {
            out[0] = self.cap.u0.at(node);
            for (k, c) in self.spec.companions.iter().enumerate() {
                out[k + 1] = c.on_cap.at(node);
            }
            return Some((PointTag::Capped, out));
        }
        if s as u32 == sn {
            let f = node * self.n2 + t;
            out[0] = self.mfl.value_on_mfl[f];
            for (k, c) in self.mfl.companions.iter().enumerate() {
                out[k + 1] = c[f];
            }
            return Some((PointTag::Mfl, out));
        }
        None
    }

    /// Algorithms 1 and 2: every gridpoint of the slice reads only the
    /// previous slice, so nodes are processed in parallel.
    fn slice_parallel(&self, s: usize, prev: &[f64], cur: &mut [f64], tags: &mut [PointTag]) -> Result<MarchStats> {
        let l = self.layers;
        let n2 = self.n2;
        let work = |node: usize, vals: &mut [f64], tg: &mut [PointTag]| -> Result<MarchStats> {
            let mut stats = MarchStats::default();
            for t in 0..n2 {
                let (tag, out) = match self.classify(s, node, t) {
                    Some(c) => c,
                    None => {
                        let mut out = if s == 0 {
                            [INF; MAX_LAYERS]
                        } else {
                            self.march_point(s, node, t, prev, None, &mut stats)?
                        };
                        self.carry(&mut out, s, node, t, prev, vals);
                        (PointTag::Active, out)
                    }
                };
                tg[t] = tag;
                vals[t * l..(t + 1) * l].copy_from_slice(&out[..l]);
            }
            Ok(stats)
        };
        let results: Vec<Result<MarchStats>> = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                cur.par_chunks_mut(n2 * l)
                    .zip(tags.par_chunks_mut(n2))
                    .enumerate()
                    .map(|(node, (v, tg))| work(node, v, tg))
                    .collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                cur.chunks_mut(n2 * l)
                    .zip(tags.chunks_mut(n2))
                    .enumerate()
                    .map(|(node, (v, tg))| work(node, v, tg))
                    .collect()
            }
        };
        let mut stats = MarchStats::default();
        for r in results {
            stats.add(&r?);
        }
        Ok(stats)
    }

    /// Algorithm 3: fixed points first, then marched points in lexicographic
    /// `(b_2, x_1, x_2)` order, each able to read already computed points of
    /// the current slice.
    fn slice_ordered(&self, s: usize, prev: &[f64], cur: &mut [f64], tags: &mut [PointTag]) -> Result<MarchStats> {
        let l = self.layers;
        let n2 = self.n2;
        let mut done = vec![false; self.m * n2];
        let mut active = Vec::new();
        for node in 0..self.m {
            for t in 0..n2 {
                let f = node * n2 + t;
                match self.classify(s, node, t) {
                    Some((tag, out)) => {
                        tags[f] = tag;
                        cur[f * l..(f + 1) * l].copy_from_slice(&out[..l]);
                        done[f] = true;
                    }
                    None => {
                        tags[f] = PointTag::Active;
                        cur[f * l..(f + 1) * l].fill(INF);
                    }
                }
            }
        }
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for t in 0..n2 {
            for i in 0..nx {
                for j in 0..ny {
                    let node = self.grid.index(i, j);
                    if !done[node * n2 + t] {
                        active.push((node, t));
                    }
                }
            }
        }
        let mut stats = MarchStats::default();
        for (node, t) in active {
            let f = node * n2 + t;
            let mut out = if s == 0 {
                [INF; MAX_LAYERS]
            } else {
                self.march_point(s, node, t, prev, Some((cur, &done)), &mut stats)?
            };
            let own = node * n2 * l;
            self.carry(&mut out, s, node, t, prev, &cur[own..own + n2 * l]);
            cur[f * l..(f + 1) * l].copy_from_slice(&out[..l]);
            done[f] = true;
        }
        Ok(stats)
    }

    /// More budget never hurts: take the previous `b_1` and `b_2` gridpoints'
    /// values when smaller, along with their companions.
    /// `own` holds the current slice's entries for `node`.
    #[inline]
    fn carry(&self, out: &mut [f64; MAX_LAYERS], s: usize, node: usize, t: usize, prev: &[f64], own: &[f64]) {
        let l = self.layers;
        if s > 0 {
            let f = (node * self.n2 + t) * l;
            if prev[f] < out[0] {
                out[..l].copy_from_slice(&prev[f..f + l]);
            }
        }
        if t > 0 {
            let f = (t - 1) * l;
            if own[f] < out[0] {
                out[..l].copy_from_slice(&own[f..f + l]);
            }
        }
    }

    fn march_point(
        &self,
        s: usize,
        node: usize,
        t: usize,
        prev: &[f64],
        cur: Option<(&[f64], &[bool])>,
        stats: &mut MarchStats,
    ) -> Result<[f64; MAX_LAYERS]> {
        stats.marched_points += 1;
        let mut failure: Option<Error> = None;
        let mut rays = 0u64;
        let mut cells = 0u64;
        let best = self.params.search.minimize(|theta| {
            if failure.is_some() {
                return INF;
            }
            rays += 1;
            let mut acc = [0.0; MAX_LAYERS];
            match self.ray(s, node, t, theta, 1, &mut acc, cur, &mut cells) {
                Ok(landing) => {
                    let v = self.landing_value(s, landing, 0, prev, cur);
                    if v == INF {
                        INF
                    } else {
                        acc[0] + v
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    INF
                }
            }
        });
        stats.rays += rays;
        stats.cells_traversed += cells;
        if let Some(e) = failure {
            return Err(e);
        }
        let mut out = [INF; MAX_LAYERS];
        if best.value < INF {
            let mut acc = [0.0; MAX_LAYERS];
            let mut scratch = 0;
            let landing = self.ray(s, node, t, best.angle, self.layers, &mut acc, cur, &mut scratch)?;
            for k in 0..self.layers {
                let v = self.landing_value(s, landing, k, prev, cur);
                out[k] = if v == INF { INF } else { acc[k] + v };
            }
            out[0] = best.value;
        }
        self.direct_exits(s, node, t, &mut out);
        Ok(out)
    }

    /// Straight segments to exit gridpoints reachable within one slice step.
    fn direct_exits(&self, s: usize, node: usize, t: usize, out: &mut [f64; MAX_LAYERS]) {
        if self.targets.is_empty() {
            return;
        }
        let p = self.grid.point_of(node);
        let b = self.budgets_of(s, t);
        for &tn in &self.targets {
            let q = self.grid.point_of(tn);
            let d = (q[0] - p[0]).hypot(q[1] - p[1]);
            if d == 0.0 {
                continue;
            }
            let a = [(q[0] - p[0]) / d, (q[1] - p[1]) / d];
            let f = self.medium.speed_node(node, a);
            if !(f > 0.0) {
                continue;
            }
            let time = d / f;
            let km = self.medium.cost_node(self.march_cost, node, f);
            if !(km > 0.0) || time * km > self.db1 * (1.0 + 1e-9) {
                continue;
            }
            let mut rem = [b[0] - time * km, b[1]];
            if let Some(c2) = self.second_cost {
                rem[1] -= time * self.medium.cost_node(c2, node, f);
            }
            if !self.can_stop(tn, rem) {
                continue;
            }
            let kp = self.medium.cost_node(self.spec.primary, node, f);
            let v = time * kp + self.spec.terminals[self.spec.primary].value(tn);
            if !(v < out[0]) {
                continue;
            }
            if self.has_obstacles && self.medium.segment_blocked(p, q) {
                continue;
            }
            out[0] = v;
            for (k, &c) in self.tracked.iter().enumerate().skip(1) {
                out[k] = time * self.medium.cost_node(c, node, f) + self.spec.terminals[c].value(tn);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn ray(
        &self,
        s: usize,
        node: usize,
        t: usize,
        theta: f64,
        track: usize,
        acc: &mut [f64; MAX_LAYERS],
        cur: Option<(&[f64], &[bool])>,
        cells: &mut u64,
    ) -> Result<Landing> {
        match self.algorithm {
            Algorithm::SliceStep => {
                *cells += 1;
                Ok(self.slice_step(s, node, t, unit(theta), track, acc))
            }
            Algorithm::RayWalk => self.walk(s, node, t, theta, track, acc, None, cells),
            Algorithm::EarlyStop => self.walk(s, node, t, theta, track, acc, cur, cells),
        }
    }

    /// Algorithm 1: `τ = Δb_1 / K_1(x, a)` with coefficients frozen at the node.
    #[inline]
    fn slice_step(&self, s: usize, node: usize, t: usize, a: [f64; 2], track: usize, acc: &mut [f64; MAX_LAYERS]) -> Landing {
        let medium = self.medium;
        let f = medium.speed_node(node, a);
        if !(f > 0.0) {
            return Landing::Infeasible;
        }
        let km = medium.cost_node(self.march_cost, node, f);
        if !(km > 0.0 && km.is_finite()) {
            return Landing::Infeasible;
        }
        let p = self.grid.point_of(node);
        let step = step_in_square(p, a, f, self.db1 / km);
        if step.tau <= 1e-14 {
            return Landing::Infeasible;
        }
        for k in 0..track {
            let c = medium.cost_node(self.tracked[k], node, f);
            if !c.is_finite() {
                return Landing::Infeasible;
            }
            acc[k] = step.tau * c;
        }
        if self.near[node] && medium.segment_blocked(p, step.foot) {
            return Landing::Infeasible;
        }
        let b = self.budgets_of(s, t);
        let mut b2 = b[1];
        if let Some(c2) = self.second_cost {
            b2 -= step.tau * medium.cost_node(c2, node, f);
            if b2 < -BUDGET_EPS {
                return Landing::Infeasible;
            }
            b2 = b2.max(0.0);
        }
        if step.clipped {
            Landing::Exit(step.foot, [b[0] - step.tau * km, b2])
        } else {
            Landing::At([step.foot[0], step.foot[1], (s - 1) as f64 * self.db1, b2])
        }
    }

    /// Algorithms 2 and 3: follow the ray through the extended grid cell by
    /// cell. With `cur` set (Algorithm 3) the walk stops on the first face
    /// whose interpolation corners are computed and finite.
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        s: usize,
        node: usize,
        t: usize,
        theta: f64,
        track: usize,
        acc: &mut [f64; MAX_LAYERS],
        cur: Option<(&[f64], &[bool])>,
        cells: &mut u64,
    ) -> Result<Landing> {
        let medium = self.medium;
        let a = unit(theta);
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let h = self.grid.h();
        let (i, j) = self.grid.coords(node);
        let b = self.budgets_of(s, t);
        let mut pos = [i as f64 * h, j as f64 * h, b[0], b[1]];
        let lowest_b1 = (s - 1) as f64 * self.db1;
        let mut ci = 0usize;
        let mut cj = 0usize;
        let mut ct = 0usize;
        let mut first = true;
        let mut count = 0usize;
        let mut kbuf = [0.0f64; MAX_LAYERS];
        loop {
            count += 1;
            *cells += 1;
            if count > self.cell_limit {
                return Err(Error::RayWalkLimit {
                    index: node,
                    slice: s,
                    angle: theta,
                    limit: self.cell_limit,
                });
            }
            let p = [pos[0], pos[1]];
            let (f, km, k2) = if first {
                let f = medium.speed_node(node, a);
                let km = medium.cost_node(self.march_cost, node, f);
                let k2 = self.second_cost.map_or(0.0, |c| medium.cost_node(c, node, f));
                for k in 0..track {
                    kbuf[k] = medium.cost_node(self.tracked[k], node, f);
                }
                (f, km, k2)
            } else {
                let f = medium.speed_at(p, a);
                let km = medium.cost_at(self.march_cost, p, f);
                let k2 = self.second_cost.map_or(0.0, |c| medium.cost_at(c, p, f));
                for k in 0..track {
                    kbuf[k] = medium.cost_at(self.tracked[k], p, f);
                }
                (f, km, k2)
            };
            if !(f > 0.0 && km > 0.0 && km.is_finite() && k2.is_finite()) || kbuf[..track].iter().any(|k| !k.is_finite()) {
                return Ok(Landing::Infeasible);
            }
            let vel = [f * a[0], f * a[1]];
            if first {
                ci = match start_cell(i, vel[0], nx) {
                    Some(c) => c,
                    None => return Ok(Landing::Infeasible),
                };
                cj = match start_cell(j, vel[1], ny) {
                    Some(c) => c,
                    None => return Ok(Landing::Infeasible),
                };
                if self.r > 1 {
                    ct = if k2 > 0.0 {
                        if t == 0 {
                            return Ok(Landing::Infeasible);
                        }
                        t - 1
                    } else {
                        t.min(self.n2 - 2)
                    };
                }
                first = false;
            }
            let tx = face_time(pos[0], vel[0], ci, h);
            let ty = face_time(pos[1], vel[1], cj, h);
            let tb1 = (pos[2] - lowest_b1) / km;
            let tb2 = if self.r > 1 && k2 > 0.0 {
                (pos[3] - ct as f64 * self.db2) / k2
            } else {
                INF
            };
            // Ties go to the b_1 face (the walk is over), then x, y, b_2.
            let (dim, dt) = if tb1 <= tx && tb1 <= ty && tb1 <= tb2 {
                (2, tb1)
            } else if tx <= ty && tx <= tb2 {
                (0, tx)
            } else if ty <= tb2 {
                (1, ty)
            } else {
                (3, tb2)
            };
            let mut next = [
                pos[0] + dt * vel[0],
                pos[1] + dt * vel[1],
                pos[2] - dt * km,
                pos[3] - dt * k2,
            ];
            for k in 0..track {
                acc[k] += dt * kbuf[k];
            }
            if self.has_obstacles && medium.segment_blocked(p, [next[0], next[1]]) {
                return Ok(Landing::Infeasible);
            }
            match dim {
                2 => {
                    next[2] = lowest_b1;
                    next[3] = next[3].max(0.0);
                    return Ok(Landing::At(next));
                }
                0 => {
                    let up = vel[0] > 0.0;
                    let face = if up { ci + 1 } else { ci };
                    next[0] = face as f64 * h;
                    if (up && face == nx - 1) || (!up && face == 0) {
                        return Ok(Landing::Exit([next[0], next[1].clamp(0.0, 1.0)], [next[2], next[3].max(0.0)]));
                    }
                }
                1 => {
                    let up = vel[1] > 0.0;
                    let face = if up { cj + 1 } else { cj };
                    next[1] = face as f64 * h;
                    if (up && face == ny - 1) || (!up && face == 0) {
                        return Ok(Landing::Exit([next[0].clamp(0.0, 1.0), next[1]], [next[2], next[3].max(0.0)]));
                    }
                }
                _ => {
                    next[3] = ct as f64 * self.db2;
                    if ct == 0 {
                        return Ok(Landing::Infeasible);
                    }
                }
            }
            if let Some((values, done)) = cur {
                if self.face_ready(s, next, values, done) {
                    return Ok(Landing::At(next));
                }
            }
            match dim {
                0 => {
                    if vel[0] > 0.0 {
                        ci += 1
                    } else {
                        ci -= 1
                    }
                }
                1 => {
                    if vel[1] > 0.0 {
                        cj += 1
                    } else {
                        cj -= 1
                    }
                }
                _ => ct -= 1,
            }
            pos = next;
        }
    }

    /// Whether every current-slice corner used to interpolate at `pos` is
    /// computed and finite.
    fn face_ready(&self, s: usize, pos: [f64; 4], values: &[f64], done: &[bool]) -> bool {
        let c = self.corners(s, pos);
        let l = self.layers;
        (0..c.n).all(|k| !c.current[k] || (done[c.flat[k]] && values[c.flat[k] * l] < INF))
    }

    fn corners(&self, s: usize, pos: [f64; 4]) -> Corners {
        let (i0, j0, gx, gy) = self.grid.cell_snapped([pos[0], pos[1]]);
        let nx = self.grid.nx();
        let base = j0 * nx + i0;
        let nodes = [base, base + 1, base + nx, base + nx + 1];
        let ws = bilinear_weights(gx, gy);
        let fb1 = snap(((pos[2] - (s - 1) as f64 * self.db1) / self.db1).clamp(0.0, 1.0));
        let (t0, ft) = if self.r > 1 {
            let (c, g) = locate(pos[3].max(0.0) / self.db2, self.n2 - 2);
            (c, snap(g))
        } else {
            (0, 0.0)
        };
        let mut out = Corners {
            n: 0,
            current: [false; 16],
            flat: [0; 16],
            weight: [0.0; 16],
        };
        for (is_cur, w1) in [(false, 1.0 - fb1), (true, fb1)] {
            if w1 <= 0.0 {
                continue;
            }
            for (dt, wt) in [(0usize, 1.0 - ft), (1, ft)] {
                if wt <= 0.0 {
                    continue;
                }
                for c in 0..4 {
                    let w = ws[c] * w1 * wt;
                    if w > 0.0 {
                        out.current[out.n] = is_cur;
                        out.flat[out.n] = nodes[c] * self.n2 + t0 + dt;
                        out.weight[out.n] = w;
                        out.n += 1;
                    }
                }
            }
        }
        out
    }

    fn landing_value(&self, s: usize, landing: Landing, layer: usize, prev: &[f64], cur: Option<(&[f64], &[bool])>) -> f64 {
        match landing {
            Landing::Infeasible => INF,
            Landing::Exit(p, b) => self.exit_value(p, b, layer),
            Landing::At(pos) => {
                let c = self.corners(s, pos);
                let l = self.layers;
                let mut acc = 0.0;
                for k in 0..c.n {
                    let src = if c.current[k] {
                        match cur {
                            Some((v, _)) => v,
                            None => return INF,
                        }
                    } else {
                        prev
                    };
                    let v = src[c.flat[k] * l + layer];
                    if v == INF {
                        return INF;
                    }
                    acc += c.weight[k] * v;
                }
                acc
            }
        }
    }

    /// Exit through a boundary point: both neighbouring boundary gridpoints
    /// with positive weight must allow stopping with the remaining budgets.
    fn exit_value(&self, p: Point, b: [f64; 2], layer: usize) -> f64 {
        let (i0, j0, gx, gy) = self.grid.cell_snapped(p);
        let nx = self.grid.nx();
        let on_vertical = p[0] <= 0.0 || p[0] >= 1.0;
        let (n0, n1, w) = if on_vertical {
            let i = if p[0] <= 0.0 { 0 } else { nx - 1 };
            (j0 * nx + i, (j0 + 1) * nx + i, gy)
        } else {
            let j = if p[1] <= 0.0 { 0 } else { self.grid.ny() - 1 };
            (j * nx + i0, j * nx + i0 + 1, gx)
        };
        let q = self.spec.terminals[self.tracked[layer]];
        let mut acc = 0.0;
        for (n, wt) in [(n0, 1.0 - w), (n1, w)] {
            if wt <= 0.0 {
                continue;
            }
            if !self.can_stop(n, b) {
                return INF;
            }
            acc += wt * q.value(n);
        }
        acc
    }
}

#[inline]
fn start_cell(i: usize, v: f64, n: usize) -> Option<usize> {
    if v > 0.0 {
        (i + 1 < n).then_some(i)
    } else if v < 0.0 {
        (i > 0).then(|| i - 1)
    } else {
        Some(i.min(n - 2))
    }
}

#[inline]
fn face_time(x: f64, v: f64, cell: usize, h: f64) -> f64 {
    if v > 0.0 {
        (((cell + 1) as f64 * h - x) / v).max(0.0)
    } else if v < 0.0 {
        ((cell as f64 * h - x) / v).max(0.0)
    } else {
        INF
    }
}
