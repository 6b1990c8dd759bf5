use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use paretomarch::augmented::{domain_reduction_report, AugmentedField};
use paretomarch::config::{Scenario, ScenarioConfig};
use paretomarch::export::{self, format_number};
use paretomarch::grid::BudgetAxis;
use paretomarch::medium::Medium;
use paretomarch::pareto::{envelope_gap, extract_front, hausdorff, weighted_sum_front, WeightMesh};
use paretomarch::pipeline::{self, front_threshold};
use paretomarch::trajectory::{follow_constrained, follow_static, Trajectory};
use paretomarch::validate::{validate_problem, ValidationReport};
use paretomarch::visibility::compute_visibility;
use paretomarch::{convergence, scenario, Error, Grid2, ScalarField};
use serde_json::{json, Value};

use crate::output::Bundle;
use crate::{FrontArgs, RunArgs, ScenarioArgs, TableArgs, TraceArgs, VisibilityArgs};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::OutOfDomain { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidProblem(_)
            | Error::InsideObstacle { .. }
            | Error::InfeasibleStart { .. }
            | Error::Config(_) => 2,
            Error::NotConverged { .. }
            | Error::EmptySeeds
            | Error::RayWalkLimit { .. }
            | Error::MflMismatch(_)
            | Error::BudgetExhausted { .. } => 3,
            Error::Io(_) => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn load(args: &ScenarioArgs) -> CliResult<(Scenario, ValidationReport)> {
    let mut config = scenario::load(&args.scenario)?;
    config.apply(&args.overrides())?;
    build(&config)
}

fn build(config: &ScenarioConfig) -> CliResult<(Scenario, ValidationReport)> {
    let sc = config.build()?;
    let report = validate_problem(&sc.problem);
    if !report.passed() {
        return Err(CliError::validation(format!("problem `{}` fails validation:\n{report}", config.name)));
    }
    Ok((sc, report))
}

struct Solved {
    medium: Medium,
    table: paretomarch::restricted::ValueTable,
    mfl: paretomarch::augmented::MflSurface,
    field: AugmentedField,
    timings: Vec<(&'static str, f64)>,
}

impl Solved {
    fn budget_guides(&self) -> Vec<&ScalarField> {
        self.field.constrained.iter().map(|&c| self.table.u(c)).collect()
    }
}

fn solve(sc: &Scenario) -> CliResult<Solved> {
    let p = &sc.problem;
    let mut timings = Vec::new();
    let t = Instant::now();
    let medium = Medium::from_problem(p);
    let table = pipeline::solve_statics(p, &medium, &sc.options)?;
    timings.push(("statics", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let (mfl, _) = pipeline::solve_mfl(p, &medium, &table, &sc.options)?;
    timings.push(("mfl", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let field = pipeline::solve_march(p, &medium, &table, &mfl, &sc.options)?;
    timings.push(("march", t.elapsed().as_secs_f64()));
    Ok(Solved {
        medium,
        table,
        mfl,
        field,
        timings,
    })
}

fn slice_indices(count: usize, wanted: usize) -> Vec<usize> {
    if wanted == 0 {
        return Vec::new();
    }
    if wanted == 1 || count == 1 {
        return vec![count - 1];
    }
    let mut v: Vec<usize> = (0..wanted)
        .map(|k| ((k as f64) * (count - 1) as f64 / (wanted - 1) as f64).round() as usize)
        .collect();
    v.dedup();
    v
}

/// The slice `s` at the largest second budget, as a field.
fn slice_field(field: &AugmentedField, s: usize) -> ScalarField {
    let t = field.n_inner() - 1;
    ScalarField::from_values(field.grid, field.grid.indices().map(|k| field.value(s, k, t)).collect())
}

fn trace_record(res: paretomarch::Result<Trajectory>) -> (Option<Trajectory>, Value) {
    match res {
        Ok(t) => {
            let v = json!({
                "terminated": t.terminated,
                "cost_totals": t.cost_totals,
                "length": t.length(),
                "points": t.points.len(),
            });
            (Some(t), v)
        }
        Err(Error::BudgetExhausted { partial }) => {
            let v = json!({
                "error": "budget exhausted before reaching a target",
                "cost_totals": partial.cost_totals,
                "points": partial.points.len(),
            });
            (Some(*partial), v)
        }
        Err(e) => (None, json!({ "error": e.to_string() })),
    }
}

pub fn run(a: &RunArgs) -> CliResult {
    let (sc, report) = load(&a.scenario)?;
    let cfg = &sc.config;
    let p = &sc.problem;
    let r = p.r();
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let mut out = Bundle::create(&dir)?;
    let solved = solve(&sc)?;
    let mut timings = solved.timings.clone();
    let terminals = pipeline::terminals(p);

    out.write("config.toml", |w| w.write_all(cfg.to_toml().as_bytes()))?;
    for i in 0..=r {
        let u = solved.table.u(i);
        out.write(&format!("u_{i}.csv"), |w| export::write_field_csv(w, u))?;
        out.heatmap(&format!("u_{i}.pgm"), u)?;
        for j in (0..=r).filter(|&j| j != i) {
            let v = solved.table.v(j, i);
            out.write(&format!("v_{j}_{i}.csv"), |w| export::write_field_csv(w, v))?;
        }
    }
    let mfl = &solved.mfl;
    out.write("mfl.csv", |w| {
        let g = p.grid;
        if r == 1 {
            writeln!(w, "x,y,level,value")?;
        } else {
            writeln!(w, "x,y,b_2,level,value")?;
        }
        for k in g.indices() {
            let x = g.point_of(k);
            for t in 0..mfl.n_inner {
                let idx = k * mfl.n_inner + t;
                let mut cells = vec![format_number(x[0]), format_number(x[1])];
                if r > 1 {
                    cells.push(format_number(p.budgets.axis(1).value(t)));
                }
                cells.push(format_number(mfl.level[idx]));
                cells.push(format_number(mfl.value_on_mfl[idx]));
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        Ok(())
    })?;
    let slices = slice_indices(solved.field.n_slices(), a.slices);
    out.write("w_slices.csv", |w| export::write_slices_csv(w, &solved.field, &slices))?;
    for &s in &slices {
        out.heatmap(&format!("w_slice_{s:04}.pgm"), &slice_field(&solved.field, s))?;
    }

    let single = (r == 1).then(|| (solved.table.u(1), solved.table.v(0, 1)));
    let reduction = domain_reduction_report(&solved.field, single);
    out.write("domain_reduction.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &reduction).map_err(io::Error::other)
    })?;

    let t = Instant::now();
    let params = cfg.trace_params();
    let mut traces = Vec::new();
    for (k, tc) in cfg.trace.iter().enumerate() {
        let res = follow_constrained(&solved.medium, &terminals, &solved.field, &solved.budget_guides(), tc.start, &tc.budget, &params);
        let (path, mut rec) = trace_record(res);
        rec["start"] = json!(tc.start);
        rec["budget"] = json!(tc.budget);
        rec["w_at_start"] = json!(solved.field.sample(tc.start, &tc.budget));
        if let Some(path) = path {
            let name = format!("trace_{k}.csv");
            out.write(&name, |w| export::write_trajectory_csv(w, &path))?;
            rec["file"] = json!(name);
        }
        traces.push(rec);
    }
    timings.push(("traces", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let mut front_rec = Value::Null;
    if let Some(f) = &cfg.front {
        let theta = front_threshold(p, f.theta);
        let front = extract_front(&solved.medium, &solved.field, f.start, theta)?;
        out.write("front.csv", |w| export::write_front_csv(w, &[&front]))?;
        front_rec = json!({ "start": f.start, "theta": theta, "points": front.points, "file": "front.csv" });
    }
    timings.push(("front", t.elapsed().as_secs_f64()));

    let mut observers = Vec::new();
    for (k, v) in sc.visibility.iter().enumerate() {
        let g = *v.grid();
        out.write(&format!("hidden_{k}.pgm"), |w| export::write_mask_pgm(w, &v.hidden, g.nx(), g.ny()))?;
        out.write(&format!("hidden_{k}.csv"), |w| export::write_field_csv(w, &v.mask_field()))?;
        observers.push(json!({
            "observer": v.observer,
            "threshold": v.threshold,
            "hidden_gridpoints": v.hidden_count(),
        }));
    }

    let conv = (cfg.name == "convergence" && r == 1).then(|| convergence::errors(&solved.field));
    if let Some(e) = &conv {
        println!(
            "h = {}, db = {}: L1 = {}, Linf = {}",
            format_number(p.grid.h()),
            format_number(p.budgets.axis(0).delta()),
            format_number(e.l1),
            format_number(e.linf)
        );
    }

    let total: f64 = timings.iter().map(|(_, s)| s).sum();
    let manifest = json!({
        "scenario": cfg.name,
        "config": cfg,
        "overrides": a.scenario.overrides(),
        "solve_options": sc.options,
        "trace_params": params,
        "h": p.grid.h(),
        "h_hat": p.h_hat(),
        "validation": report,
        "domain_reduction": reduction,
        "march_stats": solved.field.stats,
        "observers": observers,
        "traces": traces,
        "front": front_rec,
        "convergence_errors": conv,
        "heatmap_scaling": out.scaling,
        "timings_s": timings.iter().map(|(k, s)| (k.to_string(), json!(s))).collect::<serde_json::Map<_, _>>(),
        "total_s": total,
        "files": out.files,
    });
    let path = out.dir().join("manifest.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &manifest).map_err(io::Error::other)?;
    println!(
        "{}: solved {}x{} grid, {} budget slices in {:.1} s; cap {:.1}%, below MFL {:.1}%; wrote {}",
        cfg.name,
        p.grid.nx(),
        p.grid.ny(),
        solved.field.n_slices(),
        total,
        reduction.cap_percent,
        reduction.mfl_percent,
        dir.display()
    );
    Ok(())
}

pub fn compare_fronts(a: &FrontArgs) -> CliResult {
    let (sc, _) = load(&a.scenario)?;
    let cfg = &sc.config;
    let p = &sc.problem;
    if p.r() != 1 {
        return Err(CliError::validation(format!(
            "compare-fronts needs a single budget; `{}` has {}",
            cfg.name,
            p.r()
        )));
    }
    let defaults = cfg.front.as_ref();
    let start = a
        .start
        .or(defaults.map(|f| f.start))
        .ok_or_else(|| CliError::validation("no --start and no [front] section in the scenario"))?;
    let weights = a.weights.or(defaults.map(|f| f.weights)).unwrap_or(21);
    let theta = front_threshold(p, defaults.map_or(1.0, |f| f.theta));
    let solved = solve(&sc)?;
    let aug = extract_front(&solved.medium, &solved.field, start, theta)?;
    let mesh = WeightMesh::uniform(1, weights)?;
    let ws = weighted_sum_front(&solved.medium, &pipeline::terminals(p), &mesh, start, &sc.options.statics)?;
    let gap = envelope_gap(&aug, &ws.front, 3.0 * theta);
    let summary = json!({
        "scenario": cfg.name,
        "start": start,
        "theta": theta,
        "augmented_points": aug.len(),
        "weighted_sum_points": ws.front.len(),
        "weighted_sum_failures": ws.failures,
        "envelope_gap": gap,
        "hausdorff": hausdorff(&aug.points, &ws.front.points),
    });
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("out").join(format!("{}-fronts", cfg.name)));
    let mut out = Bundle::create(&dir)?;
    out.write("fronts.csv", |w| export::write_front_csv(w, &[&aug, &ws.front]))?;
    out.write("summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(io::Error::other)
    })?;
    println!(
        "{}: {} augmented points, {} weighted-sum points; largest gap above the convex envelope {} ({} points beyond 3 theta = {})",
        cfg.name,
        aug.len(),
        ws.front.len(),
        format_number(gap.max_gap),
        gap.points_beyond,
        format_number(gap.threshold)
    );
    Ok(())
}

pub fn convergence_table(a: &TableArgs) -> CliResult {
    let base = scenario::builtin("convergence")?;
    let bound = base.budgets.bound[0];
    let mut rows = Vec::new();
    for &h in &a.h {
        let grid = Grid2::with_spacing(h)?;
        let mut row = Vec::new();
        for &db in &a.db {
            let mut cfg = base.clone();
            cfg.grid.n = grid.nx();
            cfg.budgets.count[0] = BudgetAxis::with_spacing(bound, db)?.count;
            if let Some(alg) = a.algorithm {
                cfg.march.algorithm = alg;
            }
            let (sc, _) = build(&cfg)?;
            let t = Instant::now();
            let solved = solve(&sc)?;
            let e = convergence::errors(&solved.field);
            eprintln!(
                "h = {}, db = {}: L1 = {}, Linf = {} ({:.1} s)",
                format_number(h),
                format_number(db),
                format_number(e.l1),
                format_number(e.linf),
                t.elapsed().as_secs_f64()
            );
            row.push(e);
        }
        rows.push(row);
    }
    let render = |title: &str, pick: &dyn Fn(&convergence::ConvergenceErrors) -> f64| {
        let mut s = format!("{title}\n{:>10}", "h \\ db");
        for db in &a.db {
            s += &format!(" {:>12}", format_number(*db));
        }
        s.push('\n');
        for (h, row) in a.h.iter().zip(&rows) {
            s += &format!("{:>10}", format_number(*h));
            for e in row {
                s += &format!(" {:>12.7}", pick(e));
            }
            s.push('\n');
        }
        s
    };
    print!("{}", render("L1 error", &|e| e.l1));
    print!("{}", render("Linf error away from discontinuities", &|e| e.linf));
    if let Some(path) = &a.out {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "h,db,l1,linf,finiteness_mismatches")?;
        for (h, row) in a.h.iter().zip(&rows) {
            for (db, e) in a.db.iter().zip(row) {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    format_number(*h),
                    format_number(*db),
                    format_number(e.l1),
                    format_number(e.linf),
                    e.finiteness_mismatches
                )?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

pub fn trace(a: &TraceArgs) -> CliResult {
    let (sc, _) = load(&a.scenario)?;
    let p = &sc.problem;
    let params = sc.config.trace_params();
    let terminals = pipeline::terminals(p);
    let (path, summary) = match &a.budget {
        Some(b) => {
            if b.len() != p.r() {
                return Err(CliError::validation(format!(
                    "--budget needs {} values, got {}",
                    p.r(),
                    b.len()
                )));
            }
            let solved = solve(&sc)?;
            let w = solved.field.sample(a.start, b);
            let path = follow_constrained(&solved.medium, &terminals, &solved.field, &solved.budget_guides(), a.start, b, &params)?;
            (path, format!("W(start, budget) = {}", format_number(w)))
        }
        None => {
            let medium = Medium::from_problem(p);
            let table = pipeline::solve_statics(p, &medium, &sc.options)?;
            let path = follow_static(&medium, table.u(0), 0, &terminals, a.start, &params)?;
            (path, format!("u_0(start) = {}", format_number(table.u(0).sample(a.start))))
        }
    };
    let totals: Vec<String> = path.cost_totals.iter().map(|&v| format_number(v)).collect();
    eprintln!(
        "{summary}; path of {} points, length {}, costs [{}], {:?}",
        path.points.len(),
        format_number(path.length()),
        totals.join(", "),
        path.terminated
    );
    match &a.out {
        Some(file) => {
            let mut w = BufWriter::new(File::create(file)?);
            export::write_trajectory_csv(&mut w, &path)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            export::write_trajectory_csv(&mut w, &path)?;
        }
    }
    Ok(())
}

pub fn visibility(a: &VisibilityArgs) -> CliResult {
    let cfg = scenario::load(&a.scenario)?;
    let issues = cfg.issues();
    if !issues.is_empty() {
        return Err(CliError::validation(issues.join("\n")));
    }
    let grid = Grid2::square(a.n.unwrap_or(cfg.grid.n))?;
    let obstacles: Vec<_> = cfg
        .obstacle
        .iter()
        .map(|o| paretomarch::Rect::new(o.min, o.max))
        .collect::<Result<_, _>>()?;
    let vis = compute_visibility(&grid, a.observer, &obstacles, a.threshold)?;
    let mut out = Bundle::create(&a.out)?;
    out.write("hidden.pgm", |w| export::write_mask_pgm(w, &vis.hidden, grid.nx(), grid.ny()))?;
    out.write("hidden.csv", |w| export::write_field_csv(w, &vis.mask_field()))?;
    let diff = ScalarField::from_values(
        grid,
        vis.free
            .values()
            .iter()
            .zip(vis.obstructed.values())
            .map(|(a, b)| b - a)
            .collect(),
    );
    out.write("detour.csv", |w| export::write_field_csv(w, &diff))?;
    println!(
        "observer ({}, {}): {} of {} gridpoints hidden (threshold {}); wrote {}",
        format_number(a.observer[0]),
        format_number(a.observer[1]),
        vis.hidden_count(),
        grid.len(),
        format_number(vis.threshold),
        a.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_selection() {
        assert_eq!(slice_indices(61, 5), vec![0, 15, 30, 45, 60]);
        assert_eq!(slice_indices(3, 5), vec![0, 1, 2]);
        assert_eq!(slice_indices(10, 1), vec![9]);
        assert!(slice_indices(10, 0).is_empty());
    }
}
