mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paretomarch::config::Overrides;
use paretomarch::Point;

/// Budget-constrained optimal paths and Pareto fronts on grids.
#[derive(Parser)]
#[command(name = "paretomarch", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "PARETOMARCH_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write every artifact to a directory.
    Run(RunArgs),
    /// Compare the augmented front with the weighted-sum baseline.
    CompareFronts(FrontArgs),
    /// Error table of the two-exit problem against its exact solution.
    ConvergenceTable(TableArgs),
    /// Solve a scenario and trace one optimal path.
    Trace(TraceArgs),
    /// Hidden region of an observer among a scenario's obstacles.
    Visibility(VisibilityArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Args, Clone)]
pub struct ScenarioArgs {
    /// Built-in scenario name or path to a TOML file.
    pub scenario: String,
    /// Spatial step, e.g. 1/160.
    #[arg(long, value_parser = parse_number)]
    pub h: Option<f64>,
    /// Step along the first budget, e.g. 1/40.
    #[arg(long, value_parser = parse_number)]
    pub db: Option<f64>,
    /// Upper bound of the first budget.
    #[arg(long, value_parser = parse_number)]
    pub bound: Option<f64>,
    /// Marching variant: 1, 2 or 3.
    #[arg(long)]
    pub algorithm: Option<u8>,
}

impl ScenarioArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            h: self.h,
            db: self.db,
            bound: self.bound,
            algorithm: self.algorithm,
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output directory (default `out/<scenario>`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Number of evenly spaced budget slices to export.
    #[arg(long, default_value_t = 5)]
    pub slices: usize,
}

#[derive(Args)]
pub struct FrontArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Start position `x,y` (default from the scenario's [front] section).
    #[arg(long, value_parser = parse_point)]
    pub start: Option<Point>,
    /// Weights in the weighted-sum mesh.
    #[arg(long)]
    pub weights: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TableArgs {
    /// Spatial steps, one table row each.
    #[arg(long, value_delimiter = ',', value_parser = parse_number, default_values = ["1/40", "1/80", "1/160"])]
    pub h: Vec<f64>,
    /// Budget steps, one table column each.
    #[arg(long, value_delimiter = ',', value_parser = parse_number, default_values = ["1/10", "1/20", "1/40"])]
    pub db: Vec<f64>,
    #[arg(long)]
    pub algorithm: Option<u8>,
    /// Also write the table as CSV.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_parser = parse_point)]
    pub start: Point,
    /// Budgets `b_1[,b_2]`; without it the unconstrained primary-optimal path.
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    pub budget: Option<Vec<f64>>,
    /// CSV destination (default stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VisibilityArgs {
    #[arg(long, value_parser = parse_point)]
    pub observer: Point,
    /// Scenario whose obstacles and grid are used.
    #[arg(long, default_value = "avoid-observer")]
    pub scenario: String,
    /// Gridpoints per side (default: the scenario's).
    #[arg(long)]
    pub n: Option<usize>,
    /// Hidden/visible threshold in units of h.
    #[arg(long, default_value_t = paretomarch::visibility::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, short, default_value = "out/visibility")]
    pub out: PathBuf,
}

/// A decimal or a fraction `p/q`.
fn parse_number(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
            let q: f64 = q.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
            p / q
        }
        None => s.trim().parse().map_err(|e| format!("`{s}`: {e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x, y] => Ok([parse_number(x)?, parse_number(y)?]),
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match &cli.command {
        Command::Run(a) => commands::run(a),
        Command::CompareFronts(a) => commands::compare_fronts(a),
        Command::ConvergenceTable(a) => commands::convergence_table(a),
        Command::Trace(a) => commands::trace(a),
        Command::Visibility(a) => commands::visibility(a),
        Command::List => {
            for name in paretomarch::scenario::names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_points() {
        assert_eq!(parse_number("1/160").unwrap(), 1.0 / 160.0);
        assert_eq!(parse_number("0.5").unwrap(), 0.5);
        assert!(parse_number("1/0").is_err());
        assert_eq!(parse_point("0.1,1/4").unwrap(), [0.1, 0.25]);
        assert!(parse_point("0.1").is_err());
    }
}
