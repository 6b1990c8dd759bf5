//! The full solve: value functions, restricted costs, MFL and march.

use serde::{Deserialize, Serialize};

use crate::augmented::{build_mfl, march_augmented, AugmentedField, CapData, MarchParams, MarchSpec, MflSurface};
use crate::error::Result;
use crate::field::ScalarField;
use crate::medium::Medium;
use crate::model::{ControlProblem, TerminalCost};
use crate::restricted::{solve_value_table, ValueTable};
use crate::static_solver::StaticSolveParams;
use crate::validate::validate_problem;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub statics: StaticSolveParams,
    pub march: MarchParams,
}

pub struct Solution {
    pub medium: Medium,
    pub table: ValueTable,
    pub mfl: MflSurface,
    /// `w_1(x, b_2)` for two budgets.
    pub w1: Option<AugmentedField>,
    pub field: AugmentedField,
}

impl Solution {
    /// Static values of the constrained costs, the fallback guides for
    /// [`follow_constrained`](crate::trajectory::follow_constrained).
    pub fn budget_guides(&self) -> Vec<&ScalarField> {
        self.field.constrained.iter().map(|&c| self.table.u(c)).collect()
    }
}

pub fn terminals(problem: &ControlProblem) -> Vec<&TerminalCost> {
    problem.terminals.iter().collect()
}

/// March inputs for the problem: primary cost 0, budgets on costs `1..=r`.
pub fn march_spec<'a>(problem: &'a ControlProblem, medium: &'a Medium) -> MarchSpec<'a> {
    MarchSpec {
        medium,
        primary: 0,
        constrained: (1..=problem.r()).collect(),
        terminals: terminals(problem),
        budgets: problem.budgets.clone(),
        companions: Vec::new(),
    }
}

/// Cap data `(u_0, v_10 [, v_20])` from the value table.
pub fn cap_data(table: &ValueTable, r: usize) -> CapData<'_> {
    CapData {
        u0: table.u(0),
        thresholds: (1..=r).map(|i| table.v(0, i)).collect(),
    }
}

pub fn solve_statics(problem: &ControlProblem, medium: &Medium, opts: &SolveOptions) -> Result<ValueTable> {
    solve_value_table(medium, &terminals(problem), &opts.statics)
}

pub fn solve_mfl(
    problem: &ControlProblem,
    medium: &Medium,
    table: &ValueTable,
    opts: &SolveOptions,
) -> Result<(MflSurface, Option<AugmentedField>)> {
    build_mfl(medium, &terminals(problem), &problem.budgets, table, &opts.march)
}

pub fn solve_march(
    problem: &ControlProblem,
    medium: &Medium,
    table: &ValueTable,
    mfl: &MflSurface,
    opts: &SolveOptions,
) -> Result<AugmentedField> {
    march_augmented(&march_spec(problem, medium), mfl, &cap_data(table, problem.r()), &opts.march)
}

/// Runs every stage.
pub fn solve(problem: &ControlProblem, opts: &SolveOptions) -> Result<Solution> {
    problem.check_shape()?;
    let medium = Medium::from_problem(problem);
    let table = solve_statics(problem, &medium, opts)?;
    let (mfl, w1) = solve_mfl(problem, &medium, &table, opts)?;
    let field = solve_march(problem, &medium, &table, &mfl, opts)?;
    Ok(Solution {
        medium,
        table,
        mfl,
        w1,
        field,
    })
}

/// Tightness threshold for front extraction: `mult · ĥ · k_2`, where `k_2` is
/// the sampled upper bound of the primary running cost.
pub fn front_threshold(problem: &ControlProblem, mult: f64) -> f64 {
    let report = validate_problem(problem);
    mult * problem.h_hat() * report.cost_bounds[0].1
}
