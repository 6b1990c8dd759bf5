//! Grid solvers for optimal control under integral constraints.
//!
//! The crate computes value functions of static Hamilton-Jacobi-Bellman
//! equations on the unit square, the cost of "otherwise optimal" trajectories,
//! and the budget-augmented value function `w(x, b)` obtained by marching in
//! the first budget direction. From `w` it extracts Pareto fronts and
//! constrained-optimal trajectories.
//!
//! The typical pipeline is wrapped by [`pipeline::solve`]:
//!
//! 1. [`static_solver::solve_static`] for every `u_i`,
//! 2. [`restricted::solve_restricted`] for the `v_ij`,
//! 3. [`augmented::build_mfl`] for the minimal feasible level,
//! 4. [`augmented::march_augmented`] for `W`,
//! 5. [`pareto::extract_front`] and [`trajectory::follow_constrained`].

pub mod angles;
pub mod augmented;
pub mod config;
pub mod convergence;
pub mod error;
pub mod export;
pub mod fast_march;
pub mod field;
pub mod grid;
pub mod medium;
pub mod model;
mod par;
pub mod pareto;
pub mod pipeline;
pub mod restricted;
pub mod scenario;
pub mod static_solver;
pub mod trajectory;
pub mod validate;
pub mod visibility;

pub use error::{Error, Result};
pub use field::{ScalarField, INF};
pub use grid::{BudgetAxes, BudgetAxis, Grid2, Point};
pub use medium::Medium;
pub use model::{ControlProblem, CostModel, Rect, SpeedModel, TerminalCost};
