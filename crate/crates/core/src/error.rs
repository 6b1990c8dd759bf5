use thiserror::Error;

use crate::field::ScalarField;
use crate::trajectory::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position ({x}, {y}) lies outside the unit square")]
    OutOfDomain { x: f64, y: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("static solve did not converge after {sweeps} sweeps (last update {residual:e})")]
    NotConverged {
        sweeps: usize,
        residual: f64,
        field: Box<ScalarField>,
    },

    #[error("fast marching needs at least one seed")]
    EmptySeeds,

    #[error("ray walk from gridpoint {index} (slice {slice}, angle {angle:.6}) exceeded {limit} cells")]
    RayWalkLimit {
        index: usize,
        slice: usize,
        angle: f64,
        limit: usize,
    },

    #[error("minimal feasible level does not match the march setup: {0}")]
    MflMismatch(String),

    #[error("point ({x}, {y}) lies inside an obstacle")]
    InsideObstacle { x: f64, y: f64 },

    #[error("start ({x}, {y}) is infeasible for the requested budget")]
    InfeasibleStart { x: f64, y: f64 },

    #[error("budget exhausted after {} points before reaching a target", partial.points.len())]
    BudgetExhausted { partial: Box<Trajectory> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
