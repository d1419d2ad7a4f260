use std::path::PathBuf;

use num_bigint::BigUint;
use thiserror::Error;

use crate::geometry::Configuration;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("particles {0} and {1} are coincident")]
    Coincident(usize, usize),

    /// The minimizer met a non-finite energy or gradient. `last` is the last
    /// configuration whose energy and gradient were finite.
    #[error("numerical failure after {iters} iterations: {reason}")]
    Numerical {
        reason: String,
        iters: usize,
        last: Box<Configuration>,
        last_energy: f64,
    },

    #[error("it is insufficient the number of points of the region for the cluster ({available} points, {needed} particles)")]
    InsufficientRegion { needed: usize, available: usize },

    #[error("region is empty")]
    EmptyRegion,

    #[error("no unused region ids left for replacement")]
    NoUnusedIds,

    #[error("no vacant site found near the parent cluster")]
    SiteSearch,

    #[error("offspring construction failed: {0}")]
    Construction(String),

    #[error("enumeration of {count} subsets exceeds the budget of {budget}")]
    BudgetExceeded { count: BigUint, budget: u64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}
