use alloc::string::String;

use crate::grid::TriadicCube;
use crate::solver::SolveStats;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate field: cell {cell} is not positive definite")]
    DegenerateCell { cell: usize },

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("solver configuration: {0}")]
    Config(String),

    #[error("conjugate gradient did not converge after {} iterations (relative residual {:.3e})", .stats.iterations, .stats.rel_residual)]
    NoConvergence { stats: SolveStats },

    #[error("cube (level {}, offset {:?}): {source}", .cube.level, .cube.offset())]
    InCube {
        cube: TriadicCube,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("maximum principle violated: {0}")]
    MaxPrinciple(String),
}

impl Error {
    pub(crate) fn range(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Range { what, detail: detail.into() }
    }

    pub(crate) fn in_cube(self, cube: TriadicCube) -> Self {
        Error::InCube { cube, source: alloc::boxed::Box::new(self) }
    }
}
