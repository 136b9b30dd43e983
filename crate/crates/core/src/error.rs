use std::fmt;

use crate::model::Player;

/// Which component of the state left the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseKind {
    /// Wealth stock reached zero.
    Wealth,
    /// Shadow price reached zero.
    Price,
}

impl fmt::Display for CollapseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollapseKind::Wealth => f.write_str("wealth"),
            CollapseKind::Price => f.write_str("shadow price"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter `{field}` = {value}: must satisfy {bound}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("state collapse: {kind} of player {player} is no longer positive")]
    Collapse { player: Player, kind: CollapseKind },

    #[error("step size underflow at t = {t} (h = {h:e}), state = {state:?}")]
    StepUnderflow { t: f64, h: f64, state: Vec<f64> },

    #[error("no convergence after {iterations} iterations (best residual {best_residual:e} at {best_point:?})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
        best_point: Vec<f64>,
    },

    #[error("singular Jacobian at {at:?}")]
    SingularJacobian { at: Vec<f64> },

    #[error("{0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
