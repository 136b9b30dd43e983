//! Two-player production-and-appropriation differential game.
//!
//! Each player consumes out of a wealth stock, produces from it, and may spend
//! on appropriating part of the rival's stock. The crate computes the
//! closed-form Markovian Nash controls, integrates the canonical system of
//! stocks and shadow prices, solves the terminal boundary-value problem by
//! shooting, and compares the outcome with the cooperative Ramsey plan.

pub mod analysis;
pub mod cooperative;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod solvers;

pub use error::{CollapseKind, Error, Result};
pub use model::{GameState, ModelParams, Player};
