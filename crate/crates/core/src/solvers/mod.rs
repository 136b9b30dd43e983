//! Numerical machinery: adaptive integration of the canonical system, shooting
//! on the initial shadow prices, and steady-state root finding.

pub mod ode;
mod shooting;
pub mod steady;
mod trajectory;

pub use ode::{DenseOutput, OdeOptions, OdeStats, Tolerance};
pub use shooting::{autarky_guess, broyden, default_guess, shoot, simulate, BroydenOptions, RootResult, ShootingResult, Simulation, TerminalMode};
pub use steady::{appropriation_drift, stationarity_residuals, steady_state, validate_trivial, SteadyKind, SteadyOptions, SteadyState};
pub use trajectory::{integrate, EventKind, GameEvent, Trajectory, TrajectorySample};

/// Tolerances shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub ode: OdeOptions,
    /// Convergence threshold on the scaled terminal defect.
    pub shooting_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            ode: OdeOptions::default(),
            shooting_tol: 1e-8,
            max_iterations: 80,
        }
    }
}
