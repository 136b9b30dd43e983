use serde::{Deserialize, Serialize};

use crate::dynamics::{canonical_rhs, state_rate};
use crate::equilibrium::{mne_controls, ControlPair};
use crate::error::{Error, Result};
use crate::model::{GameState, ModelParams, Player};

use super::shooting::solve_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyKind {
    /// Zero wealth, zero consumption, zero appropriation.
    Trivial,
    /// Positive stocks and finite prices.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Guesses with every stock at or below this radius are taken to target
    /// the trivial state.
    pub trivial_radius: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            tol: 1e-8,
            max_iterations: 100,
            trivial_radius: 1e-6,
        }
    }
}

/// A stationary point of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub kind: SteadyKind,
    pub x: [f64; 2],
    /// Own shadow prices; unbounded (absent) at the trivial state.
    pub lam: Option<[f64; 2]>,
    pub controls: [ControlPair; 2],
    /// Price conditions for players 1 and 2, then wealth conditions for
    /// players 1 and 2. The trivial state carries only the wealth conditions.
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    /// Central-difference rate of change of each player's appropriation
    /// along the flow through the point.
    pub appropriation_drift: [f64; 2],
    pub iterations: usize,
}

impl SteadyState {
    pub fn state(&self) -> Option<GameState> {
        self.lam.map(|l| GameState::new(0.0, self.x[0], self.x[1], l[0], l[1]))
    }
}

/// Stationarity conditions at an interior point: the price condition
/// `y'(x_i) - delta (1 - p_j)(lam_i - gamma lam_j)/lam_i` and the wealth
/// condition `y(x_i) + gamma delta x_j (1 - p_i) - c_i - a_i - delta x_i (1 - p_j)`.
pub fn stationarity_residuals(state: &GameState, p: &ModelParams) -> Result<[f64; 4]> {
    state.check_admissible()?;
    let ctrl = mne_controls(state, p)?;
    let mut out = [0.0; 4];
    for pl in Player::BOTH {
        let (i, j) = (pl.index(), pl.other().index());
        let loss_j = p.loss_rate(ctrl[j].a)?;
        let loss_i = p.loss_rate(ctrl[i].a)?;
        let (li, lj) = (state.lam[i], state.lam[j]);
        out[i] = p.marginal_product(state.x[i])? - p.delta * loss_j * (li - p.gamma * lj) / li;
        out[2 + i] = p.production(state.x[i])? + p.gamma * p.delta * state.x[j] * loss_i
            - ctrl[i].c
            - ctrl[i].a
            - p.delta * state.x[i] * loss_j;
    }
    Ok(out)
}

/// `d a*_i / dt` at `state` by central differences along the canonical flow.
pub fn appropriation_drift(state: &GameState, p: &ModelParams) -> Result<[f64; 2]> {
    let rate = canonical_rhs(state, p)?.to_vector();
    let v = state.to_vector();
    let h = 1e-6;
    let at = |s: f64| -> Result<[f64; 2]> {
        let y: [f64; 4] = std::array::from_fn(|k| v[k] + s * rate[k]);
        let c = mne_controls(&GameState::from_vector(state.t + s, &y), p)?;
        Ok([c[0].a, c[1].a])
    };
    let (fwd, back) = (at(h)?, at(-h)?);
    Ok([(fwd[0] - back[0]) / (2.0 * h), (fwd[1] - back[1]) / (2.0 * h)])
}

/// Checks the trivial stationary state: with no wealth and no activity both
/// stocks stay at zero.
pub fn validate_trivial(p: &ModelParams) -> Result<SteadyState> {
    let r = [
        state_rate(0.0, 0.0, 0.0, 0.0, 0.0, p)?,
        state_rate(0.0, 0.0, 0.0, 0.0, 0.0, p)?,
    ];
    Ok(SteadyState {
        kind: SteadyKind::Trivial,
        x: [0.0; 2],
        lam: None,
        controls: [ControlPair::default(); 2],
        residual: r.to_vec(),
        residual_norm: r[0].abs().max(r[1].abs()),
        appropriation_drift: [0.0; 2],
        iterations: 0,
    })
}

fn norm(v: &[f64; 4]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_finite() { m.max(x.abs()) } else { f64::INFINITY })
}

/// Damped Newton iteration on the stationarity conditions, in logarithms of
/// the stocks and prices so iterates stay positive.
pub fn steady_state(guess: &GameState, p: &ModelParams, options: &SteadyOptions) -> Result<SteadyState> {
    p.validate()?;
    let v0 = guess.to_vector();
    if v0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Argument(format!("steady-state guess must be positive, got {v0:?}")));
    }
    if guess.x.iter().all(|x| *x <= options.trivial_radius) {
        return validate_trivial(p);
    }
    let f = |u: &[f64; 4]| stationarity_residuals(&GameState::from_vector(0.0, &u.map(f64::exp)), p);
    let mut u = v0.map(f64::ln);
    let mut r = f(&u)?;
    let mut n = norm(&r);
    let mut iterations = 0;
    while n > options.tol {
        if iterations == options.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                best_residual: n,
                best_point: u.map(f64::exp).to_vec(),
            });
        }
        iterations += 1;
        let mut jac = [[0.0; 4]; 4];
        for k in 0..4 {
            let h = 1e-7 * (1.0 + u[k].abs());
            let (mut up, mut um) = (u, u);
            up[k] += h;
            um[k] -= h;
            let (rp, rm) = (f(&up)?, f(&um)?);
            for i in 0..4 {
                jac[i][k] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let Some(mut du) = solve_linear(&jac, &r.map(|v| -v)) else {
            return Err(Error::SingularJacobian {
                at: u.map(f64::exp).to_vec(),
            });
        };
        let len = du.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if len > 2.0 {
            du = du.map(|v| v * 2.0 / len);
        }
        let mut s = 1.0;
        let mut next = None;
        while s > 1e-10 {
            let mut un = u;
            for k in 0..4 {
                un[k] += s * du[k];
            }
            if let Ok(rn) = f(&un) {
                if norm(&rn) < n {
                    next = Some((un, rn));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((un, rn)) = next else {
            return Err(Error::NoConvergence {
                iterations,
                best_residual: n,
                best_point: u.map(f64::exp).to_vec(),
            });
        };
        u = un;
        r = rn;
        n = norm(&r);
    }
    let st = GameState::from_vector(0.0, &u.map(f64::exp));
    Ok(SteadyState {
        kind: SteadyKind::Interior,
        x: st.x,
        lam: Some(st.lam),
        controls: mne_controls(&st, p)?,
        residual: r.to_vec(),
        residual_norm: n,
        appropriation_drift: appropriation_drift(&st, p)?,
        iterations,
    })
}
