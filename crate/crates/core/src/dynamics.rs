//! Canonical system of the game: two equations of motion and two Euler
//! equations with the equilibrium controls substituted in, plus the
//! aggregate accounting and growth-rate diagnostics.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{aggression_margin, mne_controls, AggressionMargin, ControlPair};
use crate::error::{CollapseKind, Error, Result};
use crate::model::{GameState, ModelParams, Player};

/// Time derivatives of the canonical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates {
    pub dx: [f64; 2],
    pub dlam: [f64; 2],
}

impl StateRates {
    pub fn to_vector(&self) -> [f64; 4] {
        [self.dx[0], self.dx[1], self.dlam[0], self.dlam[1]]
    }
}

/// Economy-wide flows at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AccountingBreakdown {
    pub total_production: f64,
    pub total_consumption: f64,
    pub total_outlays: f64,
    pub deadweight_loss: f64,
}

/// Rate of change of player i's wealth given both players' controls.
pub fn state_rate(x_i: f64, x_j: f64, c_i: f64, a_i: f64, a_j: f64, p: &ModelParams) -> Result<f64> {
    let lost = p.delta * x_i * p.loss_rate(a_j)?;
    let grabbed = p.gamma * p.delta * x_j * p.loss_rate(a_i)?;
    Ok(p.production(x_i)? - c_i - a_i - lost + grabbed)
}

/// Same flow written with the retention rate: exposed wealth leaves and the
/// retained part comes back.
pub fn state_rate_retention_form(
    x_i: f64,
    x_j: f64,
    c_i: f64,
    a_i: f64,
    a_j: f64,
    p: &ModelParams,
) -> Result<f64> {
    let exposed = p.delta * x_i;
    let retained = exposed * p.retention_rate(a_j)?;
    let grabbed = p.gamma * p.delta * x_j * (p.theta * a_i / (1.0 + p.theta * a_i));
    Ok(p.production(x_i)? - c_i - a_i - exposed + retained + grabbed)
}

/// Euler equation: `λ̇_i = λ_i [δ(1-p_j) - y'(x_i)] - λ_j δ γ (1-p_j)`, where
/// `1 - p_j` is the share of i's exposed wealth taken by j's outlay `a_j`.
pub fn costate_rate(x_i: f64, lam_i: f64, lam_j: f64, a_j: f64, player: Player, p: &ModelParams) -> Result<f64> {
    if !(x_i > 0.0) {
        return Err(Error::Collapse {
            player,
            kind: CollapseKind::Wealth,
        });
    }
    if !(lam_i > 0.0) {
        return Err(Error::Collapse {
            player,
            kind: CollapseKind::Price,
        });
    }
    let loss = p.loss_rate(a_j)?;
    Ok(lam_i * (p.delta * loss - p.marginal_product(x_i)?) - lam_j * p.delta * p.gamma * loss)
}

/// Right-hand side of the canonical system at an admissible state.
pub fn canonical_rhs(state: &GameState, p: &ModelParams) -> Result<StateRates> {
    state.check_admissible()?;
    let ctrl = mne_controls(state, p)?;
    rates_with_controls(state, &ctrl, p)
}

pub(crate) fn rates_with_controls(state: &GameState, ctrl: &[ControlPair; 2], p: &ModelParams) -> Result<StateRates> {
    let mut dx = [0.0; 2];
    let mut dlam = [0.0; 2];
    for i in Player::BOTH {
        let j = i.other();
        let (ci, cj) = (ctrl[i.index()], ctrl[j.index()]);
        dx[i.index()] = state_rate(state.wealth(i), state.wealth(j), ci.c, ci.a, cj.a, p)?;
        dlam[i.index()] = costate_rate(state.wealth(i), state.price(i), state.price(j), cj.a, i, p)?;
    }
    Ok(StateRates { dx, dlam })
}

/// Aggression margins of both players at `state`.
pub fn margins(state: &GameState, p: &ModelParams) -> Result<[AggressionMargin; 2]> {
    Ok([
        aggression_margin(state.x[1], state.lam[0], state.lam[1], p)?,
        aggression_margin(state.x[0], state.lam[1], state.lam[0], p)?,
    ])
}

pub fn accounting(state: &GameState, ctrl: &[ControlPair; 2], p: &ModelParams) -> Result<AccountingBreakdown> {
    let (x1, x2) = (state.x[0], state.x[1]);
    let deadweight =
        (1.0 - p.gamma) * p.delta * (x1 * p.loss_rate(ctrl[1].a)? + x2 * p.loss_rate(ctrl[0].a)?);
    Ok(AccountingBreakdown {
        total_production: p.production(x1)? + p.production(x2)?,
        total_consumption: ctrl[0].c + ctrl[1].c,
        total_outlays: ctrl[0].a + ctrl[1].a,
        deadweight_loss: deadweight,
    })
}

/// Growth rate of each player's own shadow price, `λ̇_i / λ_i`.
pub fn price_growth(state: &GameState, p: &ModelParams) -> Result<[f64; 2]> {
    let r = canonical_rhs(state, p)?;
    Ok([r.dlam[0] / state.lam[0], r.dlam[1] / state.lam[1]])
}

/// Growth rate of equilibrium consumption, `ĉ_i = -σ(c_i) λ̂_i`, i.e.
/// `σ(c_i) { y'(x_i) - δ(1-p_j)(λ_i - γλ_j)/λ_i }`.
pub fn consumption_growth(state: &GameState, p: &ModelParams) -> Result<[f64; 2]> {
    state.check_admissible()?;
    let ctrl = mne_controls(state, p)?;
    let mut out = [0.0; 2];
    for i in Player::BOTH {
        let j = i.other();
        let (li, lj) = (state.price(i), state.price(j));
        let sigma = p.elasticity_of_substitution(ctrl[i.index()].c)?;
        let exposure = p.delta * p.loss_rate(ctrl[j.index()].a)?;
        out[i.index()] = sigma * (p.marginal_product(state.wealth(i))? - exposure * (li - p.gamma * lj) / li);
    }
    Ok(out)
}

/// Recovers `(λ_i - γλ_j)/λ_i` from consumption growth, marginal product and the
/// opponent's appropriation. `None` when the opponent does not appropriate.
pub fn price_ratio_from_growth(state: &GameState, growth: [f64; 2], p: &ModelParams) -> Result<[Option<f64>; 2]> {
    let ctrl = mne_controls(state, p)?;
    let mut out = [None; 2];
    for i in Player::BOTH {
        let j = i.other();
        let exposure = p.delta * p.loss_rate(ctrl[j.index()].a)?;
        if exposure > 0.0 {
            let sigma = p.elasticity_of_substitution(ctrl[i.index()].c)?;
            let mp = p.marginal_product(state.wealth(i))?;
            out[i.index()] = Some((mp - growth[i.index()] / sigma) / exposure);
        }
    }
    Ok(out)
}

/// Residual of the stationarity condition for appropriation,
/// `λ̂_i - λ̂_j + x̂_j (γλ_i - λ_j)/λ_j`, per player. Where the appropriation
/// rule is interior this is proportional to `d a*_i / dt`.
pub fn appropriation_stationarity_residual(state: &GameState, p: &ModelParams) -> Result<[f64; 2]> {
    let r = canonical_rhs(state, p)?;
    let mut out = [0.0; 2];
    for i in Player::BOTH {
        let j = i.other();
        let (ii, jj) = (i.index(), j.index());
        let growth_i = r.dlam[ii] / state.lam[ii];
        let growth_j = r.dlam[jj] / state.lam[jj];
        let wealth_growth_j = r.dx[jj] / state.x[jj];
        out[ii] = growth_i - growth_j + wealth_growth_j * (p.gamma * state.lam[ii] - state.lam[jj]) / state.lam[jj];
    }
    Ok(out)
}
