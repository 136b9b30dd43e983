//! Structural primitives of the game: preferences, technology and the
//! appropriation (retention) technology, with their derivatives.
//!
//! Felicity is CRRA, `u(c) = (c^(1-η) - 1)/(1-η)` (logarithmic at `η = 1`),
//! and production is `y(x) = A x^α - μ x`. All evaluations are pure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// One of the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

fn default_mu() -> f64 {
    0.0
}

/// Structural constants of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Share of each wealth stock exposed to appropriation.
    pub delta: f64,
    /// Efficacy of appropriation outlays.
    pub theta: f64,
    /// Salvage ratio: fraction of the victim's loss the aggressor keeps.
    pub gamma: f64,
    /// Terminal time of the game.
    #[serde(rename = "horizon_T")]
    pub horizon_t: f64,
    /// CRRA curvature of felicity.
    pub eta: f64,
    #[serde(rename = "tech_A")]
    pub tech_a: f64,
    pub tech_alpha: f64,
    /// Linear drag on production; a positive value creates a golden-rule stock.
    #[serde(default = "default_mu")]
    pub tech_mu: f64,
    /// Weight of player 1 in the cooperative aggregation.
    pub pi_weight: f64,
    /// Admits linear technology (`α = 1`) and `A = 0`, used by closed-form test oracles.
    #[serde(default)]
    pub allow_nonconcave_tech: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            delta: 0.5,
            theta: 3.0,
            gamma: 0.9,
            horizon_t: 5.0,
            eta: 2.0,
            tech_a: 1.0,
            tech_alpha: 0.5,
            tech_mu: 0.0,
            pi_weight: 0.5,
            allow_nonconcave_tech: false,
        }
    }
}

fn check(field: &'static str, value: f64, ok: bool, bound: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam { field, value, bound })
    }
}

impl ModelParams {
    /// Checks every field invariant, reporting the first violated one.
    pub fn validate(&self) -> Result<()> {
        check("delta", self.delta, self.delta > 0.0 && self.delta < 1.0, "0 < delta < 1")?;
        check("theta", self.theta, self.theta > 1.0, "theta > 1")?;
        check("gamma", self.gamma, self.gamma > 0.0 && self.gamma < 1.0, "0 < gamma < 1")?;
        check("horizon_T", self.horizon_t, self.horizon_t > 0.0, "horizon_T > 0")?;
        check("eta", self.eta, self.eta > 0.0, "eta > 0")?;
        if self.allow_nonconcave_tech {
            check("tech_A", self.tech_a, self.tech_a >= 0.0, "tech_A >= 0")?;
            check(
                "tech_alpha",
                self.tech_alpha,
                self.tech_alpha > 0.0 && self.tech_alpha <= 1.0,
                "0 < tech_alpha <= 1",
            )?;
        } else {
            check("tech_A", self.tech_a, self.tech_a > 0.0, "tech_A > 0")?;
            check(
                "tech_alpha",
                self.tech_alpha,
                self.tech_alpha > 0.0 && self.tech_alpha < 1.0,
                "0 < tech_alpha < 1 (tech_alpha = 1 needs allow_nonconcave_tech)",
            )?;
        }
        check("tech_mu", self.tech_mu, self.tech_mu >= 0.0, "tech_mu >= 0")?;
        check(
            "pi_weight",
            self.pi_weight,
            self.pi_weight > 0.0 && self.pi_weight < 1.0,
            "0 < pi_weight < 1",
        )?;
        Ok(())
    }

    pub fn felicity(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(domain("consumption", c));
        }
        if self.eta == 1.0 {
            Ok(c.ln())
        } else {
            let k = 1.0 - self.eta;
            Ok((c.powf(k) - 1.0) / k)
        }
    }

    /// `u'(c) = c^(-η)`.
    pub fn marginal_utility(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(domain("consumption", c));
        }
        Ok(c.powf(-self.eta))
    }

    /// `u''(c) = -η c^(-η-1)`.
    pub fn felicity_curvature(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(domain("consumption", c));
        }
        Ok(-self.eta * c.powf(-self.eta - 1.0))
    }

    /// Consumption at which marginal utility equals `lam`.
    pub fn inverse_marginal_utility(&self, lam: f64) -> Result<f64> {
        if !(lam > 0.0) {
            return Err(domain("shadow price", lam));
        }
        Ok(lam.powf(-1.0 / self.eta))
    }

    /// Instantaneous elasticity of substitution `-u'(c) / (c u''(c))`.
    pub fn elasticity_of_substitution(&self, c: f64) -> Result<f64> {
        let up = self.marginal_utility(c)?;
        let upp = self.felicity_curvature(c)?;
        Ok(-up / (c * upp))
    }

    /// Elasticity of substitution between consumption `c_t` at one date and
    /// `c_s` at another: `-(m / r) dr/dm` with `r = c_s / c_t` and
    /// `m = u'(c_s) / u'(c_t)`, the slope taken by central differences in `c_s`.
    pub fn discrete_elasticity(&self, c_t: f64, c_s: f64) -> Result<f64> {
        let ut = self.marginal_utility(c_t)?;
        let ratios = |c: f64| -> Result<(f64, f64)> { Ok((c / c_t, self.marginal_utility(c)? / ut)) };
        let h = 1e-5 * c_s;
        let (r, m) = ratios(c_s)?;
        let (r_hi, m_hi) = ratios(c_s + h)?;
        let (r_lo, m_lo) = ratios(c_s - h)?;
        Ok(-(m / r) * (r_hi - r_lo) / (m_hi - m_lo))
    }

    pub fn production(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("wealth", x));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(self.tech_a * x.powf(self.tech_alpha) - self.tech_mu * x)
    }

    /// `y'(x) = A α x^(α-1) - μ`. Rejects `x <= 0` when the slope is singular there.
    pub fn marginal_product(&self, x: f64) -> Result<f64> {
        if self.tech_alpha == 1.0 {
            if !(x >= 0.0) {
                return Err(domain("wealth", x));
            }
            return Ok(self.tech_a - self.tech_mu);
        }
        if !(x > 0.0) {
            return Err(domain("wealth", x));
        }
        Ok(self.tech_a * self.tech_alpha * x.powf(self.tech_alpha - 1.0) - self.tech_mu)
    }

    pub fn production_curvature(&self, x: f64) -> Result<f64> {
        if self.tech_alpha == 1.0 {
            return Ok(0.0);
        }
        if !(x > 0.0) {
            return Err(domain("wealth", x));
        }
        let a = self.tech_alpha;
        Ok(self.tech_a * a * (a - 1.0) * x.powf(a - 2.0))
    }

    /// Wealth level with zero marginal product, when the drag term makes one exist.
    pub fn golden_rule_stock(&self) -> Option<f64> {
        if self.tech_mu > 0.0 && self.tech_alpha < 1.0 && self.tech_a > 0.0 {
            Some((self.tech_a * self.tech_alpha / self.tech_mu).powf(1.0 / (1.0 - self.tech_alpha)))
        } else {
            None
        }
    }

    /// Fraction of a player's exposed wealth retained when the opponent spends `a`.
    pub fn retention_rate(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(domain("appropriation outlay", a));
        }
        Ok(1.0 / (1.0 + self.theta * a))
    }

    /// `dp/da = -θ / (1 + θa)^2`.
    pub fn retention_rate_slope(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(domain("appropriation outlay", a));
        }
        let d = 1.0 + self.theta * a;
        Ok(-self.theta / (d * d))
    }

    /// Loss rate `1 - p = θa / (1 + θa)`, computed without cancellation.
    pub fn loss_rate(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(domain("appropriation outlay", a));
        }
        let ta = self.theta * a;
        Ok(ta / (1.0 + ta))
    }
}

/// Time plus wealth stocks and own shadow prices of both players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub t: f64,
    pub x: [f64; 2],
    pub lam: [f64; 2],
}

impl GameState {
    pub fn new(t: f64, x1: f64, x2: f64, lam1: f64, lam2: f64) -> Self {
        GameState {
            t,
            x: [x1, x2],
            lam: [lam1, lam2],
        }
    }

    pub fn wealth(&self, p: Player) -> f64 {
        self.x[p.index()]
    }

    pub fn price(&self, p: Player) -> f64 {
        self.lam[p.index()]
    }

    /// Packs the state into the integrator layout `[x1, x2, lam1, lam2]`.
    pub fn to_vector(&self) -> [f64; 4] {
        [self.x[0], self.x[1], self.lam[0], self.lam[1]]
    }

    pub fn from_vector(t: f64, y: &[f64; 4]) -> Self {
        GameState {
            t,
            x: [y[0], y[1]],
            lam: [y[2], y[3]],
        }
    }

    /// Strictly positive stocks and prices.
    pub fn check_admissible(&self) -> Result<()> {
        for p in Player::BOTH {
            if !(self.wealth(p) > 0.0) || !self.wealth(p).is_finite() {
                return Err(Error::Collapse {
                    player: p,
                    kind: crate::error::CollapseKind::Wealth,
                });
            }
            if !(self.price(p) > 0.0) || !self.price(p).is_finite() {
                return Err(Error::Collapse {
                    player: p,
                    kind: crate::error::CollapseKind::Price,
                });
            }
        }
        Ok(())
    }
}
