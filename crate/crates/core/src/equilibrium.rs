//! Closed-form Markovian Nash controls, the aggression threshold, the full
//! Hamiltonian and a brute-force best-response oracle.

use serde::{Deserialize, Serialize};

use crate::dynamics::state_rate;
use crate::error::{domain, Error, Result};
use crate::model::{GameState, ModelParams, Player};

/// Instantaneous controls of one player.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlPair {
    /// Consumption flow.
    pub c: f64,
    /// Appropriation outlay.
    pub a: f64,
}

impl ControlPair {
    pub fn new(c: f64, a: f64) -> Self {
        ControlPair { c, a }
    }
}

/// Distance of a player from the onset of appropriation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggressionMargin {
    /// `(γλ_i - λ_j)/λ_i - 1/(θ δ x_j)`.
    pub margin: f64,
    /// `margin > 0`.
    pub active: bool,
}

/// `θ δ x_j (γλ_i - λ_j)/λ_i`, the square of `1 + θ a*` at an interior optimum.
fn root_argument(x_j: f64, lam_i: f64, lam_j: f64, p: &ModelParams) -> f64 {
    p.theta * p.delta * x_j * ((p.gamma * lam_i - lam_j) / lam_i)
}

pub fn optimal_consumption(lam_i: f64, p: &ModelParams) -> Result<f64> {
    p.inverse_marginal_utility(lam_i)
}

pub fn aggression_margin(x_j: f64, lam_i: f64, lam_j: f64, p: &ModelParams) -> Result<AggressionMargin> {
    if !(x_j > 0.0) {
        return Err(domain("opponent wealth", x_j));
    }
    if !(lam_i > 0.0) {
        return Err(domain("own shadow price", lam_i));
    }
    let arg = root_argument(x_j, lam_i, lam_j, p);
    // Written as (arg - 1)/(θδx_j) so that its sign is exactly the sign of arg - 1,
    // which is what decides whether the appropriation rule is interior.
    let margin = (arg - 1.0) / (p.theta * p.delta * x_j);
    Ok(AggressionMargin {
        margin,
        active: arg > 1.0,
    })
}

/// Clamped appropriation rule `a* = (sqrt(θ δ x_j (γλ_i - λ_j)/λ_i) - 1)/θ`, zero when the
/// threshold is not met.
pub fn optimal_appropriation(x_j: f64, lam_i: f64, lam_j: f64, p: &ModelParams) -> Result<f64> {
    if !(lam_i > 0.0) {
        return Err(domain("own shadow price", lam_i));
    }
    if !(x_j >= 0.0) {
        return Err(domain("opponent wealth", x_j));
    }
    if x_j == 0.0 {
        return Ok(0.0);
    }
    let arg = root_argument(x_j, lam_i, lam_j, p);
    if arg > 1.0 {
        // sqrt(arg) - 1 rearranged to avoid cancellation near the threshold.
        Ok((arg - 1.0) / (p.theta * (arg.sqrt() + 1.0)))
    } else {
        Ok(0.0)
    }
}

/// Equilibrium controls of both players at `state`.
pub fn mne_controls(state: &GameState, p: &ModelParams) -> Result<[ControlPair; 2]> {
    let mut out = [ControlPair::default(); 2];
    for i in Player::BOTH {
        let j = i.other();
        out[i.index()] = ControlPair {
            c: optimal_consumption(state.price(i), p)?,
            a: optimal_appropriation(state.wealth(j), state.price(i), state.price(j), p)?,
        };
    }
    Ok(out)
}

/// Player `player`'s full Hamiltonian, with the cross price of the opponent's wealth
/// identified with the opponent's own price.
pub fn hamiltonian(
    state: &GameState,
    own: ControlPair,
    other: ControlPair,
    player: Player,
    p: &ModelParams,
) -> Result<f64> {
    let i = player;
    let j = player.other();
    let (xi, xj) = (state.wealth(i), state.wealth(j));
    let own_motion = state_rate(xi, xj, own.c, own.a, other.a, p)?;
    let cross_motion = state_rate(xj, xi, other.c, other.a, own.a, p)?;
    Ok(p.felicity(own.c)? + state.price(i) * own_motion + state.price(j) * cross_motion)
}

/// Search grid for [`brute_force_best_response`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub c_min: f64,
    pub c_max: f64,
    pub c_points: usize,
    /// Space consumption nodes geometrically instead of uniformly.
    pub c_log: bool,
    pub a_max: f64,
    pub a_points: usize,
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        let c_ok = self.c_points >= 2 && self.c_min > 0.0 && self.c_max > self.c_min;
        let a_ok = self.a_points >= 2 && self.a_max > 0.0;
        if c_ok && a_ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("empty or degenerate best-response grid: {self:?}")))
        }
    }

    fn c_nodes(&self) -> Vec<f64> {
        let n = self.c_points;
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                if self.c_log {
                    self.c_min * (self.c_max / self.c_min).powf(s)
                } else {
                    self.c_min + s * (self.c_max - self.c_min)
                }
            })
            .collect()
    }

    fn a_nodes(&self) -> Vec<f64> {
        let n = self.a_points;
        (0..n).map(|k| self.a_max * k as f64 / (n - 1) as f64).collect()
    }
}

/// Maximizes a unimodal `f` on `[lo, hi]` until the bracket is narrower than `tol`.
pub(crate) fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

fn argmax(values: &[f64]) -> usize {
    // First maximum wins, so the result does not depend on evaluation order.
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

fn refine<F>(f: F, nodes: &[f64], k: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let lo = nodes[k.saturating_sub(1)];
    let hi = nodes[(k + 1).min(nodes.len() - 1)];
    let tol = 1e-10 * nodes[k].abs().max(1.0);
    let (x, fx) = golden_section_max(&f, lo, hi, tol)?;
    // Keep an end node when it beats the interior refinement (corner optimum).
    let f_node = f(nodes[k])?;
    if f_node >= fx {
        Ok((nodes[k], f_node))
    } else {
        Ok((x, fx))
    }
}

/// Grid maximization of the Hamiltonian over `(c, a)` followed by golden-section
/// refinement of each coordinate. Verification oracle for the closed-form controls.
///
/// The Hamiltonian is additively separable in own consumption and own outlay, so
/// the grid is searched one coordinate at a time with the other held at its
/// current best node; two sweeps reach the joint grid optimum.
pub fn brute_force_best_response(
    state: &GameState,
    other: ControlPair,
    player: Player,
    p: &ModelParams,
    grid: &GridSpec,
) -> Result<ControlPair> {
    grid.validate()?;
    let c_nodes = grid.c_nodes();
    let a_nodes = grid.a_nodes();
    let h = |c: f64, a: f64| hamiltonian(state, ControlPair { c, a }, other, player, p);

    let mut a_best = 0.0;
    let mut c_idx = 0;
    let mut a_idx = 0;
    for _ in 0..2 {
        let hc = c_nodes.iter().map(|&c| h(c, a_best)).collect::<Result<Vec<_>>>()?;
        c_idx = argmax(&hc);
        let c_best = c_nodes[c_idx];
        let ha = a_nodes.iter().map(|&a| h(c_best, a)).collect::<Result<Vec<_>>>()?;
        a_idx = argmax(&ha);
        a_best = a_nodes[a_idx];
    }
    let (a, _) = refine(|a| h(c_nodes[c_idx], a), &a_nodes, a_idx)?;
    let (c, _) = refine(|c| h(c, a), &c_nodes, c_idx)?;
    Ok(ControlPair { c, a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> ModelParams {
        ModelParams {
            theta: 2.0,
            delta: 0.5,
            gamma: 0.8,
            ..ModelParams::default()
        }
    }

    #[test]
    fn consumption_rule() {
        let p2 = ModelParams { eta: 2.0, ..p() };
        assert_eq!(optimal_consumption(1.0, &p2).unwrap(), 1.0);
        assert_relative_eq!(optimal_consumption(4.0, &p2).unwrap(), 0.5, epsilon = 1e-15);
        assert!(optimal_consumption(0.0, &p2).is_err());
    }

    #[test]
    fn consumption_rule_matches_grid_argmax() {
        let p2 = ModelParams { eta: 2.0, ..p() };
        let lam = 4.0;
        let mut best = (0.0, f64::NEG_INFINITY);
        let mut c = 1e-4;
        while c < 3.0 {
            let v = p2.felicity(c).unwrap() - lam * c;
            if v > best.1 {
                best = (c, v);
            }
            c += 1e-4;
        }
        assert!((best.0 - optimal_consumption(lam, &p2).unwrap()).abs() <= 1e-4);
    }

    #[test]
    fn margin_reference_values() {
        let m = aggression_margin(10.0, 1.0, 0.4, &p()).unwrap();
        assert_relative_eq!(m.margin, 0.3, epsilon = 1e-15);
        assert!(m.active);

        for gamma in [0.5, 0.25, 0.75] {
            let q = ModelParams { gamma, ..p() };
            let m = aggression_margin(1.0, 1.0, gamma - 1.0, &q).unwrap();
            assert_eq!(m.margin, 0.0);
            assert!(!m.active);
            assert_eq!(optimal_appropriation(1.0, 1.0, gamma - 1.0, &q).unwrap(), 0.0);
        }

        let m = aggression_margin(50.0, 1.0, 0.8, &p()).unwrap();
        assert!(m.margin < 0.0 && !m.active);
        assert!(aggression_margin(0.0, 1.0, 0.5, &p()).is_err());
        assert!(aggression_margin(1.0, 0.0, 0.5, &p()).is_err());
    }

    #[test]
    fn appropriation_reference_values() {
        assert_relative_eq!(optimal_appropriation(10.0, 1.0, 0.4, &p()).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(optimal_appropriation(10.0, 0.7, 0.7, &p()).unwrap(), 0.0);
        assert_eq!(optimal_appropriation(0.0, 1.0, 0.1, &p()).unwrap(), 0.0);
        assert!(optimal_appropriation(1.0, 0.0, 0.1, &p()).is_err());
    }

    #[test]
    fn appropriation_matches_fine_grid_argmax() {
        // H_i restricted to a on [0, 5] with step 1e-5.
        let st = GameState::new(0.0, 10.0, 10.0, 0.4, 1.0);
        let other = ControlPair::new(1.0, 0.0);
        let own_c = 1.0;
        let q = p();
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..=500_000 {
            let a = k as f64 * 1e-5;
            let v = hamiltonian(&st, ControlPair::new(own_c, a), other, Player::Two, &q).unwrap();
            if v > best.1 {
                best = (a, v);
            }
        }
        assert!((best.0 - 0.5).abs() <= 1e-5, "{best:?}");
    }

    #[test]
    fn hamiltonian_without_appropriation() {
        let q = p();
        let st = GameState::new(0.0, 3.0, 5.0, 0.7, 1.3);
        let yi = q.production(3.0).unwrap();
        let other = ControlPair::new(0.4, 0.0);
        let h = hamiltonian(&st, ControlPair::new(yi, 0.0), other, Player::One, &q).unwrap();
        let expect = q.felicity(yi).unwrap() + 1.3 * (q.production(5.0).unwrap() - 0.4);
        assert_relative_eq!(h, expect, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_is_stationary_at_closed_form_controls() {
        let q = p();
        let st = GameState::new(0.0, 4.0, 10.0, 1.0, 0.4);
        let ctrl = mne_controls(&st, &q).unwrap();
        let (own, other) = (ctrl[0], ctrl[1]);
        assert!(own.a > 0.0);
        let h = 1e-6;
        let hc = |c| hamiltonian(&st, ControlPair::new(c, own.a), other, Player::One, &q).unwrap();
        let ha = |a| hamiltonian(&st, ControlPair::new(own.c, a), other, Player::One, &q).unwrap();
        assert!(((hc(own.c + h) - hc(own.c - h)) / (2.0 * h)).abs() < 1e-8);
        assert!(((ha(own.a + h) - ha(own.a - h)) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn brute_force_symmetric_and_inactive_corner() {
        let q = p();
        let grid = GridSpec {
            c_min: 1e-3,
            c_max: 1e2,
            c_points: 400,
            c_log: true,
            a_max: 5.0,
            a_points: 400,
        };
        let st = GameState::new(0.0, 6.0, 6.0, 0.8, 0.8);
        let br = brute_force_best_response(&st, ControlPair::new(1.0, 0.0), Player::One, &q, &grid).unwrap();
        assert_eq!(br.a, 0.0);
        assert_relative_eq!(br.c, optimal_consumption(0.8, &q).unwrap(), max_relative = 1e-6);

        let bad = GridSpec { a_points: 0, ..grid };
        assert!(brute_force_best_response(&st, ControlPair::new(1.0, 0.0), Player::One, &q, &bad).is_err());
    }

    #[test]
    fn first_order_condition_in_retention_form() {
        let q = p();
        let (xj, li, lj) = (10.0, 1.0, 0.4);
        let a = optimal_appropriation(xj, li, lj, &q).unwrap();
        let r = q.retention_rate(a).unwrap();
        assert_relative_eq!(a / (r * r - r), q.delta * xj * (lj - q.gamma * li) / li, max_relative = 1e-8);
    }
}
