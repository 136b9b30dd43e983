//! Cooperative baseline: both players agree to forgo appropriation and pool
//! their wealth, which leaves a one-sector Ramsey problem on aggregate wealth.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ModelParams;
use crate::solvers::ode::{self, DenseOutput, EventAction, OdeStats, Termination};
use crate::solvers::{broyden, BroydenOptions, SolverOptions, TerminalMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoopState {
    pub t: f64,
    /// Aggregate wealth.
    pub x: f64,
    /// Shadow price of aggregate wealth.
    pub lam: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopRates {
    pub dx: f64,
    pub dlam: f64,
}

/// Ramsey dynamics on aggregate wealth: `dx = y(x) - c` with `u'(c) = lam`,
/// and `dlam = -lam y'(x)`.
pub fn coop_rhs(s: &CoopState, p: &ModelParams) -> Result<CoopRates> {
    if !(s.x > 0.0) || !s.x.is_finite() {
        return Err(domain("aggregate wealth", s.x));
    }
    if !(s.lam > 0.0) || !s.lam.is_finite() {
        return Err(domain("aggregate shadow price", s.lam));
    }
    let c = p.inverse_marginal_utility(s.lam)?;
    Ok(CoopRates {
        dx: p.production(s.x)? - c,
        dlam: -s.lam * p.marginal_product(s.x)?,
    })
}

/// Growth rate of consumption along the cooperative path, `sigma(c) y'(x)`.
pub fn coop_consumption_growth(x: f64, c: f64, p: &ModelParams) -> Result<f64> {
    Ok(p.elasticity_of_substitution(c)? * p.marginal_product(x)?)
}

/// Technology of the pooled economy: the two stocks worked side by side,
/// `Y(X) = 2 y(X/2)`, which is again of the form `A' X^alpha - mu X`.
pub fn pooled_params(p: &ModelParams) -> ModelParams {
    ModelParams {
        tech_a: p.tech_a * 2f64.powf(1.0 - p.tech_alpha),
        ..*p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn of(v: f64, scale: f64) -> Sign {
        if v.abs() <= 1e-12 * scale.max(1.0) {
            Sign::Zero
        } else if v > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

/// Position of the stock relative to the golden-rule stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoldenRulePosition {
    Below,
    At,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseClass {
    pub consumption_growth: Sign,
    pub wealth_growth: Sign,
    /// `None` when the marginal product never vanishes.
    pub golden_rule_stock: Option<f64>,
    pub position: Option<GoldenRulePosition>,
}

/// Signs of consumption and wealth growth at `(x, c)` in the cooperative
/// phase plane.
pub fn phase_classify(x: f64, c: f64, p: &ModelParams) -> Result<PhaseClass> {
    if !(x > 0.0) {
        return Err(domain("aggregate wealth", x));
    }
    if !(c > 0.0) {
        return Err(domain("consumption", c));
    }
    let y = p.production(x)?;
    let xbar = p.golden_rule_stock();
    let position = xbar.map(|xb| {
        if (x - xb).abs() <= 1e-12 * xb {
            GoldenRulePosition::At
        } else if x < xb {
            GoldenRulePosition::Below
        } else {
            GoldenRulePosition::Above
        }
    });
    let consumption_growth = match position {
        Some(GoldenRulePosition::At) => Sign::Zero,
        Some(GoldenRulePosition::Below) => Sign::Positive,
        Some(GoldenRulePosition::Above) => Sign::Negative,
        None => Sign::of(p.marginal_product(x)?, p.tech_a.abs() + p.tech_mu),
    };
    Ok(PhaseClass {
        consumption_growth,
        wealth_growth: Sign::of(y - c, y.abs().max(c)),
        golden_rule_stock: xbar,
        position,
    })
}

/// Integrated cooperative path on aggregate wealth.
#[derive(Debug, Clone, PartialEq)]
pub struct CoopTrajectory {
    pub params: ModelParams,
    pub samples: Vec<CoopState>,
    pub dense: DenseOutput<2>,
    pub stats: OdeStats,
    /// Time at which the aggregate stock ran out, if before the horizon.
    pub collapse_time: Option<f64>,
}

impl CoopTrajectory {
    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn final_state(&self) -> CoopState {
        *self.samples.last().expect("nonempty trajectory")
    }

    pub fn state_at(&self, t: f64) -> Option<CoopState> {
        if self.dense.segments.is_empty() {
            let s = self.samples[0];
            return (t == s.t).then_some(s);
        }
        self.dense.eval(t).map(|y| CoopState { t, x: y[0], lam: y[1] })
    }

    pub fn consumption(&self, s: &CoopState) -> Result<f64> {
        self.params.inverse_marginal_utility(s.lam)
    }
}

/// Integrates the cooperative system from `initial` to the horizon.
pub fn coop_integrate(initial: &CoopState, p: &ModelParams, options: &ode::OdeOptions) -> Result<CoopTrajectory> {
    coop_rhs(initial, p).map_err(|e| Error::Argument(format!("inadmissible cooperative state: {e}")))?;
    let rhs = |t: f64, y: &[f64; 2]| coop_rhs(&CoopState { t, x: y[0], lam: y[1] }, p).map(|r| [r.dx, r.dlam]);
    let sol = ode::integrate(rhs, |_, _| [], [] as [EventAction; 0], initial.t, [initial.x, initial.lam], p.horizon_t, options)?;
    let collapse_time = match sol.termination {
        Termination::Completed | Termination::Stopped(_) => None,
        Termination::Collapsed { error: Error::StepUnderflow { .. } } if sol.last().1[0] > 1e-6 * initial.x => {
            return Err(match sol.termination {
                Termination::Collapsed { error } => error,
                _ => unreachable!(),
            })
        }
        Termination::Collapsed { .. } => Some(sol.last().0),
    };
    Ok(CoopTrajectory {
        params: *p,
        samples: sol.t.iter().zip(&sol.y).map(|(&t, y)| CoopState { t, x: y[0], lam: y[1] }).collect(),
        dense: sol.dense,
        stats: sol.stats,
        collapse_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoopShooting {
    pub lam0: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoopSolution {
    pub shooting: CoopShooting,
    pub trajectory: CoopTrajectory,
}

fn coop_defect(traj: &CoopTrajectory, x0: f64, mode: TerminalMode) -> Result<f64> {
    let end = traj.final_state();
    let gap = traj.params.horizon_t - end.t;
    Ok(match (mode, traj.collapse_time) {
        (TerminalMode::ExhaustWealth, None) => end.x / x0,
        (TerminalMode::ExhaustWealth, Some(_)) => (end.x + coop_rhs(&end, &traj.params)?.dx * gap) / x0,
        (TerminalMode::FreePrice { epsilon }, None) => (end.lam / epsilon).ln(),
        (TerminalMode::FreePrice { epsilon }, Some(_)) => (end.lam / epsilon).ln().min(0.0) - gap / traj.params.horizon_t,
    })
}

/// Solves the cooperative problem from aggregate wealth `x0` by shooting on
/// the initial shadow price.
pub fn coop_solve(x0: f64, p: &ModelParams, mode: TerminalMode, options: &SolverOptions) -> Result<CoopSolution> {
    p.validate()?;
    mode.validate()?;
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::InvalidParam {
            field: "x0",
            value: x0,
            bound: "initial wealth > 0",
        });
    }
    let c0 = x0 / p.horizon_t.max(1e-3) + p.production(x0)?.max(0.0);
    let z0 = p.marginal_utility(c0)?.ln();
    let run = |z: f64| coop_integrate(&CoopState { t: 0.0, x: x0, lam: z.exp() }, p, &options.ode);
    let map = |z: &[f64; 1]| -> Result<[f64; 1]> { Ok([coop_defect(&run(z[0])?, x0, mode)?]) };
    let bopts = BroydenOptions {
        tol: options.shooting_tol,
        max_iterations: options.max_iterations,
        ..BroydenOptions::default()
    };
    let mut root = broyden(map, [z0], &bopts)?;
    if root.converged && mode == TerminalMode::ExhaustWealth {
        for _ in 0..40 {
            if root.residual[0] >= 0.0 {
                break;
            }
            let d = root.jacobian[0][0];
            let z = root.x[0] + if d > 0.0 { -2.0 * root.residual[0] / d } else { 1e-12 };
            let r = map(&[z])?;
            if r[0].abs() > options.shooting_tol {
                break;
            }
            root.x = [z];
            root.residual = r;
        }
    }
    if !root.converged {
        return Err(Error::NoConvergence {
            iterations: root.iterations,
            best_residual: root.residual[0].abs(),
            best_point: vec![root.x[0].exp()],
        });
    }
    Ok(CoopSolution {
        shooting: CoopShooting {
            lam0: root.x[0].exp(),
            residual: root.residual[0],
            converged: true,
            iterations: root.iterations,
        },
        trajectory: run(root.x[0])?,
    })
}

/// One player's share of the cooperative path at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedSample {
    pub t: f64,
    pub x: [f64; 2],
    pub c: [f64; 2],
    /// Marginal utility of each player's consumption share.
    pub lam: [f64; 2],
}

/// Splits the aggregate path between the players: player 1 holds and
/// consumes the fraction `pi_weight`, player 2 the rest. Nobody appropriates.
pub fn disaggregate_state(s: &CoopState, pi_weight: f64, p: &ModelParams) -> Result<SharedSample> {
    let w = [pi_weight, 1.0 - pi_weight];
    let c = p.inverse_marginal_utility(s.lam)?;
    let ci = w.map(|w| w * c);
    Ok(SharedSample {
        t: s.t,
        x: w.map(|w| w * s.x),
        c: ci,
        lam: [p.marginal_utility(ci[0])?, p.marginal_utility(ci[1])?],
    })
}

/// [`disaggregate_state`] at every node of the cooperative trajectory.
pub fn disaggregate(traj: &CoopTrajectory, pi_weight: f64) -> Result<Vec<SharedSample>> {
    traj.samples
        .iter()
        .map(|s| disaggregate_state(s, pi_weight, &traj.params))
        .collect()
}

/// Cooperative benchmark for a game started at `(x10, x20)`: pooled
/// technology on aggregate wealth, shares matched to the initial endowments.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub pi_weight: f64,
    pub solution: CoopSolution,
}

impl Baseline {
    pub fn sample_at(&self, t: f64) -> Option<SharedSample> {
        let s = self.solution.trajectory.state_at(t)?;
        disaggregate_state(&s, self.pi_weight, &self.solution.trajectory.params).ok()
    }
}

pub fn baseline(x10: f64, x20: f64, p: &ModelParams, mode: TerminalMode, options: &SolverOptions) -> Result<Baseline> {
    baseline_at_weight(x10, x20, x10 / (x10 + x20), p, mode, options)
}

/// Cooperative benchmark with an explicit share `pi_weight` for player 1.
pub fn baseline_at_weight(
    x10: f64,
    x20: f64,
    pi_weight: f64,
    p: &ModelParams,
    mode: TerminalMode,
    options: &SolverOptions,
) -> Result<Baseline> {
    if !(pi_weight > 0.0 && pi_weight < 1.0) {
        return Err(Error::InvalidParam {
            field: "pi_weight",
            value: pi_weight,
            bound: "0 < pi_weight < 1",
        });
    }
    let pooled = pooled_params(p);
    let solution = coop_solve(x10 + x20, &pooled, mode, options)?;
    Ok(Baseline { pi_weight, solution })
}
