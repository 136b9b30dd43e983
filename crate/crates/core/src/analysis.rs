//! Welfare integrals, regime classification, efficiency losses against the
//! cooperative plan, and parameter sweeps.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooperative::{baseline, baseline_at_weight, Baseline};
use crate::dynamics::accounting;
use crate::equilibrium::mne_controls;
use crate::error::{domain, Error, Result};
use crate::model::{GameState, ModelParams, Player};
use crate::solvers::{simulate, EventKind, Simulation, SolverOptions, TerminalMode, Trajectory};

/// Default absolute tolerance of the welfare quadrature.
pub const QUADRATURE_TOL: f64 = 1e-8;

const LOBATTO_X: [f64; 5] = [-1.0, -0.654_653_670_707_977_1, 0.0, 0.654_653_670_707_977_1, 1.0];
const LOBATTO_W: [f64; 5] = [0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1];

fn lobatto5<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<f64> {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    // End nodes are taken exactly so evaluation never strays outside [a, b].
    let mut s = LOBATTO_W[0] * (f(a)? + f(b)?);
    for k in 1..4 {
        s += LOBATTO_W[k] * f(m + r * LOBATTO_X[k])?;
    }
    Ok(r * s)
}

fn adapt<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (l, r) = (lobatto5(f, a, m)?, lobatto5(f, m, b)?);
    if (l + r - whole).abs() <= tol || depth == 0 || m <= a || m >= b {
        return Ok(l + r);
    }
    Ok(adapt(f, a, m, l, 0.5 * tol, depth - 1)? + adapt(f, m, b, r, 0.5 * tol, depth - 1)?)
}

/// Adaptive composite 5-point Gauss–Lobatto quadrature of `f` over the panels
/// delimited by `breaks`. The tolerance is shared among panels by length.
pub fn composite_lobatto<F: Fn(f64) -> Result<f64>>(f: F, breaks: &[f64], tol: f64) -> Result<f64> {
    let (Some(first), Some(last)) = (breaks.first(), breaks.last()) else {
        return Ok(0.0);
    };
    let span = last - first;
    if !(span > 0.0) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            total += adapt(&f, a, b, lobatto5(&f, a, b)?, tol * (b - a) / span, 40)?;
        }
    }
    Ok(total)
}

/// Panel boundaries of a trajectory: its accepted integrator nodes.
pub fn panels(traj: &Trajectory) -> Vec<f64> {
    traj.samples.iter().map(|s| s.state.t).collect()
}

fn dense_state(traj: &Trajectory, t: f64) -> Result<GameState> {
    traj.state_at(t)
        .ok_or_else(|| Error::Argument(format!("t = {t} outside trajectory span")))
}

/// Player's lifetime utility `∫ u(c_i(t)) dt` along the trajectory.
pub fn welfare(traj: &Trajectory, player: Player) -> Result<f64> {
    welfare_on(traj, player, &panels(traj), QUADRATURE_TOL)
}

/// [`welfare`] on caller-chosen panels and tolerance.
pub fn welfare_on(traj: &Trajectory, player: Player, breaks: &[f64], tol: f64) -> Result<f64> {
    let p = &traj.params;
    let i = player.index();
    composite_lobatto(
        |t| {
            let lam = dense_state(traj, t)?.lam[i];
            p.felicity(p.inverse_marginal_utility(lam)?)
        },
        breaks,
        tol,
    )
}

/// Equilibrium flows on the dense output. Interpolated stocks within rounding
/// of zero at the end of a wealth-exhausting path are read as zero.
fn flows(traj: &Trajectory, t: f64) -> Result<(GameState, [crate::equilibrium::ControlPair; 2])> {
    let mut st = dense_state(traj, t)?;
    st.x = st.x.map(|x| x.max(0.0));
    let ctrl = mne_controls(&st, &traj.params)?;
    Ok((st, ctrl))
}

/// Total wealth destroyed by appropriation, `∫ (1-γ) δ [x1 (1-p2) + x2 (1-p1)] dt`.
pub fn cumulative_deadweight(traj: &Trajectory) -> Result<f64> {
    composite_lobatto(
        |t| {
            let (st, ctrl) = flows(traj, t)?;
            Ok(accounting(&st, &ctrl, &traj.params)?.deadweight_loss)
        },
        &panels(traj),
        QUADRATURE_TOL,
    )
}

/// Each player's total appropriation outlay `∫ a_i dt`.
pub fn cumulative_outlays(traj: &Trajectory) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for pl in Player::BOTH {
        out[pl.index()] = composite_lobatto(|t| Ok(flows(traj, t)?.1[pl.index()].a), &panels(traj), QUADRATURE_TOL)?;
    }
    Ok(out)
}

/// `(γλ_i - λ_j)/λ_i` for each player.
pub fn inequality_ratio(state: &GameState, p: &ModelParams) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for pl in Player::BOTH {
        let (li, lj) = (state.price(pl), state.price(pl.other()));
        if !(li > 0.0) {
            return Err(domain("own shadow price", li));
        }
        out[pl.index()] = (p.gamma * li - lj) / li;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Nonaggressive,
    Conflict,
}

/// Minimum, maximum and final value of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub min: f64,
    pub max: f64,
    #[serde(rename = "final")]
    pub last: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyLoss {
    /// Cooperative minus game welfare, per player.
    pub per_player: [f64; 2],
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// First time each player's aggression margin turns positive.
    pub onset_times: [Option<f64>; 2],
    pub welfare: [f64; 2],
    /// `None` when the cooperative baseline could not be solved.
    pub coop_welfare: Option<[f64; 2]>,
    pub efficiency_loss: Option<EfficiencyLoss>,
    pub cumulative_deadweight: f64,
    pub cumulative_outlays: [f64; 2],
    pub inequality: [PathSummary; 2],
}

/// Regime and first margin-activation time per player.
pub fn classify_regime(traj: &Trajectory) -> (Regime, [Option<f64>; 2]) {
    let mut onset = [None; 2];
    for e in &traj.events {
        if let EventKind::MarginOn(pl) = e.kind {
            onset[pl.index()].get_or_insert(e.t);
        }
    }
    let appropriates = traj.samples.iter().any(|s| s.controls.iter().any(|c| c.a > 0.0));
    let regime = if onset.iter().all(Option::is_none) && !appropriates {
        Regime::Nonaggressive
    } else {
        Regime::Conflict
    };
    (regime, onset)
}

/// Per-player welfare of the cooperative baseline over `[0, T]`.
pub fn baseline_welfare(b: &Baseline) -> Result<[f64; 2]> {
    let traj = &b.solution.trajectory;
    let breaks: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let p = &traj.params;
    let mut out = [0.0; 2];
    for (k, w) in [b.pi_weight, 1.0 - b.pi_weight].into_iter().enumerate() {
        out[k] = composite_lobatto(
            |t| {
                let s = traj
                    .state_at(t)
                    .ok_or_else(|| Error::Argument(format!("t = {t} outside trajectory span")))?;
                p.felicity(w * p.inverse_marginal_utility(s.lam)?)
            },
            &breaks,
            QUADRATURE_TOL,
        )?;
    }
    Ok(out)
}

/// Welfare of the cooperative baseline (with shares matched to the initial
/// endowments) and the game's welfare shortfall against it.
pub fn efficiency_loss(traj: &Trajectory, mode: TerminalMode, options: &SolverOptions) -> Result<([f64; 2], EfficiencyLoss)> {
    let x = traj.samples[0].state.x;
    efficiency_loss_at_weight(traj, x[0] / (x[0] + x[1]), mode, options)
}

/// Game horizon measured from the trajectory's start, or `None` if empty.
fn remaining(traj: &Trajectory) -> Option<ModelParams> {
    let span = traj.params.horizon_t - traj.samples[0].state.t;
    (span > 0.0).then(|| ModelParams {
        horizon_t: span,
        ..traj.params
    })
}

/// [`efficiency_loss`] against a baseline that gives player 1 the share
/// `pi_weight` of pooled wealth and consumption.
pub fn efficiency_loss_at_weight(
    traj: &Trajectory,
    pi_weight: f64,
    mode: TerminalMode,
    options: &SolverOptions,
) -> Result<([f64; 2], EfficiencyLoss)> {
    let Some(p) = remaining(traj) else {
        let zero = EfficiencyLoss {
            per_player: [0.0; 2],
            total: 0.0,
        };
        return Ok(([0.0; 2], zero));
    };
    let x = traj.samples[0].state.x;
    let b = baseline_at_weight(x[0], x[1], pi_weight, &p, mode, options)?;
    let coop = baseline_welfare(&b)?;
    let game = [welfare(traj, Player::One)?, welfare(traj, Player::Two)?];
    let per_player = [coop[0] - game[0], coop[1] - game[1]];
    Ok((
        coop,
        EfficiencyLoss {
            per_player,
            total: per_player[0] + per_player[1],
        },
    ))
}

/// `∫ u(C*) - ∫ u(c1 + c2)`: felicity of the cooperative aggregate
/// consumption path against that of the game's total consumption.
pub fn aggregate_welfare_gap(traj: &Trajectory, mode: TerminalMode, options: &SolverOptions) -> Result<f64> {
    let Some(p) = remaining(traj) else {
        return Ok(0.0);
    };
    let x = traj.samples[0].state.x;
    let coop = baseline(x[0], x[1], &p, mode, options)?.solution.trajectory;
    let q = coop.params;
    let breaks: Vec<f64> = coop.samples.iter().map(|s| s.t).collect();
    let planned = composite_lobatto(
        |t| {
            let s = coop
                .state_at(t)
                .ok_or_else(|| Error::Argument(format!("t = {t} outside trajectory span")))?;
            q.felicity(q.inverse_marginal_utility(s.lam)?)
        },
        &breaks,
        QUADRATURE_TOL,
    )?;
    let g = &traj.params;
    let realized = composite_lobatto(
        |t| {
            let s = dense_state(traj, t)?;
            g.felicity(g.inverse_marginal_utility(s.lam[0])? + g.inverse_marginal_utility(s.lam[1])?)
        },
        &panels(traj),
        QUADRATURE_TOL,
    )?;
    Ok(planned - realized)
}

/// Full report on a shot equilibrium path.
pub fn regime_report(traj: &Trajectory, mode: TerminalMode, options: &SolverOptions) -> Result<RegimeReport> {
    let (regime, onset_times) = classify_regime(traj);
    let welfare = [welfare(traj, Player::One)?, welfare(traj, Player::Two)?];
    let (coop_welfare, efficiency_loss) = match efficiency_loss(traj, mode, options) {
        Ok((c, l)) => (Some(c), Some(l)),
        Err(_) => (None, None),
    };
    let mut inequality = [PathSummary {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        last: 0.0,
    }; 2];
    for s in &traj.samples {
        let r = inequality_ratio(&s.state, &traj.params)?;
        for k in 0..2 {
            inequality[k].min = inequality[k].min.min(r[k]);
            inequality[k].max = inequality[k].max.max(r[k]);
            inequality[k].last = r[k];
        }
    }
    Ok(RegimeReport {
        regime,
        onset_times,
        welfare,
        coop_welfare,
        efficiency_loss,
        cumulative_deadweight: cumulative_deadweight(traj)?,
        cumulative_outlays: cumulative_outlays(traj)?,
        inequality,
    })
}

/// Shoots, integrates and reports one configuration.
pub fn run_case(
    x10: f64,
    x20: f64,
    p: &ModelParams,
    mode: TerminalMode,
    options: &SolverOptions,
) -> Result<(Simulation, RegimeReport)> {
    let sim = simulate(x10, x20, p, mode, options)?;
    let report = regime_report(&sim.trajectory, mode, options)?;
    Ok((sim, report))
}

/// Names accepted as sweep axes.
pub const AXIS_NAMES: [&str; 11] = [
    "delta",
    "theta",
    "gamma",
    "horizon_T",
    "eta",
    "tech_A",
    "tech_alpha",
    "tech_mu",
    "pi_weight",
    "x10",
    "x20",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// `points` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(name: &str, start: f64, stop: f64, points: usize) -> SweepAxis {
        let values = match points {
            0 => vec![],
            1 => vec![start],
            n => (0..n)
                .map(|k| if k + 1 == n { stop } else { start + (stop - start) * k as f64 / (n - 1) as f64 })
                .collect(),
        };
        SweepAxis {
            name: name.to_string(),
            values,
        }
    }
}

/// One configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case {
    pub params: ModelParams,
    pub x10: f64,
    pub x20: f64,
}

impl Case {
    /// Copy with the named parameter or initial stock replaced.
    pub fn with(mut self, name: &str, value: f64) -> Result<Case> {
        let p = &mut self.params;
        match name {
            "delta" => p.delta = value,
            "theta" => p.theta = value,
            "gamma" => p.gamma = value,
            "horizon_T" => p.horizon_t = value,
            "eta" => p.eta = value,
            "tech_A" => p.tech_a = value,
            "tech_alpha" => p.tech_alpha = value,
            "tech_mu" => p.tech_mu = value,
            "pi_weight" => p.pi_weight = value,
            "x10" => self.x10 = value,
            "x20" => self.x20 = value,
            other => {
                return Err(Error::Argument(format!(
                    "unknown sweep axis `{other}`; expected one of {}",
                    AXIS_NAMES.join(", ")
                )))
            }
        }
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (field, v) in [("x10", self.x10), ("x20", self.x20)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam {
                    field,
                    value: v,
                    bound: "initial wealth > 0",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
    pub base: Case,
    pub mode: TerminalMode,
    pub options: SolverOptions,
    pub max_cells: usize,
}

/// Outcome of one sweep cell, in the grid's row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub coords: Vec<f64>,
    pub lam0: Option<[f64; 2]>,
    pub outcome: std::result::Result<RegimeReport, String>,
}

impl SweepGrid {
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Every cell configuration, first axis slowest.
    pub fn cases(&self) -> Result<Vec<(Vec<f64>, Case)>> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Argument(format!(
                "a sweep needs one or two axes, got {}",
                self.axes.len()
            )));
        }
        for (k, a) in self.axes.iter().enumerate() {
            if a.values.is_empty() {
                return Err(Error::Argument(format!("sweep axis `{}` has no values", a.name)));
            }
            if self.axes[..k].iter().any(|b| b.name == a.name) {
                return Err(Error::Argument(format!("sweep axis `{}` appears twice", a.name)));
            }
        }
        let n = self.cell_count();
        if n > self.max_cells {
            return Err(Error::Argument(format!(
                "sweep has {n} cells, above the limit of {}",
                self.max_cells
            )));
        }
        let mut out = Vec::with_capacity(n);
        let mut idx = vec![0usize; self.axes.len()];
        for _ in 0..n {
            let mut case = self.base;
            let mut coords = Vec::with_capacity(idx.len());
            for (a, &k) in self.axes.iter().zip(&idx) {
                let v = a.values[k];
                case = case.with(&a.name, v)?;
                coords.push(v);
            }
            case.validate()?;
            out.push((coords, case));
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < self.axes[d].values.len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(out)
    }
}

/// Evaluates every cell of the grid. Cells run in parallel and are independent;
/// a failing cell carries its diagnostic instead of aborting the sweep.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    sweep_with_progress(grid, |_, _| {})
}

/// [`sweep`] that calls `progress(done, total)` as each cell finishes.
pub fn sweep_with_progress<P>(grid: &SweepGrid, progress: P) -> Result<Vec<SweepCell>>
where
    P: Fn(usize, usize) + Sync,
{
    let cases = grid.cases()?;
    let total = cases.len();
    let done = AtomicUsize::new(0);
    Ok(cases
        .into_par_iter()
        .map(|(coords, c)| {
            let cell = match run_case(c.x10, c.x20, &c.params, grid.mode, &grid.options) {
                Ok((sim, report)) => SweepCell {
                    coords,
                    lam0: Some(sim.shooting.lam0),
                    outcome: Ok(report),
                },
                Err(e) => SweepCell {
                    coords,
                    lam0: None,
                    outcome: Err(e.to_string()),
                },
            };
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            cell
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{integrate, OdeOptions};
    use approx::assert_relative_eq;

    #[test]
    fn lobatto_is_exact_for_degree_seven() {
        let f = |t: f64| Ok(t.powi(7) - 3.0 * t.powi(4) + 1.0);
        let v = composite_lobatto(f, &[0.0, 2.0], 1e-14).unwrap();
        assert_relative_eq!(v, 256.0 / 8.0 - 3.0 * 32.0 / 5.0 + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_lobatto_handles_a_kink() {
        let v = composite_lobatto(|t: f64| Ok((t - 0.3).abs()), &[0.0, 1.0], 1e-10).unwrap();
        assert_relative_eq!(v, 0.5 * (0.09 + 0.49), epsilon = 1e-9);
    }

    fn flat_path(c: f64, eta: f64, t: f64) -> Trajectory {
        // A = 0 with linear technology: prices stay put, consumption is constant.
        let p = ModelParams {
            eta,
            tech_a: 0.0,
            tech_alpha: 1.0,
            horizon_t: t,
            allow_nonconcave_tech: true,
            ..ModelParams::default()
        };
        let lam = p.marginal_utility(c).unwrap();
        integrate(&GameState::new(0.0, 1e3, 1e3, lam, lam), &p, &OdeOptions::default()).unwrap()
    }

    #[test]
    fn welfare_of_constant_consumption() {
        assert!(welfare(&flat_path(1.0, 2.0, 5.0), Player::One).unwrap().abs() < 1e-12);
        assert_relative_eq!(welfare(&flat_path(2.0, 2.0, 3.0), Player::Two).unwrap(), 1.5, epsilon = 1e-10);
    }

    #[test]
    fn welfare_of_cake_eating() {
        let (x0, t) = (4.0, 2.0);
        let traj = flat_path(x0 / t, 1.0, t);
        assert_relative_eq!(welfare(&traj, Player::One).unwrap(), t * (x0 / t).ln(), epsilon = 1e-10);
    }

    #[test]
    fn inequality_ratio_examples() {
        let p = ModelParams {
            gamma: 0.8,
            ..ModelParams::default()
        };
        let r = inequality_ratio(&GameState::new(0.0, 1.0, 1.0, 1.0, 0.4), &p).unwrap();
        assert_relative_eq!(r[0], 0.4, epsilon = 1e-15);
        let eq = inequality_ratio(&GameState::new(0.0, 1.0, 1.0, 0.7, 0.7), &p).unwrap();
        assert_relative_eq!(eq[0], p.gamma - 1.0, epsilon = 1e-15);
        assert_relative_eq!(eq[1], p.gamma - 1.0, epsilon = 1e-15);
        let scaled = inequality_ratio(&GameState::new(0.0, 1.0, 1.0, 3.0, 1.2), &p).unwrap();
        assert_relative_eq!(scaled[0], r[0], epsilon = 1e-15);
        assert!(inequality_ratio(&GameState::new(0.0, 1.0, 1.0, 0.0, 1.0), &p).is_err());
    }

    #[test]
    fn symmetric_start_is_nonaggressive() {
        let p = ModelParams::default();
        let (sim, rep) = run_case(5.0, 5.0, &p, TerminalMode::ExhaustWealth, &SolverOptions::default()).unwrap();
        assert_eq!(rep.regime, Regime::Nonaggressive);
        assert_eq!(rep.onset_times, [None, None]);
        assert_eq!(rep.cumulative_deadweight, 0.0);
        assert!(sim.trajectory.samples.iter().all(|s| s.controls[0].a == 0.0 && s.controls[1].a == 0.0));
    }

    #[test]
    fn zero_span_has_no_loss() {
        let p = ModelParams::default();
        let st = GameState::new(p.horizon_t, 3.0, 1.0, 0.5, 0.2);
        let traj = integrate(&st, &p, &OdeOptions::default()).unwrap();
        let (_, l) = efficiency_loss(&traj, TerminalMode::ExhaustWealth, &SolverOptions::default()).unwrap();
        assert_eq!(l.total, 0.0);
        assert_eq!(aggregate_welfare_gap(&traj, TerminalMode::ExhaustWealth, &SolverOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn cooperation_dominates_a_conflict() {
        let p = ModelParams {
            gamma: 0.9,
            ..ModelParams::default()
        };
        let o = SolverOptions::default();
        let mode = TerminalMode::ExhaustWealth;
        let sim = simulate(10.0, 2.0, &p, mode, &o).unwrap();
        assert_eq!(classify_regime(&sim.trajectory).0, Regime::Conflict);
        assert!(aggregate_welfare_gap(&sim.trajectory, mode, &o).unwrap() > 0.0);
        let (_, half) = efficiency_loss_at_weight(&sim.trajectory, 0.5, mode, &o).unwrap();
        assert!(half.total > 0.0);
        assert!(efficiency_loss_at_weight(&sim.trajectory, 1.0, mode, &o).is_err());
    }

    #[test]
    fn grid_is_row_major_and_bounded() {
        let grid = SweepGrid {
            axes: vec![
                SweepAxis {
                    name: "gamma".into(),
                    values: vec![0.2, 0.4],
                },
                SweepAxis::linspace("x20", 1.0, 3.0, 3),
            ],
            base: Case {
                params: ModelParams::default(),
                x10: 5.0,
                x20: 5.0,
            },
            mode: TerminalMode::ExhaustWealth,
            options: SolverOptions::default(),
            max_cells: 6,
        };
        let cases = grid.cases().unwrap();
        let coords: Vec<_> = cases.iter().map(|c| c.0.clone()).collect();
        assert_eq!(coords[0], vec![0.2, 1.0]);
        assert_eq!(coords[2], vec![0.2, 3.0]);
        assert_eq!(coords[3], vec![0.4, 1.0]);
        assert_eq!(cases[4].1.x20, 2.0);
        assert_eq!(cases[4].1.params.gamma, 0.4);
        let small = SweepGrid { max_cells: 5, ..grid.clone() };
        assert!(small.cases().is_err());
        let bad = SweepGrid {
            axes: vec![SweepAxis {
                name: "gamma".into(),
                values: vec![1.5],
            }],
            ..grid.clone()
        };
        assert!(bad.cases().unwrap_err().to_string().contains("gamma"));
        let unknown = SweepGrid {
            axes: vec![SweepAxis {
                name: "beta".into(),
                values: vec![1.0],
            }],
            ..grid
        };
        assert!(unknown.cases().is_err());
    }
}
