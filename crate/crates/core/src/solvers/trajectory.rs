use serde::{Deserialize, Serialize};

use crate::dynamics::{accounting, canonical_rhs, AccountingBreakdown};
use crate::equilibrium::{aggression_margin, mne_controls, ControlPair};
use crate::error::{Error, Result};
use crate::model::{GameState, ModelParams, Player};

use super::ode::{self, DenseOutput, EventAction, OdeOptions, OdeStats, Termination};

/// What happened at a recorded event time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "player", rename_all = "kebab-case")]
pub enum EventKind {
    MarginOn(Player),
    MarginOff(Player),
    Collapse(Player),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub t: f64,
    pub kind: EventKind,
}

/// State, equilibrium controls and diagnostics at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub state: GameState,
    pub controls: [ControlPair; 2],
    pub margins: [f64; 2],
    pub accounting: AccountingBreakdown,
}

impl TrajectorySample {
    pub fn at(state: GameState, p: &ModelParams) -> Result<Self> {
        state.check_admissible()?;
        let controls = mne_controls(&state, p)?;
        let margins = [
            aggression_margin(state.x[1], state.lam[0], state.lam[1], p)?.margin,
            aggression_margin(state.x[0], state.lam[1], state.lam[0], p)?.margin,
        ];
        Ok(TrajectorySample {
            state,
            controls,
            margins,
            accounting: accounting(&state, &controls, p)?,
        })
    }
}

/// Integrated path of the canonical system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    /// One sample per accepted integrator node (including event times).
    pub samples: Vec<TrajectorySample>,
    pub dense: DenseOutput<4>,
    pub events: Vec<GameEvent>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.samples[0].state.t
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.state.t).unwrap_or(0.0)
    }

    pub fn final_state(&self) -> GameState {
        self.samples.last().expect("trajectory has at least one sample").state
    }

    /// Player that ran out of wealth or price, if the path stopped early.
    pub fn collapsed(&self) -> Option<(Player, f64)> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::Collapse(p) => Some((p, e.t)),
            _ => None,
        })
    }

    /// State on the dense output at `t`.
    pub fn state_at(&self, t: f64) -> Option<GameState> {
        if self.dense.segments.is_empty() {
            let s = self.samples[0].state;
            return (t == s.t).then_some(s);
        }
        self.dense.eval(t).map(|y| GameState::from_vector(t, &y))
    }

    pub fn sample_at(&self, t: f64) -> Result<TrajectorySample> {
        let st = self
            .state_at(t)
            .ok_or_else(|| Error::Argument(format!("t = {t} outside trajectory span")))?;
        TrajectorySample::at(st, &self.params)
    }

    /// Samples on a uniform grid of `n >= 2` points spanning the trajectory.
    pub fn resample(&self, n: usize) -> Result<Vec<TrajectorySample>> {
        let (a, b) = (self.t_start(), self.t_end());
        if n < 2 || b == a {
            return Ok(vec![self.samples[0]]);
        }
        (0..n)
            .map(|k| {
                let t = if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                self.sample_at(t)
            })
            .collect()
    }
}

/// Fraction of its initial value below which a vanishing stock or price turns
/// a step underflow into a collapse.
const NEAR_ZERO: f64 = 1e-6;

fn margin_flags(y: &[f64; 4], p: &ModelParams) -> [bool; 2] {
    let active = |xj: f64, li: f64, lj: f64| {
        xj > 0.0 && li > 0.0 && aggression_margin(xj, li, lj, p).map(|m| m.active).unwrap_or(false)
    };
    [active(y[1], y[2], y[3]), active(y[0], y[3], y[2])]
}

/// Raw integration result: node times and states, dense output and events.
pub(crate) struct RawPath {
    pub sol: ode::OdeSolution<4>,
    pub events: Vec<GameEvent>,
}

impl RawPath {
    pub fn final_state(&self) -> GameState {
        let (t, y) = self.sol.last();
        GameState::from_vector(t, &y)
    }

    pub fn collapsed(&self) -> Option<(Player, f64)> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::Collapse(p) => Some((p, e.t)),
            _ => None,
        })
    }
}

pub(crate) fn integrate_raw(initial: &GameState, p: &ModelParams, options: &OdeOptions) -> Result<RawPath> {
    initial
        .check_admissible()
        .map_err(|e| Error::Argument(format!("inadmissible initial state: {e}")))?;
    if initial.t > p.horizon_t {
        return Err(Error::Argument(format!(
            "initial time {} is past the horizon {}",
            initial.t, p.horizon_t
        )));
    }
    let rhs = |t: f64, y: &[f64; 4]| canonical_rhs(&GameState::from_vector(t, y), p).map(|r| r.to_vector());
    let flags = |_t: f64, y: &[f64; 4]| margin_flags(y, p);
    let sol = ode::integrate(
        rhs,
        flags,
        [EventAction::Restart; 2],
        initial.t,
        initial.to_vector(),
        p.horizon_t,
        options,
    )?;

    let mut events = Vec::new();
    for (k, on) in margin_flags(&initial.to_vector(), p).iter().enumerate() {
        if *on {
            events.push(GameEvent {
                t: initial.t,
                kind: EventKind::MarginOn(Player::BOTH[k]),
            });
        }
    }
    for hit in &sol.events {
        let player = Player::BOTH[hit.index];
        events.push(GameEvent {
            t: hit.t,
            kind: if hit.rising {
                EventKind::MarginOn(player)
            } else {
                EventKind::MarginOff(player)
            },
        });
    }
    match &sol.termination {
        Termination::Completed | Termination::Stopped(_) => {}
        Termination::Collapsed { error: Error::Collapse { player, .. } } => events.push(GameEvent {
            t: sol.last().0,
            kind: EventKind::Collapse(*player),
        }),
        Termination::Collapsed { error } => {
            // Near a vanishing stock or price the dynamics turn singular; an
            // underflow there is the collapse itself.
            let (t, y) = sol.last();
            let y0 = initial.to_vector();
            let rel: Vec<f64> = (0..4).map(|m| y[m] / y0[m]).collect();
            let m = (0..4).min_by(|&a, &b| rel[a].total_cmp(&rel[b])).unwrap_or(0);
            if rel[m] > NEAR_ZERO {
                return Err(error.clone());
            }
            events.push(GameEvent {
                t,
                kind: EventKind::Collapse(Player::BOTH[m % 2]),
            })
        }
    }
    Ok(RawPath { sol, events })
}

/// Integrates the canonical system from `initial` to the horizon, recording
/// margin switches and stopping if a stock or price collapses.
pub fn integrate(initial: &GameState, p: &ModelParams, options: &OdeOptions) -> Result<Trajectory> {
    let RawPath { sol, events } = integrate_raw(initial, p, options)?;
    let samples = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(t, y)| TrajectorySample::at(GameState::from_vector(*t, y), p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        params: *p,
        samples,
        dense: sol.dense,
        events,
        stats: sol.stats,
    })
}
