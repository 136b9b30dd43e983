use serde::{Deserialize, Serialize};

use crate::cooperative::coop_solve;
use crate::dynamics::canonical_rhs;
use crate::error::{Error, Result};
use crate::model::{GameState, ModelParams};

use super::trajectory::{integrate, integrate_raw, RawPath, Trajectory};
use super::SolverOptions;

/// Which half of the terminal complementarity condition is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TerminalMode {
    /// Each player ends the game with zero wealth.
    ExhaustWealth,
    /// Each player's terminal shadow price equals `epsilon`.
    FreePrice { epsilon: f64 },
}

impl Default for TerminalMode {
    fn default() -> Self {
        TerminalMode::ExhaustWealth
    }
}

impl TerminalMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TerminalMode::ExhaustWealth => Ok(()),
            TerminalMode::FreePrice { epsilon } if epsilon > 0.0 && epsilon.is_finite() => Ok(()),
            TerminalMode::FreePrice { epsilon } => Err(Error::InvalidParam {
                field: "terminal_mode.epsilon",
                value: epsilon,
                bound: "epsilon > 0",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroydenOptions {
    /// Convergence threshold on the max-norm of the residual.
    pub tol: f64,
    pub max_iterations: usize,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
    /// Largest allowed max-norm of a single update.
    pub max_step: f64,
}

impl Default for BroydenOptions {
    fn default() -> Self {
        BroydenOptions {
            tol: 1e-8,
            max_iterations: 80,
            fd_step: 1e-6,
            max_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult<const M: usize> {
    pub x: [f64; M],
    pub residual: [f64; M],
    pub jacobian: [[f64; M]; M],
    pub iterations: usize,
    pub converged: bool,
}

fn max_norm<const M: usize>(v: &[f64; M]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn sum_squares<const M: usize>(v: &[f64; M]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>()
}

/// Halvings tried by the backtracking line search before giving up on a step.
const LINE_SEARCH_HALVINGS: usize = 12;

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_linear<const M: usize>(a: &[[f64; M]; M], b: &[f64; M]) -> Option<[f64; M]> {
    let mut a = *a;
    let mut b = *b;
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..M {
        let piv = (col..M).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..M {
            let f = a[row][col] / a[col][col];
            for k in col..M {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; M];
    for row in (0..M).rev() {
        let s: f64 = (row + 1..M).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn fd_jacobian<const M: usize, F>(f: &F, x: &[f64; M], fx: &[f64; M], step: f64) -> Result<[[f64; M]; M]>
where
    F: Fn(&[f64; M]) -> Result<[f64; M]>,
{
    let mut jac = [[0.0; M]; M];
    for k in 0..M {
        let h = step * (1.0 + x[k].abs());
        let mut xp = *x;
        xp[k] += h;
        let fp = f(&xp)?;
        for i in 0..M {
            jac[i][k] = (fp[i] - fx[i]) / h;
        }
    }
    Ok(jac)
}

/// Broyden's method with a finite-difference initial Jacobian and a
/// backtracking line search. The Jacobian is recomputed by finite differences
/// whenever the line search fails on a secant approximation.
///
/// Returns `converged = false` with the best point seen if the iteration limit
/// is reached or the search stalls.
pub fn broyden<const M: usize, F>(f: F, x0: [f64; M], options: &BroydenOptions) -> Result<RootResult<M>>
where
    F: Fn(&[f64; M]) -> Result<[f64; M]>,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut norm = max_norm(&fx);
    let mut merit = sum_squares(&fx);
    let mut jac: Option<[[f64; M]; M]> = None;
    let mut fresh = false;
    let mut iterations = 0;

    while norm > options.tol && iterations < options.max_iterations {
        let j = match jac {
            Some(j) => j,
            None => {
                fresh = true;
                *jac.insert(fd_jacobian(&f, &x, &fx, options.fd_step)?)
            }
        };
        let neg: [f64; M] = fx.map(|v| -v);
        let Some(mut dx) = solve_linear(&j, &neg) else {
            if fresh {
                return Err(Error::SingularJacobian { at: x.to_vec() });
            }
            jac = None;
            continue;
        };
        let len = max_norm(&dx);
        if len > options.max_step {
            dx = dx.map(|v| v * options.max_step / len);
        }

        let mut accepted = None;
        let mut s = 1.0;
        for _ in 0..LINE_SEARCH_HALVINGS {
            let mut xn = x;
            for i in 0..M {
                xn[i] += s * dx[i];
            }
            if let Ok(fnew) = f(&xn) {
                let mn = sum_squares(&fnew);
                if mn < (1.0 - 1e-4 * s) * merit {
                    accepted = Some((xn, fnew, mn));
                    break;
                }
            }
            s *= 0.5;
        }
        iterations += 1;

        match accepted {
            Some((xn, fnew, mn)) => {
                let mut step = [0.0; M];
                for i in 0..M {
                    step[i] = xn[i] - x[i];
                }
                let ss: f64 = step.iter().map(|v| v * v).sum();
                let mut jn = j;
                for i in 0..M {
                    let pred: f64 = (0..M).map(|k| j[i][k] * step[k]).sum();
                    let corr = (fnew[i] - fx[i] - pred) / ss;
                    for k in 0..M {
                        jn[i][k] += corr * step[k];
                    }
                }
                jac = Some(jn);
                fresh = false;
                x = xn;
                fx = fnew;
                norm = max_norm(&fx);
                merit = mn;
            }
            None if fresh => break,
            None => jac = None,
        }
    }

    let jacobian = match jac {
        Some(j) => j,
        None => fd_jacobian(&f, &x, &fx, options.fd_step)?,
    };
    Ok(RootResult {
        x,
        residual: fx,
        jacobian,
        iterations,
        converged: norm <= options.tol,
    })
}

/// Outcome of shooting on the initial shadow prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub lam0: [f64; 2],
    /// Terminal defect: `x_i(T)/x_i(0)` or `ln(lam_i(T)/epsilon)`.
    pub residual: [f64; 2],
    pub converged: bool,
    pub iterations: usize,
}

/// Initial prices of a path that consumes the endowment plus its output evenly.
pub fn default_guess(x10: f64, x20: f64, p: &ModelParams) -> Result<[f64; 2]> {
    let t = p.horizon_t.max(1e-3);
    let mut out = [0.0; 2];
    for (k, x0) in [x10, x20].into_iter().enumerate() {
        let c0 = x0 / t + p.production(x0)?.max(0.0);
        out[k] = p.marginal_utility(c0)?;
    }
    Ok(out)
}

/// Initial prices of each player solving its own problem with no
/// appropriation on either side. Exact whenever the game stays nonaggressive;
/// falls back to [`default_guess`] for a player whose solve fails.
pub fn autarky_guess(x10: f64, x20: f64, p: &ModelParams, mode: TerminalMode, options: &SolverOptions) -> Result<[f64; 2]> {
    let mut out = default_guess(x10, x20, p)?;
    for (k, x0) in [x10, x20].into_iter().enumerate() {
        if let Ok(sol) = coop_solve(x0, p, mode, options) {
            out[k] = sol.shooting.lam0;
        }
    }
    Ok(out)
}

/// Saturating score of an extrapolated terminal stock: the identity for
/// `e >= 0` and `e / (1 - e)` below, which keeps the slope at zero and stays
/// above `-1`.
fn saturate(e: f64) -> f64 {
    if e >= 0.0 {
        e
    } else {
        e / (1.0 - e)
    }
}

/// Terminal defect of the path started from `lam0`.
///
/// A path that collapses at `t_c < T` is scored instead by extrapolating each
/// stock linearly from `t_c` to `T`, passed through [`saturate`] so that the
/// score stays bounded when a vanishing price sends consumption up without
/// bound. The score tends to the unpenalized defect as `t_c` approaches `T`.
fn terminal_defect(path: &RawPath, p: &ModelParams, x0: [f64; 2], mode: TerminalMode) -> Result<[f64; 2]> {
    let end = path.final_state();
    let Some((who, tc)) = path.collapsed() else {
        return Ok(match mode {
            TerminalMode::ExhaustWealth => [end.x[0] / x0[0], end.x[1] / x0[1]],
            TerminalMode::FreePrice { epsilon } => [(end.lam[0] / epsilon).ln(), (end.lam[1] / epsilon).ln()],
        });
    };
    let gap = p.horizon_t - tc;
    match mode {
        TerminalMode::ExhaustWealth => {
            let rate = canonical_rhs(&end, p)?;
            let mut out = [0.0; 2];
            for i in 0..2 {
                out[i] = saturate((end.x[i] + rate.dx[i] * gap) / x0[i]);
            }
            out[who.index()] = out[who.index()].min(0.0) - gap / p.horizon_t;
            Ok(out)
        }
        TerminalMode::FreePrice { epsilon } => {
            let short = -gap / p.horizon_t;
            Ok([
                (end.lam[0] / epsilon).ln().min(0.0) + short,
                (end.lam[1] / epsilon).ln().min(0.0) + short,
            ])
        }
    }
}

fn check_endowments(x10: f64, x20: f64) -> Result<()> {
    for (name, v) in [("x10", x10), ("x20", x20)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParam {
                field: name,
                value: v,
                bound: "initial wealth > 0",
            });
        }
    }
    Ok(())
}

/// Broyden solve for one endowment pair, followed in wealth-exhaust mode by
/// a nudge that moves a root whose path runs out of wealth fractionally early
/// onto a path that reaches the horizon.
fn solve_from(
    x0: [f64; 2],
    p: &ModelParams,
    mode: TerminalMode,
    lam: [f64; 2],
    max_iterations: usize,
    options: &SolverOptions,
) -> Result<RootResult<2>> {
    let map = |z: &[f64; 2]| -> Result<[f64; 2]> {
        let st = GameState::new(0.0, x0[0], x0[1], z[0].exp(), z[1].exp());
        terminal_defect(&integrate_raw(&st, p, &options.ode)?, p, x0, mode)
    };
    let bopts = BroydenOptions {
        tol: options.shooting_tol,
        max_iterations,
        ..BroydenOptions::default()
    };
    let mut root = broyden(map, lam.map(f64::ln), &bopts)?;
    if root.converged && mode == TerminalMode::ExhaustWealth {
        for _ in 0..40 {
            if root.residual.iter().all(|r| *r >= 0.0) {
                break;
            }
            let mut z = root.x;
            for i in 0..2 {
                if root.residual[i] < 0.0 {
                    let d = root.jacobian[i][i];
                    z[i] += if d > 0.0 { -2.0 * root.residual[i] / d } else { 1e-12 };
                }
            }
            let r = map(&z)?;
            if max_norm(&r) > options.shooting_tol {
                break;
            }
            root.x = z;
            root.residual = r;
        }
    }
    Ok(root)
}

/// Solves for the initial shadow prices that meet the terminal condition.
///
/// Iterates on `ln lam(0)` so every trial price is positive. If the direct
/// iteration from `guess` fails, the endowments are deformed continuously from
/// an equal split (where the solution is easy to find) to the requested pair,
/// reusing each solution as the next starting point.
pub fn shoot(
    x10: f64,
    x20: f64,
    p: &ModelParams,
    mode: TerminalMode,
    guess: Option<[f64; 2]>,
    options: &SolverOptions,
) -> Result<ShootingResult> {
    p.validate()?;
    mode.validate()?;
    check_endowments(x10, x20)?;
    let lam_guess = match guess {
        Some(g) if g.iter().all(|v| *v > 0.0 && v.is_finite()) => g,
        Some(g) => return Err(Error::Argument(format!("initial price guess must be positive, got {g:?}"))),
        None => autarky_guess(x10, x20, p, mode, options)?,
    };
    let x0 = [x10, x20];
    let mut iterations = 0;
    let mut best: Option<RootResult<2>> = None;
    let mut keep = |r: RootResult<2>, iterations: &mut usize| {
        *iterations += r.iterations;
        if best.map_or(true, |b| max_norm(&r.residual) < max_norm(&b.residual)) {
            best = Some(r);
        }
        r
    };

    match solve_from(x0, p, mode, lam_guess, options.max_iterations, options) {
        Ok(r) if r.converged => {
            return Ok(ShootingResult {
                lam0: r.x.map(f64::exp),
                residual: r.residual,
                converged: true,
                iterations: r.iterations,
            })
        }
        Ok(r) => {
            keep(r, &mut iterations);
        }
        Err(_) => {}
    }

    // Continuation along x(s) = m^(1-s) x0^s from the geometric mean m.
    let m = (x10 * x20).sqrt();
    let at = |s: f64| [m.powf(1.0 - s) * x10.powf(s), m.powf(1.0 - s) * x20.powf(s)];
    let mut failure = None;
    let mut lam = None;
    match solve_from(at(0.0), p, mode, autarky_guess(m, m, p, mode, options)?, options.max_iterations, options) {
        Ok(r) => {
            iterations += r.iterations;
            lam = r.converged.then(|| r.x.map(f64::exp));
        }
        Err(e) => failure = Some(e),
    }
    // Previous continuation point, for a secant predictor.
    let mut prev: Option<(f64, [f64; 2])> = None;
    let (mut s, mut ds) = (0.0f64, 0.125f64);
    while let Some(l) = lam {
        let target = (s + ds).min(1.0);
        let start = match prev {
            Some((sp, lp)) => {
                let w = (target - s) / (s - sp);
                [0, 1].map(|i| (l[i].ln() + (l[i].ln() - lp[i].ln()) * w).exp())
            }
            None => l,
        };
        match solve_from(at(target), p, mode, start, options.max_iterations, options) {
            Ok(r) if r.converged => {
                iterations += r.iterations;
                if target == 1.0 {
                    return Ok(ShootingResult {
                        lam0: r.x.map(f64::exp),
                        residual: r.residual,
                        converged: true,
                        iterations,
                    });
                }
                prev = Some((s, l));
                lam = Some(r.x.map(f64::exp));
                s = target;
                ds = (ds * 1.5).min(0.25);
            }
            outcome => {
                match outcome {
                    Ok(r) if target == 1.0 => {
                        keep(r, &mut iterations);
                    }
                    Ok(r) => iterations += r.iterations,
                    Err(e) => failure = Some(e),
                }
                ds *= 0.5;
                if ds < 1e-3 {
                    break;
                }
            }
        }
    }
    match best {
        Some(b) => Ok(ShootingResult {
            lam0: b.x.map(f64::exp),
            residual: b.residual,
            converged: false,
            iterations,
        }),
        None => Err(failure.unwrap_or(Error::NoConvergence {
            iterations,
            best_residual: f64::INFINITY,
            best_point: lam_guess.to_vec(),
        })),
    }
}

/// A shot equilibrium path.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub shooting: ShootingResult,
    pub trajectory: Trajectory,
}

/// Shoots and integrates the equilibrium path. Non-convergence is an error.
pub fn simulate(x10: f64, x20: f64, p: &ModelParams, mode: TerminalMode, options: &SolverOptions) -> Result<Simulation> {
    let shooting = shoot(x10, x20, p, mode, None, options)?;
    if !shooting.converged {
        return Err(Error::NoConvergence {
            iterations: shooting.iterations,
            best_residual: max_norm(&shooting.residual),
            best_point: shooting.lam0.to_vec(),
        });
    }
    let st = GameState::new(0.0, x10, x20, shooting.lam0[0], shooting.lam0[1]);
    let trajectory = integrate(&st, p, &options.ode)?;
    Ok(Simulation { shooting, trajectory })
}
