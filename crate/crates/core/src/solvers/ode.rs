//! Adaptive Dormand–Prince 5(4) integration with the standard fourth-order
//! continuous extension and switch-event location by bisection on the dense
//! output.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// Step-size controller exponents.
const PI_BETA: f64 = 0.08;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

/// Mixed relative/absolute error tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-9, atol: 1e-12 }
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub tol: Tolerance,
    /// Steps shorter than this fraction of the span count as underflow.
    pub min_step_fraction: f64,
    pub max_steps: usize,
    /// Bisection width for locating switch events.
    pub event_time_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: Tolerance::default(),
            min_step_fraction: 1e-13,
            max_steps: 200_000,
            event_time_tol: 1e-10,
        }
    }
}

/// Interpolating polynomial over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    /// Right end, stored exactly as the accepted node time.
    end: f64,
    coef: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.end
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let s1 = 1.0 - s;
        let r = &self.coef;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

/// Piecewise dense output over the integrated span.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseOutput<const N: usize> {
    pub segments: Vec<DenseSegment<N>>,
}

impl<const N: usize> DenseOutput<N> {
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.segments.first()?.t0, self.segments.last()?.t1()))
    }

    /// Evaluates the interpolant; `None` outside the span.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let (a, b) = self.span()?;
        if t < a || t > b {
            return None;
        }
        let k = self.segments.partition_point(|s| s.t1() < t).min(self.segments.len() - 1);
        Some(self.segments[k].eval(t))
    }
}

struct Step<const N: usize> {
    y: [f64; N],
    k_end: [f64; N],
    err: f64,
    coef: [[f64; N]; 5],
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

fn dopri_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64, tol: &Tolerance) -> Result<Step<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(
        t + h,
        &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new)?;

    let mut sq = 0.0;
    let mut coef = [[0.0; N]; 5];
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
        sq += (e / scale) * (e / scale);

        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        coef[0][i] = y[i];
        coef[1][i] = dy;
        coef[2][i] = bspl;
        coef[3][i] = dy - h * k7[i] - bspl;
        coef[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(Step {
        y: y_new,
        k_end: k7,
        err: (sq / N as f64).sqrt(),
        coef,
    })
}

/// Takes `n` equal steps without error control. Used for order checks.
pub fn fixed_steps<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, n: usize) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    let mut t = t0;
    let tol = Tolerance::default();
    for _ in 0..n {
        let k1 = f(t, &y)?;
        y = dopri_step(&f, t, &y, &k1, h, &tol)?.y;
        t += h;
    }
    Ok(y)
}

/// How a switch event is handled once located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventAction {
    /// Record the crossing and restart the integration at the event time.
    Restart,
    /// Stop the integration just before the crossing.
    Stop,
}

/// A located switch of event indicator `index` (from `!active` to `active` when
/// `rising`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub index: usize,
    pub t: f64,
    pub rising: bool,
}

/// Why the integration ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// A `Stop` event fired.
    Stopped(EventHit),
    /// The step could not be shortened further, either because the right-hand
    /// side left its domain or because the error estimate kept failing.
    Collapsed { error: Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Result of an integration: accepted nodes, dense output and located events.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dense: DenseOutput<N>,
    pub events: Vec<EventHit>,
    pub termination: Termination,
    pub stats: OdeStats,
}

impl<const N: usize> OdeSolution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

fn initial_step<const N: usize, F>(f: &F, t0: f64, y0: &[f64; N], k0: &[f64; N], span: f64, tol: &Tolerance) -> f64
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let norm = |v: &[f64; N]| {
        let s: f64 = v
            .iter()
            .zip(y0)
            .map(|(a, y)| {
                let sc = tol.atol + tol.rtol * y.abs();
                (a / sc) * (a / sc)
            })
            .sum();
        (s / N as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(k0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = combine(y0, h0, &[(1.0, k0)]);
    let h1 = match f(t0 + h0, &y1) {
        Ok(k1) => {
            let mut diff = [0.0; N];
            for i in 0..N {
                diff[i] = k1[i] - k0[i];
            }
            let d2 = norm(&diff) / h0;
            let m = d1.max(d2);
            if m <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / m).powf(1.0 / 5.0)
            }
        }
        Err(_) => h0 * 1e-2,
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (`t_end >= t0`).
///
/// `indicators` maps a state to event activity flags. A flip of flag `k` between
/// the start and end of an accepted step is located on the dense output to within
/// `options.event_time_tol` and handled per `actions[k]`. A right-hand-side
/// failure with a collapse error shortens the step; if the step cannot be
/// shortened further, for that reason or because the error estimate keeps
/// failing, the integration ends with [`Termination::Collapsed`] and the
/// solution up to that point.
pub fn integrate<const N: usize, const E: usize, F, G>(
    f: F,
    indicators: G,
    actions: [EventAction; E],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    options: &OdeOptions,
) -> Result<OdeSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> [bool; E],
{
    if !(t_end >= t0) {
        return Err(Error::Argument(format!("integration span [{t0}, {t_end}] is reversed")));
    }
    let evals = std::cell::Cell::new(0usize);
    let f = |t: f64, y: &[f64; N]| {
        evals.set(evals.get() + 1);
        f(t, y)
    };
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0],
        dense: DenseOutput::default(),
        events: Vec::new(),
        termination: Termination::Completed,
        stats: OdeStats::default(),
    };
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(sol);
    }
    let tol = options.tol;
    let h_min = options.min_step_fraction * span.max(t_end.abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y).map_err(|e| Error::Argument(format!("inadmissible initial state: {e}")))?;
    let mut flags = indicators(t, &y);
    let mut h = initial_step(&f, t, &y, &k1, span, &tol);
    let mut last_rejected = false;
    // Error of the previous accepted step, for the proportional-integral controller.
    let mut err_prev = 1e-4f64;

    while t < t_end {
        if sol.stats.accepted + sol.stats.rejected >= options.max_steps {
            return Err(Error::StepUnderflow { t, h, state: y.to_vec() });
        }
        let last = t + h >= t_end - 1e-15 * t_end.abs().max(1.0);
        if last {
            h = t_end - t;
        }
        let step = match dopri_step(&f, t, &y, &k1, h, &tol) {
            Ok(s) if s.y.iter().all(|v| v.is_finite()) => s,
            outcome @ (Ok(_) | Err(Error::Collapse { .. }) | Err(Error::Domain { .. })) => {
                // A stage left the domain: shorten the step.
                sol.stats.rejected += 1;
                last_rejected = true;
                h *= 0.25;
                if h < h_min {
                    let error = match outcome {
                        Err(e) => e,
                        Ok(_) => Error::StepUnderflow { t, h, state: y.to_vec() },
                    };
                    sol.termination = Termination::Collapsed { error };
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if step.err > 1.0 {
            sol.stats.rejected += 1;
            last_rejected = true;
            h *= (0.9 * step.err.powf(-0.2)).clamp(0.2, 1.0);
            if h < h_min {
                sol.termination = Termination::Collapsed {
                    error: Error::StepUnderflow { t, h, state: y.to_vec() },
                };
                break;
            }
            continue;
        }

        let t_new = if last { t_end } else { t + h };
        let seg = DenseSegment { t0: t, h, end: t_new, coef: step.coef };
        let new_flags = indicators(t_new, &step.y);

        // Earliest flag flip inside the step, if any.
        let mut first: Option<(f64, f64, usize)> = None;
        for k in 0..E {
            if new_flags[k] != flags[k] {
                let (lo, hi) = locate_flip(&seg, &indicators, k, flags[k], options.event_time_tol);
                if first.map_or(true, |(_, h_prev, _)| hi < h_prev) {
                    first = Some((lo, hi, k));
                }
            }
        }

        let Some((lo, hi, k)) = first else {
            sol.stats.accepted += 1;
            sol.dense.segments.push(seg);
            sol.t.push(t_new);
            sol.y.push(step.y);
            t = t_new;
            y = step.y;
            k1 = step.k_end;
            let err = step.err.max(1e-10);
            let fac = (0.9 * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA)).clamp(0.2, 5.0);
            err_prev = err.max(1e-4);
            h *= if last_rejected { fac.min(1.0) } else { fac };
            last_rejected = false;
            continue;
        };

        let hit = EventHit {
            index: k,
            t: hi,
            rising: !flags[k],
        };
        match actions[k] {
            EventAction::Stop => {
                // Keep the pre-crossing side so the final sample is still admissible.
                if lo > t {
                    let y_lo = seg.eval(lo);
                    sol.stats.accepted += 1;
                    sol.dense.segments.push(DenseSegment { t0: t, h: lo - t, end: lo, coef: trim(&seg, lo) });
                    sol.t.push(lo);
                    sol.y.push(y_lo);
                }
                sol.events.push(hit);
                sol.termination = Termination::Stopped(hit);
                break;
            }
            EventAction::Restart => {
                // Re-take the step to the event time and restart from there. A
                // re-taken step and the interpolant differ at the error level,
                // so the bracket is settled again on re-taken steps: the restart
                // state must lie past the switch.
                let width = options.event_time_tol;
                let retake = |te: f64| -> Result<(bool, Step<N>)> {
                    let s = dopri_step(&f, t, &y, &k1, te - t, &tol)?;
                    Ok((indicators(te, &s.y)[k] != flags[k], s))
                };
                let (mut lo, mut hi) = (lo, hi);
                let (mut past, mut s_e) = retake(hi)?;
                let mut gap = width;
                while !past && hi < t_new {
                    lo = hi;
                    hi = (hi + gap).min(t_new);
                    gap *= 2.0;
                    (past, s_e) = retake(hi)?;
                }
                gap = width;
                while lo > t {
                    let (before_lo, s_lo) = retake(lo)?;
                    if !before_lo {
                        break;
                    }
                    (hi, s_e) = (lo, s_lo);
                    lo = (lo - gap).max(t);
                    gap *= 2.0;
                }
                while hi - lo > width {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let (p, s) = retake(mid)?;
                    if p {
                        (hi, s_e) = (mid, s);
                    } else {
                        lo = mid;
                    }
                }
                let hit = EventHit { t: hi, ..hit };
                let h_e = hi - t;
                sol.stats.accepted += 1;
                sol.dense.segments.push(DenseSegment { t0: t, h: h_e, end: hi, coef: s_e.coef });
                sol.t.push(hi);
                sol.y.push(s_e.y);
                sol.events.push(hit);
                t = hi;
                y = s_e.y;
                k1 = f(t, &y)?;
                flags[k] = !flags[k];
                let fresh = indicators(t, &y);
                for (m, fl) in flags.iter_mut().enumerate() {
                    if m != k {
                        *fl = fresh[m];
                    }
                }
                h = (h - h_e).max(h_e).min(t_end - t).max(h_min * 10.0);
                last_rejected = false;
            }
        }
    }
    sol.stats.rhs_evals = evals.get();
    Ok(sol)
}

/// Coefficients of `seg` restricted to `[seg.t0, t1]`, re-expanded by sampling.
fn trim<const N: usize>(seg: &DenseSegment<N>, t1: f64) -> [[f64; N]; 5] {
    // The restricted quartic is rebuilt from its values at five points; the
    // Hermite-like basis used by the extension is fixed, so solve for it directly.
    let h = t1 - seg.t0;
    let s_nodes = [0.0, 0.25, 0.5, 0.75, 1.0];
    let vals: Vec<[f64; N]> = s_nodes.iter().map(|s| seg.eval(seg.t0 + s * h)).collect();
    let mut coef = [[0.0; N]; 5];
    for i in 0..N {
        // Basis functions of s: 1, s, s(1-s), s^2(1-s), s^2(1-s)^2.
        let basis = |s: f64| [1.0, s, s * (1.0 - s), s * s * (1.0 - s), s * s * (1.0 - s) * (1.0 - s)];
        let mut m = [[0.0; 5]; 5];
        let mut rhs = [0.0; 5];
        for (r, s) in s_nodes.iter().enumerate() {
            m[r] = basis(*s);
            rhs[r] = vals[r][i];
        }
        let sol = solve5(m, rhs);
        for (c, v) in coef.iter_mut().zip(sol) {
            c[i] = v;
        }
    }
    coef
}

fn solve5(mut m: [[f64; 5]; 5], mut b: [f64; 5]) -> [f64; 5] {
    for col in 0..5 {
        let piv = (col..5)
            .max_by(|&a, &c| m[a][col].abs().total_cmp(&m[c][col].abs()))
            .unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..5 {
            let f = m[r][col] / m[col][col];
            for c in col..5 {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for r in (0..5).rev() {
        let mut s = b[r];
        for c in r + 1..5 {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    x
}

/// Bisects for the first time flag `k` differs from `before`. Returns a bracket
/// `(lo, hi)` with the old value at `lo` and the new one at `hi`.
fn locate_flip<const N: usize, const E: usize, G>(
    seg: &DenseSegment<N>,
    indicators: &G,
    k: usize,
    before: bool,
    width: f64,
) -> (f64, f64)
where
    G: Fn(f64, &[f64; N]) -> [bool; E],
{
    let mut lo = seg.t0;
    let mut hi = seg.t1();
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if indicators(mid, &seg.eval(mid))[k] == before {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
