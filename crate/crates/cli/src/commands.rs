//! The five subcommands. Each writes its files and returns a short summary for
//! standard output.

use std::fmt::Write as _;
use std::io::IsTerminal;

use conflict_game::analysis::{
    aggregate_welfare_gap, baseline_welfare, efficiency_loss_at_weight, run_case, sweep_with_progress, EfficiencyLoss,
    PathSummary, Regime, RegimeReport,
};
use conflict_game::cooperative::{coop_solve, disaggregate, pooled_params, Baseline};
use conflict_game::solvers::{
    default_guess, steady_state, validate_trivial, GameEvent, Simulation, SteadyOptions, SteadyState, TrajectorySample,
};
use conflict_game::GameState;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, opt, plot_rows, svg, trajectory_row, OutDir, Series, TRAJECTORY_HEADER};
use crate::Failure;

#[derive(Debug, Serialize)]
struct SolverStats {
    lam0: [f64; 2],
    residual: [f64; 2],
    iterations: usize,
    converged: bool,
    accepted_steps: usize,
    rejected_steps: usize,
    rhs_evals: usize,
}

impl SolverStats {
    fn of(sim: &Simulation) -> SolverStats {
        let s = &sim.trajectory.stats;
        SolverStats {
            lam0: sim.shooting.lam0,
            residual: sim.shooting.residual,
            iterations: sim.shooting.iterations,
            converged: sim.shooting.converged,
            accepted_steps: s.accepted,
            rejected_steps: s.rejected,
            rhs_evals: s.rhs_evals,
        }
    }
}

#[derive(Debug, Serialize)]
struct SimulationReport<'a> {
    regime: Regime,
    onset_times: [Option<f64>; 2],
    welfare: [f64; 2],
    coop_welfare: Option<[f64; 2]>,
    efficiency_loss: Option<EfficiencyLoss>,
    deadweight: f64,
    cumulative_outlays: [f64; 2],
    inequality: [PathSummary; 2],
    events: &'a [GameEvent],
    solver_stats: SolverStats,
}

fn samples(sim: &Simulation, cfg: &RunConfig) -> Result<Vec<TrajectorySample>, Failure> {
    Ok(match cfg.output.resample {
        Some(n) => sim.trajectory.resample(n)?,
        None => sim.trajectory.samples.clone(),
    })
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Nonaggressive => "nonaggressive",
        Regime::Conflict => "conflict",
    }
}

fn solve(cfg: &RunConfig) -> Result<(Simulation, RegimeReport), Failure> {
    Ok(run_case(cfg.x10, cfg.x20, &cfg.params, cfg.terminal_mode, &cfg.solver_options())?)
}

/// Shoots the equilibrium path; writes `trajectory.csv`, `report.json` and,
/// with `plot`, `plot.csv` and `plot.svg`.
pub fn simulate(cfg: &RunConfig, plot: bool) -> Result<String, Failure> {
    if cfg.sweep.is_some() {
        return Err(Failure::Config(
            "config has a `sweep` section; run the sweep command or remove it".into(),
        ));
    }
    let out = OutDir::create(&cfg.output.dir)?;
    let (sim, report) = solve(cfg)?;
    let rows = samples(&sim, cfg)?;
    out.write_csv("trajectory.csv", &TRAJECTORY_HEADER, rows.iter().map(trajectory_row))?;
    out.write_json(
        "report.json",
        &SimulationReport {
            regime: report.regime,
            onset_times: report.onset_times,
            welfare: report.welfare,
            coop_welfare: report.coop_welfare,
            efficiency_loss: report.efficiency_loss,
            deadweight: report.cumulative_deadweight,
            cumulative_outlays: report.cumulative_outlays,
            inequality: report.inequality,
            events: &sim.trajectory.events,
            solver_stats: SolverStats::of(&sim),
        },
    )?;
    if plot {
        let series = |name, f: fn(&TrajectorySample) -> f64| Series {
            name,
            points: rows.iter().map(|s| (s.state.t, f(s))).collect(),
        };
        let panels = [
            ("wealth", vec![series("x1", |s| s.state.x[0]), series("x2", |s| s.state.x[1])]),
            ("appropriation", vec![series("a1", |s| s.controls[0].a), series("a2", |s| s.controls[1].a)]),
        ];
        out.write_csv("plot.csv", &["series", "t", "value"], plot_rows(&panels))?;
        out.write("plot.svg", svg(&panels).as_bytes())?;
    }
    let mut s = String::new();
    writeln!(s, "regime: {}", regime_name(report.regime)).ok();
    writeln!(s, "lambda(0): {} {}", num(sim.shooting.lam0[0]), num(sim.shooting.lam0[1])).ok();
    writeln!(s, "welfare: {} {}", num(report.welfare[0]), num(report.welfare[1])).ok();
    writeln!(s, "deadweight: {}", num(report.cumulative_deadweight)).ok();
    write!(s, "wrote {} rows to {}", rows.len(), out.path("trajectory.csv").display()).ok();
    Ok(s)
}

#[derive(Debug, Serialize)]
struct CoopReport {
    lam0: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    collapse_time: Option<f64>,
    /// `c(0) T / x(0)` for the pooled stock.
    consumption_ratio: f64,
    welfare: [f64; 2],
    accepted_steps: usize,
    rejected_steps: usize,
    rhs_evals: usize,
}

/// Solves the cooperative plan on pooled wealth; writes `cooperative.csv` and
/// `cooperative.json`.
pub fn cooperate(cfg: &RunConfig) -> Result<String, Failure> {
    let out = OutDir::create(&cfg.output.dir)?;
    let pooled = pooled_params(&cfg.params);
    let x0 = cfg.x10 + cfg.x20;
    let sol = coop_solve(x0, &pooled, cfg.terminal_mode, &cfg.solver_options())?;
    let traj = &sol.trajectory;
    let shares = disaggregate(traj, cfg.params.pi_weight)?;
    let mut rows = Vec::with_capacity(shares.len());
    for (s, sh) in traj.samples.iter().zip(&shares) {
        rows.push(
            [s.t, s.x, s.lam, traj.consumption(s)?, sh.x[0], sh.x[1], sh.c[0], sh.c[1]]
                .into_iter()
                .map(num)
                .collect::<Vec<_>>(),
        );
    }
    out.write_csv("cooperative.csv", &["t", "x", "lambda", "c", "x1", "x2", "c1", "c2"], rows)?;
    let ratio = traj.consumption(&traj.samples[0])? * pooled.horizon_t / x0;
    let welfare = baseline_welfare(&Baseline {
        pi_weight: cfg.params.pi_weight,
        solution: sol.clone(),
    })?;
    out.write_json(
        "cooperative.json",
        &CoopReport {
            lam0: sol.shooting.lam0,
            residual: sol.shooting.residual,
            iterations: sol.shooting.iterations,
            converged: sol.shooting.converged,
            collapse_time: traj.collapse_time,
            consumption_ratio: ratio,
            welfare,
            accepted_steps: traj.stats.accepted,
            rejected_steps: traj.stats.rejected,
            rhs_evals: traj.stats.rhs_evals,
        },
    )?;
    let mut s = String::new();
    writeln!(s, "lambda(0): {}", num(sol.shooting.lam0)).ok();
    writeln!(s, "c(0)*T/x0: {}", num(ratio)).ok();
    write!(s, "x(T)/x0: {}", num(traj.final_state().x / x0)).ok();
    Ok(s)
}

#[derive(Debug, Serialize)]
struct SweepFailure<'a> {
    coords: &'a [f64],
    error: &'a str,
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    axes: Vec<&'a str>,
    cells: usize,
    succeeded: usize,
    failed: usize,
    conflict: usize,
    nonaggressive: usize,
    failures: Vec<SweepFailure<'a>>,
}

const SWEEP_COLUMNS: [&str; 17] = [
    "status",
    "regime",
    "onset1",
    "onset2",
    "welfare1",
    "welfare2",
    "coop_welfare1",
    "coop_welfare2",
    "efficiency_loss",
    "deadweight",
    "outlays1",
    "outlays2",
    "lambda1_0",
    "lambda2_0",
    "inequality1_final",
    "inequality2_final",
    "error",
];

/// Runs every cell of the configured grid; writes `sweep.csv` and
/// `sweep.json`. Fails only if no cell succeeds.
pub fn sweep(cfg: &RunConfig) -> Result<String, Failure> {
    let grid = cfg.grid()?;
    let out = OutDir::create(&cfg.output.dir)?;
    let tty = std::io::stderr().is_terminal();
    let cells = sweep_with_progress(&grid, |done, total| {
        if tty {
            eprint!("\rsweep: {done}/{total} cells");
        } else if done == total || done % (total / 10).max(1) == 0 {
            eprintln!("sweep: {done}/{total} cells");
        }
    })?;
    if tty {
        eprintln!();
    }
    let names: Vec<&str> = grid.axes.iter().map(|a| a.name.as_str()).collect();
    let header: Vec<&str> = names.iter().copied().chain(SWEEP_COLUMNS).collect();
    let rows = cells.iter().map(|cell| {
        let mut row: Vec<String> = cell.coords.iter().map(|&v| num(v)).collect();
        match &cell.outcome {
            Ok(r) => {
                let lam = cell.lam0.unwrap_or([f64::NAN; 2]);
                row.extend(["ok".to_string(), regime_name(r.regime).to_string()]);
                row.extend(r.onset_times.map(opt));
                row.extend(r.welfare.map(num));
                row.extend(r.coop_welfare.map_or([None; 2], |w| w.map(Some)).map(opt));
                row.push(opt(r.efficiency_loss.map(|l| l.total)));
                row.push(num(r.cumulative_deadweight));
                row.extend(r.cumulative_outlays.map(num));
                row.extend(lam.map(num));
                row.extend(r.inequality.map(|q| num(q.last)));
                row.push(String::new());
            }
            Err(e) => {
                row.push("failed".to_string());
                row.extend(std::iter::repeat(String::new()).take(SWEEP_COLUMNS.len() - 2));
                row.push(e.clone());
            }
        }
        row
    });
    out.write_csv("sweep.csv", &header, rows)?;
    let ok: Vec<&RegimeReport> = cells.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
    let summary = SweepSummary {
        axes: names,
        cells: cells.len(),
        succeeded: ok.len(),
        failed: cells.len() - ok.len(),
        conflict: ok.iter().filter(|r| r.regime == Regime::Conflict).count(),
        nonaggressive: ok.iter().filter(|r| r.regime == Regime::Nonaggressive).count(),
        failures: cells
            .iter()
            .filter_map(|c| {
                c.outcome.as_ref().err().map(|e| SweepFailure {
                    coords: &c.coords,
                    error: e,
                })
            })
            .collect(),
    };
    out.write_json("sweep.json", &summary)?;
    if summary.succeeded == 0 {
        return Err(Failure::Numerical(format!("all {} sweep cells failed", summary.cells)));
    }
    Ok(format!(
        "{} cells: {} conflict, {} nonaggressive, {} failed\nwrote {}",
        summary.cells,
        summary.conflict,
        summary.nonaggressive,
        summary.failed,
        out.path("sweep.csv").display()
    ))
}

#[derive(Debug, Serialize)]
struct SteadyReport {
    trivial: SteadyState,
    interior: Option<SteadyState>,
    interior_error: Option<String>,
}

/// Checks the trivial stationary state and searches for an interior one;
/// writes `steady.json`. Fails if the interior search does not converge.
pub fn steady(cfg: &RunConfig) -> Result<String, Failure> {
    let out = OutDir::create(&cfg.output.dir)?;
    let p = &cfg.params;
    let trivial = validate_trivial(p)?;
    let (x, lam) = match cfg.steady_guess {
        Some(g) => (g.x, g.lam),
        None => ([cfg.x10, cfg.x20], default_guess(cfg.x10, cfg.x20, p)?),
    };
    let guess = GameState::new(0.0, x[0], x[1], lam[0], lam[1]);
    let options = SteadyOptions {
        tol: cfg.tolerances.shooting_tol,
        ..SteadyOptions::default()
    };
    let (interior, interior_error) = match steady_state(&guess, p, &options) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut s = String::new();
    writeln!(s, "trivial: residual {}", num(trivial.residual_norm)).ok();
    if let Some(i) = &interior {
        writeln!(s, "interior: x = {} {}, residual {}", num(i.x[0]), num(i.x[1]), num(i.residual_norm)).ok();
    }
    out.write_json(
        "steady.json",
        &SteadyReport {
            trivial,
            interior,
            interior_error: interior_error.clone(),
        },
    )?;
    if let Some(e) = interior_error {
        return Err(Failure::Numerical(format!("interior steady state not found: {e}")));
    }
    write!(s, "wrote {}", out.path("steady.json").display()).ok();
    Ok(s)
}

#[derive(Debug, Serialize)]
struct Benchmark {
    pi_weight: f64,
    coop_welfare: [f64; 2],
    loss: EfficiencyLoss,
}

#[derive(Debug, Serialize)]
struct Comparison {
    regime: Regime,
    welfare: [f64; 2],
    /// Cooperative shares equal to the initial endowment shares.
    share_matched: Benchmark,
    /// Cooperative shares of one half each.
    equal_split: Benchmark,
    /// Felicity of cooperative aggregate consumption minus that of the game's
    /// total consumption.
    aggregate_welfare_gap: f64,
    deadweight: f64,
    cumulative_outlays: [f64; 2],
}

/// Sets the equilibrium path against the cooperative plan; writes
/// `compare.json`.
pub fn compare(cfg: &RunConfig) -> Result<String, Failure> {
    let out = OutDir::create(&cfg.output.dir)?;
    let opts = cfg.solver_options();
    let (sim, report) = solve(cfg)?;
    let traj = &sim.trajectory;
    let benchmark = |w: f64| -> Result<Benchmark, Failure> {
        let (coop_welfare, loss) = efficiency_loss_at_weight(traj, w, cfg.terminal_mode, &opts)?;
        Ok(Benchmark {
            pi_weight: w,
            coop_welfare,
            loss,
        })
    };
    let c = Comparison {
        regime: report.regime,
        welfare: report.welfare,
        share_matched: benchmark(cfg.x10 / (cfg.x10 + cfg.x20))?,
        equal_split: benchmark(0.5)?,
        aggregate_welfare_gap: aggregate_welfare_gap(traj, cfg.terminal_mode, &opts)?,
        deadweight: report.cumulative_deadweight,
        cumulative_outlays: report.cumulative_outlays,
    };
    out.write_json("compare.json", &c)?;
    let mut s = String::new();
    writeln!(s, "regime: {}", regime_name(c.regime)).ok();
    writeln!(s, "efficiency loss (share-matched): {}", num(c.share_matched.loss.total)).ok();
    writeln!(s, "efficiency loss (equal split): {}", num(c.equal_split.loss.total)).ok();
    writeln!(s, "aggregate welfare gap: {}", num(c.aggregate_welfare_gap)).ok();
    write!(s, "wrote {}", out.path("compare.json").display()).ok();
    Ok(s)
}
