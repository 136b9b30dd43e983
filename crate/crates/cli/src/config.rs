//! Run configuration: one JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};

use conflict_game::analysis::{Case, SweepAxis, SweepGrid};
use conflict_game::solvers::{OdeOptions, SolverOptions, TerminalMode, Tolerance};
use conflict_game::ModelParams;
use serde::{Deserialize, Serialize};

use crate::Failure;

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-12
}

fn default_shooting_tol() -> f64 {
    1e-8
}

fn default_max_iterations() -> usize {
    80
}

fn default_max_cells() -> usize {
    10_000
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative error tolerance of the integrator.
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    /// Absolute error tolerance of the integrator.
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Convergence threshold on the scaled terminal defect.
    #[serde(default = "default_shooting_tol")]
    pub shooting_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: default_rtol(),
            atol: default_atol(),
            shooting_tol: default_shooting_tol(),
            max_iterations: default_max_iterations(),
        }
    }
}

impl Tolerances {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            ode: OdeOptions {
                tol: Tolerance {
                    rtol: self.rtol,
                    atol: self.atol,
                },
                ..OdeOptions::default()
            },
            shooting_tol: self.shooting_tol,
            max_iterations: self.max_iterations,
        }
    }
}

/// Explicit axis values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisValues {
    pub name: String,
    pub values: Vec<f64>,
}

/// Evenly spaced axis values, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values(AxisValues),
    Range(AxisRange),
}

impl AxisSpec {
    pub fn axis(&self) -> SweepAxis {
        match self {
            AxisSpec::Values(v) => SweepAxis {
                name: v.name.clone(),
                values: v.values.clone(),
            },
            AxisSpec::Range(r) => SweepAxis::linspace(&r.name, r.start, r.stop, r.points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One or two axes; the first varies slowest.
    pub axes: Vec<AxisSpec>,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

/// Starting point of the steady-state search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyGuess {
    pub x: [f64; 2],
    pub lam: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving every output file.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write trajectories on this many evenly spaced times instead of the
    /// integrator's own nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            resample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ModelParams,
    pub x10: f64,
    pub x20: f64,
    #[serde(default)]
    pub terminal_mode: TerminalMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_guess: Option<SteadyGuess>,
}

fn invalid(field: &str, value: impl std::fmt::Display, bound: &str) -> Failure {
    Failure::Config(format!("invalid `{field}` = {value}: must satisfy {bound}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, Failure> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Failure::Config(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, Failure> {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|f| match f {
            Failure::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant not already enforced by the parser.
    pub fn validate(&self) -> Result<(), Failure> {
        self.params.validate().map_err(|e| Failure::Config(e.to_string()))?;
        for (field, v) in [("x10", self.x10), ("x20", self.x20)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, v, "initial wealth > 0"));
            }
        }
        self.terminal_mode.validate().map_err(|e| Failure::Config(e.to_string()))?;
        let t = &self.tolerances;
        for (field, v) in [("tolerances.rtol", t.rtol), ("tolerances.atol", t.atol), ("tolerances.shooting_tol", t.shooting_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, v, "> 0"));
            }
        }
        if t.max_iterations == 0 {
            return Err(invalid("tolerances.max_iterations", 0, ">= 1"));
        }
        if self.output.resample.is_some_and(|n| n < 2) {
            return Err(invalid("output.resample", self.output.resample.unwrap_or(0), ">= 2"));
        }
        if let Some(g) = &self.steady_guess {
            for v in g.x.iter().chain(&g.lam) {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(invalid("steady_guess", v, "every entry > 0"));
                }
            }
        }
        if let Some(s) = &self.sweep {
            for spec in &s.axes {
                if let AxisSpec::Range(r) = spec {
                    if r.points == 0 || !r.start.is_finite() || !r.stop.is_finite() {
                        return Err(invalid(&format!("sweep axis `{}`", r.name), r.points, "points >= 1 and finite ends"));
                    }
                }
            }
            self.grid()?.cases().map_err(|e| Failure::Config(format!("sweep: {e}")))?;
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.tolerances.solver_options()
    }

    /// Sweep grid of the config; a config error if no sweep is configured.
    pub fn grid(&self) -> Result<SweepGrid, Failure> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Failure::Config("config has no `sweep` section".into()))?;
        Ok(SweepGrid {
            axes: s.axes.iter().map(AxisSpec::axis).collect(),
            base: Case {
                params: self.params,
                x10: self.x10,
                x20: self.x20,
            },
            mode: self.terminal_mode,
            options: self.solver_options(),
            max_cells: s.max_cells,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "params": {"delta": 0.5, "theta": 3.0, "gamma": 0.9, "horizon_T": 5.0,
                   "eta": 2.0, "tech_A": 1.0, "tech_alpha": 0.5, "pi_weight": 0.5},
        "x10": 10.0, "x20": 3.0
    }"#;

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.terminal_mode, TerminalMode::ExhaustWealth);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn round_trip_is_identity() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.terminal_mode = TerminalMode::FreePrice { epsilon: 0.1 };
        cfg.sweep = Some(SweepConfig {
            axes: vec![
                AxisSpec::Range(AxisRange {
                    name: "gamma".into(),
                    start: 0.1,
                    stop: 0.7,
                    points: 3,
                }),
                AxisSpec::Values(AxisValues {
                    name: "x20".into(),
                    values: vec![0.1 + 0.2, 1.0 / 3.0],
                }),
            ],
            max_cells: 9,
        });
        let again = RunConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"x20\": 3.0", "\"x20\": 3.0, \"x30\": 1.0");
        assert!(matches!(RunConfig::parse(&text), Err(Failure::Config(_))));
    }

    #[test]
    fn invalid_parameter_names_field_and_bound() {
        let text = MINIMAL.replace("\"gamma\": 0.9", "\"gamma\": 1.5");
        let Err(Failure::Config(msg)) = RunConfig::parse(&text) else {
            panic!("expected a config error");
        };
        assert!(msg.contains("gamma") && msg.contains("0 < gamma < 1"), "{msg}");
    }

    #[test]
    fn sweep_axes_are_checked() {
        let bad = MINIMAL.replace(
            "\"x20\": 3.0",
            "\"x20\": 3.0, \"sweep\": {\"axes\": [{\"name\": \"kappa\", \"values\": [1.0]}]}",
        );
        assert!(RunConfig::parse(&bad).is_err());
        let out_of_range = MINIMAL.replace(
            "\"x20\": 3.0",
            "\"x20\": 3.0, \"sweep\": {\"axes\": [{\"name\": \"delta\", \"start\": 0.5, \"stop\": 1.5, \"points\": 3}]}",
        );
        assert!(RunConfig::parse(&out_of_range).is_err());
    }
}
