//! Run configuration read from TOML: model, grid, solver, simulation and
//! output sections.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_sim::DeviationMenu;
use crate::grid::GridConfig;
use crate::model::{Domain, GameSpec, ScalarFn};
use crate::sde::PathConfig;
use crate::vi::{PenalizationParams, ProjectionParams};

/// A coefficient: a number, an expression string, or a named family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Expr(String),
    Family(Family),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Constant { value: f64 },
    Affine { c: f64, a_t: f64, a_x: f64 },
    Quadratic { k1: f64, k2: f64 },
    PositivePartQuadratic { quad: f64, lin: f64, c: f64 },
    PiecewisePower { p: f64, n: f64, c: f64 },
}

impl Coefficient {
    fn to_fn(&self, key: &str) -> Result<ScalarFn> {
        Ok(match self {
            Coefficient::Number(v) => ScalarFn::Constant(*v),
            Coefficient::Expr(src) => {
                let ast = crate::expr::parse(src).map_err(|e| Error::Config(format!("model.{key}: {e}")))?;
                ScalarFn::Expr(Arc::new(ast))
            }
            Coefficient::Family(f) => match *f {
                Family::Constant { value } => ScalarFn::Constant(value),
                Family::Affine { c, a_t, a_x } => ScalarFn::Affine { c, a_t, a_x },
                Family::Quadratic { k1, k2 } => ScalarFn::Quadratic { k1, k2 },
                Family::PositivePartQuadratic { quad, lin, c } => ScalarFn::PositivePartQuadratic { quad, lin, c },
                Family::PiecewisePower { p, n, c } => ScalarFn::PiecewisePower { p, n, c },
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub domain: Domain,
    pub mu: Coefficient,
    #[serde(default)]
    pub sigma0: f64,
    #[serde(default)]
    pub sigma1: f64,
    pub g: Coefficient,
    pub h: Coefficient,
    pub r: f64,
    pub alpha0: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Penalized,
    Projected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: SchemeKind,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_eps")]
    pub delta: f64,
    /// Joint `eps = delta` sequence used by the convergence sweep.
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_iters")]
    pub newton_max_iters: usize,
    #[serde(default = "default_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "default_fp_sweeps")]
    pub fp_max_sweeps: usize,
    /// Overrides of the boundary extraction thresholds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
}

fn default_eps() -> f64 {
    1e-5
}
fn default_schedule() -> Vec<f64> {
    vec![1e-2, 3e-3, 1e-3]
}
fn default_newton_tol() -> f64 {
    1e-9
}
fn default_newton_iters() -> usize {
    100
}
fn default_fp_tol() -> f64 {
    ProjectionParams::default().fp_tol
}
fn default_fp_sweeps() -> usize {
    ProjectionParams::default().fp_max_sweeps
}

impl SolverConfig {
    pub fn penalization(&self) -> PenalizationParams {
        PenalizationParams {
            eps: self.eps,
            delta: self.delta,
            newton_tol: self.newton_tol,
            newton_max_iters: self.newton_max_iters,
        }
    }

    pub fn projection(&self) -> ProjectionParams {
        ProjectionParams { fp_tol: self.fp_tol, fp_max_sweeps: self.fp_max_sweeps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub t0: f64,
    pub x0: f64,
    #[serde(default)]
    pub antithetic: bool,
    /// Paths written to the sample-path CSV.
    #[serde(default = "default_dump")]
    pub dump_paths: usize,
    #[serde(default = "default_menu")]
    pub menu: DeviationMenu,
}

fn default_dump() -> usize {
    20
}

fn default_menu() -> DeviationMenu {
    DeviationMenu {
        fixed_times: vec![0.0, 0.25, 0.5],
        threshold_shifts: vec![-0.2, 0.2],
        control_shifts: vec![-0.3, 0.3],
        control_constants: vec![1.5],
        include_no_control: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Bin]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub simulation: SimulationConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses and checks the document. Syntax errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Fully resolved document, defaults included.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn spec(&self) -> Result<GameSpec> {
        let m = &self.model;
        let spec = GameSpec {
            domain: m.domain,
            mu: m.mu.to_fn("mu")?,
            sigma0: m.sigma0,
            sigma1: m.sigma1,
            g: m.g.to_fn("g")?,
            h: m.h.to_fn("h")?,
            r: m.r,
            alpha0: m.alpha0,
            horizon: m.horizon,
        };
        spec.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("model: {msg}")),
            other => other,
        })?;
        Ok(spec)
    }

    pub fn path_config(&self) -> Result<PathConfig> {
        PathConfig::new(self.simulation.n_steps, self.simulation.seed)
    }

    fn check(&self) -> Result<()> {
        self.spec()?;
        let s = &self.solver;
        if s.scheme == SchemeKind::Penalized {
            s.penalization().validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        }
        if s.schedule.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config(format!("solver.schedule: values must lie in (0, 1), got {:?}", s.schedule)));
        }
        let sim = &self.simulation;
        if sim.n_paths == 0 || sim.n_steps == 0 {
            return Err(Error::Config("simulation: n_paths and n_steps must be positive".into()));
        }
        if !(sim.t0 >= 0.0 && sim.t0 < self.model.horizon) {
            return Err(Error::Config(format!("simulation.t0: must lie in [0, horizon), got {}", sim.t0)));
        }
        if self.output.dir.is_empty() {
            return Err(Error::Config("output.dir: must not be empty".into()));
        }
        Ok(())
    }
}

/// Shipped benchmark configuration.
pub const BENCHMARK_TOML: &str = include_str!("../../../configs/benchmark.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_parses() {
        let cfg = RunConfig::from_toml(BENCHMARK_TOML).unwrap();
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.domain, Domain::HalfLine);
        assert_eq!(spec.h.value(0.0, 2.0).unwrap(), 3.0);
        assert_eq!(cfg.grid.x_max, 3.0);
    }

    #[test]
    fn resolved_round_trip() {
        let cfg = RunConfig::from_toml(BENCHMARK_TOML).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn zero_alpha0_rejected() {
        let text = BENCHMARK_TOML.replace("alpha0 = 1.0", "alpha0 = 0.0");
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("alpha0")), "{err}");
    }

    #[test]
    fn syntax_error_is_located() {
        let err = RunConfig::from_toml("[model]\ndomain = \n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn expression_coefficients() {
        let text = BENCHMARK_TOML.replace("h = { family = \"quadratic\", k1 = 1.0, k2 = 1.0 }", "h = \"x^2 - 1\"");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.spec().unwrap().h.value(0.0, 3.0).unwrap(), 8.0);
        let bad = BENCHMARK_TOML.replace("h = { family = \"quadratic\", k1 = 1.0, k2 = 1.0 }", "h = \"x^\"");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(m)) if m.contains("model.h")));
    }
}
