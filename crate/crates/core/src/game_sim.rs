//! Monte Carlo evaluation of the game payoff for strategy pairs built from
//! the extracted boundaries, and the saddle-point check against a finite
//! menu of unilateral deviations.
//!
//! All strategies in one run share the normals of each path (common random
//! numbers). Per-path payoffs are computed in parallel, collected in path
//! order and summed pairwise, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundaries::BoundaryPair;
use crate::error::{Error, Result};
use crate::model::{Domain, GameSpec};
use crate::sde::{first_hitting, normals, reflect_along, PathConfig, ReflectionMode, Side};
use crate::vi::ValueSurface;

/// Frozen constant `c` of the allowance `c (sqrt(dt) + dx)`: slope plus
/// three standard errors of the regression of `|J(eq) - v|` on
/// `sqrt(dt) + dx` over three benchmark resolutions and three starting
/// points, 10^5 paths each (`examples/calibrate.rs`).
pub const DISCRETIZATION_ALLOWANCE: f64 = 2.5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StopRule {
    /// Stop the first time the state is at or below `a`.
    HitBoundaryA,
    /// Stop after elapsed time `s` (rounded up to the path lattice).
    FixedTime(f64),
    /// Stop at or below `a + shift`.
    ThresholdShift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ControlRule {
    /// Minimal push keeping the state at or below `b`.
    ReflectAtB,
    NoControl,
    /// Reflect at `b + shift`.
    ReflectAtShifted(f64),
    /// Reflect at a constant level.
    ReflectAtConstant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyPair {
    pub stop: StopRule,
    pub control: ControlRule,
}

impl StrategyPair {
    pub const EQUILIBRIUM: StrategyPair = StrategyPair { stop: StopRule::HitBoundaryA, control: ControlRule::ReflectAtB };

    pub fn label(&self) -> String {
        let stop = match self.stop {
            StopRule::HitBoundaryA => "stop at a".to_string(),
            StopRule::FixedTime(s) => format!("stop at s={s}"),
            StopRule::ThresholdShift(d) => format!("stop at a{d:+}"),
        };
        let control = match self.control {
            ControlRule::ReflectAtB => "reflect at b".to_string(),
            ControlRule::NoControl => "no control".to_string(),
            ControlRule::ReflectAtShifted(d) => format!("reflect at b{d:+}"),
            ControlRule::ReflectAtConstant(c) => format!("reflect at {c}"),
        };
        format!("{stop} / {control}")
    }
}

/// Game payoff along one discrete path with times `t0 + k dt`:
/// discounted `g` at the stop, trapezoidal running gain up to the stop and
/// `alpha0` times the discounted total variation of `nu` on `[0, s]`,
/// `nu[0]` being the jump at time 0. The stop is capped at `exit_index`.
pub fn payoff(
    spec: &GameSpec,
    t0: f64,
    dt: f64,
    x: &[f64],
    nu: &[f64],
    stop_index: usize,
    exit_index: Option<usize>,
) -> Result<f64> {
    if x.len() != nu.len() || stop_index >= x.len() {
        return Err(Error::Precondition(format!(
            "path of {} states, {} controls, stop index {stop_index}",
            x.len(),
            nu.len()
        )));
    }
    let tau = exit_index.map_or(stop_index, |e| e.min(stop_index));
    let disc = |k: usize| (-spec.r * k as f64 * dt).exp();
    let t = |k: usize| t0 + k as f64 * dt;
    let mut total = disc(tau) * spec.g(t(tau))?;
    let mut prev_h = spec.h(t(0), x[0])?;
    for k in 1..=tau {
        let hk = spec.h(t(k), x[k])?;
        total += 0.5 * dt * (disc(k - 1) * prev_h + disc(k) * hk);
        prev_h = hk;
    }
    let mut prev_nu = 0.0;
    for (k, &n) in nu.iter().enumerate().take(tau + 1) {
        total += spec.alpha0 * disc(k) * (n - prev_nu).abs();
        prev_nu = n;
    }
    Ok(total)
}

/// Sum by recursive halving.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = pairwise_sum(xs) / n as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, std_error: (var / n as f64).sqrt(), n }
    }
}

/// Everything a run needs besides the strategies.
#[derive(Debug, Clone)]
pub struct SimSetup<'a> {
    pub spec: &'a GameSpec,
    pub curves: &'a BoundaryPair,
    pub t0: f64,
    pub x0: f64,
    pub cfg: PathConfig,
    pub n_paths: usize,
    pub antithetic: bool,
}

impl SimSetup<'_> {
    pub fn dt(&self) -> f64 {
        self.cfg.dt(self.spec, self.t0)
    }

    fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.cfg.n_steps).map(|k| self.t0 + k as f64 * dt).collect()
    }

    fn boundary(&self, rule: ControlRule, times: &[f64]) -> Result<Vec<f64>> {
        let c = self.curves;
        let f = match rule {
            ControlRule::NoControl => vec![f64::INFINITY; times.len()],
            ControlRule::ReflectAtConstant(level) => vec![level; times.len()],
            ControlRule::ReflectAtB | ControlRule::ReflectAtShifted(_) => {
                let shift = if let ControlRule::ReflectAtShifted(d) = rule { d } else { 0.0 };
                let k0 = c.t_nodes.partition_point(|&s| s < self.t0 - 1e-12 * (1.0 + self.t0.abs()));
                let k0 = k0.min(c.b.len() - 1);
                let b0 = c.b[k0];
                if c.b_at_window_edge[k0] || !b0.is_finite() || b0 <= self.spec.domain.inf() {
                    return Err(Error::Precondition(format!(
                        "action boundary at t={} is {b0}{}; refusing to build the reflection control",
                        self.t0,
                        if c.b_at_window_edge[k0] { " (window edge)" } else { "" }
                    )));
                }
                times.iter().map(|&t| c.b_at(t) + shift).collect()
            }
        };
        Ok(f)
    }

    fn threshold(&self, rule: StopRule, times: &[f64]) -> Option<Vec<f64>> {
        let shift = match rule {
            StopRule::HitBoundaryA => 0.0,
            StopRule::ThresholdShift(d) => d,
            StopRule::FixedTime(_) => return None,
        };
        Some(times.iter().map(|&t| self.curves.a_at(t) + shift).collect())
    }

    fn stop_index(&self, rule: StopRule, threshold: Option<&Vec<f64>>, x: &[f64]) -> usize {
        let n = self.cfg.n_steps;
        match rule {
            StopRule::FixedTime(s) => ((s / self.dt() - 1e-9).ceil().max(0.0) as usize).min(n),
            _ => {
                let curve = threshold.expect("threshold for boundary rules");
                first_hitting(x, curve, Side::BelowOrEqual).unwrap_or(n).min(n)
            }
        }
    }

    fn path_payoffs(&self, strategies: &[StrategyPair], prepared: &Prepared, z: &[f64]) -> Result<Vec<f64>> {
        let dt = self.dt();
        let mut reflected = Vec::with_capacity(prepared.controls.len());
        for f in &prepared.controls {
            reflected.push(reflect_along(self.spec, f, self.t0, self.x0, z, dt, ReflectionMode::OnePass)?);
        }
        strategies
            .iter()
            .enumerate()
            .map(|(s, pair)| {
                let p = &reflected[prepared.control_of[s]];
                let stop = self.stop_index(pair.stop, prepared.thresholds[s].as_ref(), &p.x_values);
                payoff(self.spec, self.t0, dt, &p.x_values, &p.nu_values, stop, p.exit_index)
            })
            .collect()
    }

    /// Per-strategy, per-path payoffs on shared normals. With antithetic
    /// sampling each entry averages a path and its mirror.
    pub fn payoff_matrix(&self, strategies: &[StrategyPair]) -> Result<Vec<Vec<f64>>> {
        if self.spec.domain == Domain::HalfLine && self.x0 <= 0.0 {
            return Err(Error::Domain(format!("starting point {} outside the state space", self.x0)));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        let times = self.times();
        let prepared = Prepared::new(self, strategies, &times)?;
        let per_path: Vec<Vec<f64>> = (0..self.n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let z = normals(self.cfg.seed, i, self.cfg.n_steps);
                let mut out = self.path_payoffs(strategies, &prepared, &z)?;
                if self.antithetic {
                    let mirror: Vec<f64> = z.iter().map(|v| -v).collect();
                    let other = self.path_payoffs(strategies, &prepared, &mirror)?;
                    for (o, m) in out.iter_mut().zip(other) {
                        *o = 0.5 * (*o + m);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok((0..strategies.len()).map(|s| per_path.iter().map(|row| row[s]).collect()).collect())
    }
}

struct Prepared {
    controls: Vec<Vec<f64>>,
    control_of: Vec<usize>,
    thresholds: Vec<Option<Vec<f64>>>,
}

impl Prepared {
    fn new(setup: &SimSetup<'_>, strategies: &[StrategyPair], times: &[f64]) -> Result<Self> {
        let mut rules: Vec<ControlRule> = Vec::new();
        let mut control_of = Vec::with_capacity(strategies.len());
        for pair in strategies {
            let idx = match rules.iter().position(|r| *r == pair.control) {
                Some(i) => i,
                None => {
                    rules.push(pair.control);
                    rules.len() - 1
                }
            };
            control_of.push(idx);
        }
        let controls = rules.iter().map(|&r| setup.boundary(r, times)).collect::<Result<_>>()?;
        let thresholds = strategies.iter().map(|p| setup.threshold(p.stop, times)).collect();
        Ok(Prepared { controls, control_of, thresholds })
    }
}

/// Mean and standard error of the payoff of one strategy pair.
pub fn estimate_value(setup: &SimSetup<'_>, pair: StrategyPair) -> Result<Estimate> {
    let m = setup.payoff_matrix(&[pair])?;
    Ok(Estimate::from_samples(&m[0]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationMenu {
    pub fixed_times: Vec<f64>,
    pub threshold_shifts: Vec<f64>,
    pub control_shifts: Vec<f64>,
    pub control_constants: Vec<f64>,
    pub include_no_control: bool,
}

impl DeviationMenu {
    pub fn strategies(&self) -> Vec<(Player, StrategyPair)> {
        let eq = StrategyPair::EQUILIBRIUM;
        let mut out = Vec::new();
        for &s in &self.fixed_times {
            out.push((Player::Stopper, StrategyPair { stop: StopRule::FixedTime(s), ..eq }));
        }
        for &d in &self.threshold_shifts {
            out.push((Player::Stopper, StrategyPair { stop: StopRule::ThresholdShift(d), ..eq }));
        }
        if self.include_no_control {
            out.push((Player::Controller, StrategyPair { control: ControlRule::NoControl, ..eq }));
        }
        for &d in &self.control_shifts {
            out.push((Player::Controller, StrategyPair { control: ControlRule::ReflectAtShifted(d), ..eq }));
        }
        for &c in &self.control_constants {
            out.push((Player::Controller, StrategyPair { control: ControlRule::ReflectAtConstant(c), ..eq }));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Stopper,
    Controller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationResult {
    pub label: String,
    pub player: Player,
    pub pair: StrategyPair,
    pub estimate: Estimate,
    /// Mean and standard error of the per-path difference deviation minus equilibrium.
    pub diff_mean: f64,
    pub diff_se: f64,
    /// Inequality tested, e.g. `J(dev) <= J(eq) + margin`.
    pub inequality: String,
    pub margin: f64,
    pub passed: bool,
    /// Worse for the deviating player by more than five paired standard errors.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub header: String,
    pub t0: f64,
    pub x0: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub pde_value: f64,
    pub allowance: f64,
    pub equilibrium: Estimate,
    pub equilibrium_margin: f64,
    pub equilibrium_passed: bool,
    pub deviations: Vec<DeviationResult>,
}

impl SaddleReport {
    pub fn all_passed(&self) -> bool {
        self.equilibrium_passed && self.deviations.iter().all(|d| d.passed)
    }

    pub fn strict_for(&self, player: Player) -> bool {
        self.deviations.iter().any(|d| d.player == player && d.strict)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{}\n", self.header);
        s.push_str(&format!(
            "v({}, {}) = {:.6}   J(eq) = {:.6} +- {:.6}   margin {:.6}   {}\n",
            self.t0,
            self.x0,
            self.pde_value,
            self.equilibrium.mean,
            self.equilibrium.std_error,
            self.equilibrium_margin,
            if self.equilibrium_passed { "PASS" } else { "FAIL" }
        ));
        s.push_str(&format!(
            "{:<34} {:>10} {:>10} {:>11} {:>10} {:>10}  verdict\n",
            "deviation", "J", "s.e.", "J-J(eq)", "paired se", "margin"
        ));
        for d in &self.deviations {
            s.push_str(&format!(
                "{:<34} {:>10.6} {:>10.6} {:>11.6} {:>10.6} {:>10.6}  {}{}\n",
                d.label,
                d.estimate.mean,
                d.estimate.std_error,
                d.diff_mean,
                d.diff_se,
                d.margin,
                if d.passed { "PASS" } else { "FAIL" },
                if d.strict { " strict" } else { "" }
            ));
        }
        s
    }
}

/// Allowance `c (sqrt(dt) + dx)` for the simulation step and the surface grid.
pub fn allowance(dt: f64, dx: f64) -> f64 {
    DISCRETIZATION_ALLOWANCE * (dt.sqrt() + dx)
}

/// Estimates the equilibrium pair and every deviation of the menu on
/// common random numbers and checks both saddle inequalities.
pub fn deviation_suite(setup: &SimSetup<'_>, surface: &ValueSurface, menu: &DeviationMenu) -> Result<SaddleReport> {
    let devs = menu.strategies();
    let mut strategies = vec![StrategyPair::EQUILIBRIUM];
    strategies.extend(devs.iter().map(|(_, p)| *p));
    let m = setup.payoff_matrix(&strategies)?;
    let eq = Estimate::from_samples(&m[0]);
    let allow = allowance(setup.dt(), surface.grid.dx);
    let pde_value = surface.value_at(setup.t0, setup.x0);
    let eq_margin = 3.0 * eq.std_error + allow;

    let deviations = devs
        .iter()
        .zip(&m[1..])
        .map(|(&(player, pair), samples)| {
            let est = Estimate::from_samples(samples);
            let diff: Vec<f64> = samples.iter().zip(&m[0]).map(|(d, e)| d - e).collect();
            let d = Estimate::from_samples(&diff);
            let margin = 3.0 * (eq.std_error.powi(2) + est.std_error.powi(2)).sqrt() + allow;
            let (inequality, passed, strict) = match player {
                Player::Stopper => {
                    ("J(dev) <= J(eq) + margin", est.mean <= eq.mean + margin, -d.mean > 5.0 * d.std_error)
                }
                Player::Controller => {
                    ("J(dev) >= J(eq) - margin", est.mean >= eq.mean - margin, d.mean > 5.0 * d.std_error)
                }
            };
            DeviationResult {
                label: pair.label(),
                player,
                pair,
                estimate: est,
                diff_mean: d.mean,
                diff_se: d.std_error,
                inequality: inequality.to_string(),
                margin,
                passed,
                strict,
            }
        })
        .collect();

    Ok(SaddleReport {
        header: "Saddle check against the configured deviation menu only; no claim beyond these strategies.".into(),
        t0: setup.t0,
        x0: setup.x0,
        n_paths: setup.n_paths,
        n_steps: setup.cfg.n_steps,
        seed: setup.cfg.seed,
        pde_value,
        allowance: allow,
        equilibrium: eq,
        equilibrium_margin: eq_margin,
        equilibrium_passed: (eq.mean - pde_value).abs() <= eq_margin,
        deviations,
    })
}
