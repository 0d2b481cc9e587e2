//! Euler-Maruyama paths, the Skorokhod reflection map along a moving
//! boundary, and discrete first-hitting times.
//!
//! Seeding: path `i` of a run with master seed `s` draws its normals from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`, so every path is
//! reproducible on its own and independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, GameSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub n_steps: usize,
    pub seed: u64,
}

impl PathConfig {
    pub fn new(n_steps: usize, seed: u64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        Ok(PathConfig { n_steps, seed })
    }

    pub fn dt(&self, spec: &GameSpec, t0: f64) -> f64 {
        (spec.horizon - t0) / self.n_steps as f64
    }
}

/// Per-path generator: master seed plus the path index as stream id.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Standard normal draws driving one path.
pub fn normals(seed: u64, path_index: u64, n: usize) -> Vec<f64> {
    let mut rng = path_rng(seed, path_index);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Index at which a half-line path reached 0; frozen from there on.
    pub exit_index: Option<usize>,
    /// Steps that overshot below 0 and were clamped.
    pub clamp_events: usize,
}

fn euler_path(
    spec: &GameSpec,
    t0: f64,
    x0: f64,
    z: &[f64],
    dt: f64,
    drift: impl Fn(f64) -> Result<f64>,
) -> Result<Path> {
    let n = z.len();
    let sq = dt.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    values.push(x0);
    let mut exit_index = None;
    let mut clamp_events = 0;
    let mut x = x0;
    for (k, &zk) in z.iter().enumerate() {
        if exit_index.is_none() {
            x += drift(x)? * dt + spec.sigma(x) * sq * zk;
            if spec.domain == Domain::HalfLine && x <= 0.0 {
                if x < 0.0 {
                    clamp_events += 1;
                }
                x = 0.0;
                exit_index = Some(k + 1);
            }
        }
        values.push(x);
    }
    let times = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    Ok(Path { times, values, exit_index, clamp_events })
}

fn check_start(spec: &GameSpec, x0: f64) -> Result<()> {
    if !x0.is_finite() || (spec.domain == Domain::HalfLine && x0 <= 0.0) {
        return Err(Error::Domain(format!("starting point {x0} outside the state space")));
    }
    Ok(())
}

/// `dX = mu(X) ds + sigma(X) dW` from `(t0, x0)`.
pub fn simulate_uncontrolled(spec: &GameSpec, t0: f64, x0: f64, cfg: &PathConfig, path_index: u64) -> Result<Path> {
    check_start(spec, x0)?;
    let z = normals(cfg.seed, path_index, cfg.n_steps);
    euler_path(spec, t0, x0, &z, cfg.dt(spec, t0), |x| spec.drift(x))
}

/// `dY = (mu + sigma sigma_x)(Y) ds + sigma(Y) dW` from `(t0, y0)`.
pub fn simulate_y(spec: &GameSpec, t0: f64, y0: f64, cfg: &PathConfig, path_index: u64) -> Result<Path> {
    check_start(spec, y0)?;
    let z = normals(cfg.seed, path_index, cfg.n_steps);
    let ss = spec.sigma_x();
    euler_path(spec, t0, y0, &z, cfg.dt(spec, t0), |y| Ok(spec.drift(y)? + spec.sigma(y) * ss))
}

/// Controlled state and the control pushing it down.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedPath {
    pub times: Vec<f64>,
    pub x_values: Vec<f64>,
    /// Non-increasing, `nu_values[0]` is the initial jump.
    pub nu_values: Vec<f64>,
    /// Accumulated drift and noise before reflection, starting at 0.
    pub driver_cumsum: Vec<f64>,
    pub exit_index: Option<usize>,
}

/// Running-maximum form of the reflection map for given increments:
/// `M_k = max(M_{k-1}, (x0 + C_k - f_k)^+)`, `nu_k = -M_k`,
/// `X_k = x0 + C_k + nu_k`, with `C_0 = 0`.
pub fn skorokhod_reflect(increments: &[f64], f: &[f64], times: &[f64], x0: f64) -> Result<ReflectedPath> {
    let n = increments.len();
    if f.len() != n + 1 || times.len() != n + 1 {
        return Err(Error::Precondition(format!(
            "{} increments need {} boundary values and times, got {} and {}",
            n,
            n + 1,
            f.len(),
            times.len()
        )));
    }
    let mut cum = Vec::with_capacity(n + 1);
    let mut c = 0.0;
    cum.push(c);
    for &d in increments {
        c += d;
        cum.push(c);
    }
    let mut m = 0.0f64;
    let mut x_values = Vec::with_capacity(n + 1);
    let mut nu_values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        m = m.max((x0 + cum[k] - f[k]).max(0.0));
        nu_values.push(-m);
        x_values.push(x0 + cum[k] - m);
    }
    Ok(ReflectedPath { times: times.to_vec(), x_values, nu_values, driver_cumsum: cum, exit_index: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReflectionMode {
    /// Coefficients at the reflected state of the previous step.
    OnePass,
    /// Whole-path fixed point of the map `X -> Skorokhod(driver(X))`.
    Picard { tol: f64, max_iters: usize },
}

fn check_boundary(spec: &GameSpec, f: &[f64]) -> Result<()> {
    if let Some((step, &value)) = f.iter().enumerate().find(|(_, &v)| v < spec.domain.inf() || v.is_nan()) {
        return Err(Error::BoundaryBelowDomain { step, value });
    }
    Ok(())
}

/// Reflected SDE `dX = mu(X) ds + sigma(X) dW + d nu` kept at or below the
/// boundary values `f` (one per time, `+inf` for no constraint). On the
/// half line the path is frozen, control included, once it reaches 0.
pub fn reflect_along(
    spec: &GameSpec,
    f: &[f64],
    t0: f64,
    x0: f64,
    z: &[f64],
    dt: f64,
    mode: ReflectionMode,
) -> Result<ReflectedPath> {
    check_start(spec, x0)?;
    check_boundary(spec, f)?;
    let n = z.len();
    if f.len() != n + 1 {
        return Err(Error::Precondition(format!("need {} boundary values, got {}", n + 1, f.len())));
    }
    let times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    match mode {
        ReflectionMode::OnePass => Ok(one_pass(spec, f, &times, x0, z, dt)?),
        ReflectionMode::Picard { tol, max_iters } => {
            // each sweep fixes at least one more step, so at most n + 1 sweeps
            let mut x: Vec<f64> = vec![x0; n + 1];
            for it in 0..max_iters {
                let inc = increments_along(spec, &x, z, dt)?;
                let mut next = skorokhod_reflect(&inc, f, &times, x0)?;
                freeze_at_exit(spec, &mut next);
                let change = next.x_values.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                x.clone_from(&next.x_values);
                if change <= tol && it > 0 {
                    return Ok(next);
                }
            }
            Err(Error::FixedPointStall { time_index: 0, sweeps: max_iters, change: f64::NAN })
        }
    }
}

fn increments_along(spec: &GameSpec, x: &[f64], z: &[f64], dt: f64) -> Result<Vec<f64>> {
    let sq = dt.sqrt();
    z.iter()
        .enumerate()
        .map(|(k, &zk)| Ok(spec.drift(x[k])? * dt + spec.sigma(x[k]) * sq * zk))
        .collect()
}

fn freeze_at_exit(spec: &GameSpec, p: &mut ReflectedPath) {
    if spec.domain != Domain::HalfLine {
        return;
    }
    if let Some(k) = p.x_values.iter().position(|&x| x <= 0.0) {
        let nu = p.nu_values[k];
        for j in k..p.x_values.len() {
            p.x_values[j] = 0.0;
            p.nu_values[j] = nu;
        }
        p.exit_index = Some(k);
    }
}

fn one_pass(spec: &GameSpec, f: &[f64], times: &[f64], x0: f64, z: &[f64], dt: f64) -> Result<ReflectedPath> {
    let n = z.len();
    let sq = dt.sqrt();
    let mut cum = Vec::with_capacity(n + 1);
    let mut x_values = Vec::with_capacity(n + 1);
    let mut nu_values = Vec::with_capacity(n + 1);
    let mut m = (x0 - f[0]).max(0.0);
    let mut c = 0.0;
    cum.push(c);
    nu_values.push(-m);
    x_values.push(x0 - m);
    let mut exit_index = None;
    for k in 1..=n {
        let prev = x_values[k - 1];
        if exit_index.is_none() {
            c += spec.drift(prev)? * dt + spec.sigma(prev) * sq * z[k - 1];
            m = m.max((x0 + c - f[k]).max(0.0));
        }
        let mut x = x0 + c - m;
        if exit_index.is_some() || (spec.domain == Domain::HalfLine && x <= 0.0) {
            x = 0.0;
            exit_index.get_or_insert(k);
        }
        cum.push(c);
        nu_values.push(-m);
        x_values.push(x);
    }
    Ok(ReflectedPath { times: times.to_vec(), x_values, nu_values, driver_cumsum: cum, exit_index })
}

/// State under a given non-increasing control (one value per time,
/// `nu[0]` the initial jump), sharing the normals `z`. Frozen at exit.
pub fn controlled_path(spec: &GameSpec, x0: f64, nu: &[f64], z: &[f64], dt: f64) -> Result<Path> {
    let n = z.len();
    if nu.len() != n + 1 {
        return Err(Error::Precondition(format!("need {} control values, got {}", n + 1, nu.len())));
    }
    let sq = dt.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0 + nu[0];
    let mut exit_index = None;
    if spec.domain == Domain::HalfLine && x <= 0.0 {
        x = 0.0;
        exit_index = Some(0);
    }
    values.push(x);
    for k in 1..=n {
        if exit_index.is_none() {
            x += spec.drift(x)? * dt + spec.sigma(x) * sq * z[k - 1] + (nu[k] - nu[k - 1]);
            if spec.domain == Domain::HalfLine && x <= 0.0 {
                x = 0.0;
                exit_index = Some(k);
            }
        }
        values.push(x);
    }
    Ok(Path { times: (0..=n).map(|k| k as f64 * dt).collect(), values, exit_index, clamp_events: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    BelowOrEqual,
    AtOrAbove,
}

/// Smallest index where the path meets the curve on the given side.
pub fn first_hitting(values: &[f64], curve: &[f64], side: Side) -> Option<usize> {
    values.iter().zip(curve).position(|(&x, &c)| match side {
        Side::BelowOrEqual => x <= c,
        Side::AtOrAbove => x >= c,
    })
}
