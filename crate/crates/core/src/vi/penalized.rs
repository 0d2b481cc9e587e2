use serde::{Deserialize, Serialize};

use super::{generator_stencil, running_row, terminal_row, Scheme, ValueSurface};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Tridiagonal;
use crate::model::GameSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizationParams {
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iters")]
    pub newton_max_iters: usize,
}

fn default_newton_tol() -> f64 {
    1e-9
}

fn default_newton_max_iters() -> usize {
    100
}

impl PenalizationParams {
    /// Equal rates for the two penalties.
    pub fn joint(eps: f64) -> Self {
        PenalizationParams {
            eps,
            delta: eps,
            newton_tol: default_newton_tol(),
            newton_max_iters: default_newton_max_iters(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v < 1.0;
        if !ok(self.eps) || !ok(self.delta) {
            return Err(Error::Config(format!(
                "penalisation parameters must lie in (0, 1), got eps = {}, delta = {}",
                self.eps, self.delta
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iters == 0 {
            return Err(Error::Config("newton_tol and newton_max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Gradient penalty `psi_eps` and its derivative.
///
/// Zero for `y <= 0`, `(y - eps) / eps` for `y >= 2 eps`, and in between the
/// polynomial `2 s^3 - s^4` with `s = y / (2 eps)`: the lowest-degree bridge
/// matching value, slope and curvature at both ends. It is convex and
/// non-decreasing on the bridge since `p'' = 12 s (1 - s)`.
pub fn psi_eps(y: f64, eps: f64) -> (f64, f64) {
    if y <= 0.0 {
        (0.0, 0.0)
    } else if y >= 2.0 * eps {
        ((y - eps) / eps, 1.0 / eps)
    } else {
        let s = y / (2.0 * eps);
        let s2 = s * s;
        (2.0 * s2 * s - s2 * s2, (6.0 * s2 - 4.0 * s2 * s) / (2.0 * eps))
    }
}

/// Second derivative of `psi_eps`, used only to verify the gluing.
pub fn psi_eps_second(y: f64, eps: f64) -> f64 {
    if y <= 0.0 || y >= 2.0 * eps {
        0.0
    } else {
        let s = y / (2.0 * eps);
        12.0 * s * (1.0 - s) / (4.0 * eps * eps)
    }
}

struct StepSystem<'a> {
    lower: &'a [f64],
    diag: &'a [f64],
    upper: &'a [f64],
    prev: &'a [f64],
    h: &'a [f64],
    g: f64,
    dt: f64,
    dx: f64,
    alpha2: f64,
    params: &'a PenalizationParams,
}

impl StepSystem<'_> {
    /// Unknowns are nodes `0..m` (the last node follows from `v_xx = 0`).
    fn size(&self) -> usize {
        self.prev.len() - 1
    }

    fn edge_value(v: &[f64]) -> f64 {
        let m = v.len();
        2.0 * v[m - 1] - v[m - 2]
    }

    /// Residual scaled by `dt`.
    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let m = self.size();
        let mut res = vec![0.0; m];
        res[0] = v[0] - self.g;
        let edge = Self::edge_value(v);
        for i in 1..m {
            let right = if i + 1 < m { v[i + 1] } else { edge };
            let lv = self.lower[i] * v[i - 1] + self.diag[i] * v[i] + self.upper[i] * right;
            let grad = ((v[i] - v[i - 1]) / self.dx).max(0.0);
            let (psi, _) = psi_eps(grad * grad - self.alpha2, self.params.eps);
            let obstacle = (self.g - v[i]).max(0.0) / self.params.delta;
            res[i] = v[i] - self.prev[i] - self.dt * (lv + self.h[i] + obstacle - psi);
        }
        res
    }

    fn jacobian(&self, v: &[f64]) -> Tridiagonal {
        let m = self.size();
        let mut j = Tridiagonal::zeros(m);
        j.set_identity_row(0);
        for i in 1..m {
            let grad = ((v[i] - v[i - 1]) / self.dx).max(0.0);
            let (_, dpsi) = psi_eps(grad * grad - self.alpha2, self.params.eps);
            let pen = self.dt * dpsi * 2.0 * grad / self.dx;
            let obs = if self.g > v[i] { self.dt / self.params.delta } else { 0.0 };
            j.diag[i] = 1.0 - self.dt * self.diag[i] + obs + pen;
            j.lower[i] = -self.dt * self.lower[i] - pen;
            if i + 1 < m {
                j.upper[i] = -self.dt * self.upper[i];
            } else {
                // fold v_m = 2 v_{m-1} - v_{m-2}
                j.diag[i] -= 2.0 * self.dt * self.upper[i];
                j.lower[i] += self.dt * self.upper[i];
            }
        }
        j
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// Backward implicit solve of the penalised PDE
/// `v_t + (L - r) v = -h - (g - v)^+ / delta + psi_eps(|v_x|^2 - alpha0^2)`.
///
/// The gradient in the penalty is the positive part of the backward
/// difference. The value is non-decreasing in `x`, so this only matters in
/// the `O(delta)` layer below the obstacle next to the Dirichlet node, where
/// `|v_x|` would otherwise trigger the gradient penalty with the wrong sign.
/// Both choices keep the Newton matrix an M-matrix.
pub fn solve_penalized(spec: &GameSpec, grid: &Grid, params: &PenalizationParams) -> Result<ValueSurface> {
    params.validate()?;
    let (nt, nx) = (grid.n_t(), grid.n_x());
    let stencil = generator_stencil(spec, grid)?;
    let mut v = vec![0.0; nt * nx];
    let terminal = terminal_row(spec, grid)?;
    v[(nt - 1) * nx..].copy_from_slice(&terminal);
    let alpha2 = spec.alpha0 * spec.alpha0;

    for k in (0..nt - 1).rev() {
        let t = grid.t_nodes[k];
        let h = running_row(spec, grid, t)?;
        let prev: Vec<f64> = v[(k + 1) * nx..(k + 2) * nx].to_vec();
        let sys = StepSystem {
            lower: &stencil.lower,
            diag: &stencil.diag,
            upper: &stencil.upper,
            prev: &prev,
            h: &h,
            g: spec.g(t)?,
            dt: grid.dt,
            dx: grid.dx,
            alpha2,
            params,
        };
        let mut x: Vec<f64> = prev[..nx - 1].to_vec();
        x[0] = sys.g;
        let scale = 1.0 + sup_norm(&prev);
        let mut res = sys.residual(&x);
        let mut norm = sup_norm(&res);
        let mut iters = 0;
        while norm > params.newton_tol * scale {
            if iters == params.newton_max_iters {
                return Err(Error::NewtonDivergence { time_index: k, residual: norm });
            }
            iters += 1;
            let step = sys.jacobian(&x).solve(&res);
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
                let r = sys.residual(&trial);
                let n = sup_norm(&r);
                if n < (1.0 - 1e-4 * lambda) * norm || lambda < 1e-6 {
                    x = trial;
                    res = r;
                    norm = n;
                    break;
                }
                lambda *= 0.5;
            }
            if !norm.is_finite() {
                return Err(Error::NewtonDivergence { time_index: k, residual: norm });
            }
        }
        let row = &mut v[k * nx..(k + 1) * nx];
        row[..nx - 1].copy_from_slice(&x);
        row[nx - 1] = StepSystem::edge_value(&x);
    }
    Ok(ValueSurface::from_values(
        grid.clone(),
        v,
        Scheme::Penalized { eps: params.eps, delta: params.delta },
    ))
}
