//! Value surface of the game by backward time stepping.
//!
//! Two independent schemes are provided: a penalised semilinear PDE
//! solved by damped Newton at each step, and an operator-splitting scheme
//! that alternates an implicit linear step with obstacle and gradient
//! projections.
//!
//! Lateral conditions shared by both schemes: `v = g(t)` at the lower
//! edge of the window (the true boundary on the half line), and
//! `v_xx = 0` at the upper edge, with the gradient cap left to the scheme.

mod invariants;
mod penalized;
mod projected;
mod residual;

pub use invariants::{obstacle_projected, structural_invariants, InvariantTolerances};
pub use penalized::{psi_eps, psi_eps_second, solve_penalized, PenalizationParams};
pub use projected::{solve_projected, ProjectionParams};
pub use residual::{residual_check, ResidualFields, ResidualSummary};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Grid;
use crate::model::GameSpec;
use crate::stencil::Stencil;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Penalized { eps: f64, delta: f64 },
    Projected,
    /// Pure stopping oracle, no gradient constraint.
    StoppingOracle,
}

/// Grid samples of the value and its spatial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub grid: Grid,
    /// Row-major, `n_t x n_x`.
    pub v: Vec<f64>,
    pub vx: Vec<f64>,
    pub vxx: Vec<f64>,
    pub scheme: Scheme,
}

impl ValueSurface {
    pub fn from_values(grid: Grid, v: Vec<f64>, scheme: Scheme) -> Self {
        let (vx, vxx) = spatial_derivatives(&grid, &v);
        ValueSurface { grid, v, vx, vxx, scheme }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.n_x();
        &self.v[k * n..(k + 1) * n]
    }

    pub fn vx_row(&self, k: usize) -> &[f64] {
        let n = self.grid.n_x();
        &self.vx[k * n..(k + 1) * n]
    }

    pub fn at(&self, k: usize, i: usize) -> f64 {
        self.v[self.grid.index(k, i)]
    }

    /// Linear interpolation in `x` on time row `k`.
    pub fn interp_row(field: &[f64], grid: &Grid, x: f64) -> f64 {
        let (i, w) = grid.locate_x(x);
        field[i] * (1.0 - w) + field[i + 1] * w
    }

    /// Bilinear interpolation of `v` at `(t, x)`.
    pub fn value_at(&self, t: f64, x: f64) -> f64 {
        let g = &self.grid;
        let s = (t / g.dt).clamp(0.0, (g.n_t() - 1) as f64);
        let k = (s.floor() as usize).min(g.n_t() - 2);
        let w = s - k as f64;
        let a = Self::interp_row(self.row(k), g, x);
        let b = Self::interp_row(self.row(k + 1), g, x);
        a * (1.0 - w) + b * w
    }
}

/// Central differences inside, one-sided first differences at the edges.
pub fn spatial_derivatives(grid: &Grid, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (nt, nx, dx) = (grid.n_t(), grid.n_x(), grid.dx);
    let mut vx = vec![0.0; v.len()];
    let mut vxx = vec![0.0; v.len()];
    for k in 0..nt {
        let row = &v[k * nx..(k + 1) * nx];
        let ox = &mut vx[k * nx..(k + 1) * nx];
        for i in 1..nx - 1 {
            ox[i] = (row[i + 1] - row[i - 1]) / (2.0 * dx);
        }
        ox[0] = (row[1] - row[0]) / dx;
        ox[nx - 1] = (row[nx - 1] - row[nx - 2]) / dx;
        let oxx = &mut vxx[k * nx..(k + 1) * nx];
        for i in 1..nx - 1 {
            oxx[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) / (dx * dx);
        }
        oxx[0] = oxx[1];
        oxx[nx - 1] = oxx[nx - 2];
    }
    (vx, vxx)
}

/// Discretisation of `L - r` on the grid.
pub(crate) fn generator_stencil(spec: &GameSpec, grid: &Grid) -> Result<Stencil> {
    let diffusion: Vec<f64> = grid.x_nodes.iter().map(|&x| 0.5 * spec.sigma(x).powi(2)).collect();
    let drift: Vec<f64> = grid.x_nodes.iter().map(|&x| spec.drift(x)).collect::<Result<_>>()?;
    let zeroth = vec![spec.r; grid.n_x()];
    Ok(Stencil::new(&diffusion, &drift, &zeroth, grid.dx))
}

/// Running payoff sampled on one time row.
pub(crate) fn running_row(spec: &GameSpec, grid: &Grid, t: f64) -> Result<Vec<f64>> {
    grid.x_nodes.iter().map(|&x| spec.h(t, x)).collect()
}

/// Terminal row `v(T, .) = g(T)`.
pub(crate) fn terminal_row(spec: &GameSpec, grid: &Grid) -> Result<Vec<f64>> {
    Ok(vec![spec.g(spec.horizon)?; grid.n_x()])
}
