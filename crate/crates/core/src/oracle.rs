//! Pure optimal stopping by projected SOR, used as an oracle for games in
//! which the control is too expensive to ever be used.
//!
//! Solves `max{v_t + L v - r v + h, g - v} = 0`, `v(T) = g(T)`, by implicit
//! Euler in time with the same lateral conditions as the game solvers
//! (`v = g` at the lower edge, `v_xx = 0` at the upper edge). The assembly
//! is written out here rather than shared with the game solvers.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::GameSpec;
use crate::vi::{Scheme, ValueSurface};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorParams {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for PsorParams {
    fn default() -> Self {
        PsorParams { omega: 1.6, tol: 1e-13, max_sweeps: 100_000 }
    }
}

/// Value surface of the stopping problem.
pub fn psor_surface(spec: &GameSpec, grid: &Grid, params: &PsorParams) -> Result<ValueSurface> {
    let v = psor_stopping(spec, grid, params)?;
    Ok(ValueSurface::from_values(grid.clone(), v, Scheme::StoppingOracle))
}

/// Row-major `n_t x n_x` values of the stopping problem.
pub fn psor_stopping(spec: &GameSpec, grid: &Grid, params: &PsorParams) -> Result<Vec<f64>> {
    let (nt, nx, dt, dx) = (grid.n_t(), grid.n_x(), grid.dt, grid.dx);
    // implicit matrix rows: lo * v[i-1] + di * v[i] + up * v[i+1]
    let mut lo = vec![0.0; nx];
    let mut di = vec![0.0; nx];
    let mut up = vec![0.0; nx];
    for i in 1..nx - 1 {
        let x = grid.x_nodes[i];
        let a = 0.5 * spec.sigma(x).powi(2) / (dx * dx);
        let b = spec.drift(x)?;
        let (cl, cu) = if a >= b.abs() / (2.0 * dx) {
            (a - b / (2.0 * dx), a + b / (2.0 * dx))
        } else if b > 0.0 {
            (a, a + b / dx)
        } else {
            (a - b / dx, a)
        };
        lo[i] = -dt * cl;
        up[i] = -dt * cu;
        di[i] = 1.0 + dt * (cl + cu + spec.r);
    }
    let last = nx - 2;
    // v[nx-1] = 2 v[nx-2] - v[nx-3]
    lo[last] -= up[last];
    di[last] += 2.0 * up[last];
    up[last] = 0.0;

    let mut out = vec![0.0; nt * nx];
    let mut v = vec![spec.g(spec.horizon)?; nx];
    out[(nt - 1) * nx..].copy_from_slice(&v);
    for k in (0..nt - 1).rev() {
        let t = grid.t_nodes[k];
        let g = spec.g(t)?;
        let rhs: Vec<f64> = (0..nx)
            .map(|i| Ok(v[i] + dt * spec.h(t, grid.x_nodes[i])?))
            .collect::<Result<_>>()?;
        v[0] = g;
        let mut sweeps = 0;
        loop {
            let mut change = 0.0f64;
            for i in 1..=last {
                let right = if i < last { v[i + 1] } else { 0.0 };
                let gs = (rhs[i] - lo[i] * v[i - 1] - up[i] * right) / di[i];
                let new = (v[i] + params.omega * (gs - v[i])).max(g);
                change = change.max((new - v[i]).abs());
                v[i] = new;
            }
            sweeps += 1;
            if change <= params.tol * (1.0 + v[last].abs()) {
                break;
            }
            if sweeps >= params.max_sweeps {
                return Err(Error::FixedPointStall { time_index: k, sweeps, change });
            }
        }
        v[nx - 1] = 2.0 * v[nx - 2] - v[nx - 3];
        out[k * nx..(k + 1) * nx].copy_from_slice(&v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::model::benchmark_spec;

    #[test]
    fn obstacle_and_terminal() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap().with_alpha0(1e6);
        let g = build_grid(&s, &GridConfig::new(21, 61, 0.0, 3.0)).unwrap();
        let v = psor_stopping(&s, &g, &PsorParams::default()).unwrap();
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!(v[20 * 61..].iter().all(|&x| x == 0.0));
        // far above the zero level the stopper keeps playing
        assert!(v[60 - 5] > 0.5);
    }
}
