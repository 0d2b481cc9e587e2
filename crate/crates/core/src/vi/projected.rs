use serde::{Deserialize, Serialize};

use super::{generator_stencil, running_row, terminal_row, Scheme, ValueSurface};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Tridiagonal;
use crate::model::GameSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub fp_tol: f64,
    pub fp_max_sweeps: usize,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams { fp_tol: 1e-14, fp_max_sweeps: 1000 }
    }
}

/// Splitting scheme: implicit linear step for `v_t + (L - r) v + h = 0`,
/// then `v <- max(v, g)` and the sweep `v[i] <- min(v[i], v[i-1] + alpha0 dx)`
/// repeated until neither changes the row.
pub fn solve_projected(spec: &GameSpec, grid: &Grid, params: &ProjectionParams) -> Result<ValueSurface> {
    let (nt, nx, dt) = (grid.n_t(), grid.n_x(), grid.dt);
    let stencil = generator_stencil(spec, grid)?;
    let m = nx - 1;
    let mut a = Tridiagonal::zeros(m);
    a.set_identity_row(0);
    for i in 1..m {
        a.lower[i] = -dt * stencil.lower[i];
        a.diag[i] = 1.0 - dt * stencil.diag[i];
        a.upper[i] = -dt * stencil.upper[i];
    }
    // fold v_m = 2 v_{m-1} - v_{m-2}
    a.diag[m - 1] -= 2.0 * dt * stencil.upper[m - 1];
    a.lower[m - 1] += dt * stencil.upper[m - 1];
    a.upper[m - 1] = 0.0;

    let mut v = vec![0.0; nt * nx];
    v[(nt - 1) * nx..].copy_from_slice(&terminal_row(spec, grid)?);
    let step = spec.alpha0 * grid.dx;

    for k in (0..nt - 1).rev() {
        let t = grid.t_nodes[k];
        let g = spec.g(t)?;
        let h = running_row(spec, grid, t)?;
        let mut rhs: Vec<f64> = (0..m).map(|i| v[(k + 1) * nx + i] + dt * h[i]).collect();
        rhs[0] = g;
        let mut row = a.solve(&rhs);
        row.push(2.0 * row[m - 1] - row[m - 2]);

        let scale = 1.0 + row.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let mut sweeps = 0;
        loop {
            let mut change = 0.0f64;
            for x in row.iter_mut() {
                if *x < g {
                    change = change.max(g - *x);
                    *x = g;
                }
            }
            for i in 1..nx {
                let cap = row[i - 1] + step;
                if row[i] > cap {
                    change = change.max(row[i] - cap);
                    row[i] = cap;
                }
            }
            sweeps += 1;
            if change <= params.fp_tol * scale {
                break;
            }
            if sweeps >= params.fp_max_sweeps {
                return Err(Error::FixedPointStall { time_index: k, sweeps, change });
            }
        }
        v[k * nx..(k + 1) * nx].copy_from_slice(&row);
    }
    Ok(ValueSurface::from_values(grid.clone(), v, Scheme::Projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::model::benchmark_spec;

    #[test]
    fn projections_hold_exactly() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(41, 161, 0.0, 4.0)).unwrap();
        let surf = solve_projected(&s, &g, &ProjectionParams::default()).unwrap();
        let nx = g.n_x();
        for k in 0..g.n_t() {
            let row = surf.row(k);
            assert!(row.iter().all(|&v| v >= 0.0));
            for i in 1..nx {
                assert!(row[i] - row[i - 1] <= s.alpha0 * g.dx + 1e-12);
            }
        }
        assert!(surf.row(g.n_t() - 1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stall_is_reported() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(11, 81, 0.0, 4.0)).unwrap();
        let p = ProjectionParams { fp_tol: -1.0, fp_max_sweeps: 3 };
        assert!(matches!(solve_projected(&s, &g, &p), Err(Error::FixedPointStall { sweeps: 3, .. })));
    }
}
