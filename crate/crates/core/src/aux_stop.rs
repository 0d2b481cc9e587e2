//! Auxiliary stopping problem for the spatial derivative of the value.
//!
//! `w` solves `min{w_t + G w + h_x, alpha0 - w} = 0` on `{x > a(t)}` with
//! `w = 0` at and below `a(t)` and `w(T, .) = 0`, where
//! `G = (sigma^2 / 2) d_xx + (sigma sigma_x + mu) d_x - (r - mu_x)`.
//! This VI is the differentiated equation for the value in the inaction
//! region combined with the gradient cap; it is solved here independently
//! of the value surface and compared against its `v_x`.

use serde::{Deserialize, Serialize};

use crate::boundaries::extract_level_from_above;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Tridiagonal;
use crate::model::GameSpec;
use crate::stencil::Stencil;
use crate::vi::ValueSurface;

/// Condition imposed on `w` at the stopping boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `w = 0` at `a(t)`: the auxiliary diffusion is killed there.
    Absorbing,
    /// `w_x = 0` at the first node above `a(t)`. Kept for comparison only.
    Reflecting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxSurface {
    pub grid: Grid,
    /// Row-major, `n_t x n_x`.
    pub w: Vec<f64>,
    pub absorbed_mask: Vec<bool>,
    pub a_values: Vec<f64>,
    pub alpha0: f64,
    pub condition: BoundaryCondition,
}

impl AuxSurface {
    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.n_x();
        &self.w[k * n..(k + 1) * n]
    }
}

/// Discount rate of the auxiliary problem, `r - mu_x(y)`. May be negative.
pub fn lambda_fn(spec: &GameSpec, y: f64) -> Result<f64> {
    spec.lambda(y)
}

/// Backward solve of the auxiliary VI with the boundary given per time row.
///
/// At the first free node the stencil uses the true distance to `a(t)`
/// (Shortley-Weller), so the absorption point moves continuously inside
/// a cell. The cap is imposed inside the linear solve as a complementarity
/// problem. At the upper window edge `w_x = 0`.
pub fn solve_aux(spec: &GameSpec, grid: &Grid, a_values: &[f64], condition: BoundaryCondition) -> Result<AuxSurface> {
    let (nt, nx, dt, dx) = (grid.n_t(), grid.n_x(), grid.dt, grid.dx);
    if a_values.len() != nt {
        return Err(Error::GridMismatch(format!("{} boundary values for {} time nodes", a_values.len(), nt)));
    }
    let mut diffusion = Vec::with_capacity(nx);
    let mut drift = Vec::with_capacity(nx);
    let mut zeroth = Vec::with_capacity(nx);
    for &x in &grid.x_nodes {
        let s = spec.sigma(x);
        diffusion.push(0.5 * s * s);
        drift.push(s * spec.sigma_x() + spec.drift(x)?);
        zeroth.push(spec.lambda(x)?);
    }
    let stencil = Stencil::new(&diffusion, &drift, &zeroth, dx);

    let mut w = vec![0.0; nt * nx];
    let mut mask = vec![false; nt * nx];
    let cap_all = vec![spec.alpha0; nx];
    for k in (0..nt - 1).rev() {
        let t = grid.t_nodes[k];
        let a = a_values[k];
        // first free node and its distance to the boundary point
        let (first, h_left) = if a < grid.x_min() + dx * 1e-9 {
            (1, dx)
        } else if a >= grid.x_max() {
            (nx, dx)
        } else {
            let i = ((a - grid.x_min()) / dx).floor() as usize + 1;
            let i = i.min(nx);
            let left = if i < nx { grid.x_nodes[i] - a } else { dx };
            (i, left.clamp(1e-6 * dx, dx))
        };
        for i in 0..first.min(nx) {
            mask[k * nx + i] = true;
        }
        if first + 1 >= nx {
            continue;
        }
        // unknowns: nodes first..nx-1 (last node follows from w_x = 0)
        let m = nx - 1 - first;
        let mut mat = Tridiagonal::zeros(m);
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            let i = first + j;
            let (mut lo, mut di, mut up) = (stencil.lower[i], stencil.diag[i], stencil.upper[i]);
            if j == 0 {
                match condition {
                    BoundaryCondition::Absorbing if h_left < dx => {
                        let (d, mu) = (diffusion[i], drift[i]);
                        let span = h_left + dx;
                        let l = 2.0 * d / (h_left * span);
                        let u = 2.0 * d / (dx * span);
                        let (l, u) = if u + mu / span >= 0.0 && l - mu / span >= 0.0 {
                            (l - mu / span, u + mu / span)
                        } else if mu > 0.0 {
                            (l, u + mu / dx)
                        } else {
                            (l - mu / h_left, u)
                        };
                        up = u;
                        di = -l - u - zeroth[i];
                    }
                    BoundaryCondition::Absorbing => {}
                    BoundaryCondition::Reflecting => {
                        di += lo;
                    }
                }
                // the left neighbour is the boundary value 0 in the absorbing case
                lo = 0.0;
            }
            if j + 1 == m {
                di += up;
                up = 0.0;
            }
            mat.lower[j] = -dt * lo;
            mat.diag[j] = 1.0 - dt * di;
            mat.upper[j] = -dt * up;
            rhs[j] = w[(k + 1) * nx + i] + dt * spec.h_x(t, grid.x_nodes[i])?;
        }
        let sol = mat.solve_capped_above(&rhs, &cap_all[..m]);
        let row = &mut w[k * nx..(k + 1) * nx];
        row[first..nx - 1].copy_from_slice(&sol);
        row[nx - 1] = sol[m - 1];
    }
    for i in 0..nx {
        mask[(nt - 1) * nx + i] = a_values[nt - 1] >= grid.x_nodes[i];
    }
    Ok(AuxSurface {
        grid: grid.clone(),
        w,
        absorbed_mask: mask,
        a_values: a_values.to_vec(),
        alpha0: spec.alpha0,
        condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub sup: f64,
    pub l1: f64,
    /// `(time index, space index)` of the largest difference.
    pub worst: Option<(usize, usize)>,
    pub nodes: usize,
}

/// Compares `w` with `v_x` on nodes with `x > a(t) + 2 dx`, away from the
/// window edges and the terminal row.
pub fn compare_vx(aux: &AuxSurface, surface: &ValueSurface) -> Result<Discrepancy> {
    compare_vx_masked(aux, surface, |_, _| true)
}

/// As [`compare_vx`] with an extra node filter `keep(k, x)`.
pub fn compare_vx_masked(
    aux: &AuxSurface,
    surface: &ValueSurface,
    keep: impl Fn(usize, f64) -> bool,
) -> Result<Discrepancy> {
    if !aux.grid.same_lattice(&surface.grid) {
        return Err(Error::GridMismatch("auxiliary and value surfaces use different lattices".into()));
    }
    let grid = &aux.grid;
    let (nt, nx) = (grid.n_t(), grid.n_x());
    let mut d = Discrepancy { sup: 0.0, l1: 0.0, worst: None, nodes: 0 };
    for k in 0..nt - 1 {
        let a = aux.a_values[k];
        for i in 1..nx - 1 {
            let x = grid.x_nodes[i];
            if !(x > a + 2.0 * grid.dx) || !keep(k, x) {
                continue;
            }
            let j = grid.index(k, i);
            let e = (aux.w[j] - surface.vx[j]).abs();
            d.nodes += 1;
            d.l1 += e * grid.dt * grid.dx;
            if e > d.sup || d.worst.is_none() {
                d.sup = d.sup.max(e);
                d.worst = Some((k, i));
            }
        }
    }
    Ok(d)
}

/// Per-row largest `x` with `w < alpha0 - grad_tol`: the action boundary
/// recovered from the auxiliary problem alone.
pub fn sigma_star_curve(aux: &AuxSurface, spec: &GameSpec, grad_tol: f64) -> Vec<f64> {
    extract_level_from_above(&aux.grid, &aux.w, aux.alpha0 - grad_tol, spec.domain).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::model::{benchmark_spec, ScalarFn};

    #[test]
    fn lambda_examples() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        assert!((lambda_fn(&s, 2.0).unwrap() + 0.03).abs() < 1e-15);
        let mut s0 = benchmark_spec(1.0, 1.0, 0.0, 0.4).unwrap();
        s0.r = 0.1;
        assert!((lambda_fn(&s0, 3.0).unwrap() - 0.1).abs() < 1e-15);
        let mut sp = benchmark_spec(1.0, 1.0, 0.0, 0.4).unwrap();
        sp.mu = ScalarFn::PiecewisePower { p: 2.0, n: 3.0, c: 1.0 };
        assert!((lambda_fn(&sp, 5.0).unwrap() - (0.02 - 2.0 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn fully_absorbed_rows_vanish() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(11, 41, 0.0, 3.0)).unwrap();
        let a = vec![f64::INFINITY; g.n_t()];
        let aux = solve_aux(&s, &g, &a, BoundaryCondition::Absorbing).unwrap();
        assert!(aux.w.iter().all(|&v| v == 0.0));
        assert!(aux.absorbed_mask.iter().all(|&m| m));
    }

    #[test]
    fn capped_and_nonnegative() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(51, 121, 0.0, 3.0)).unwrap();
        let a = vec![0.8; g.n_t()];
        let aux = solve_aux(&s, &g, &a, BoundaryCondition::Absorbing).unwrap();
        assert!(aux.w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(aux.row(g.n_t() - 1).iter().all(|&v| v == 0.0));
        let curve = sigma_star_curve(&aux, &s, 1e-3);
        assert_eq!(*curve.last().unwrap(), f64::INFINITY);
        assert!(curve[0].is_finite());
    }

    #[test]
    fn identical_fields_have_zero_discrepancy() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(11, 41, 0.0, 3.0)).unwrap();
        let a = vec![0.5; g.n_t()];
        let aux = solve_aux(&s, &g, &a, BoundaryCondition::Absorbing).unwrap();
        let mut surf = ValueSurface::from_values(g.clone(), vec![0.0; g.n_t() * g.n_x()], crate::vi::Scheme::Projected);
        surf.vx = aux.w.clone();
        let d = compare_vx(&aux, &surf).unwrap();
        assert_eq!(d.sup, 0.0);
        assert!(d.nodes > 0);
    }

    #[test]
    fn grid_mismatch() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(11, 41, 0.0, 3.0)).unwrap();
        let g2 = build_grid(&s, &GridConfig::new(11, 81, 0.0, 3.0)).unwrap();
        let aux = solve_aux(&s, &g, &[0.5; 11], BoundaryCondition::Absorbing).unwrap();
        let surf = ValueSurface::from_values(g2.clone(), vec![0.0; 11 * 81], crate::vi::Scheme::Projected);
        assert!(matches!(compare_vx(&aux, &surf), Err(Error::GridMismatch(_))));
        assert!(solve_aux(&s, &g, &[0.5; 3], BoundaryCondition::Absorbing).is_err());
    }
}
