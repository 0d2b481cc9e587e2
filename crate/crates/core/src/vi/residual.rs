use serde::{Deserialize, Serialize};

use super::ValueSurface;
use crate::boundaries::{default_tolerances, extract_boundaries};
use crate::error::Result;
use crate::model::GameSpec;

/// Per-node residuals of the two forms of the variational inequality,
/// `max{min{P, alpha0 - |v_x|}, g - v}` and `min{max{P, g - v}, alpha0 - |v_x|}`
/// with `P = v_t + L v - r v + h`. The terminal row is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFields {
    pub max_min: Vec<f64>,
    pub min_max: Vec<f64>,
    /// The linear part `P` alone.
    pub pde: Vec<f64>,
    /// Nodes entering the summary norms.
    pub mask: Vec<bool>,
    pub summary: ResidualSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub max_min_linf: f64,
    pub max_min_l1: f64,
    pub min_max_linf: f64,
    pub min_max_l1: f64,
    /// `P` on nodes strictly between the boundaries.
    pub pde_linf_continuation: f64,
}

/// The time derivative is the centered difference between the neighbouring
/// rows (forward at the first row). The implicit step zeroes the forward
/// version to solver accuracy, so the centered one is what exposes the
/// truncation error. The summary skips the window edges, the terminal row
/// and a band of two cells around each extracted boundary.
pub fn residual_check(surface: &ValueSurface, spec: &GameSpec) -> Result<ResidualFields> {
    let grid = &surface.grid;
    let (nt, nx, dt, dx) = (grid.n_t(), grid.n_x(), grid.dt, grid.dx);
    let (gap_tol, grad_tol) = default_tolerances(surface, spec);
    let pair = extract_boundaries(surface, spec, gap_tol, grad_tol)?;
    let band = 2.0 * dx;

    let len = nt * nx;
    let mut max_min = vec![0.0; len];
    let mut min_max = vec![0.0; len];
    let mut pde = vec![0.0; len];
    let mut mask = vec![false; len];
    let mut s = ResidualSummary {
        max_min_linf: 0.0,
        max_min_l1: 0.0,
        min_max_linf: 0.0,
        min_max_l1: 0.0,
        pde_linf_continuation: 0.0,
    };
    for k in 0..nt - 1 {
        let t = grid.t_nodes[k];
        let g = spec.g(t)?;
        let (a, b) = (pair.a[k], pair.b[k]);
        for i in 0..nx {
            let x = grid.x_nodes[i];
            let j = grid.index(k, i);
            let vt = if k == 0 {
                (surface.v[j + nx] - surface.v[j]) / dt
            } else {
                (surface.v[j + nx] - surface.v[j - nx]) / (2.0 * dt)
            };
            let lv = 0.5 * spec.sigma(x).powi(2) * surface.vxx[j] + spec.drift(x)? * surface.vx[j];
            let p = vt + lv - spec.r * surface.v[j] + spec.h(t, x)?;
            let grad = spec.alpha0 - surface.vx[j].abs();
            let obs = g - surface.v[j];
            pde[j] = p;
            max_min[j] = p.min(grad).max(obs);
            min_max[j] = p.max(obs).min(grad);

            let interior = i > 0 && i + 1 < nx;
            let near = |c: f64| c.is_finite() && (x - c).abs() <= band;
            if interior && !near(a) && !near(b) {
                mask[j] = true;
                let (m1, m2) = (max_min[j].abs(), min_max[j].abs());
                s.max_min_linf = s.max_min_linf.max(m1);
                s.min_max_linf = s.min_max_linf.max(m2);
                s.max_min_l1 += m1 * dt * dx;
                s.min_max_l1 += m2 * dt * dx;
                if x > a && x < b {
                    s.pde_linf_continuation = s.pde_linf_continuation.max(p.abs());
                }
            }
        }
    }
    Ok(ResidualFields { max_min, min_max, pde, mask, summary: s })
}
