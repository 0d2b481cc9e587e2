use serde::{Deserialize, Serialize};

use super::{Scheme, ValueSurface};
use crate::boundaries::PropertyVerdict;
use crate::error::Result;
use crate::model::GameSpec;

/// Slacks for the structural checks of a value surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTolerances {
    /// `v >= g - obstacle`.
    pub obstacle: f64,
    /// `-grad_lo <= v_x <= alpha0 + grad_hi`.
    pub grad_lo: f64,
    pub grad_hi: f64,
    /// Discrete slack for monotonicity and convexity, scaled by `1 + |v|`.
    pub shape: f64,
}

impl InvariantTolerances {
    /// `10 delta` on the obstacle for penalized surfaces, exact otherwise;
    /// `1e-3 alpha0` above the cap, none below 0; `1e-7` shape slack.
    pub fn for_surface(surface: &ValueSurface, spec: &GameSpec) -> Self {
        let obstacle = match surface.scheme {
            Scheme::Penalized { delta, .. } => 10.0 * delta,
            _ => 0.0,
        };
        InvariantTolerances { obstacle, grad_lo: 0.0, grad_hi: 1e-3 * spec.alpha0, shape: 1e-7 }
    }
}

struct Tracker {
    name: &'static str,
    first: Option<usize>,
    worst: f64,
    count: usize,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Tracker { name, first: None, worst: 0.0, count: 0 }
    }

    /// Records `excess > 0` as a violation at flat index `j`.
    fn see(&mut self, j: usize, excess: f64) {
        if excess > 0.0 {
            self.first.get_or_insert(j);
            self.worst = self.worst.max(excess);
            self.count += 1;
        }
    }

    fn finish(self) -> PropertyVerdict {
        PropertyVerdict {
            name: self.name.to_string(),
            passed: Some(self.first.is_none()),
            first_offending: self.first,
            detail: if self.count == 0 {
                "holds at every node".into()
            } else {
                format!("{} nodes violate, worst excess {:.3e}", self.count, self.worst)
            },
        }
    }
}

/// `max(v, g)` with derivatives recomputed. Moves a penalized surface by
/// at most its obstacle undershoot.
pub fn obstacle_projected(surface: &ValueSurface, spec: &GameSpec) -> Result<ValueSurface> {
    let grid = &surface.grid;
    let mut v = surface.v.clone();
    for k in 0..grid.n_t() {
        let g = spec.g(grid.t_nodes[k])?;
        for x in &mut v[grid.index(k, 0)..grid.index(k + 1, 0)] {
            *x = x.max(g);
        }
    }
    Ok(ValueSurface::from_values(grid.clone(), v, surface.scheme))
}

/// Obstacle, gradient bounds, monotonicity and convexity in `x`, and
/// monotonicity in `t` of `v - g` and `v_x`. Offending positions are flat
/// row-major indices.
///
/// A penalized surface sits at `g - delta |theta|` in the stopping region
/// while the lower edge and the terminal row hold `g` exactly; the obstacle
/// is checked on the raw values and everything else on `max(v, g)`.
pub fn structural_invariants(
    surface: &ValueSurface,
    spec: &GameSpec,
    tol: &InvariantTolerances,
) -> Result<Vec<PropertyVerdict>> {
    let grid = &surface.grid;
    let (nt, nx) = (grid.n_t(), grid.n_x());
    let gs: Vec<f64> = grid.t_nodes.iter().map(|&t| spec.g(t)).collect::<Result<_>>()?;
    let raw = &surface.v;
    let projected;
    let surface = if let Scheme::Penalized { .. } = surface.scheme {
        projected = obstacle_projected(surface, spec)?;
        &projected
    } else {
        surface
    };
    let mut obstacle = Tracker::new("v_above_obstacle");
    let mut grad_lo = Tracker::new("vx_nonnegative");
    let mut grad_hi = Tracker::new("vx_below_cap");
    let mut incr = Tracker::new("v_nondecreasing_in_x");
    let mut convex = Tracker::new("v_convex_in_x");
    let mut gap_t = Tracker::new("gap_nonincreasing_in_t");
    let mut vx_t = Tracker::new("vx_nonincreasing_in_t");
    let v = &surface.v;
    let scale = |j: usize| tol.shape * (1.0 + v[j].abs());
    for k in 0..nt {
        for i in 0..nx {
            let j = grid.index(k, i);
            obstacle.see(j, gs[k] - tol.obstacle - raw[j]);
            grad_lo.see(j, -tol.grad_lo - surface.vx[j]);
            grad_hi.see(j, surface.vx[j] - spec.alpha0 - tol.grad_hi);
            if i + 1 < nx {
                incr.see(j, v[j] - v[j + 1] - scale(j));
            }
            if i > 0 && i + 1 < nx {
                convex.see(j, -(v[j + 1] - 2.0 * v[j] + v[j - 1]) - scale(j));
            }
            if k + 1 < nt {
                let jn = j + nx;
                gap_t.see(j, (v[jn] - gs[k + 1]) - (v[j] - gs[k]) - scale(j));
                vx_t.see(j, surface.vx[jn] - surface.vx[j] - tol.shape * (1.0 + surface.vx[j].abs()));
            }
        }
    }
    Ok([obstacle, grad_lo, grad_hi, incr, convex, gap_t, vx_t].into_iter().map(Tracker::finish).collect())
}
