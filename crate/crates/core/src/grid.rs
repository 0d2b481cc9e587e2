//! Space-time lattice with truncation of the unbounded state space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{theta_lower, Domain, GameSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_t: usize,
    pub n_x: usize,
    /// Lower edge of the window; must be 0 on the half line.
    #[serde(default)]
    pub x_min: f64,
    pub x_max: f64,
    /// Required ratio `x_max / theta_lower(0)`.
    #[serde(default = "default_margin")]
    pub margin_min: f64,
}

fn default_margin() -> f64 {
    2.0
}

impl GridConfig {
    pub fn new(n_t: usize, n_x: usize, x_min: f64, x_max: f64) -> Self {
        GridConfig { n_t, n_x, x_min, x_max, margin_min: default_margin() }
    }
}

/// Uniform lattice. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_nodes: Vec<f64>,
    pub x_nodes: Vec<f64>,
    pub dt: f64,
    pub dx: f64,
    pub domain: Domain,
    /// `x_max / theta_lower(0)`; infinite for a degenerate instance.
    pub truncation_margin: f64,
}

impl Grid {
    pub fn n_t(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn n_x(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn x_min(&self) -> f64 {
        self.x_nodes[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x_nodes[self.n_x() - 1]
    }

    pub fn horizon(&self) -> f64 {
        self.t_nodes[self.n_t() - 1]
    }

    pub fn index(&self, k: usize, i: usize) -> usize {
        k * self.n_x() + i
    }

    /// Bracketing cell and weight for linear interpolation in `x`.
    pub fn locate_x(&self, x: f64) -> (usize, f64) {
        let n = self.n_x();
        let s = ((x - self.x_min()) / self.dx).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    /// Same layout, same spacing.
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.t_nodes == other.t_nodes && self.x_nodes == other.x_nodes
    }
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    v[n - 1] = hi;
    v
}

/// Builds the lattice for `spec`.
///
/// The continuation region must fit in the window:
/// `x_max > margin_min * theta_lower(0)` (for a non-positive zero level,
/// `1 + x_max - theta_lower(0) > margin_min`). When the gain stays
/// non-positive up to ten window widths (degenerate instance) the guard
/// does not apply.
pub fn build_grid(spec: &GameSpec, cfg: &GridConfig) -> Result<Grid> {
    if cfg.n_t < 2 || cfg.n_x < 3 {
        return Err(Error::Config(format!("grid needs n_t >= 2 and n_x >= 3, got {}x{}", cfg.n_t, cfg.n_x)));
    }
    if !(cfg.x_max > cfg.x_min) || !cfg.x_max.is_finite() || !cfg.x_min.is_finite() {
        return Err(Error::Config(format!("bad window [{}, {}]", cfg.x_min, cfg.x_max)));
    }
    if spec.domain == Domain::HalfLine && cfg.x_min != 0.0 {
        return Err(Error::Config(format!("half line window must start at 0, got {}", cfg.x_min)));
    }
    let dx_probe = (cfg.x_max - cfg.x_min) / (cfg.n_x - 1) as f64;
    // search well beyond the window so that a zero level just outside it is caught
    let reach = cfg.x_min + 10.0 * (cfg.x_max - cfg.x_min);
    let tl = theta_lower(spec, 0.0, (cfg.x_min, reach), 1e-3 * dx_probe)?;
    let margin = if !tl.is_finite() {
        f64::INFINITY
    } else if tl > 0.0 {
        cfg.x_max / tl
    } else {
        1.0 + (cfg.x_max - tl)
    };
    if margin <= cfg.margin_min {
        return Err(Error::WindowTooSmall { x_max: cfg.x_max, theta_lower: tl, margin: cfg.margin_min });
    }
    let t_nodes = uniform(0.0, spec.horizon, cfg.n_t);
    let x_nodes = uniform(cfg.x_min, cfg.x_max, cfg.n_x);
    Ok(Grid {
        dt: spec.horizon / (cfg.n_t - 1) as f64,
        dx: (cfg.x_max - cfg.x_min) / (cfg.n_x - 1) as f64,
        t_nodes,
        x_nodes,
        domain: spec.domain,
        truncation_margin: margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{benchmark_spec, real_line_spec};

    #[test]
    fn benchmark_grid() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(101, 401, 0.0, 6.0)).unwrap();
        assert_eq!(g.dt, 1.0 / 100.0);
        assert_eq!(g.t_nodes[0], 0.0);
        assert_eq!(*g.t_nodes.last().unwrap(), 1.0);
        assert_eq!(g.x_nodes[0], 0.0);
        assert!((g.truncation_margin - 6.0).abs() < 1e-2);
        assert!(g.x_nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn window_too_small() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        assert!(matches!(
            build_grid(&s, &GridConfig::new(101, 401, 0.0, 0.5)),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(matches!(
            build_grid(&s, &GridConfig::new(101, 401, 0.0, 1.8)),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn real_line_symmetric_window() {
        let s = real_line_spec(0.1, 0.0, 0.5, 1.0, 0.0, -1.0, 0.0, 0.0).unwrap();
        let g = build_grid(&s, &GridConfig::new(51, 501, -5.0, 5.0)).unwrap();
        assert!((g.dx - 0.02).abs() < 1e-15);
        assert_eq!(g.x_min(), -5.0);
        assert_eq!(g.x_max(), 5.0);
    }

    #[test]
    fn half_line_requires_zero_floor() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        assert!(build_grid(&s, &GridConfig::new(11, 41, 0.1, 6.0)).is_err());
        assert!(build_grid(&s, &GridConfig::new(1, 41, 0.0, 6.0)).is_err());
        assert!(build_grid(&s, &GridConfig::new(11, 2, 0.0, 6.0)).is_err());
    }

    #[test]
    fn refinement_halves_spacing_and_is_reproducible() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let a = build_grid(&s, &GridConfig::new(101, 401, 0.0, 6.0)).unwrap();
        let b = build_grid(&s, &GridConfig::new(201, 801, 0.0, 6.0)).unwrap();
        assert_eq!(a.dx, 2.0 * b.dx);
        let a2 = build_grid(&s, &GridConfig::new(101, 401, 0.0, 6.0)).unwrap();
        let bits = |g: &Grid| g.x_nodes.iter().chain(&g.t_nodes).map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&a2));
        for i in 0..a.n_x() {
            assert_eq!(a.x_nodes[i], b.x_nodes[2 * i]);
        }
    }

    #[test]
    fn degenerate_instance_skips_guard() {
        let s = benchmark_spec(1e-4, 10.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(11, 41, 0.0, 6.0)).unwrap();
        assert!(g.truncation_margin.is_infinite());
    }
}
