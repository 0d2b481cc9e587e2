//! Stopping boundary `a(t) = inf{x : v > g}` and action boundary
//! `b(t) = sup{x : v_x < alpha0}` read off a value surface, and checks of
//! their structural properties.
//!
//! Conventions: an empty set gives `a = +inf`; `b = +inf` when the gradient
//! cap is not reached inside the window; `sup of the empty set = inf O`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Grid;
use crate::model::{theta_lower, Domain, GameSpec};
use crate::vi::ValueSurface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub t_nodes: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub a_at_window_edge: Vec<bool>,
    pub b_at_window_edge: Vec<bool>,
}

impl BoundaryPair {
    /// Left-continuous step extension: on `(t_{k-1}, t_k]` the value at `t_k`.
    pub fn step_value(values: &[f64], t_nodes: &[f64], t: f64) -> f64 {
        let k = t_nodes.partition_point(|&s| s < t - 1e-12 * (1.0 + t.abs()));
        values[k.min(values.len() - 1)]
    }

    pub fn a_at(&self, t: f64) -> f64 {
        Self::step_value(&self.a, &self.t_nodes, t)
    }

    pub fn b_at(&self, t: f64) -> f64 {
        Self::step_value(&self.b, &self.t_nodes, t)
    }
}

/// Per-row stopping boundary. Returns `(a, at_window_edge)`.
pub fn extract_a(surface: &ValueSurface, spec: &GameSpec, gap_tol: f64) -> Result<(Vec<f64>, Vec<bool>)> {
    let grid = &surface.grid;
    let nx = grid.n_x();
    let mut a = Vec::with_capacity(grid.n_t());
    let mut edge = Vec::with_capacity(grid.n_t());
    for k in 0..grid.n_t() {
        let g = spec.g(grid.t_nodes[k])?;
        let row = surface.row(k);
        let gap = |i: usize| row[i] - g;
        match (1..nx).find(|&i| gap(i) > gap_tol) {
            None => {
                a.push(f64::INFINITY);
                edge.push(false);
            }
            Some(1) => {
                a.push(spec.domain.inf());
                edge.push(true);
            }
            Some(i) => {
                let (lo, hi) = (gap(i - 1), gap(i));
                let w = ((gap_tol - lo) / (hi - lo)).clamp(0.0, 1.0);
                a.push(grid.x_nodes[i - 1] + w * grid.dx);
                edge.push(false);
            }
        }
    }
    Ok((a, edge))
}

/// Per-row action boundary. Returns `(b, at_window_edge)`.
pub fn extract_b(surface: &ValueSurface, spec: &GameSpec, grad_tol: f64) -> (Vec<f64>, Vec<bool>) {
    extract_level_from_above(&surface.grid, &surface.vx, spec.alpha0 - grad_tol, spec.domain)
}

/// Largest `x` with `field < level` per row, refined linearly; `+inf` when
/// the last interior node is still below the level, and at the final row.
pub(crate) fn extract_level_from_above(
    grid: &Grid,
    field: &[f64],
    level: f64,
    domain: Domain,
) -> (Vec<f64>, Vec<bool>) {
    let (nt, nx) = (grid.n_t(), grid.n_x());
    let mut b = Vec::with_capacity(nt);
    let mut edge = Vec::with_capacity(nt);
    for k in 0..nt {
        let row = &field[k * nx..(k + 1) * nx];
        if k == nt - 1 || row[nx - 2] < level {
            b.push(f64::INFINITY);
            edge.push(true);
            continue;
        }
        match (1..nx - 1).rev().find(|&i| row[i] < level) {
            None => {
                b.push(domain.inf().max(grid.x_min()));
                edge.push(false);
            }
            Some(i) => {
                let (lo, hi) = (row[i], row[i + 1]);
                let w = if hi > lo { ((level - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
                b.push(grid.x_nodes[i] + w * grid.dx);
                edge.push(false);
            }
        }
    }
    (b, edge)
}

/// Extracts both boundaries with the given tolerances.
pub fn extract_boundaries(surface: &ValueSurface, spec: &GameSpec, gap_tol: f64, grad_tol: f64) -> Result<BoundaryPair> {
    let (a, a_at_window_edge) = extract_a(surface, spec, gap_tol)?;
    let (b, b_at_window_edge) = extract_b(surface, spec, grad_tol);
    Ok(BoundaryPair {
        t_nodes: surface.grid.t_nodes.clone(),
        a,
        b,
        a_at_window_edge,
        b_at_window_edge,
    })
}

/// Default extraction tolerances `(gap_tol, grad_tol)`.
///
/// Near `a` the gap `v - g` grows quadratically, so a threshold `tau`
/// shifts `a` by about `sqrt(tau / c)`; the gap tolerance is therefore kept
/// tiny. Both schemes leave `v - g <= 0` in the stopping region (the
/// penalised one undershoots by `O(delta)`), so no positive noise competes.
pub fn default_tolerances(_surface: &ValueSurface, spec: &GameSpec) -> (f64, f64) {
    (1e-9, 1e-3 * spec.alpha0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub name: String,
    /// `None` when the hypothesis of the property does not hold.
    pub passed: Option<bool>,
    pub first_offending: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub verdicts: Vec<PropertyVerdict>,
    pub degenerate: bool,
}

impl BoundaryReport {
    pub fn verdict(&self, name: &str) -> Option<&PropertyVerdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Every applicable verdict passed.
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed != Some(false))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyTolerances {
    pub fit_tol: f64,
    /// Slack in cells for `a <= theta_lower`.
    pub theta_cells: f64,
    /// A step between consecutive rows counts as a jump when it exceeds
    /// this many cells and four times both neighbouring steps.
    pub jump_cells: f64,
    /// Slack for monotonicity of the raw sequences.
    pub mono_slack: f64,
}

impl PropertyTolerances {
    pub fn for_spec(spec: &GameSpec) -> Self {
        PropertyTolerances { fit_tol: 0.05 * spec.alpha0, theta_cells: 2.0, jump_cells: 10.0, mono_slack: 1e-9 }
    }
}

fn verdict(name: &str, first: Option<usize>, detail: String) -> PropertyVerdict {
    PropertyVerdict { name: name.into(), passed: Some(first.is_none()), first_offending: first, detail }
}

fn first_decrease(values: &[f64], rows: usize, slack: f64) -> Option<usize> {
    (1..rows).find(|&k| {
        let (p, c) = (values[k - 1], values[k]);
        // +inf may only be followed by +inf
        if p == f64::INFINITY {
            c != f64::INFINITY
        } else {
            c < p - slack
        }
    })
}

/// Structural checks of an extracted pair. The terminal row is excluded:
/// both sets degenerate at `t = T`.
pub fn check_boundary_properties(
    pair: &BoundaryPair,
    spec: &GameSpec,
    surface: &ValueSurface,
    tol: &PropertyTolerances,
) -> Result<BoundaryReport> {
    let grid = &surface.grid;
    let rows = grid.n_t() - 1;
    let dx = grid.dx;
    let degenerate = pair.a[..rows].iter().all(|a| a.is_infinite() && *a > 0.0);
    let mut verdicts = Vec::new();

    let first = first_decrease(&pair.a, rows, tol.mono_slack);
    verdicts.push(verdict("a_nondecreasing", first, String::new()));
    let first = first_decrease(&pair.b, rows, tol.mono_slack);
    verdicts.push(verdict("b_nondecreasing", first, String::new()));

    let mut worst = f64::NEG_INFINITY;
    let mut first = None;
    for k in 0..rows {
        if !pair.a[k].is_finite() {
            continue;
        }
        let tl = theta_lower(spec, grid.t_nodes[k], (grid.x_min(), grid.x_max()), 1e-3 * dx)?;
        let excess = pair.a[k] - tl;
        worst = worst.max(excess);
        if excess > tol.theta_cells * dx && first.is_none() {
            first = Some(k);
        }
    }
    verdicts.push(verdict("a_below_theta_lower", first, format!("max a - theta_lower = {worst:.3e}")));

    if spec.domain == Domain::HalfLine {
        let first = (1..rows).find(|&k| pair.a[k] <= 0.0);
        verdicts.push(verdict("a_positive", first, String::new()));
    }

    let first = (0..rows).find(|&k| pair.a[k].is_finite() && pair.b[k].is_finite() && pair.a[k] >= pair.b[k]);
    verdicts.push(verdict("a_below_b", first, String::new()));

    // hypothesis h_x - alpha0 * lambda <= 0 near the lower edge, probed at the first interior node
    let probe = grid.x_nodes[1];
    let hyp = spec.h_x(0.0, probe)? - spec.alpha0 * spec.lambda(probe)? <= 0.0;
    let first = (1..rows).find(|&k| pair.b[k] <= grid.x_min().max(spec.domain.inf()));
    verdicts.push(PropertyVerdict {
        name: "b_above_inf_domain".into(),
        passed: hyp.then_some(first.is_none()),
        first_offending: first,
        detail: if hyp { String::new() } else { "hypothesis not met; check skipped".into() },
    });

    let mut worst_fit = 0.0f64;
    let mut first = None;
    for k in 0..rows {
        if !pair.a[k].is_finite() || pair.a_at_window_edge[k] {
            continue;
        }
        let fit = ValueSurface::interp_row(surface.vx_row(k), grid, pair.a[k]).abs();
        worst_fit = worst_fit.max(fit);
        if fit > tol.fit_tol && first.is_none() {
            first = Some(k);
        }
    }
    verdicts.push(verdict("smooth_fit", first, format!("max |v_x(t, a(t))| = {worst_fit:.3e}")));

    // Continuity hypotheses: h_x(t, a(t)) > 0 for a; h_xx > 0 or mu_xx > 0 at b(t).
    let mut a_hyp = vec![false; rows];
    let mut b_hyp = vec![false; rows];
    for k in 0..rows {
        let t = grid.t_nodes[k];
        if pair.a[k].is_finite() {
            a_hyp[k] = spec.h_x(t, pair.a[k])? > 0.0;
        }
        if pair.b[k].is_finite() {
            let (x, e) = (pair.b[k], 1e-4 * (1.0 + pair.b[k].abs()));
            let hxx = (spec.h_x(t, x + e)? - spec.h_x(t, x - e)?) / (2.0 * e);
            let mxx = (spec.drift_dx(x + e)? - spec.drift_dx(x - e)?) / (2.0 * e);
            b_hyp[k] = hxx > 0.0 || mxx > 0.0;
        }
    }
    for (name, values, flags, hyp) in [
        ("a_bounded_jumps", &pair.a, &pair.a_at_window_edge, &a_hyp),
        ("b_bounded_jumps", &pair.b, &pair.b_at_window_edge, &b_hyp),
    ] {
        let usable = |k: usize| k < rows && values[k].is_finite() && !flags[k];
        let step = |k: usize| (values[k] - values[k - 1]).abs();
        let mut worst = 0.0f64;
        let mut first = None;
        let mut any = false;
        for k in 1..rows {
            if !(usable(k - 1) && usable(k) && hyp[k - 1] && hyp[k]) {
                continue;
            }
            any = true;
            let jump = step(k);
            worst = worst.max(jump);
            // a discontinuity shows as an isolated step much larger than its
            // neighbours; a steep but continuous curve has comparable steps
            let before = if k >= 2 && usable(k - 2) { step(k - 1) } else { 0.0 };
            let after = if usable(k + 1) { step(k + 1) } else { 0.0 };
            if jump > tol.jump_cells * dx && jump > 4.0 * before.max(after) && first.is_none() {
                first = Some(k);
            }
        }
        verdicts.push(PropertyVerdict {
            name: name.into(),
            passed: any.then_some(first.is_none()),
            first_offending: first,
            detail: format!("max step = {worst:.3e}"),
        });
    }

    Ok(BoundaryReport { verdicts, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::model::benchmark_spec;
    use crate::vi::Scheme;

    fn synthetic(spec: &GameSpec, f: impl Fn(f64, f64) -> f64) -> ValueSurface {
        let grid = build_grid(spec, &GridConfig::new(11, 41, 0.0, 4.0)).unwrap();
        let mut v = Vec::new();
        for &t in &grid.t_nodes {
            for &x in &grid.x_nodes {
                v.push(f(t, x));
            }
        }
        ValueSurface::from_values(grid, v, Scheme::Projected)
    }

    #[test]
    fn empty_continuation_gives_infinite_a() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |_, _| 0.0);
        let (a, edge) = extract_a(&surf, &s, 1e-9).unwrap();
        assert!(a.iter().all(|v| *v == f64::INFINITY));
        assert!(edge.iter().all(|e| !e));
    }

    #[test]
    fn first_interior_node_gives_domain_edge() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |t, x| if t < 1.0 { 0.01 + 0.1 * x } else { 0.0 });
        let (a, edge) = extract_a(&surf, &s, 1e-9).unwrap();
        assert_eq!(a[0], 0.0);
        assert!(edge[0]);
    }

    #[test]
    fn refinement_stays_in_cell() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |_, x| (x - 1.03f64).max(0.0).powi(2));
        let (a, _) = extract_a(&surf, &s, 1e-9).unwrap();
        for &v in &a {
            assert!((1.0..=1.1).contains(&v), "{v}");
        }
    }

    #[test]
    fn b_at_terminal_and_without_cap() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |_, x| 0.1 * x * x);
        let (b, edge) = extract_b(&surf, &s, 1e-3);
        assert_eq!(*b.last().unwrap(), f64::INFINITY);
        // slope 0.2 x reaches 1 at x = 5, outside the window
        assert!(b.iter().all(|v| *v == f64::INFINITY) && edge.iter().all(|e| *e));
        let surf = synthetic(&s, |_, x| 0.25 * x * x);
        let (b, edge) = extract_b(&surf, &s, 1e-3);
        assert!((b[0] - 2.0).abs() < 0.1 && !edge[0], "{}", b[0]);
    }

    #[test]
    fn step_extension_is_left_continuous() {
        let t = [0.0, 0.5, 1.0];
        let v = [1.0, 2.0, 3.0];
        assert_eq!(BoundaryPair::step_value(&v, &t, 0.0), 1.0);
        assert_eq!(BoundaryPair::step_value(&v, &t, 0.2), 2.0);
        assert_eq!(BoundaryPair::step_value(&v, &t, 0.5), 2.0);
        assert_eq!(BoundaryPair::step_value(&v, &t, 0.51), 3.0);
    }

    #[test]
    fn decreasing_a_is_caught() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |t, x| if t < 1.0 { (x - 0.9 + 0.2 * t).max(0.0).powi(2) * 0.1 } else { 0.0 });
        let pair = extract_boundaries(&surf, &s, 1e-9, 1e-3).unwrap();
        let rep = check_boundary_properties(&pair, &s, &surf, &PropertyTolerances::for_spec(&s)).unwrap();
        let v = rep.verdict("a_nondecreasing").unwrap();
        assert_eq!(v.passed, Some(false));
        assert_eq!(v.first_offending, Some(1));
        assert!(!rep.all_passed());
    }

    #[test]
    fn degenerate_instance_is_noted() {
        let s = benchmark_spec(1e-4, 10.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |_, _| 0.0);
        let pair = extract_boundaries(&surf, &s, 1e-9, 1e-3).unwrap();
        let rep = check_boundary_properties(&pair, &s, &surf, &PropertyTolerances::for_spec(&s)).unwrap();
        assert!(rep.degenerate);
        assert!(rep.all_passed());
    }

    #[test]
    fn isolated_jump_is_flagged_but_steep_growth_is_not() {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let surf = synthetic(&s, |_, _| 0.0);
        let n = surf.grid.n_t();
        let mut pair = BoundaryPair {
            t_nodes: surf.grid.t_nodes.clone(),
            a: vec![0.5; n],
            b: (0..n).map(|k| 1.0 + 0.01 * (k * k) as f64).collect(),
            a_at_window_edge: vec![false; n],
            b_at_window_edge: vec![false; n],
        };
        let tol = PropertyTolerances::for_spec(&s);
        let rep = check_boundary_properties(&pair, &s, &surf, &tol).unwrap();
        assert_eq!(rep.verdict("b_bounded_jumps").unwrap().passed, Some(true));
        for k in 5..n {
            pair.b[k] = 3.0;
        }
        for k in 0..5 {
            pair.b[k] = 1.0;
        }
        let rep = check_boundary_properties(&pair, &s, &surf, &tol).unwrap();
        let v = rep.verdict("b_bounded_jumps").unwrap();
        assert_eq!((v.passed, v.first_offending), (Some(false), Some(5)));
    }
}
