use scgame::aux_stop::{solve_aux, BoundaryCondition};
use scgame::boundaries::{default_tolerances, extract_boundaries, BoundaryPair};
use scgame::game_sim::{allowance, pairwise_sum, Estimate};
use scgame::grid::{build_grid, GridConfig};
use scgame::model::{benchmark_spec, real_line_spec, GameSpec};
use scgame::oracle::{psor_surface, PsorParams};
use scgame::sde::{simulate_uncontrolled, simulate_y, PathConfig};
use scgame::vi::{solve_penalized, PenalizationParams, ValueSurface};

fn terminal_mean(paths: impl Iterator<Item = f64>) -> Estimate {
    let xs: Vec<f64> = paths.collect();
    Estimate::from_samples(&xs)
}

#[test]
fn gbm_mean_matches_closed_form() {
    let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
    let cfg = PathConfig::new(200, 1).unwrap();
    let est = terminal_mean((0..40_000).map(|i| *simulate_uncontrolled(&s, 0.0, 1.0, &cfg, i).unwrap().values.last().unwrap()));
    // Euler mean of a linear SDE is (1 + mu dt)^n exactly
    let euler = (1.0 + 0.05 / 200.0f64).powi(200);
    assert!((est.mean - euler).abs() < 4.0 * est.std_error, "{est:?} vs {euler}");
    assert!((euler - 0.05f64.exp()).abs() < 1e-4);
}

#[test]
fn y_process_has_shifted_drift() {
    let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
    let cfg = PathConfig::new(200, 2).unwrap();
    let est = terminal_mean((0..40_000).map(|i| *simulate_y(&s, 0.0, 1.0, &cfg, i).unwrap().values.last().unwrap()));
    let euler = (1.0 + (0.05 + 0.16) / 200.0f64).powi(200);
    assert!((est.mean - euler).abs() < 4.0 * est.std_error, "{est:?} vs {euler}");
}

#[test]
fn driftless_real_line_moments() {
    let s = real_line_spec(0.0, 0.0, 0.5, 1.0, 0.0, -1.0, 0.0, 0.0).unwrap();
    let cfg = PathConfig::new(50, 3).unwrap();
    let xs: Vec<f64> =
        (0..40_000).map(|i| *simulate_uncontrolled(&s, 0.0, 0.3, &cfg, i).unwrap().values.last().unwrap()).collect();
    let est = Estimate::from_samples(&xs);
    assert!((est.mean - 0.3).abs() < 4.0 * est.std_error);
    let var = pairwise_sum(&xs.iter().map(|x| (x - est.mean).powi(2)).collect::<Vec<_>>()) / (xs.len() - 1) as f64;
    // variance 0.25 with relative s.e. sqrt(2 / n)
    assert!((var - 0.25).abs() < 4.0 * 0.25 * (2.0 / xs.len() as f64).sqrt(), "{var}");
}

fn stopping_curves(spec: &GameSpec, s: &ValueSurface) -> BoundaryPair {
    let (gap, grad) = default_tolerances(s, spec);
    extract_boundaries(s, spec, gap, grad).unwrap()
}

/// With a prohibitive control cost the auxiliary value is the expected
/// discounted `h_x` along `Y` until `Y` falls to `a(t)`.
#[test]
fn aux_value_matches_killed_expectation() {
    let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap().with_alpha0(1e6);
    let grid = build_grid(&s, &GridConfig::new(201, 801, 0.0, 3.0)).unwrap();
    let surface = psor_surface(&s, &grid, &PsorParams::default()).unwrap();
    let curves = stopping_curves(&s, &surface);
    let aux = solve_aux(&s, &grid, &curves.a, BoundaryCondition::Absorbing).unwrap();
    let (y0, n) = (1.2, 800);
    let cfg = PathConfig::new(n, 4).unwrap();
    let dt = 1.0 / n as f64;
    let samples: Vec<f64> = (0..20_000)
        .map(|i| {
            let p = simulate_y(&s, 0.0, y0, &cfg, i).unwrap();
            let mut acc = 0.0;
            for k in 0..n {
                let (t, y) = (p.times[k], p.values[k]);
                if y <= curves.a_at(t) {
                    break;
                }
                let disc = (-s.lambda(y).unwrap() * t).exp();
                acc += disc * s.h_x(t, y).unwrap() * dt;
            }
            acc
        })
        .collect();
    let est = Estimate::from_samples(&samples);
    let w = ValueSurface::interp_row(aux.row(0), &grid, y0);
    let tol = 3.0 * est.std_error + allowance(dt, grid.dx);
    assert!((est.mean - w).abs() <= tol, "MC {est:?} vs w {w} (tol {tol})");
}

#[test]
fn boundaries_agree_across_resolutions() {
    let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
    let mut curves = Vec::new();
    for (nt, nx) in [(101, 401), (201, 801)] {
        let g = build_grid(&s, &GridConfig::new(nt, nx, 0.0, 3.0)).unwrap();
        let v = solve_penalized(&s, &g, &PenalizationParams::joint(1e-5)).unwrap();
        curves.push((stopping_curves(&s, &v), g.dx));
    }
    let (coarse, dx) = (&curves[0].0, curves[0].1);
    let fine = &curves[1].0;
    for &t in &[0.0, 0.2, 0.4, 0.6, 0.8] {
        let (ac, af) = (coarse.a_at(t), fine.a_at(t));
        assert!((ac - af).abs() <= 3.0 * dx, "a({t}): {ac} vs {af}");
        let (bc, bf) = (coarse.b_at(t), fine.b_at(t));
        if bc.is_finite() && bf.is_finite() {
            assert!((bc - bf).abs() <= 3.0 * dx, "b({t}): {bc} vs {bf}");
        }
    }
}
