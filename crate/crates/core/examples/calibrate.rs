//! Fits the Monte Carlo discretization allowance on the benchmark: regresses
//! `|J(eq) - v|` on `sqrt(dt) + dx` through the origin over three
//! resolutions and prints the slope plus three of its standard errors.

use scgame::boundaries::{default_tolerances, extract_boundaries};
use scgame::game_sim::{estimate_value, SimSetup, StrategyPair};
use scgame::grid::{build_grid, GridConfig};
use scgame::model::benchmark_spec;
use scgame::sde::PathConfig;
use scgame::vi::{solve_penalized, PenalizationParams};

fn main() {
    let n_paths: usize = std::env::args().nth(1).map_or(100_000, |a| a.parse().expect("path count"));
    let spec = benchmark_spec(1.0, 1.0, 0.05, 0.4).expect("benchmark");
    let mut pts = Vec::new();
    for &(nt, nx) in &[(51usize, 201usize), (101, 401), (201, 801)] {
        let grid = build_grid(&spec, &GridConfig::new(nt, nx, 0.0, 3.0)).expect("grid");
        let surface = solve_penalized(&spec, &grid, &PenalizationParams::joint(1e-5)).expect("solve");
        let (gap_tol, grad_tol) = default_tolerances(&surface, &spec);
        let curves = extract_boundaries(&surface, &spec, gap_tol, grad_tol).expect("boundaries");
        for &(t0, x0) in &[(0.0, 1.0), (0.0, 1.2), (0.2, 1.4)] {
            let n_steps = ((spec.horizon - t0) / grid.dt).round() as usize;
            let setup = SimSetup {
                spec: &spec,
                curves: &curves,
                t0,
                x0,
                cfg: PathConfig::new(n_steps, 11).expect("steps"),
                n_paths,
                antithetic: false,
            };
            let est = estimate_value(&setup, StrategyPair::EQUILIBRIUM).expect("estimate");
            let v = surface.value_at(t0, x0);
            let h = grid.dt.sqrt() + grid.dx;
            println!("{nt}x{nx} ({t0}, {x0}) v={v:.6} J={:.6} se={:.6} h={h:.4}", est.mean, est.std_error);
            pts.push((h, (est.mean - v).abs()));
        }
    }
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let slope = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - slope * p.0).powi(2)).sum();
    let se = (rss / (pts.len() - 1) as f64 / sxx).sqrt();
    println!("slope {slope:.3e}  se {se:.3e}  slope+3se {:.3e}", slope + 3.0 * se);
}
