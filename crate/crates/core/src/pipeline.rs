//! The four pipeline stages behind the command line. Each stage writes its
//! files atomically into the output directory together with a manifest,
//! and reuses the surface of an earlier `solve` when its inputs match.

use std::path::Path;

use serde::Serialize;

use crate::aux_stop::{compare_vx, sigma_star_curve, solve_aux, BoundaryCondition, Discrepancy};
use crate::boundaries::{
    check_boundary_properties, default_tolerances, extract_boundaries, BoundaryPair, BoundaryReport,
    PropertyTolerances, PropertyVerdict,
};
use crate::config::{OutputFormat, RunConfig, SchemeKind};
use crate::error::{Error, Result};
use crate::game_sim::{deviation_suite, estimate_value, Estimate, SaddleReport, SimSetup, StrategyPair};
use crate::grid::{build_grid, Grid};
use crate::io;
use crate::model::{validate_assumptions, AssumptionReport, GameSpec, ProbeLattice};
use crate::sde::{normals, reflect_along, ReflectionMode};
use crate::vi::{
    residual_check, solve_penalized, solve_projected, structural_invariants, InvariantTolerances, ValueSurface,
};

pub const SURFACE_BIN: &str = "surface.bin";

/// Result of a stage: whether every enabled verdict passed, and a short
/// human summary.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub passed: bool,
    pub summary: String,
}

/// Spec, grid, surface and boundaries shared by the stages.
#[derive(Debug, Clone)]
pub struct Solved {
    pub spec: GameSpec,
    pub grid: Grid,
    pub surface: ValueSurface,
    pub boundaries: BoundaryPair,
    pub solve_key: String,
}

/// Hash of the inputs that determine the surface.
pub fn solve_key(cfg: &RunConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Key<'a> {
        model: &'a crate::config::ModelConfig,
        grid: &'a crate::grid::GridConfig,
        solver: &'a crate::config::SolverConfig,
    }
    let text = toml::to_string(&Key { model: &cfg.model, grid: &cfg.grid, solver: &cfg.solver })
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(io::sha256_hex(text.as_bytes()))
}

/// Standing assumptions on the default probe lattice over the window.
pub fn check_assumptions(cfg: &RunConfig, spec: &GameSpec) -> Result<AssumptionReport> {
    let report = validate_assumptions(spec, &ProbeLattice::new(cfg.grid.x_min, cfg.grid.x_max))?;
    if let Some(c) = report.clauses.iter().find(|c| !c.passed) {
        return Err(Error::AssumptionViolation {
            clause: c.clause.to_string(),
            detail: format!("witnesses {:?} (rerun with --force to proceed)", &c.witnesses[..c.witnesses.len().min(3)]),
        });
    }
    Ok(report)
}

fn boundaries_for(cfg: &RunConfig, spec: &GameSpec, surface: &ValueSurface) -> Result<BoundaryPair> {
    let (gap, grad) = default_tolerances(surface, spec);
    extract_boundaries(surface, spec, cfg.solver.gap_tol.unwrap_or(gap), cfg.solver.grad_tol.unwrap_or(grad))
}

/// Solves from scratch.
pub fn solve(cfg: &RunConfig) -> Result<Solved> {
    let spec = cfg.spec()?;
    let grid = build_grid(&spec, &cfg.grid)?;
    let surface = match cfg.solver.scheme {
        SchemeKind::Penalized => solve_penalized(&spec, &grid, &cfg.solver.penalization())?,
        SchemeKind::Projected => solve_projected(&spec, &grid, &cfg.solver.projection())?,
    };
    let boundaries = boundaries_for(cfg, &spec, &surface)?;
    Ok(Solved { spec, grid, surface, boundaries, solve_key: solve_key(cfg)? })
}

/// Reads `surface.bin` from `dir` when it was produced by the same inputs,
/// otherwise solves.
pub fn load_or_solve(cfg: &RunConfig, dir: &Path) -> Result<Solved> {
    let key = solve_key(cfg)?;
    if let Ok(bytes) = std::fs::read(dir.join(SURFACE_BIN)) {
        if let Ok((header, surface)) = io::decode_surface(&bytes) {
            if header.spec_hash == key {
                let spec = cfg.spec()?;
                let grid = surface.grid.clone();
                let boundaries = boundaries_for(cfg, &spec, &surface)?;
                return Ok(Solved { spec, grid, surface, boundaries, solve_key: key });
            }
        }
    }
    solve(cfg)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn finish(cfg: &RunConfig, spec: &GameSpec, command: &str, dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<()> {
    let entries = io::write_files(dir, &files)?;
    let config = cfg.to_toml()?;
    let manifest = io::Manifest {
        command: command.to_string(),
        config_sha256: io::sha256_hex(config.as_bytes()),
        config,
        spec_fingerprint: spec.fingerprint(),
        files: entries,
    };
    io::write_atomic(&dir.join(format!("manifest_{command}.json")), &json(&manifest)?)
}

fn surface_files(cfg: &RunConfig, solved: &Solved) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    let residuals = residual_check(&solved.surface, &solved.spec)?;
    if cfg.output.formats.contains(&OutputFormat::Csv) {
        files.push(("surface.csv".into(), io::surface_csv(&solved.surface, Some(&residuals)).into_bytes()));
    }
    // the binary surface is always written: later stages read it
    let params = serde_json::to_value(&cfg.solver).map_err(|e| Error::Format(e.to_string()))?;
    files.push((SURFACE_BIN.into(), io::encode_surface(&solved.surface, &solved.solve_key, params)?));
    files.push(("boundaries.csv".into(), io::boundary_csv(&solved.boundaries).into_bytes()));
    files.push(("residuals.json".into(), json(&residuals.summary)?));
    Ok(files)
}

pub fn cmd_solve(cfg: &RunConfig, dir: &Path) -> Result<StageOutcome> {
    let solved = solve(cfg)?;
    let files = surface_files(cfg, &solved)?;
    finish(cfg, &solved.spec, "solve", dir, files)?;
    let k0 = 0;
    Ok(StageOutcome {
        passed: true,
        summary: format!(
            "solved {}x{}: v(0, x0) = {:.6}, a(0) = {}, b(0) = {}",
            solved.grid.n_t(),
            solved.grid.n_x(),
            solved.surface.value_at(cfg.simulation.t0, cfg.simulation.x0),
            solved.boundaries.a[k0],
            solved.boundaries.b[k0]
        ),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuxReport {
    pub absorbed: Discrepancy,
    pub reflecting: Discrepancy,
    pub tolerance: f64,
    /// Largest `|sigma_star - b|` over rows where both are finite and unflagged.
    pub sigma_star_gap: f64,
    pub sigma_star_tolerance: f64,
    pub passed: bool,
}

pub fn aux_report(solved: &Solved) -> Result<(AuxReport, crate::aux_stop::AuxSurface)> {
    let (spec, grid, pair) = (&solved.spec, &solved.grid, &solved.boundaries);
    let aux = solve_aux(spec, grid, &pair.a, BoundaryCondition::Absorbing)?;
    let refl = solve_aux(spec, grid, &pair.a, BoundaryCondition::Reflecting)?;
    let absorbed = compare_vx(&aux, &solved.surface)?;
    let reflecting = compare_vx(&refl, &solved.surface)?;
    let (_, grad_tol) = default_tolerances(&solved.surface, spec);
    let sigma = sigma_star_curve(&aux, spec, grad_tol);
    let gap = (0..grid.n_t() - 1)
        .filter(|&k| sigma[k].is_finite() && pair.b[k].is_finite() && !pair.b_at_window_edge[k])
        .map(|k| (sigma[k] - pair.b[k]).abs())
        .fold(0.0, f64::max);
    let tolerance = 0.05 * spec.alpha0;
    let sigma_tol = 3.0 * grid.dx;
    let report = AuxReport {
        passed: absorbed.sup <= tolerance && gap <= sigma_tol && reflecting.sup > absorbed.sup,
        absorbed,
        reflecting,
        tolerance,
        sigma_star_gap: gap,
        sigma_star_tolerance: sigma_tol,
    };
    Ok((report, aux))
}

pub fn cmd_aux(cfg: &RunConfig, dir: &Path) -> Result<StageOutcome> {
    let solved = load_or_solve(cfg, dir)?;
    let (report, aux) = aux_report(&solved)?;
    let mut files = vec![("aux_report.json".to_string(), json(&report)?)];
    if cfg.output.formats.contains(&OutputFormat::Csv) {
        files.push(("aux.csv".into(), io::aux_csv(&aux).into_bytes()));
    }
    finish(cfg, &solved.spec, "aux", dir, files)?;
    Ok(StageOutcome {
        passed: report.passed,
        summary: format!(
            "|w - v_x| sup {:.3e} (tol {:.3e}), reflecting {:.3e}, sigma_star vs b {:.3e} (tol {:.3e})",
            report.absorbed.sup,
            report.tolerance,
            report.reflecting.sup,
            report.sigma_star_gap,
            report.sigma_star_tolerance
        ),
    })
}

fn setup<'a>(cfg: &RunConfig, solved: &'a Solved) -> Result<SimSetup<'a>> {
    Ok(SimSetup {
        spec: &solved.spec,
        curves: &solved.boundaries,
        t0: cfg.simulation.t0,
        x0: cfg.simulation.x0,
        cfg: cfg.path_config()?,
        n_paths: cfg.simulation.n_paths,
        antithetic: cfg.simulation.antithetic,
    })
}

#[derive(Debug, Clone, Serialize)]
struct SimulateReport {
    pair: StrategyPair,
    estimate: Estimate,
    pde_value: f64,
    n_steps: usize,
    seed: u64,
}

/// Equilibrium reflected paths for the first `count` path indices.
pub fn sample_paths(cfg: &RunConfig, solved: &Solved, count: usize) -> Result<Vec<io::SampledPath>> {
    let s = setup(cfg, solved)?;
    let n = s.cfg.n_steps;
    let dt = s.cfg.dt(s.spec, s.t0);
    let f: Vec<f64> = (0..=n).map(|k| solved.boundaries.b_at(s.t0 + k as f64 * dt)).collect();
    (0..count as u64)
        .map(|i| {
            let z = normals(s.cfg.seed, i, n);
            let p = reflect_along(s.spec, &f, s.t0, s.x0, &z, dt, ReflectionMode::OnePass)?;
            Ok((p.times, p.x_values, p.nu_values))
        })
        .collect()
}

pub fn cmd_simulate(cfg: &RunConfig, dir: &Path) -> Result<StageOutcome> {
    let solved = load_or_solve(cfg, dir)?;
    let s = setup(cfg, &solved)?;
    let estimate = estimate_value(&s, StrategyPair::EQUILIBRIUM)?;
    let report = SimulateReport {
        pair: StrategyPair::EQUILIBRIUM,
        estimate,
        pde_value: solved.surface.value_at(s.t0, s.x0),
        n_steps: s.cfg.n_steps,
        seed: s.cfg.seed,
    };
    let paths = sample_paths(cfg, &solved, cfg.simulation.dump_paths.min(cfg.simulation.n_paths))?;
    let files = vec![
        ("simulate.json".to_string(), json(&report)?),
        ("paths.csv".to_string(), io::paths_csv(&paths).into_bytes()),
    ];
    finish(cfg, &solved.spec, "simulate", dir, files)?;
    Ok(StageOutcome {
        passed: true,
        summary: format!(
            "J(eq) = {:.6} +- {:.6}, v = {:.6}",
            estimate.mean, estimate.std_error, report.pde_value
        ),
    })
}

/// Everything `verify` checks.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyBundle {
    pub structural: Vec<PropertyVerdict>,
    pub boundaries: BoundaryReport,
    pub aux: AuxReport,
}

impl PropertyBundle {
    pub fn all_passed(&self) -> bool {
        self.structural.iter().all(|v| v.passed != Some(false)) && self.boundaries.all_passed() && self.aux.passed
    }
}

pub fn property_bundle(solved: &Solved) -> Result<PropertyBundle> {
    let tol = InvariantTolerances::for_surface(&solved.surface, &solved.spec);
    let structural = structural_invariants(&solved.surface, &solved.spec, &tol)?;
    let boundaries = check_boundary_properties(
        &solved.boundaries,
        &solved.spec,
        &solved.surface,
        &PropertyTolerances::for_spec(&solved.spec),
    )?;
    let (aux, _) = aux_report(solved)?;
    Ok(PropertyBundle { structural, boundaries, aux })
}

pub fn cmd_verify(cfg: &RunConfig, dir: &Path) -> Result<(StageOutcome, SaddleReport)> {
    let solved = load_or_solve(cfg, dir)?;
    let bundle = property_bundle(&solved)?;
    let s = setup(cfg, &solved)?;
    let saddle = deviation_suite(&s, &solved.surface, &cfg.simulation.menu)?;
    let paths = sample_paths(cfg, &solved, cfg.simulation.dump_paths.min(cfg.simulation.n_paths))?;
    let files = vec![
        ("saddle_report.json".to_string(), json(&saddle)?),
        ("saddle_report.txt".to_string(), saddle.to_table().into_bytes()),
        ("properties.json".to_string(), json(&bundle)?),
        ("boundaries.csv".to_string(), io::boundary_csv(&solved.boundaries).into_bytes()),
        ("paths.csv".to_string(), io::paths_csv(&paths).into_bytes()),
    ];
    finish(cfg, &solved.spec, "verify", dir, files)?;
    let failed: Vec<String> = bundle
        .structural
        .iter()
        .chain(&bundle.boundaries.verdicts)
        .filter(|v| v.passed == Some(false))
        .map(|v| v.name.clone())
        .chain((!bundle.aux.passed).then(|| "aux".to_string()))
        .chain(saddle.deviations.iter().filter(|d| !d.passed).map(|d| d.label.clone()))
        .chain((!saddle.equilibrium_passed).then(|| "equilibrium value".to_string()))
        .collect();
    let passed = failed.is_empty();
    let summary = if passed {
        format!("all verdicts pass\n{}", saddle.to_table())
    } else {
        format!("failed: {}\n{}", failed.join(", "), saddle.to_table())
    };
    Ok((StageOutcome { passed, summary }, saddle))
}
