//! Problem instances: coefficients, the effective running gain `theta`,
//! its zero level `theta_lower`, and sample-based checks of the standing
//! assumptions on the data.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, DualValue, ExprAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// State space is the whole real line, constant volatility.
    RealLine,
    /// State space is `(0, inf)`, volatility proportional to the state.
    HalfLine,
}

impl Domain {
    pub fn inf(self) -> f64 {
        match self {
            Domain::RealLine => f64::NEG_INFINITY,
            Domain::HalfLine => 0.0,
        }
    }
}

/// A coefficient of `(t, x)` with exact first partials.
///
/// Drift ignores `t`, the terminal payoff ignores `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Constant(f64),
    /// `c + a_t t + a_x x`
    Affine { c: f64, a_t: f64, a_x: f64 },
    /// `k1 x^2 - k2`
    Quadratic { k1: f64, k2: f64 },
    /// `quad (x^+)^2 + lin x + c`
    PositivePartQuadratic { quad: f64, lin: f64, c: f64 },
    /// `[(x-c)^+]^p` on `[0, n]`, continued linearly (C^1) beyond `n`.
    PiecewisePower { p: f64, n: f64, c: f64 },
    Expr(Arc<ExprAst>),
}

impl ScalarFn {
    pub fn expr(source: &str) -> Result<Self> {
        Ok(ScalarFn::Expr(Arc::new(expr::parse(source)?)))
    }

    pub fn eval_dual(&self, t: f64, x: f64) -> Result<DualValue> {
        Ok(match *self {
            ScalarFn::Constant(c) => DualValue::constant(c),
            ScalarFn::Affine { c, a_t, a_x } => DualValue {
                value: c + a_t * t + a_x * x,
                dx: a_x,
                dt: a_t,
            },
            ScalarFn::Quadratic { k1, k2 } => DualValue {
                value: k1 * x * x - k2,
                dx: 2.0 * k1 * x,
                dt: 0.0,
            },
            ScalarFn::PositivePartQuadratic { quad, lin, c } => {
                let xp = x.max(0.0);
                DualValue {
                    value: quad * xp * xp + lin * x + c,
                    dx: 2.0 * quad * xp + lin,
                    dt: 0.0,
                }
            }
            ScalarFn::PiecewisePower { p, n, c } => {
                if x <= n {
                    let z = (x - c).max(0.0);
                    DualValue {
                        value: z.powf(p),
                        dx: if z > 0.0 { p * z.powf(p - 1.0) } else { 0.0 },
                        dt: 0.0,
                    }
                } else {
                    let base = (n - c).powf(p - 1.0);
                    DualValue {
                        value: base * (n - c + p * (x - n)),
                        dx: p * base,
                        dt: 0.0,
                    }
                }
            }
            ScalarFn::Expr(ref ast) => ast.eval_dual(t, x)?,
        })
    }

    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        self.eval_dual(t, x).map(|d| d.value)
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "{c:?}"),
            ScalarFn::Affine { c, a_t, a_x } => write!(f, "{c:?} + {a_t:?}*t + {a_x:?}*x"),
            ScalarFn::Quadratic { k1, k2 } => write!(f, "{k1:?}*x^2 - {k2:?}"),
            ScalarFn::PositivePartQuadratic { quad, lin, c } => {
                write!(f, "{quad:?}*max(x,0)^2 + {lin:?}*x + {c:?}")
            }
            ScalarFn::PiecewisePower { p, n, c } => write!(f, "piecewise_power(p={p:?}, n={n:?}, c={c:?})"),
            ScalarFn::Expr(ast) => write!(f, "{ast}"),
        }
    }
}

/// Full problem instance.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub domain: Domain,
    /// Drift `mu(x)`.
    pub mu: ScalarFn,
    /// Volatility level on the real line.
    pub sigma0: f64,
    /// Volatility slope on the half line.
    pub sigma1: f64,
    /// Stopping payoff `g(t)`.
    pub g: ScalarFn,
    /// Running payoff `h(t, x)`.
    pub h: ScalarFn,
    pub r: f64,
    /// Marginal cost of control.
    pub alpha0: f64,
    pub horizon: f64,
}

impl GameSpec {
    /// Checks the structural invariants of an instance.
    pub fn validate(&self) -> Result<()> {
        match self.domain {
            Domain::RealLine => {
                if !(self.sigma0 > 0.0 && self.sigma1 == 0.0) {
                    return Err(Error::Config("real line requires sigma0 > 0 and sigma1 = 0".into()));
                }
            }
            Domain::HalfLine => {
                if !(self.sigma1 > 0.0 && self.sigma0 == 0.0) {
                    return Err(Error::Config("half line requires sigma1 > 0 and sigma0 = 0".into()));
                }
                let mu0 = self.mu.value(0.0, 0.0)?;
                if mu0.abs() > 1e-12 {
                    return Err(Error::Config(format!("half line requires mu(0) = 0, got {mu0}")));
                }
            }
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::Config(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::Config(format!("discount rate must be non-negative, got {}", self.r)));
        }
        Ok(())
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if self.domain == Domain::HalfLine && x < 0.0 {
            return Err(Error::Domain(format!("x = {x} lies outside the closed half line")));
        }
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite state {x}")));
        }
        Ok(())
    }

    pub fn sigma(&self, x: f64) -> f64 {
        match self.domain {
            Domain::RealLine => self.sigma0,
            Domain::HalfLine => self.sigma1 * x,
        }
    }

    pub fn sigma_x(&self) -> f64 {
        match self.domain {
            Domain::RealLine => 0.0,
            Domain::HalfLine => self.sigma1,
        }
    }

    pub fn drift(&self, x: f64) -> Result<f64> {
        self.mu.value(0.0, x)
    }

    pub fn drift_dx(&self, x: f64) -> Result<f64> {
        Ok(self.mu.eval_dual(0.0, x)?.dx)
    }

    pub fn g(&self, t: f64) -> Result<f64> {
        self.g.value(t, 0.0)
    }

    pub fn g_dot(&self, t: f64) -> Result<f64> {
        Ok(self.g.eval_dual(t, 0.0)?.dt)
    }

    pub fn h(&self, t: f64, x: f64) -> Result<f64> {
        self.h.value(t, x)
    }

    pub fn h_x(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.h.eval_dual(t, x)?.dx)
    }

    /// Discount rate of the auxiliary stopping problem, `r - mu_x(y)`.
    pub fn lambda(&self, y: f64) -> Result<f64> {
        Ok(self.r - self.drift_dx(y)?)
    }

    /// Stable fingerprint of the instance, used in output headers.
    pub fn fingerprint(&self) -> String {
        format!(
            "domain={:?};mu={};sigma0={:?};sigma1={:?};g={};h={};r={:?};alpha0={:?};T={:?}",
            self.domain, self.mu, self.sigma0, self.sigma1, self.g, self.h, self.r, self.alpha0, self.horizon
        )
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Self {
        self.alpha0 = alpha0;
        self
    }
}

/// Effective running gain `g'(t) - r g(t) + h(t, x)`.
pub fn theta(spec: &GameSpec, t: f64, x: f64) -> Result<f64> {
    spec.check_point(x)?;
    Ok(spec.g_dot(t)? - spec.r * spec.g(t)? + spec.h(t, x)?)
}

/// Smallest `y` in `bracket` with `theta(t, y) > 0`, by bisection to `tol_x`.
///
/// Returns `+inf` when `theta <= 0` on the whole bracket and the lower end
/// of the bracket when `theta > 0` there already.
pub fn theta_lower(spec: &GameSpec, t: f64, bracket: (f64, f64), tol_x: f64) -> Result<f64> {
    const SAMPLES: usize = 64;
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Config(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut prev = theta(spec, t, lo)?;
    for k in 1..=SAMPLES {
        let x = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let cur = theta(spec, t, x)?;
        if cur < prev - 1e-9 * (1.0 + prev.abs()) {
            return Err(Error::AssumptionViolation {
                clause: "theta non-decreasing in x".into(),
                detail: format!("theta({t}, {x}) = {cur} < {prev}"),
            });
        }
        prev = cur;
    }
    if theta(spec, t, lo)? > 0.0 {
        return Ok(lo);
    }
    if theta(spec, t, hi)? <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol_x {
        let m = 0.5 * (a + b);
        if theta(spec, t, m)? > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

/// Verdict for a single assumption clause.
#[derive(Debug, Clone, Serialize)]
pub struct ClauseVerdict {
    pub clause: &'static str,
    pub passed: bool,
    /// `(t, x, observed)` points where the clause failed.
    pub witnesses: Vec<(f64, f64, f64)>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub clauses: Vec<ClauseVerdict>,
    /// Empirical `-inf theta` over the probe lattice.
    pub k1: f64,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseVerdict> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

/// Probe lattice over `[0, T] x [x_lo, x_hi]`.
#[derive(Debug, Clone, Copy)]
pub struct ProbeLattice {
    pub n_t: usize,
    pub n_x: usize,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl ProbeLattice {
    pub fn new(x_lo: f64, x_hi: f64) -> Self {
        ProbeLattice { n_t: 64, n_x: 256, x_lo, x_hi }
    }
}

fn slack(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

struct Clause {
    name: &'static str,
    witnesses: Vec<(f64, f64, f64)>,
    note: String,
}

impl Clause {
    fn new(name: &'static str) -> Self {
        Clause { name, witnesses: Vec::new(), note: String::new() }
    }

    fn fail(&mut self, t: f64, x: f64, observed: f64) {
        if self.witnesses.len() < 8 {
            self.witnesses.push((t, x, observed));
        }
    }

    fn finish(self) -> ClauseVerdict {
        ClauseVerdict {
            clause: self.name,
            passed: self.witnesses.is_empty(),
            witnesses: self.witnesses,
            note: self.note,
        }
    }
}

/// Sample-based check of the standing assumptions on drift and payoffs.
///
/// Failures are verdicts carrying witness points; only evaluation errors
/// of the coefficients themselves are returned as `Err`.
pub fn validate_assumptions(spec: &GameSpec, probes: &ProbeLattice) -> Result<AssumptionReport> {
    let nt = probes.n_t.max(2);
    let nx = probes.n_x.max(3);
    let ts: Vec<f64> = (0..nt).map(|k| spec.horizon * k as f64 / (nt - 1) as f64).collect();
    let dx = (probes.x_hi - probes.x_lo) / (nx - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|i| probes.x_lo + dx * i as f64).collect();

    let mu: Vec<f64> = xs.iter().map(|&x| spec.drift(x)).collect::<Result<_>>()?;
    let mu_x: Vec<f64> = xs.iter().map(|&x| spec.drift_dx(x)).collect::<Result<_>>()?;

    let mut convex = Clause::new("mu_convex");
    for i in 1..nx - 1 {
        let d2 = mu[i + 1] - 2.0 * mu[i] + mu[i - 1];
        if d2 < -slack(mu[i]) {
            convex.fail(f64::NAN, xs[i], d2 / (dx * dx));
        }
    }

    // Heuristic: a convex drift has a non-decreasing derivative, so it is
    // bounded above only if it flattens out at the top of the lattice.
    let mut mu_x_bounded = Clause::new("mu_x_bounded_above");
    let top = mu_x[nx - 1] - mu_x[nx - 2];
    if top > slack(mu_x[nx - 1]) * 1e3 {
        mu_x_bounded.fail(f64::NAN, xs[nx - 1], mu_x[nx - 1]);
        mu_x_bounded.note = "mu_x still increasing at the top of the probe window".into();
    } else {
        mu_x_bounded.note = format!("max mu_x = {}", mu_x.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    let mut hx_nonneg = Clause::new("h_x_nonnegative");
    let mut hx_incr_x = Clause::new("h_x_nondecreasing_in_x");
    let mut hx_decr_t = Clause::new("h_x_nonincreasing_in_t");
    let mut theta_decr_t = Clause::new("theta_nonincreasing_in_t");
    let mut theta_bounded = Clause::new("theta_bounded_below");
    let mut theta_positive = Clause::new("theta_sup_positive");

    let mut hx_prev_t: Option<Vec<f64>> = None;
    let mut th_prev_t: Option<Vec<f64>> = None;
    let mut min_theta = f64::INFINITY;
    for &t in &ts {
        let hx: Vec<f64> = xs.iter().map(|&x| spec.h_x(t, x)).collect::<Result<_>>()?;
        let th: Vec<f64> = xs.iter().map(|&x| theta(spec, t, x)).collect::<Result<_>>()?;
        for i in 0..nx {
            if hx[i] < -slack(hx[i]) {
                hx_nonneg.fail(t, xs[i], hx[i]);
            }
            if i > 0 && hx[i] < hx[i - 1] - slack(hx[i]) {
                hx_incr_x.fail(t, xs[i], hx[i] - hx[i - 1]);
            }
        }
        if let Some(prev) = &hx_prev_t {
            for i in 0..nx {
                if hx[i] > prev[i] + slack(hx[i]) {
                    hx_decr_t.fail(t, xs[i], hx[i] - prev[i]);
                }
            }
        }
        if let Some(prev) = &th_prev_t {
            for i in 0..nx {
                if th[i] > prev[i] + slack(th[i]) {
                    theta_decr_t.fail(t, xs[i], th[i] - prev[i]);
                }
            }
        }
        let row_min = th.iter().cloned().fold(f64::INFINITY, f64::min);
        min_theta = min_theta.min(row_min);
        let row_max = th.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if t < spec.horizon && row_max <= 0.0 {
            theta_positive.fail(t, xs[nx - 1], row_max);
        }
        // On the real line theta is bounded below only if h flattens at -inf.
        if spec.domain == Domain::RealLine && hx[0] > 1e-6 * (1.0 + hx[0].abs()) {
            theta_bounded.fail(t, xs[0], hx[0]);
        }
        hx_prev_t = Some(hx);
        th_prev_t = Some(th);
    }
    if !(min_theta.is_finite() && min_theta < 0.0) {
        theta_bounded.fail(f64::NAN, f64::NAN, min_theta);
    }
    theta_bounded.note = format!("empirical K1 = {}", -min_theta);

    let mut clauses = vec![
        convex.finish(),
        mu_x_bounded.finish(),
        hx_nonneg.finish(),
        hx_incr_x.finish(),
        hx_decr_t.finish(),
        theta_decr_t.finish(),
        theta_bounded.finish(),
        theta_positive.finish(),
    ];

    if spec.domain == Domain::HalfLine {
        let mut mu0 = Clause::new("mu_zero_at_origin");
        let m = spec.drift(0.0)?;
        if m.abs() > 1e-12 {
            mu0.fail(0.0, 0.0, m);
        }
        clauses.push(mu0.finish());
        let mut th00 = Clause::new("theta_negative_at_origin");
        let v = theta(spec, 0.0, 0.0)?;
        if v >= 0.0 {
            th00.fail(0.0, 0.0, v);
        }
        clauses.push(th00.finish());
    }

    Ok(AssumptionReport { clauses, k1: -min_theta })
}

/// Half-line benchmark: `g = 0`, `h = k1 x^2 - k2`, `mu(x) = mu_lin x`,
/// `sigma(x) = sigma_lin x`, with `r = 0.02`, `alpha0 = 1`, `T = 1`.
pub fn benchmark_spec(kappa1: f64, kappa2: f64, mu_lin: f64, sigma_lin: f64) -> Result<GameSpec> {
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(Error::Config(format!("benchmark requires kappa1, kappa2 > 0, got {kappa1}, {kappa2}")));
    }
    if !(sigma_lin > 0.0) {
        return Err(Error::Config(format!("benchmark requires sigma > 0, got {sigma_lin}")));
    }
    let spec = GameSpec {
        domain: Domain::HalfLine,
        mu: ScalarFn::Affine { c: 0.0, a_t: 0.0, a_x: mu_lin },
        sigma0: 0.0,
        sigma1: sigma_lin,
        g: ScalarFn::Constant(0.0),
        h: ScalarFn::Quadratic { k1: kappa1, k2: kappa2 },
        r: 0.02,
        alpha0: 1.0,
        horizon: 1.0,
    };
    spec.validate()?;
    Ok(spec)
}

/// Real-line family: `mu(x) = beta x + c`, constant volatility,
/// `h = quad (x^+)^2 + lin x + h0`, affine `g`.
#[allow(clippy::too_many_arguments)]
pub fn real_line_spec(
    beta: f64,
    drift_c: f64,
    sigma0: f64,
    quad: f64,
    lin: f64,
    h0: f64,
    g0: f64,
    g1: f64,
) -> Result<GameSpec> {
    let spec = GameSpec {
        domain: Domain::RealLine,
        mu: ScalarFn::Affine { c: drift_c, a_t: 0.0, a_x: beta },
        sigma0,
        sigma1: 0.0,
        g: ScalarFn::Affine { c: g0, a_t: g1, a_x: 0.0 },
        h: ScalarFn::PositivePartQuadratic { quad, lin, c: h0 },
        r: 0.02,
        alpha0: 1.0,
        horizon: 1.0,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> GameSpec {
        benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap()
    }

    #[test]
    fn theta_examples() {
        let s = bench();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(theta(&s, t, 1.0).unwrap(), 0.0);
        }
        assert_eq!(theta(&s, 0.0, 0.0).unwrap(), -1.0);

        let mut s2 = bench();
        s2.r = 0.0;
        s2.g = ScalarFn::expr("exp(-t)").unwrap();
        s2.h = ScalarFn::Constant(0.0);
        let v = theta(&s2, 0.7, 2.0).unwrap();
        assert!((v + (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn theta_outside_half_line_is_domain_error() {
        assert!(matches!(theta(&bench(), 0.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_lower_examples() {
        let s = bench();
        for t in [0.0, 0.5, 1.0] {
            let y = theta_lower(&s, t, (0.0, 6.0), 1e-12).unwrap();
            assert!((y - 1.0).abs() < 1e-11);
        }
        let mut s2 = bench();
        s2.h = ScalarFn::Constant(-1.0);
        s2.r = 0.0;
        assert_eq!(theta_lower(&s2, 0.3, (0.0, 6.0), 1e-12).unwrap(), f64::INFINITY);

        let mut s3 = bench();
        s3.r = 0.0;
        s3.h = ScalarFn::expr("x - t").unwrap();
        for t in [0.1, 0.5, 0.9] {
            let y = theta_lower(&s3, t, (0.0, 2.0), 1e-12).unwrap();
            assert!((y - t).abs() < 1e-11);
        }
        // positive at the lower end already
        let y = theta_lower(&s3, 0.0, (0.5, 2.0), 1e-12).unwrap();
        assert_eq!(y, 0.5);

        let s4 = benchmark_spec(2.0, 0.5, 0.05, 0.4).unwrap();
        let y = theta_lower(&s4, 0.2, (0.0, 6.0), 1e-12).unwrap();
        assert!((y - 0.5).abs() < 1e-11);
    }

    #[test]
    fn theta_lower_rejects_non_monotone() {
        let mut s = bench();
        s.h = ScalarFn::expr("(x - 1)^2 - 0.5").unwrap();
        assert!(matches!(
            theta_lower(&s, 0.0, (0.0, 3.0), 1e-9),
            Err(Error::AssumptionViolation { .. })
        ));
    }

    #[test]
    fn benchmark_passes_assumptions() {
        let r = validate_assumptions(&bench(), &ProbeLattice::new(0.0, 6.0)).unwrap();
        assert!(r.all_passed(), "{r:?}");
        assert!((r.k1 - 1.0).abs() < 1e-12);
        let zero = benchmark_spec(1.0, 1.0, 0.0, 0.4).unwrap();
        assert!(validate_assumptions(&zero, &ProbeLattice::new(0.0, 6.0)).unwrap().all_passed());
    }

    #[test]
    fn failing_clauses_carry_witnesses() {
        let mut s = bench();
        s.h = ScalarFn::expr("-x").unwrap();
        let r = validate_assumptions(&s, &ProbeLattice::new(0.0, 6.0)).unwrap();
        let c = r.clause("h_x_nonnegative").unwrap();
        assert!(!c.passed);
        assert!(!c.witnesses.is_empty());

        let mut s = real_line_spec(0.1, 0.0, 0.5, 1.0, 0.0, -1.0, 0.0, 0.0).unwrap();
        s.mu = ScalarFn::expr("-x^2").unwrap();
        let r = validate_assumptions(&s, &ProbeLattice::new(-5.0, 5.0)).unwrap();
        let c = r.clause("mu_convex").unwrap();
        assert!(!c.passed && !c.witnesses.is_empty());
        for c in &r.clauses {
            if !c.passed {
                assert!(!c.witnesses.is_empty(), "{}", c.clause);
            }
        }
    }

    #[test]
    fn real_line_family_passes() {
        let s = real_line_spec(0.1, 0.0, 0.5, 1.0, 0.0, -1.0, 0.0, 0.0).unwrap();
        let r = validate_assumptions(&s, &ProbeLattice::new(-5.0, 5.0)).unwrap();
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn piecewise_power_family() {
        let mut s = bench();
        s.mu = ScalarFn::PiecewisePower { p: 2.0, n: 3.0, c: 0.5 };
        let r = validate_assumptions(&s, &ProbeLattice::new(0.0, 6.0)).unwrap();
        assert!(r.all_passed(), "{r:?}");
        // lambda beyond n is r - p (n - c)^(p - 1)
        let lam = s.lambda(4.0).unwrap();
        assert!((lam - (0.02 - 2.0 * 2.5)).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let s = bench();
        assert!((s.lambda(2.0).unwrap() + 0.03).abs() < 1e-15);
        let mut s2 = bench();
        s2.mu = ScalarFn::Constant(0.0);
        s2.r = 0.1;
        assert_eq!(s2.lambda(3.0).unwrap(), 0.1);
    }

    #[test]
    fn benchmark_config_errors() {
        assert!(matches!(benchmark_spec(0.0, 1.0, 0.05, 0.4), Err(Error::Config(_))));
        assert!(matches!(benchmark_spec(1.0, 1.0, 0.05, -0.4), Err(Error::Config(_))));
        let bad = bench().with_alpha0(0.0);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fns = [
            ScalarFn::Affine { c: 1.0, a_t: -0.5, a_x: 2.0 },
            ScalarFn::Quadratic { k1: 1.5, k2: 0.3 },
            ScalarFn::PositivePartQuadratic { quad: 1.0, lin: 0.2, c: -1.0 },
            ScalarFn::PiecewisePower { p: 2.5, n: 3.0, c: 0.5 },
            ScalarFn::expr("exp(-t) * x^2 + sqrt(1 + x^2)").unwrap(),
        ];
        for f in &fns {
            for &(t, x) in &[(0.1, 0.7), (0.5, 1.9), (0.9, 4.2), (0.3, 2.6)] {
                let d = f.eval_dual(t, x).unwrap();
                let hx = 1e-5 * (1.0 + x.abs());
                let fd_x = (f.value(t, x + hx).unwrap() - f.value(t, x - hx).unwrap()) / (2.0 * hx);
                let ht = 1e-5 * (1.0 + t.abs());
                let fd_t = (f.value(t + ht, x).unwrap() - f.value(t - ht, x).unwrap()) / (2.0 * ht);
                assert!((d.dx - fd_x).abs() <= 1e-6 * (1.0 + d.dx.abs()), "{f}: {} vs {}", d.dx, fd_x);
                assert!((d.dt - fd_t).abs() <= 1e-6 * (1.0 + d.dt.abs()), "{f}: {} vs {}", d.dt, fd_t);
            }
        }
    }
}
