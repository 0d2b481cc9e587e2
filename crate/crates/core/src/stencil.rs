//! Three-point discretisation of `D u_xx + m u_x - c u` on a uniform mesh.

/// Row coefficients, one entry per node. Entries at the first and last
/// node are computed but callers overwrite them with boundary rows.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Stencil {
    /// Central differences, falling back to upwinding for the drift where
    /// the cell Peclet number exceeds one so that off-diagonals stay
    /// non-negative.
    pub fn new(diffusion: &[f64], drift: &[f64], zeroth: &[f64], dx: f64) -> Self {
        let n = diffusion.len();
        let mut s = Stencil {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        };
        let dx2 = dx * dx;
        for i in 0..n {
            let diff = diffusion[i] / dx2;
            let m = drift[i];
            let (l, u) = if diff >= m.abs() / (2.0 * dx) {
                (diff - m / (2.0 * dx), diff + m / (2.0 * dx))
            } else if m > 0.0 {
                (diff, diff + m / dx)
            } else {
                (diff - m / dx, diff)
            };
            s.lower[i] = l;
            s.upper[i] = u;
            s.diag[i] = -l - u - zeroth[i];
        }
        s
    }

    pub fn apply(&self, i: usize, left: f64, centre: f64, right: f64) -> f64 {
        self.lower[i] * left + self.diag[i] * centre + self.upper[i] * right
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics() {
        let n = 11;
        let dx = 0.1;
        let xs: Vec<f64> = (0..n).map(|i| 1.0 + dx * i as f64).collect();
        let d: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let m: Vec<f64> = xs.iter().map(|x| 0.3 * x).collect();
        let c = vec![0.02; n];
        let s = Stencil::new(&d, &m, &c, dx);
        let f = |x: f64| x * x - 3.0 * x;
        for i in 1..n - 1 {
            let got = s.apply(i, f(xs[i - 1]), f(xs[i]), f(xs[i + 1]));
            let want = d[i] * 2.0 + m[i] * (2.0 * xs[i] - 3.0) - c[i] * f(xs[i]);
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn upwinds_when_diffusion_vanishes() {
        let s = Stencil::new(&[0.0, 0.0], &[1.0, -1.0], &[0.0, 0.0], 0.1);
        assert!(s.lower.iter().all(|&v| v >= 0.0));
        assert!(s.upper.iter().all(|&v| v >= 0.0));
        assert_eq!(s.upper[0], 10.0);
        assert_eq!(s.lower[1], 10.0);
    }
}
