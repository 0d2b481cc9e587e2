//! Tridiagonal systems.

/// Tridiagonal matrix stored by diagonals. `lower[0]` and
/// `upper[n - 1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Sets row `i` to the identity row.
    pub fn set_identity_row(&mut self, i: usize) {
        self.lower[i] = 0.0;
        self.diag[i] = 1.0;
        self.upper[i] = 0.0;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn eliminate(&self, rhs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = if n > 1 { self.upper[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        (c, d)
    }

    /// Thomas algorithm; stable for diagonally dominant matrices.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let (c, d) = self.eliminate(rhs);
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    /// Solves the complementarity problem `A x <= rhs`, `x <= cap`,
    /// `(rhs - A x) (cap - x) = 0` for an M-matrix whose capped set is an
    /// interval containing the last index (Brennan-Schwartz elimination
    /// with projection during back substitution).
    pub fn solve_capped_above(&self, rhs: &[f64], cap: &[f64]) -> Vec<f64> {
        let n = self.len();
        let (c, d) = self.eliminate(rhs);
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1].min(cap[n - 1]);
        for i in (0..n - 1).rev() {
            x[i] = (d[i] - c[i] * x[i + 1]).min(cap[i]);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> Tridiagonal {
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.diag[i] = 2.5;
            m.lower[i] = -1.0;
            m.upper[i] = -1.0;
        }
        m
    }

    #[test]
    fn thomas_solves() {
        let m = laplacian(7);
        let x: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let b = m.mul_vec(&x);
        let y = m.solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn capped_solve_is_complementary() {
        let n = 30;
        let m = laplacian(n);
        let rhs: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let cap = vec![0.8; n];
        let x = m.solve_capped_above(&rhs, &cap);
        let ax = m.mul_vec(&x);
        for i in 0..n {
            assert!(x[i] <= cap[i] + 1e-14);
            assert!(ax[i] <= rhs[i] + 1e-12, "row {i}");
            assert!(((rhs[i] - ax[i]) * (cap[i] - x[i])).abs() < 1e-12);
        }
        assert!(x.contains(&0.8));
        assert!(x.iter().any(|&v| v < 0.8));
    }
}
